package pilot.load;

import java.security.AccessController;
import java.security.PrivilegedAction;

public class FallbackLoader {
    static {
        AccessController.doPrivileged(new PrivilegedAction<Void>() {
            public Void run() {
                try {
                    System.loadLibrary("pilot64");
                } catch (UnsatisfiedLinkError e) {
                    System.loadLibrary("pilot32");
                }
                return null;
            }
        });
    }
}
