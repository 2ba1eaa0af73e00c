import java.security.AccessController;
import java.security.PrivilegedAction;

class SecurityLoader {
 static { AccessController.doPrivileged(
          new PrivilegedAction<Void>() {
          public Void run() {
          System.loadLibrary("osxsecurity");
          return null; } }  ); }
}
