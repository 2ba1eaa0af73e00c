package pilot.smelly;

public class Tracker {
    private volatile boolean running = true;
    private native void step();

    public void loop() {
        while (running) {
            step();
        }
    }
}
