public class Counter {
    private int hits = 0;

    void record(int[] values) {
        for (int i = 0; i < values.length; i++) {
            while (values[i] > 100) {
                values[i] = values[i] - 100;
                hits++;
            }
        }
    }

    int total() {
        return hits;
    }
}
