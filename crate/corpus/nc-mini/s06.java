public class MaxFinder {
    static int max(int[] a) {
        int best = a[0];
        int i = 1;
        while (i < a.length) {
            if (a[i] > best) {
                best = a[i];
            }
            i++;
        }
        return best;
    }
}
