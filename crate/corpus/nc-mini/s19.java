public class Search {
    static int find(int[] a, int key) {
        int lo = 0;
        int hi = a.length - 1;
        int found = -1;
        while (lo <= hi && found < 0) {
            int mid = (lo + hi) / 2;
            if (a[mid] == key) {
                found = mid;
            } else if (a[mid] < key) {
                lo = mid + 1;
            } else {
                hi = mid - 1;
            }
        }
        return found;
    }
}
