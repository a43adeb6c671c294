public class Table {
    public static void main(String[] args) {
        int n = 4;
        for (int i = 1; i <= n; i++) {
            int j = 1;
            while (j <= n) {
                if (i == j) {
                    System.out.print(1);
                } else {
                    System.out.print(0);
                }
                j++;
            }
            System.out.println();
        }
    }
}
