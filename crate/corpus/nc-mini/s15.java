public class Temperature {
    public static void main(String[] args) {
        int[] temps = {12, 25, 31, 8};
        for (int i = 0; i < temps.length; i++) {
            if (temps[i] > 30) {
                System.out.println("hot");
            } else if (temps[i] < 10) {
                System.out.println("cold");
            } else {
                System.out.println("mild");
            }
        }
    }
}
