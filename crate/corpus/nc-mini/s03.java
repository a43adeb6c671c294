public class Countdown {
    public static void main(String[] args) {
        int n = 10;
        while (n > 0) {
            if (n % 3 == 0) {
                System.out.println("fizz");
            } else {
                System.out.println(n);
            }
            n = n - 1;
        }
        System.out.println("done");
    }
}
