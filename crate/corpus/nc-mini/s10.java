public class Primes {
    public static void main(String[] args) {
        for (int n = 2; n < 30; n++) {
            boolean prime = true;
            for (int d = 2; d * d <= n; d++) {
                if (n % d == 0) {
                    prime = false;
                }
            }
            if (prime) {
                System.out.println(n);
            }
        }
    }
}
