public class Main {
    public static void main(String[] args) {
        for (int i = 0; i < 5; i++) {
            for (int j = 0; j < 5; j++) {
                if ((i ? j) < 3); {
                    System.out.println(i);
                } else {
                    System.out.println(j);
                }
            }
        }
    }
}
