public class Matrix {
    public static void main(String[] args) {
        int total = 0;
        for (int r = 0; r < 3; r++) {
            for (int c = 0; c < 4; c++) {
                total = total + r * c;
            }
        }
        System.out.println(total);
    }
}
