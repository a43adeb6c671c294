public class Calc {
    static int apply(char op, int a, int b) {
        int r = 0;
        switch (op) {
            case '+':
                r = a + b;
                break;
            case '-':
                r = a - b;
                break;
            case '*':
                r = a * b;
                break;
            default:
                r = 0;
        }
        return r;
    }
}
