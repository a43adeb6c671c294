public class Grade {
    static String grade(int score) {
        String g = "F";
        if (score >= 90) {
            g = "A";
        } else if (score >= 80) {
            g = "B";
        } else {
            if (score >= 70) {
                g = "C";
            }
        }
        return g;
    }
}
