public class Days {
    static String name(int day) {
        String s = "";
        switch (day) {
            case 1:
                s = "Mon";
                break;
            case 2:
                s = "Tue";
                break;
            default:
                s = "Other";
        }
        if (s.length() > 3) {
            s = s.substring(0, 3);
        }
        return s;
    }
}
