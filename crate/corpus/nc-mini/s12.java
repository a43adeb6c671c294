public class Names {
    static int longNames(String[] names) {
        int count = 0;
        for (String name : names) {
            if (name.length() > 5) {
                count = count + 1;
                System.out.println(name);
            }
        }
        return count;
    }
}
