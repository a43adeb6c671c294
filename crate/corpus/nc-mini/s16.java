public class Menu {
    static void run(int choice, int level) {
        switch (choice) {
            case 1:
                if (level > 2) {
                    System.out.println("expert");
                }
                break;
            default:
                System.out.println("basic");
        }
        System.out.println("end");
    }
}
