public class Account {
    private int balance = 0;

    void deposit(int amount) {
        if (amount > 0) {
            balance = balance + amount;
        }
    }

    boolean withdraw(int amount) {
        if (amount <= balance) {
            balance = balance - amount;
            return true;
        }
        return false;
    }
}
