package app.book;

import java.util.function.Predicate;

public final class Validators {
    static final String[] RESERVED = {"admin", "root", "system"};

    private Validators() {}

    public static boolean validName(String name) {
        if (name == null) {
            return false;
        }
        for (int i = 0; i < RESERVED.length; i++) {
            if (RESERVED[i].equalsIgnoreCase(name)) {
                return false;
            }
        }
        return name.length() > 1 && name.length() < 64;
    }

    public static Predicate<String> lengthBetween(int lo, int hi) {
        return value -> {
            int n = value == null ? 0 : value.length();
            return n >= lo && n <= hi;
        };
    }

    public static String classify(int code) {
        switch (code) {
            case 0:
                return "ok";
            case 1:
            case 2: {
                return "warning";
            }
            default:
                break;
        }
        return code < 0 ? "invalid" : "error";
    }

    public static int checksum(int[] digits) {
        int sum = 0;
        for (int i = digits.length - 1; i >= 0; i--) {
            sum += digits[i] * (i % 2 == 0 ? 2 : 1);
        }
        assert sum >= 0 : "overflow";
        return sum % 10;
    }
}
