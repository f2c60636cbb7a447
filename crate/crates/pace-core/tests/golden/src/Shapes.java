package app.geo;

public interface Shapes {
    double EPSILON = 1e-9;
    int MAX_VERTICES = 64, MIN_VERTICES = 3;

    double area();

    double perimeter();

    static Shapes unit() {
        return new Shapes() {
            @Override
            public double area() {
                return 1.0;
            }

            @Override
            public double perimeter() {
                return 4.0;
            }
        };
    }

    default boolean degenerate() {
        return area() < EPSILON;
    }

    enum Kind {
        CIRCLE("round"),
        SQUARE("straight"),
        TRIANGLE("straight");

        private final String family;

        Kind(String family) {
            this.family = family;
        }

        public String family() {
            return family;
        }
    }
}
