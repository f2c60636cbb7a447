package app.math;

public class Matrix {
    final double[][] cells;
    final int rows;
    final int cols;

    public Matrix(int rows, int cols) {
        this.rows = rows;
        this.cols = cols;
        this.cells = new double[rows][cols];
    }

    public double get(int r, int c) {
        return cells[r][c];
    }

    public void set(int r, int c, double value) {
        cells[r][c] = value;
    }

    public Matrix multiply(Matrix other) {
        Matrix out = new Matrix(rows, other.cols);
        for (int i = 0; i < rows; i++) {
            for (int j = 0; j < other.cols; j++) {
                double sum = 0.0;
                for (int k = 0; k < cols; k++) {
                    sum += cells[i][k] * other.cells[k][j];
                }
                out.cells[i][j] = sum;
            }
        }
        return out;
    }

    public double trace() {
        double sum = 0.0;
        int n = rows < cols ? rows : cols;
        for (int i = 0; i < n; i++) {
            sum += cells[i][i];
        }
        return sum;
    }

    public boolean isSquare() {
        return rows == cols;
    }
}
