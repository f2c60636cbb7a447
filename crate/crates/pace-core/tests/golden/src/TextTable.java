package app.text;

import java.util.ArrayList;
import java.util.List;

public class TextTable {
    private final List<String[]> rows = new ArrayList<>();
    private int columns;

    public void addRow(String... cells) {
        if (cells.length > columns) {
            columns = cells.length;
        }
        rows.add(cells);
    }

    public String render() {
        int[] widths = new int[columns];
        for (String[] row : rows) {
            for (int c = 0; c < row.length; c++) {
                int len = row[c] == null ? 0 : row[c].length();
                if (len > widths[c]) {
                    widths[c] = len;
                }
            }
        }
        StringBuilder out = new StringBuilder();
        for (String[] row : rows) {
            for (int c = 0; c < columns; c++) {
                String cell = c < row.length && row[c] != null ? row[c] : "";
                out.append(pad(cell, widths[c]));
                out.append(c == columns - 1 ? "\n" : " | ");
            }
        }
        return out.toString();
    }

    private static String pad(String text, int width) {
        StringBuilder padded = new StringBuilder(text);
        while (padded.length() < width) {
            padded.append(' ');
        }
        return padded.toString();
    }
}
