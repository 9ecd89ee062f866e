package samples;

import java.util.ArrayList;
import java.util.List;
import java.util.Map;

public class Samples {
    private final List<String> items = new ArrayList<>();
    private int count;

    public Samples() {
        this.count = 0;
    }

    public int size() {
        return items.size();
    }

    public void add(String s) {
        if (s == null) {
            throw new IllegalArgumentException("null item");
        }
        items.add(s);
        count++;
    }

    public String get(int i) {
        if (i < 0 || i >= items.size()) throw new IndexOutOfBoundsException("index " + i);
        return items.get(i);
    }

    public int sum(int[] xs) {
        int total = 0;
        for (int x : xs) total += x;
        return total;
    }

    public int max(int a, int b) {
        return a > b ? a : b;
    }

    public long factorial(int n) {
        long r = 1;
        for (int i = 2; i <= n; i++) {
            r *= i;
        }
        return r;
    }

    public boolean isEmpty() {
        return count == 0;
    }

    public String join(String sep) {
        StringBuilder sb = new StringBuilder();
        for (int i = 0; i < items.size(); i++) {
            if (i > 0) sb.append(sep);
            sb.append(items.get(i));
        }
        return sb.toString();
    }

    public int indexOf(String s) {
        int i = 0;
        while (i < items.size()) {
            if (items.get(i).equals(s)) return i;
            i++;
        }
        return -1;
    }

    public String describe(int code) {
        switch (code) {
            case 0:
                return "zero";
            case 1:
                return "one";
            default:
                return "many";
        }
    }

    public int parse(String s) {
        try {
            return Integer.parseInt(s);
        } catch (NumberFormatException e) {
            return -1;
        }
    }

    public void clear() {
        items.clear();
        count = 0;
    }

    public int countAbove(Map<String, Integer> m, int limit) {
        int n = 0;
        for (Map.Entry<String, Integer> e : m.entrySet()) {
            if (e.getValue() > limit) n++;
        }
        return n;
    }

    public double average(int[] xs) {
        if (xs.length == 0) throw new ArithmeticException("empty");
        return (double) sum(xs) / xs.length;
    }

    public String first() {
        return items.isEmpty() ? null : items.get(0);
    }

    public void requireState(boolean ok) {
        if (!ok) throw new IllegalStateException("bad state");
    }

    public int gcd(int a, int b) {
        while (b != 0) {
            int t = b;
            b = a % b;
            a = t;
        }
        return a;
    }

    public List<String> upper() {
        List<String> out = new ArrayList<>();
        items.forEach(s -> out.add(s.toUpperCase()));
        return out;
    }

    public int clamp(int v, int lo, int hi) {
        if (lo > hi) throw new IllegalArgumentException("lo > hi");
        return Math.max(lo, Math.min(hi, v));
    }

    public boolean contains(String s) {
        return indexOf(s) >= 0;
    }

    public int doubled(int x) {
        int y = x;
        y = y * 2;
        return y;
    }
}
