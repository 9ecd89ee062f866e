package com.example.calc;

public class Calculator {
    private int total;

    public int divide(int a, int b) {
        if (b == 0) {
            throw new ArithmeticException("division by zero");
        }
        return a / b;
    }

    public void add(int a) {
        check(a + 1);
        total += a;
    }

    private void check(int v) {
        if (v == 0) {
            throw new IllegalArgumentException("v must not be zero");
        }
    }

    public int total() {
        return total;
    }
}
