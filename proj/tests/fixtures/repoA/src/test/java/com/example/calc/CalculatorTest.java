package com.example.calc;

import static org.junit.Assert.assertEquals;
import static org.junit.Assert.assertThrows;

import org.junit.Test;

public class CalculatorTest {
    private final Calculator calc = new Calculator();

    @Test
    public void testDivide() {
        assertEquals(2, calc.divide(4, 2));
    }

    @Test
    public void testAdd() {
        calc.add(3);
        assertEquals(3, calc.total());
    }

    @Test(expected = ArithmeticException.class)
    public void testDivideByZero() {
        calc.divide(1, 0);
    }

    @Test
    public void testAddRejectsMinusOne() {
        assertThrows(IllegalArgumentException.class, () -> calc.add(-1));
    }

    private int twice(int x) {
        return x * 2;
    }
}
