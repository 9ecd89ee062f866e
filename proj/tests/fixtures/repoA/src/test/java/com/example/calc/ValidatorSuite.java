package com.example.calc;

import static org.junit.Assert.assertEquals;

import org.junit.Test;

public class ValidatorSuite {
    @Test
    public void acceptsPositive() {
        assertEquals(5, Validator.requirePositive(5));
    }
}
