package org.text;

import static org.junit.Assert.assertEquals;

import org.junit.Test;

public class ParserTest {
    @Test
    public void parsesWord() {
        assertEquals(3, new Parser().parse("abc"));
    }
}
