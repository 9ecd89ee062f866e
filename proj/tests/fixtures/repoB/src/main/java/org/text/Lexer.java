package org.text;

public class Lexer {
    public char peek(String s, int i) {
        if (i >= s.length()) throw new IndexOutOfBoundsException("past end");
        return s.charAt(i);
    }
}
