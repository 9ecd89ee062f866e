package fixtures;

import static org.junit.Assert.*;
import static org.junit.jupiter.api.Assertions.assertThrows;

import java.io.IOException;
import java.util.ArrayList;
import java.util.List;
import org.junit.Rule;
import org.junit.Test;
import org.junit.jupiter.api.Assertions;
import org.junit.jupiter.params.ParameterizedTest;
import org.junit.rules.ExpectedException;

public class LabeledCases {
    @Rule
    public ExpectedException thrown = ExpectedException.none();

    @Test(expected = IllegalStateException.class)
    public void annotationSimple() {
        new Machine().stop();
    }

    @Test(expected = java.text.ParseException.class)
    public void annotationQualified() throws Exception {
        new Parser().parse("?");
    }

    @Test(timeout = 100, expected = ArithmeticException.class)
    public void annotationWithTimeout() {
        int x = 1 / 0;
    }

    @Test(expected = IllegalArgumentException.class)
    public void annotationWinsOverAssertThrows() {
        assertThrows(IOException.class, () -> load());
        check(-1);
    }

    @org.junit.Test(expected = NullPointerException.class)
    public void annotationQualifiedTest() {
        Object o = null;
        o.hashCode();
    }

    @Test
    public void assertThrowsStatic() {
        assertThrows(IOException.class, () -> load());
    }

    @Test
    public void assertThrowsQualified() {
        Assertions.assertThrows(IndexOutOfBoundsException.class, () -> new ArrayList<String>().get(0));
    }

    @Test
    public void assertThrowsCaptured() {
        IllegalStateException ex = assertThrows(IllegalStateException.class, () -> {
            new Machine().stop();
        });
        assertEquals("stopped", ex.getMessage());
    }

    @Test
    public void assertThrowsJUnit4() {
        org.junit.Assert.assertThrows(UnsupportedOperationException.class, () -> List.of().add(1));
    }

    @Test
    public void assertThrowsExactlyForm() {
        Assertions.assertThrowsExactly(NumberFormatException.class, () -> Integer.parseInt("x"));
    }

    @Test
    public void ruleSimple() {
        thrown.expect(NullPointerException.class);
        new Machine().feed(null);
    }

    @Test
    public void ruleWithMessage() throws Exception {
        thrown.expect(IOException.class);
        thrown.expectMessage("closed");
        load();
    }

    @Test
    public void ruleThisQualified() {
        this.thrown.expect(ArrayStoreException.class);
        Object[] xs = new String[1];
        xs[0] = 1;
    }

    @Test
    public void ruleAfterSetup() {
        Machine m = new Machine();
        m.start();
        thrown.expect(IllegalStateException.class);
        m.start();
    }

    @Test
    public void tryFailCatchSimple() {
        try {
            check(-1);
            fail("expected failure");
        } catch (IllegalArgumentException e) {
            assertEquals("negative", e.getMessage());
        }
    }

    @Test
    public void tryFailCatchMulti() {
        try {
            load();
            fail();
        } catch (IOException | RuntimeException e) {
            // expected
        }
    }

    @Test
    public void tryFailCatchQualifiedFail() {
        try {
            new Parser().parse("");
            Assert.fail("should throw");
        } catch (java.text.ParseException expected) {
        }
    }

    @Test
    public void tryFailCatchNested() {
        Machine m = new Machine();
        if (m != null) {
            try {
                m.stop();
                fail();
            } catch (IllegalStateException e) {
                assertNotNull(e);
            }
        }
    }

    @Test
    public void plainAssertions() {
        assertEquals(4, 2 + 2);
    }

    @Test
    public void tryCatchWithoutFail() {
        try {
            load();
        } catch (IOException e) {
            throw new RuntimeException(e);
        }
    }

    @Test
    public void expectMessageOnly() {
        thrown.expectMessage("boom");
        assertTrue(true);
    }

    @Test(timeout = 1000)
    public void timeoutOnly() {
        new Machine().start();
    }

    @Test
    public void failOutsideTry() {
        if (System.nanoTime() < 0) {
            fail("clock went backwards");
        }
    }

    @ParameterizedTest
    public void parameterizedPlain(int x) {
        assertTrue(x >= 0);
    }

    @Test
    public void assertThrowsWithoutClassLiteral() {
        Class<? extends Exception> type = IOException.class;
        assertThrows(type, () -> load());
    }

    @Test
    public void lambdaCapturesList() {
        List<Integer> xs = new ArrayList<>();
        xs.forEach(x -> assertNotNull(x));
        assertTrue(xs.isEmpty());
    }

    private void load() throws IOException {
        throw new IOException("closed");
    }

    private void check(int v) {
        if (v < 0) throw new IllegalArgumentException("negative");
    }
}
