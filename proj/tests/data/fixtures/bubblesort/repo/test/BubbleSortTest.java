import static org.junit.jupiter.api.Assertions.assertArrayEquals;

import org.junit.jupiter.api.Test;

class BubbleSortTest {
    @Test
    void sortsUnsortedArray() {
        int[] data = {3, 1, 2};
        BubbleSort.sort(data);
        assertArrayEquals(new int[] {1, 2, 3}, data);
    }
}
