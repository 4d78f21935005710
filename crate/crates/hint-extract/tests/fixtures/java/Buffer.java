import java.util.Arrays;

/* Fixed capacity ring buffer. */
class Buffer {
    static final int MAX_ARRAY_SIZE = 1024;
    private int[] data;

    int get(int index) {
        // Check index
        if (index < data.length) {
            return data[index];
        }
        return -1;
    }

    void fill(int value) {
        Arrays.fill(data, value);
    }
}
