/**
 * Javadoc for the whole class.
 */
class Comments {
    // single line note
    int a = 1;

    /* short block */
    void work() {
        int local = a; // trailing
    }
}
