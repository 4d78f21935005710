import java.util.Set;

class Broken {
    int fine = 1;

    void bad( {
    }

    int stillHere() {
        return fine;
    }
}
