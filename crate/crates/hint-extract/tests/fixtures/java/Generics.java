import java.util.ArrayList;
import java.util.List;

class Generics<T extends Comparable<T>> {
    private List<T> items = new ArrayList<>();

    <U> U pick(U fallback) {
        return fallback;
    }

    T first() {
        return items.get(0);
    }
}
