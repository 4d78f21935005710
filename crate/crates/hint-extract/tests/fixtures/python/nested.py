def outer(a):
    total = a

    def inner(b):
        return b * 2

    return inner(total)


class Wrapper:
    limit = 8

    def run(self):
        cached = self.limit
        return outer(cached)
