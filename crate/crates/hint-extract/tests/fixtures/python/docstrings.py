"""Module level docstring."""

class Greeter:
    """Greets people."""

    def greet(self, name):
        """Return a greeting for name."""
        return "hello " + name


def plain():
    'single quoted docstring'
    value = 1
    return value
