"""Utility grab bag."""
from math import sqrt

SCALE = 10
# derived constant
HALF_SCALE = SCALE // 2


class Point(object):
    """A 2-d point."""

    origin_count = 0

    def __init__(self, x, y):
        self.x = x
        self.y = y

    def norm(self):
        # euclidean length
        return sqrt(self.x ** 2 + self.y ** 2)


def distance(p, q):
    dx = p.x - q.x
    dy = p.y - q.y
    return sqrt(dx * dx + dy * dy)
