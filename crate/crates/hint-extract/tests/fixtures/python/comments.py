# Leading file comment
import sys


def check(value):
    # Check index
    if value < 0:  # trailing comment
        return None
    return value
# Final comment
