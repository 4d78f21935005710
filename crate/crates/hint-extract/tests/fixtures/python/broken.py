import json

def ok(x):
    return x + 1

def broken(:
    pass

LIMIT = 99
