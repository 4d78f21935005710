RETRIES = 3
timeout_seconds: float = 1.5
first = second = 0
names = ["a", "b"]

class Config:
    debug = False
    level: int = 2
