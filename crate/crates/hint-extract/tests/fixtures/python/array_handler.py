import numpy as np

MAX_ARRAY_SIZE=1024

class ArrayHandler:
    def __init__(self, size):
        self.size = size
        self.data = np.zeros(size)

    def get(self, index):
        # Check index
        if index < self.size:
            return self.data[index]
        return None
