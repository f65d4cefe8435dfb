from collections import deque
from math import sqrt
#==============================================#
#
#       In this file (in-order as they appear):
#           RollingMax
#           RunningStats
#==============================================#

#==============================================#
# START CLASSES
#==============================================#

class RollingMax:
    '''
    Sliding-window maximum over (position, value) pairs.

    Positions are pushed in increasing order and the window start only ever
    moves forward, so a monotone deque answers every `peek` in amortised O(1).
    Among equal values the earliest position is reported.

    Methods
    -------
    push(position : int, value : float):
        add a candidate. Values of -inf are ignored.

    evict(first : int):
        drop every candidate whose position is below `first`.

    peek():
        returns the best (position, value), or None if empty.
    '''
    def __init__(self):
        self._data = deque()
        self._last = None

    def push(self, position, value):
        '''
        Add a candidate at `position`. Raises ValueError if positions go backwards.
        '''
        if self._last is not None and position <= self._last:
            raise ValueError("positions must be pushed in increasing order.")
        self._last = position

        if value == float('-inf'):
            return

        data = self._data
        # Strict: an older equal value stays in front.
        while data and data[-1][1] < value:
            data.pop()
        data.append((position, value))

    def evict(self, first):
        '''Remove every candidate positioned before `first`.'''
        data = self._data
        while data and data[0][0] < first:
            data.popleft()

    def peek(self):
        '''Return the best (position, value) pair, otherwise None.'''
        if self._data:
            return self._data[0]
        return None

class RunningStats:
    '''
    Welford's online mean and variance.

    Used to summarise per-seed and per-repetition measurements without
    holding on to them.
    '''
    def __init__(self):
        self._n = 0
        self._mean = 0.0
        self._sum_sq = 0.0

    def push(self, value):
        '''Adds a value to the running data set'''
        self._n += 1
        delta = value - self._mean
        self._mean += delta / self._n
        self._sum_sq += delta * (value - self._mean)

    @property
    def count(self):
        '''Number of values pushed so far.'''
        return self._n

    @property
    def mean(self):
        '''Return the mean value of the data set.'''
        return self._mean if self._n > 0 else 0.0

    @property
    def variance(self):
        '''
        Return the variance of the data set

        Uses Bessel's Correction of `variance-sum / (n - 1)`
        '''
        return self._sum_sq / (self._n - 1) if self._n > 1 else 0.0

    @property
    def stddev(self):
        '''Return the standard deviation of the data set'''
        return sqrt(self.variance)
