import unittest
import math
from cadec.utilities import RollingMax, RunningStats

class TestRollingMax(unittest.TestCase):
    '''Tests for the sliding window maximum'''
    def test_empty(self):
        '''Tests a new window and peek on it.'''
        w = RollingMax()
        self.assertEqual(None, w.peek())

    def test_push_and_peek(self):
        '''The largest value pushed so far is at the front'''
        w = RollingMax()
        w.push(0, 1.0)
        w.push(1, 3.0)
        w.push(2, 2.0)

        self.assertEqual((1, 3.0), w.peek())

    def test_ties_keep_earliest(self):
        '''Among equal values the earliest position is reported'''
        w = RollingMax()
        w.push(0, 5.0)
        w.push(1, 5.0)
        self.assertEqual((0, 5.0), w.peek())

        w.evict(1)
        self.assertEqual((1, 5.0), w.peek())

    def test_evict(self):
        '''Evicting moves the window start forward'''
        w = RollingMax()
        for position, value in enumerate([4.0, 1.0, 3.0, 2.0]):
            w.push(position, value)

        w.evict(1)
        self.assertEqual((2, 3.0), w.peek())
        w.evict(3)
        self.assertEqual((3, 2.0), w.peek())
        w.evict(4)
        self.assertIsNone(w.peek())

    def test_negative_infinity_ignored(self):
        '''-inf candidates never enter the window'''
        w = RollingMax()
        w.push(0, float('-inf'))
        self.assertIsNone(w.peek())
        w.push(1, -2.0)
        self.assertEqual((1, -2.0), w.peek())

    def test_positions_must_increase(self):
        '''Pushing an old position raises'''
        w = RollingMax()
        w.push(3, 1.0)
        self.assertRaises(ValueError, w.push, 3, 2.0)
        self.assertRaises(ValueError, w.push, 1, 2.0)

    def test_against_brute_force(self):
        '''Matches max() over every window of a fixed width'''
        data = [3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5, 8, 9, 7, 9]
        width = 4
        w = RollingMax()
        for position, value in enumerate(data):
            w.push(position, float(value))
            w.evict(position - width + 1)
            first = max(0, position - width + 1)
            expected = max(data[first:position + 1])
            self.assertAlmostEqual(w.peek()[1], expected)
            self.assertEqual(data[w.peek()[0]], expected)

class TestRunningStats(unittest.TestCase):
    '''Tests the RunningStats class'''
    def test_running(self):
        '''Test the Running stats over simple use cases'''
        rs = RunningStats()

        data = [5, 6, 7, 8, 9, 10, 12, 6, 2]
        expectedMean = 65/9
        expectedVariance = 69.556/8
        expecteStdDev = math.sqrt(expectedVariance)

        for point in data:
            rs.push(point)

        self.assertEqual(rs.count, 9)
        self.assertAlmostEqual(rs.mean, expectedMean)
        self.assertAlmostEqual(rs.variance, expectedVariance, 3)
        self.assertAlmostEqual(rs.stddev, expecteStdDev, 3)

    def test_small_samples(self):
        '''Empty and single-value sets have zero spread'''
        rs = RunningStats()
        self.assertAlmostEqual(rs.mean, 0.0)
        self.assertAlmostEqual(rs.variance, 0.0)

        rs.push(4.0)
        self.assertAlmostEqual(rs.mean, 4.0)
        self.assertAlmostEqual(rs.variance, 0.0)
