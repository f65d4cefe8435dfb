import unittest
import math

import numpy as np

from cadec.constraints import ConstraintSet, DurationBounds, TransitionTable
from cadec.decoder import DecodeConfig, DecodeMode, decode_classical, decode_constrained
from cadec.errors import InfeasibleConstraints, InstanceTooLarge
from cadec.oracle import oracle_decode
from cadec.probs import FrameProbMatrix
from test.test_decoder import random_constraints, random_probs

CONFIGS = [
    DecodeConfig(),
    DecodeConfig(w_transition=0.5),
    DecodeConfig(mode='soft', soft_penalty=2.0),
    DecodeConfig(mode='soft', soft_penalty=5.0, w_transition=0.3, w_duration=1.5),
]

def close(a, b):
    return math.isclose(a, b, rel_tol=1e-9, abs_tol=1e-9)

def tied_probs(rng, T, C):
    '''Probabilities from {0.25, 0.5}, so many label sequences share a score.'''
    return FrameProbMatrix(rng.choice([0.25, 0.5], size=(T, C)))

class TestOracle(unittest.TestCase):
    '''The exhaustive decoder against the dynamic program'''
    def check(self, P, cs, cfg):
        try:
            exact = oracle_decode(P, cs, cfg)
        except InfeasibleConstraints:
            self.assertRaises(InfeasibleConstraints, decode_constrained, P, cs, cfg)
            return False
        dp = decode_constrained(P, cs, cfg)
        self.assertTrue(close(dp.log_score, exact.log_score), (dp.log_score, exact.log_score))
        self.assertEqual(list(dp.labels), list(exact.labels), P.probs.tolist())
        return True

    def fuzz(self, seed, make_probs):
        rng = np.random.default_rng(seed)
        feasible = 0
        for i in range(1000):
            C = int(rng.integers(2, 5))
            T = int(rng.integers(2, 9 if C < 4 else 8))
            cs = random_constraints(rng, C)
            P = make_probs(rng, T, C)
            feasible += self.check(P, cs, CONFIGS[i % len(CONFIGS)])
        self.assertGreater(feasible, 500)

    def test_fuzz(self):
        '''Scores and labels agree on a thousand small random instances'''
        self.fuzz(2024, random_probs)

    def test_fuzz_ties(self):
        '''Labels agree when many sequences tie for the best score'''
        self.fuzz(77, tied_probs)

    def test_tie_rule(self):
        '''Ties keep the lowest final class and the longest final segment'''
        P = [[0.25, 0.25], [0.25, 0.25], [0.5, 0.5], [0.25, 0.25], [0.25, 0.25]]
        for decode in (decode_constrained, oracle_decode):
            self.assertEqual(list(decode(P, ConstraintSet.permissive(2)).labels), [0] * 5)
        self.assertEqual(list(decode_classical(P).labels), [0] * 5)

        # Only 0 -> 1 is allowed: 0 1 1 1 has the earliest start of the final segment.
        cs = ConstraintSet(2, {0}, {1}, TransitionTable({(0, 1): 1.0}, 2), DurationBounds.permissive(2))
        for decode in (decode_constrained, oracle_decode):
            self.assertEqual(list(decode(np.full((4, 2), 0.5), cs).labels), [0, 1, 1, 1])

    def test_permissive_is_classical(self):
        '''Enumerating a permissive set matches classical Viterbi'''
        rng = np.random.default_rng(3)
        for make_probs in (random_probs, tied_probs):
            for _ in range(20):
                C, T = int(rng.integers(2, 4)), int(rng.integers(1, 7))
                P = make_probs(rng, T, C)
                exact = oracle_decode(P, ConstraintSet.permissive(C))
                classical = decode_classical(P)
                self.assertTrue(close(exact.log_score, classical.log_score))
                self.assertEqual(list(exact.labels), list(classical.labels))

    def test_infeasible(self):
        '''No valid sequence raises, or falls back when asked'''
        cs = ConstraintSet(2, {0}, {1}, TransitionTable({}, 2), DurationBounds.permissive(2))
        P = [[0.9, 0.1], [0.8, 0.2], [0.6, 0.4]]
        self.assertRaises(InfeasibleConstraints, oracle_decode, P, cs)

        with self.assertLogs('cadec.oracle', level='WARNING'):
            result = oracle_decode(P, cs, DecodeConfig(infeasible_fallback='classical'))
        self.assertTrue(result.used_fallback)
        self.assertIs(result.mode, DecodeMode.classical)
        self.assertEqual(list(result.labels), [0, 0, 0])

    def test_too_large(self):
        '''More than ten million sequences is refused'''
        self.assertRaises(InstanceTooLarge, oracle_decode, np.full((12, 4), 0.25), ConstraintSet.permissive(4))
