import unittest
import json

import numpy as np

from cadec.errors import EmptyCorpus, LengthMismatch
from cadec.labels import LabelSequence
from cadec.metrics import (DEFAULT_OVERLAPS, MetricAccumulator, edit_score, evaluate_corpus, f1_at, f1_counts,
                           frame_accuracy)

A, B, C = 0, 1, 2

def random_pair(rng, C=4, T=None):
    T = T if T is not None else int(rng.integers(1, 40))
    # Blocky sequences look more like segmentations than frame noise does.
    def blocky():
        labels, c = [], int(rng.integers(C))
        for _ in range(T):
            if rng.random() < 0.2:
                c = int(rng.integers(C))
            labels.append(c)
        return LabelSequence(labels, C)
    return blocky(), blocky()

class TestFrameAccuracy(unittest.TestCase):
    '''Tests for frame accuracy'''
    def test_examples(self):
        '''Matching frame percentages'''
        self.assertAlmostEqual(frame_accuracy([0, 0, 1, 1], [0, 1, 1, 1]), 75.0)
        self.assertAlmostEqual(frame_accuracy([1, 1], [0, 0]), 0.0)
        self.assertAlmostEqual(frame_accuracy(LabelSequence([2, 1], 3), [2, 1]), 100.0)

    def test_length_mismatch(self):
        '''Different lengths raise'''
        self.assertRaises(LengthMismatch, frame_accuracy, [0, 1], [0, 1, 1])

    def test_ignore(self):
        '''Ignored ground-truth frames are not scored'''
        self.assertAlmostEqual(frame_accuracy([0, 1, 1], [0, 2, 2], ignore=[2]), 100.0)
        self.assertAlmostEqual(frame_accuracy([1, 1], [2, 2], ignore=[2]), 100.0)

class TestEditScore(unittest.TestCase):
    '''Tests for the segmental edit score'''
    def test_examples(self):
        '''Hand-counted Levenshtein distances'''
        self.assertAlmostEqual(edit_score([A, B, A], [A, B, B]), 100 * (1 - 1 / 3))
        self.assertAlmostEqual(edit_score([A, A], [B, C]), 0.0)
        self.assertAlmostEqual(edit_score([A, A, B], [A, B, B]), 100.0)

    def test_durations_do_not_matter(self):
        '''Only the transcript counts, so lengths may differ'''
        self.assertAlmostEqual(edit_score([A, B, C], [A] * 5 + [B] + [C] * 9), 100.0)
        self.assertAlmostEqual(edit_score([A, C], [A, A, B, B, C]), 100 * (1 - 1 / 3))

    def test_ignore(self):
        '''Ignored segments leave the transcripts'''
        self.assertAlmostEqual(edit_score([A, C, B], [A, B, B], ignore=[C]), 100.0)
        self.assertAlmostEqual(edit_score([C], [C], ignore=[C]), 100.0)

class TestF1(unittest.TestCase):
    '''Tests for segmental F1'''
    def test_iou_threshold(self):
        '''Half of a ten-frame segment has IoU 0.5'''
        pred, gt = [A] * 5 + [B] * 5, [A] * 10
        self.assertEqual(f1_counts(pred, gt, 0.5), (1, 1, 0))
        self.assertEqual(f1_counts(pred, gt, 0.51), (0, 2, 1))
        for tau in (0.25, 0.5):
            self.assertAlmostEqual(f1_at(pred, gt, tau, ignore=[B]), 100.0)
        self.assertAlmostEqual(f1_at(pred, gt, 0.51, ignore=[B]), 0.0)

    def test_missed_segment(self):
        '''One of two ground-truth segments found'''
        pred, gt = [A] * 10, [A] * 5 + [B] * 5
        self.assertAlmostEqual(f1_at(pred, gt, 0.1), 100 * 2 / 3)

    def test_one_to_one(self):
        '''A ground-truth segment is matched at most once'''
        pred, gt = [A, A, B, A, A], [A] * 5
        self.assertEqual(f1_counts(pred, gt, 0.1), (1, 2, 0))

    def test_same_class_only(self):
        '''Overlap with another class is never a hit'''
        self.assertEqual(f1_counts([B] * 4, [A] * 4, 0.1), (0, 1, 1))

    def test_bad_threshold(self):
        '''Thresholds outside (0, 1) are refused'''
        self.assertRaises(ValueError, f1_at, [0], [0], 0.0)
        self.assertRaises(ValueError, f1_at, [0], [0], 1.0)
        self.assertRaises(LengthMismatch, f1_at, [0], [0, 0], 0.5)

class TestProperties(unittest.TestCase):
    '''Properties over random segmentations'''
    def test_identity(self):
        '''Every metric of a sequence against itself is 100'''
        rng = np.random.default_rng(1)
        for _ in range(100):
            seq, _ = random_pair(rng)
            self.assertAlmostEqual(frame_accuracy(seq, seq), 100.0)
            self.assertAlmostEqual(edit_score(seq, seq), 100.0)
            for tau in DEFAULT_OVERLAPS:
                self.assertAlmostEqual(f1_at(seq, seq, tau), 100.0)

    def test_f1_monotone(self):
        '''F1 never rises with the threshold'''
        rng = np.random.default_rng(2)
        taus = np.linspace(0.05, 0.95, 19)
        for _ in range(500):
            pred, gt = random_pair(rng)
            scores = [f1_at(pred, gt, tau) for tau in taus]
            for lower, higher in zip(scores, scores[1:]):
                self.assertGreaterEqual(lower + 1e-12, higher)

    def test_relabelling(self):
        '''A consistent permutation of classes changes nothing'''
        rng = np.random.default_rng(3)
        for _ in range(100):
            pred, gt = random_pair(rng)
            perm = rng.permutation(4)
            p2, g2 = perm[pred.labels], perm[gt.labels]
            self.assertAlmostEqual(frame_accuracy(pred, gt), frame_accuracy(p2, g2))
            self.assertAlmostEqual(edit_score(pred, gt), edit_score(p2, g2))
            for tau in DEFAULT_OVERLAPS:
                self.assertAlmostEqual(f1_at(pred, gt, tau), f1_at(p2, g2, tau))

    def test_range(self):
        '''Scores stay within [0, 100]'''
        rng = np.random.default_rng(4)
        for _ in range(100):
            pred, gt = random_pair(rng)
            report = evaluate_corpus([(pred, gt)])
            for value in [report.acc, report.edit] + list(report.f1.values()):
                self.assertGreaterEqual(value, 0.0)
                self.assertLessEqual(value, 100.0)

class TestEvaluateCorpus(unittest.TestCase):
    '''Tests for corpus aggregation'''
    def test_single_pair(self):
        '''One video scores like the per-pair functions'''
        pred, gt = [A, A, B, B, C], [A, B, B, B, C]
        report = evaluate_corpus([(pred, gt)])
        self.assertAlmostEqual(report.acc, frame_accuracy(pred, gt))
        self.assertAlmostEqual(report.edit, edit_score(pred, gt))
        for tau in DEFAULT_OVERLAPS:
            self.assertAlmostEqual(report.f1[tau], f1_at(pred, gt, tau))

    def test_pooling(self):
        '''Frames are pooled, edit scores averaged'''
        perfect = ([A, A, B, B], [A, A, B, B])
        wrong = ([B, B, A, A], [A, A, B, B])
        report = evaluate_corpus([perfect, wrong])
        self.assertAlmostEqual(report.acc, 50.0)
        self.assertAlmostEqual(report.edit, 50.0)
        self.assertAlmostEqual(report.f1[0.5], 50.0)

        report = evaluate_corpus([perfect, perfect])
        self.assertAlmostEqual(report.acc, 100.0)
        self.assertAlmostEqual(report.f1[0.1], 100.0)

    def test_frames_weighted(self):
        '''Longer videos weigh more in accuracy'''
        report = evaluate_corpus([([A] * 6, [A] * 6), ([A, A], [B, B])])
        self.assertAlmostEqual(report.acc, 75.0)

    def test_errors(self):
        '''Empty corpora and mismatched videos'''
        self.assertRaises(EmptyCorpus, evaluate_corpus, [])
        with self.assertRaises(LengthMismatch) as ctx:
            evaluate_corpus({'ok': ([0], [0]), 'vid7': ([0, 1], [0, 1, 1])})
        self.assertIn('vid7', str(ctx.exception))

    def test_json(self):
        '''The report document uses fixed keys'''
        report = evaluate_corpus({'v1': ([A, B], [A, B])})
        doc = json.loads(report.to_json())
        for key in ('acc', 'edit', 'f1_10', 'f1_25', 'f1_50', 'per_video'):
            self.assertIn(key, doc)
        self.assertEqual(doc['per_video'][0]['video'], 'v1')
        self.assertIn('F1@50', report.table())

    def test_accumulator(self):
        '''Updates return per-video scores; clear forgets them'''
        acc = MetricAccumulator(ignore=[C])
        scores = acc.update([A, C, B], [A, B, B], name='x')
        self.assertAlmostEqual(scores['acc'], 200 / 3)
        self.assertAlmostEqual(scores['edit'], 100.0)
        acc.clear()
        self.assertRaises(EmptyCorpus, acc.report)
        self.assertRaises(ValueError, MetricAccumulator, overlaps=(0.5, 1.5))
