import json
import logging
from dataclasses import dataclass, field

import numpy as np

from cadec.errors import EmptyCorpus, LengthMismatch
from cadec.labels import LabelSequence, segments_of
#==============================================#
    # In this file (in-order as they appear):
    #       EvalReport(dataclass)
    #       MetricAccumulator
    #       frame_accuracy()
    #       edit_score()
    #       f1_counts()
    #       f1_at()
    #       evaluate_corpus()
#==============================================#

logger = logging.getLogger(__name__)

DEFAULT_OVERLAPS = (0.10, 0.25, 0.50)
REPORT_VERSION = 1

#==============================================#
# START CLASSES
#==============================================#

def _f1_key(tau):
    return "f1_{:02d}".format(int(round(tau * 100)))

@dataclass
class EvalReport:
    '''
    Corpus-level scores.

    acc: frame accuracy pooled over every frame.

    edit: edit score averaged over videos.

    f1: IoU overlap -> F1 from true/false positive counts pooled over videos.

    per_video: one dict of scores per video, in evaluation order.
    '''
    acc: float
    edit: float
    f1: dict
    per_video: list = field(default_factory=list)

    def to_dict(self):
        doc = {'version': REPORT_VERSION, 'acc': self.acc, 'edit': self.edit}
        for tau in sorted(self.f1):
            doc[_f1_key(tau)] = self.f1[tau]
        doc['per_video'] = self.per_video
        return doc

    def to_json(self):
        '''JSON document with the fixed keys acc, edit, f1_10, f1_25, f1_50.'''
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + '\n'

    def table(self):
        '''Human readable summary.'''
        taus = sorted(self.f1)
        head = ["Acc", "Edit"] + ["F1@{:d}".format(int(round(t * 100))) for t in taus]
        values = [self.acc, self.edit] + [self.f1[t] for t in taus]
        lines = ["  ".join("{:>7}".format(h) for h in head),
                 "  ".join("{:>7.2f}".format(v) for v in values)]
        return "\n".join(lines)

class MetricAccumulator:
    '''
    Running totals for corpus evaluation.

    Frame hits and F1 counts are summed, edit scores averaged per video.
    '''
    def __init__(self, overlaps=DEFAULT_OVERLAPS, ignore=()):
        '''
        overlaps: `iterable` of IoU thresholds in (0, 1).

        ignore: `iterable` class indices left out of every metric.
        '''
        self.overlaps = tuple(float(t) for t in overlaps)
        for tau in self.overlaps:
            _check_tau(tau)
        self.ignore = frozenset(ignore)
        self.clear()

    def clear(self):
        self.correct = 0
        self.total = 0
        self.edit_sum = 0.0
        self.num_videos = 0
        self.tp = np.zeros(len(self.overlaps), dtype=np.int64)
        self.fp = np.zeros(len(self.overlaps), dtype=np.int64)
        self.fn = np.zeros(len(self.overlaps), dtype=np.int64)
        self.per_video = []

    def update(self, pred, gt, name=None):
        '''
        Add one video. Returns its own scores as a dict.

        Raises LengthMismatch (naming the video when `name` is given).
        '''
        try:
            p, g = _pair(pred, gt)
        except LengthMismatch as err:
            if name is None:
                raise
            raise LengthMismatch("video '{}': {}".format(name, err)) from None

        keep = _kept_frames(g, self.ignore)
        correct, total = int(np.sum(p[keep] == g[keep])), int(np.sum(keep))
        edit = _edit(p, g, self.ignore)
        self.correct += correct
        self.total += total
        self.edit_sum += edit
        self.num_videos += 1

        scores = {'video': name, 'acc': _percent(correct, total), 'edit': edit}
        for i, tau in enumerate(self.overlaps):
            tp, fp, fn = _f1_counts(p, g, tau, self.ignore)
            self.tp[i] += tp
            self.fp[i] += fp
            self.fn[i] += fn
            scores[_f1_key(tau)] = _f1(tp, fp, fn)
        self.per_video.append(scores)
        return scores

    def report(self):
        '''The EvalReport for everything added so far. Raises EmptyCorpus when nothing was added.'''
        if self.num_videos == 0:
            raise EmptyCorpus("no videos to evaluate.")
        f1 = {tau: _f1(int(self.tp[i]), int(self.fp[i]), int(self.fn[i]))
              for i, tau in enumerate(self.overlaps)}
        return EvalReport(_percent(self.correct, self.total), self.edit_sum / self.num_videos,
                          f1, list(self.per_video))

#==============================================#
# START FUNCTIONS
#==============================================#

def _check_tau(tau):
    if not 0.0 < tau < 1.0:
        raise ValueError("IoU threshold must lie in (0, 1), got {}".format(tau))

def _array(x):
    if isinstance(x, LabelSequence):
        return x.labels
    return np.asarray(x, dtype=np.int64).reshape(-1)

def _pair(pred, gt):
    p, g = _array(pred), _array(gt)
    if p.shape[0] != g.shape[0]:
        raise LengthMismatch("prediction has {} frames, ground truth {}".format(p.shape[0], g.shape[0]))
    if p.shape[0] == 0:
        raise ValueError("cannot score empty sequences.")
    return p, g

def _kept_frames(g, ignore):
    if not ignore:
        return np.ones(g.shape[0], dtype=bool)
    return ~np.isin(g, list(ignore))

def _percent(hits, total):
    # Nothing left to score counts as a perfect match.
    return 100.0 * hits / total if total else 100.0

def _kept_segments(labels, ignore):
    return [s for s in segments_of(labels) if s.label not in ignore]

def _levenshtein(a, b):
    row = np.arange(len(b) + 1, dtype=np.int64)
    for i, x in enumerate(a, 1):
        prev, row = row, np.empty_like(row)
        row[0] = i
        for j, y in enumerate(b, 1):
            row[j] = min(prev[j] + 1, row[j - 1] + 1, prev[j - 1] + (x != y))
    return int(row[-1])

def _edit(p, g, ignore):
    a = [s.label for s in _kept_segments(p, ignore)]
    b = [s.label for s in _kept_segments(g, ignore)]
    longest = max(len(a), len(b))
    if longest == 0:
        return 100.0
    score = 100.0 * (1.0 - _levenshtein(a, b) / longest)
    return float(min(100.0, max(0.0, score)))

def _f1_counts(p, g, tau, ignore):
    pred_segs = _kept_segments(p, ignore)
    gt_segs = _kept_segments(g, ignore)
    used = [False] * len(gt_segs)
    tp = 0
    for seg in pred_segs:
        best, best_iou = None, -1.0
        for j, other in enumerate(gt_segs):
            if used[j] or other.label != seg.label:
                continue
            iou = seg.iou(other)
            if iou > best_iou:
                best, best_iou = j, iou
        if best is not None and best_iou >= tau:
            used[best] = True
            tp += 1
    return tp, len(pred_segs) - tp, len(gt_segs) - tp

def _f1(tp, fp, fn):
    if tp == 0:
        return 0.0
    precision = tp / (tp + fp)
    recall = tp / (tp + fn)
    return 100.0 * 2.0 * precision * recall / (precision + recall)

def frame_accuracy(pred, gt, ignore=()):
    '''
    Percentage of frames whose predicted class equals the ground truth.

    Raises LengthMismatch.
    '''
    p, g = _pair(pred, gt)
    keep = _kept_frames(g, frozenset(ignore))
    return _percent(int(np.sum(p[keep] == g[keep])), int(np.sum(keep)))

def edit_score(pred, gt, ignore=()):
    '''
    100 * (1 - Levenshtein distance between the segment transcripts / the
    longer transcript's length). Depends on the transcripts only, so the
    sequences may differ in length.
    '''
    p, g = _array(pred), _array(gt)
    if p.shape[0] == 0 or g.shape[0] == 0:
        raise ValueError("cannot score empty sequences.")
    return _edit(p, g, frozenset(ignore))

def f1_counts(pred, gt, tau, ignore=()):
    '''
    (true positives, false positives, false negatives) of segment matching at IoU `tau`.

    Predicted segments are visited in temporal order and each claims the
    unclaimed ground-truth segment of its class with the highest IoU; the
    claim is a hit when that IoU reaches `tau`.
    '''
    _check_tau(tau)
    p, g = _pair(pred, gt)
    return _f1_counts(p, g, tau, frozenset(ignore))

def f1_at(pred, gt, tau, ignore=()):
    '''Segmental F1 at IoU threshold `tau` as a percentage; 0 without true positives.'''
    return _f1(*f1_counts(pred, gt, tau, ignore))

def evaluate_corpus(pairs, overlaps=DEFAULT_OVERLAPS, ignore=()):
    '''
    Score a corpus.

    pairs: `list` of (pred, gt) or `dict` of video id -> (pred, gt).

    Raises EmptyCorpus, and LengthMismatch naming the offending video.
    '''
    items = pairs.items() if isinstance(pairs, dict) else enumerate(pairs)
    acc = MetricAccumulator(overlaps, ignore)
    for name, (pred, gt) in items:
        acc.update(pred, gt, name=str(name))
    report = acc.report()
    logger.debug("evaluated %d videos: acc %.2f edit %.2f", acc.num_videos, report.acc, report.edit)
    return report
