import json
import logging
import os
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from cadec.constraints import DurationBounds
from cadec.errors import InvalidSpec
from cadec.labels import LABEL_SUFFIX, ClassMapping, LabelSequence, write_label_file
from cadec.probs import FrameProbMatrix, write_prob_binary, write_prob_csv
#==============================================#
    # In this file (in-order as they appear):
    #       GeneratorSpec(dataclass)
    #       generate_sequence()
    #       generate_corpus()
    #       calibrate_sigma()
    #       write_corpus()
#==============================================#

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-9
MAX_WALK = 256
MAX_ATTEMPTS = 1000
# Units per video of the procedural grammar, per class.
UNITS_PER_CLASS = 4.4

#==============================================#
# START CLASSES
#==============================================#

@dataclass(frozen=True)
class GeneratorSpec:
    '''
    num_classes: `int` C >= 2.

    start: `array-like` C probabilities of the first segment's class.

    transitions: `array-like` C x C row-stochastic matrix with a zero diagonal.

    stop: `array-like` C probabilities of ending the video after a segment of that class.

    d_min, d_max: `array-like` per-class segment length bounds as fractions of T.

    sigma: `float` emission noise, 0 for noiseless probabilities.

    t_min, t_max: `int` inclusive range of video lengths.

    units: `int` every video is cut into this many equal units and segments
    cover whole units, so a segment's share of its video is a multiple of
    1/units. Video lengths are the multiples of `units` within [t_min, t_max].

    seed: `int` default seed of the random stream.

    Raises InvalidSpec when any of the above is malformed.
    '''
    num_classes: int
    start: np.ndarray
    transitions: np.ndarray
    stop: np.ndarray
    d_min: np.ndarray
    d_max: np.ndarray
    sigma: float = 1.0
    t_min: int = 200
    t_max: int = 500
    units: int = 50
    seed: int = 0

    def __post_init__(self):
        C = self.num_classes
        if not isinstance(C, (int, np.integer)) or C < 2:
            raise InvalidSpec("num_classes must be an integer >= 2.")
        object.__setattr__(self, 'num_classes', int(C))

        def vector(name):
            arr = np.array(getattr(self, name), dtype=float).reshape(-1)
            if arr.shape != (C,) or not np.all(np.isfinite(arr)):
                raise InvalidSpec("{} needs {} finite entries.".format(name, C))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            return arr

        start, stop = vector('start'), vector('stop')
        d_min, d_max = vector('d_min'), vector('d_max')
        trans = np.array(self.transitions, dtype=float)
        if trans.shape != (C, C) or not np.all(np.isfinite(trans)):
            raise InvalidSpec("transitions must be a {0} x {0} matrix.".format(C))
        trans.setflags(write=False)
        object.__setattr__(self, 'transitions', trans)

        if np.any(start < 0.0) or abs(start.sum() - 1.0) > ROW_SUM_TOLERANCE:
            raise InvalidSpec("start must be a probability vector.")
        if np.any(trans < 0.0) or np.any(np.diag(trans) != 0.0):
            raise InvalidSpec("transitions must be non-negative with a zero diagonal.")
        bad = np.flatnonzero(np.abs(trans.sum(axis=1) - 1.0) > ROW_SUM_TOLERANCE)
        if bad.size:
            raise InvalidSpec("transition row {} does not sum to 1.".format(int(bad[0])))
        if np.any(stop < 0.0) or np.any(stop > 1.0) or not np.any(stop > 0.0):
            raise InvalidSpec("stop probabilities must lie in [0, 1] and not all be 0.")
        try:
            DurationBounds(d_min, d_max)
        except ValueError as err:
            raise InvalidSpec(str(err)) from None

        sigma = float(self.sigma)
        if not 0.0 <= sigma < float('inf'):
            raise InvalidSpec("sigma must be finite and non-negative.")
        object.__setattr__(self, 'sigma', sigma)
        if not 1 <= int(self.t_min) <= int(self.t_max):
            raise InvalidSpec("video lengths need 1 <= t_min <= t_max.")
        object.__setattr__(self, 't_min', int(self.t_min))
        object.__setattr__(self, 't_max', int(self.t_max))
        units = self.units
        if not isinstance(units, (int, np.integer)) or units < 1:
            raise InvalidSpec("units must be a positive integer.")
        object.__setattr__(self, 'units', int(units))
        if self.scales()[0] > self.scales()[1]:
            raise InvalidSpec("no multiple of {} units lies in [{}, {}].".format(
                self.units, self.t_min, self.t_max))
        object.__setattr__(self, 'seed', int(self.seed))

    @classmethod
    def procedural(cls, num_classes, seed=0, sigma=1.0, t_min=200, t_max=500):
        '''
        A left-to-right activity grammar with skips.

        Class i moves on to i+1 or skips to i+2 (skip chance drawn in
        [0.15, 0.25] per class). Videos open with class 0 or 1 and end on the
        last class, or on the one before it with chance 0.3. Every class
        covers between k and k+4 units of a video, k drawn from {3, 4}, with
        about 4.4 units per class in a video.
        '''
        C = int(num_classes)
        if C < 2:
            raise InvalidSpec("num_classes must be an integer >= 2.")
        rng = np.random.default_rng(seed)
        units = int(round(UNITS_PER_CLASS * C))

        skip = rng.uniform(0.15, 0.25, size=C)
        trans = np.zeros((C, C))
        for i in range(C - 2):
            trans[i, i + 1] = 1.0 - skip[i]
            trans[i, i + 2] = skip[i]
        trans[C - 2, C - 1] = 1.0
        # Never walked: the last class always stops.
        trans[C - 1, 0] = 1.0

        start = np.zeros(C)
        start[:2] = 0.5
        stop = np.zeros(C)
        stop[C - 1] = 1.0
        if C > 2:
            stop[C - 2] = 0.3

        shortest = rng.integers(3, 5, size=C)
        return cls(C, start, trans, stop, shortest / units, (shortest + 4) / units, sigma=sigma,
                   t_min=t_min, t_max=t_max, units=units, seed=seed)

    def scales(self):
        '''Smallest and largest frames-per-unit that keep videos within [t_min, t_max].'''
        return -(-self.t_min // self.units), self.t_max // self.units

    def replace(self, **changes):
        '''Copy with some fields changed.'''
        fields = self.to_dict()
        fields.update(changes)
        return GeneratorSpec(**fields)

    def to_dict(self):
        '''Plain-value snapshot (lists instead of arrays).'''
        return {
            'num_classes': self.num_classes,
            'start': self.start.tolist(),
            'transitions': self.transitions.tolist(),
            'stop': self.stop.tolist(),
            'd_min': self.d_min.tolist(),
            'd_max': self.d_max.tolist(),
            'sigma': self.sigma,
            't_min': self.t_min,
            't_max': self.t_max,
            'units': self.units,
            'seed': self.seed,
        }

    @classmethod
    def from_dict(cls, doc):
        '''Inverse of `to_dict`. Raises InvalidSpec on missing or unknown keys.'''
        try:
            return cls(**doc)
        except TypeError as err:
            raise InvalidSpec("malformed generator spec: {}".format(err)) from None

#==============================================#
# START FUNCTIONS
#==============================================#

def _rng(rng, spec):
    if rng is None:
        return np.random.default_rng(spec.seed)
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)

def _walk(spec, rng):
    c = int(rng.choice(spec.num_classes, p=spec.start))
    transcript = [c]
    while rng.random() >= spec.stop[c]:
        if len(transcript) == MAX_WALK:
            return None
        c = int(rng.choice(spec.num_classes, p=spec.transitions[c]))
        transcript.append(c)
    return transcript

def _split_units(lo, up, total, rng):
    # Uniform integer draws in a random segment order, each narrowed to what
    # the segments still to draw can absorb. Needs sum(lo) <= total <= sum(up).
    counts = np.empty_like(lo)
    left = int(total)
    rest_lo, rest_up = int(lo.sum()), int(up.sum())
    for i in rng.permutation(lo.size):
        rest_lo -= int(lo[i])
        rest_up -= int(up[i])
        low = max(int(lo[i]), left - rest_up)
        high = min(int(up[i]), left - rest_lo)
        counts[i] = rng.integers(low, high + 1)
        left -= int(counts[i])
    return counts

def _sample_labels(spec, rng):
    # Limits on a video of `units` frames are the per-class unit counts.
    lo, hi, cap = DurationBounds(spec.d_min, spec.d_max).frame_limits(spec.units)
    up = np.minimum(hi, cap)

    for _ in range(MAX_ATTEMPTS):
        transcript = _walk(spec, rng)
        if transcript is None:
            continue
        seg_lo, seg_up = lo[transcript], up[transcript]
        if np.any(seg_lo > seg_up) or seg_lo.sum() > spec.units or seg_up.sum() < spec.units:
            continue
        counts = _split_units(seg_lo, seg_up, spec.units, rng)
        low, high = spec.scales()
        scale = int(rng.integers(low, high + 1))
        labels = np.repeat(np.asarray(transcript, dtype=np.int64), counts * scale)
        return LabelSequence(labels, spec.num_classes)
    raise InvalidSpec("no transcript fits {} duration units after {} attempts; "
                      "check the duration bounds against the grammar.".format(spec.units, MAX_ATTEMPTS))

def _emissions(labels, sigma, noise):
    T, C = noise.shape
    alpha = sigma / (1.0 + sigma)
    probs = np.full((T, C), alpha / C)
    probs[np.arange(T), labels] += 1.0 - alpha
    probs += sigma * noise
    return probs / probs.sum(axis=1, keepdims=True)

def generate_sequence(spec, rng=None):
    '''
    Draw one video: (ground truth `LabelSequence`, `FrameProbMatrix`).

    rng: `numpy.random.Generator | int | None`; None uses `spec.seed`.

    The ground truth follows the grammar and lies within the duration
    bounds; every probability row sums to one.
    '''
    rng = _rng(rng, spec)
    gt = _sample_labels(spec, rng)
    noise = rng.standard_gamma(1.0, size=(len(gt), spec.num_classes))
    return gt, FrameProbMatrix(_emissions(gt.labels, spec.sigma, noise))

def generate_corpus(spec, n_train, n_test, rng=None):
    '''
    Draw a training corpus of ground truth and a test set of (gt, probs) pairs.

    Returns (list of LabelSequence, list of (LabelSequence, FrameProbMatrix)).
    Raises InvalidSpec unless both counts are at least one.
    '''
    if int(n_train) < 1 or int(n_test) < 1:
        raise InvalidSpec("a corpus needs at least one training and one test video.")
    rng = _rng(rng, spec)
    train = [_sample_labels(spec, rng) for _ in range(int(n_train))]
    test = [generate_sequence(spec, rng) for _ in range(int(n_test))]
    logger.debug("generated %d training and %d test videos (C=%d, sigma=%.3f)",
                 len(train), len(test), spec.num_classes, spec.sigma)
    return train, test

def calibrate_sigma(spec, target_acc, seed=0, num_videos=20, upper=50.0, xtol=1e-4):
    '''
    Noise level at which frame-wise argmax accuracy falls to `target_acc` percent.

    The same videos and noise draws are reused for every candidate sigma, so
    accuracy is a non-increasing step function of sigma and root finding
    settles on its crossing. Raises InvalidSpec when the target is out of
    reach within [0, upper].
    '''
    if not 0.0 < target_acc < 100.0:
        raise InvalidSpec("target accuracy must lie in (0, 100).")
    rng = np.random.default_rng(seed)
    videos = []
    for _ in range(int(num_videos)):
        gt = _sample_labels(spec, rng)
        videos.append((gt.labels, rng.standard_gamma(1.0, size=(len(gt), spec.num_classes))))
    frames = sum(labels.shape[0] for labels, _ in videos)

    def accuracy(sigma):
        hits = sum(int(np.sum(_emissions(labels, sigma, noise).argmax(axis=1) == labels))
                   for labels, noise in videos)
        return 100.0 * hits / frames

    if accuracy(upper) > target_acc:
        raise InvalidSpec("accuracy stays above {}% up to sigma = {}".format(target_acc, upper))
    sigma = float(brentq(lambda s: accuracy(s) - target_acc, 0.0, upper, xtol=xtol))
    logger.info("calibrated sigma = %.4f (argmax accuracy %.2f%%, target %.2f%%)",
                sigma, accuracy(sigma), target_acc)
    return sigma

def write_corpus(out_dir, train, test, spec=None, mapping=None, binary=False):
    '''
    Lay out a generated corpus on disk:

        train/<id>.txt          ground truth of the training videos
        test/gt/<id>.txt        ground truth of the test videos
        test/probs/<id>.csv     their probabilities (.bin when `binary`)
        mapping.txt             class names, when `mapping` is given
        split.json              video ids per split and the generator spec

    Returns the split document.
    '''
    dirs = {name: os.path.join(out_dir, *name.split('/')) for name in ('train', 'test/gt', 'test/probs')}
    for path in dirs.values():
        os.makedirs(path, exist_ok=True)

    train_ids = ["train_{:04d}".format(i) for i in range(len(train))]
    test_ids = ["test_{:04d}".format(i) for i in range(len(test))]
    for video, gt in zip(train_ids, train):
        write_label_file(os.path.join(dirs['train'], video + LABEL_SUFFIX), gt, mapping)
    for video, (gt, probs) in zip(test_ids, test):
        write_label_file(os.path.join(dirs['test/gt'], video + LABEL_SUFFIX), gt, mapping)
        if binary:
            write_prob_binary(os.path.join(dirs['test/probs'], video + '.bin'), probs)
        else:
            write_prob_csv(os.path.join(dirs['test/probs'], video + '.csv'), probs)

    if mapping is not None:
        mapping.write(os.path.join(out_dir, 'mapping.txt'))
    split = {'train': train_ids, 'test': test_ids,
             'spec': spec.to_dict() if spec is not None else None}
    with open(os.path.join(out_dir, 'split.json'), 'w') as f:
        json.dump(split, f, indent=2)
        f.write('\n')
    logger.info("wrote %d training and %d test videos to %s", len(train), len(test), out_dir)
    return split

def default_mapping(num_classes):
    '''Class names action_00, action_01, ...'''
    return ClassMapping(["action_{:02d}".format(c) for c in range(num_classes)])
