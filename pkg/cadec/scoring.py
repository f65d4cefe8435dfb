from dataclasses import dataclass
from enum import Enum
from math import log

import numpy as np

from cadec.labels import LabelSequence, Segment, segments_of
#==============================================#
    # In this file (in-order as they appear):
    #       ObjectiveTerms(dataclass)
    #       ViolationKind(Enum)
    #       Violation(dataclass)
    #       objective_terms()
    #       tied() / preferred_row()
    #       score_batch()
    #       score_labels()
    #       path_contributions()
    #       validate()
    #       soft_limit_penalty()
#==============================================#

NEG_INF = float('-inf')
# Relative gap below which two path scores count as equal.
TIE_TOLERANCE = 1e-10

#==============================================#
# START CLASSES
#==============================================#

@dataclass(frozen=True)
class ObjectiveTerms:
    '''
    The objective for one video length, resolved from a constraint set and a config.

    trans: C x C additive score of leaving class a for class b (diagonal -inf;
    a continuation is not a transition and scores 0).

    start, end: per-class additive score of opening / closing the video.

    lo, hi, cap: integer segment-length limits (see `DurationBounds.frame_limits`).

    hard: when True, lengths outside the limits are forbidden; otherwise
    each breach costs `duration_penalty`.
    '''
    hard: bool
    trans: np.ndarray
    start: np.ndarray
    end: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    cap: np.ndarray
    duration_penalty: float

    @property
    def num_classes(self):
        '''C'''
        return self.start.shape[0]

class ViolationKind(Enum):
    '''
    Which constraint a label sequence breaks.
    '''
    start = 0
    end = 1
    transition = 2
    duration = 3

@dataclass(frozen=True)
class Violation:
    '''
    One broken constraint, located at `frame`.

    For transitions `previous` is the class left behind; for durations
    `segment`, `observed` (length / T) and `bound` (d_min, d_max) describe the
    offending segment.
    '''
    kind: ViolationKind
    frame: int
    label: int
    previous: int = None
    segment: Segment = None
    observed: float = None
    bound: tuple = None

    def __str__(self):
        if self.kind is ViolationKind.transition:
            return "frame {}: transition {} -> {} is not allowed".format(self.frame, self.previous, self.label)
        if self.kind is ViolationKind.duration:
            return "frame {}: segment of class {} covers {:.4f} of the video, bounds [{:.4f}, {:.4f}]".format(
                self.frame, self.label, self.observed, self.bound[0], self.bound[1])
        return "frame {}: class {} is not a valid {} action".format(self.frame, self.label, self.kind.name)

#==============================================#
# START FUNCTIONS
#==============================================#

def _families(cfg):
    # Classical decoding is the objective with every constraint family switched off.
    classical = cfg.mode.value == 'classical'
    return (cfg.use_start_end and not classical,
            cfg.use_transitions and not classical,
            cfg.use_durations and not classical)

def objective_terms(cs, cfg, num_frames):
    '''
    Resolve the objective for a video of `num_frames` frames.

    cs: `ConstraintSet`

    cfg: `DecodeConfig`
    '''
    C, T = cs.num_classes, int(num_frames)
    use_start_end, use_transitions, use_durations = _families(cfg)
    soft = cfg.mode.value == 'soft'
    lam = cfg.soft_penalty if soft else 0.0
    w_t = cfg.w_transition
    floor = cfg.epsilon_floor

    conf = cs.transitions.to_matrix()
    valid = conf > 0.0
    base = w_t * np.log(np.maximum(conf, floor))
    if not use_transitions:
        trans = base
    elif soft:
        trans = np.where(valid, base, w_t * (log(floor) - lam))
    else:
        trans = np.where(valid, base, NEG_INF)
    trans = np.array(trans, dtype=float)
    np.fill_diagonal(trans, NEG_INF)

    def boundary(allowed):
        if not use_start_end:
            return np.zeros(C)
        member = np.zeros(C, dtype=bool)
        member[list(allowed)] = True
        return np.where(member, 0.0, -lam if soft else NEG_INF)

    if use_durations:
        lo, hi, cap = cs.durations.frame_limits(T)
    else:
        lo = np.ones(C, dtype=np.int64)
        hi = np.full(C, T, dtype=np.int64)
        cap = np.full(C, T, dtype=np.int64)

    penalty = cfg.w_duration * lam if (soft and use_durations) else 0.0
    return ObjectiveTerms(hard=not soft, trans=trans, start=boundary(cs.start_set),
                          end=boundary(cs.end_set), lo=lo, hi=hi, cap=cap,
                          duration_penalty=penalty)

def tied(values, best):
    '''
    Mask of `values` equal to the finite score `best` up to rounding.

    Sums of the same terms taken in a different order differ in the last
    bits, so exact comparisons would let summation order break ties.
    '''
    return np.asarray(values) >= best - TIE_TOLERANCE * max(1.0, abs(best))

def preferred_row(label_matrix):
    '''
    Index of the row the decoders' shared tie rule keeps.

    Reading from the last frame backwards: the lowest final class, then
    staying in the current segment, then the lowest class to switch to.
    For segments that is the lowest last class, its earliest start, the
    lowest class before it, and so on.
    '''
    Y = np.asarray(label_matrix, dtype=np.int64)
    if Y.ndim == 1:
        Y = Y[None, :]
    codes = Y.copy()
    # -1 (stay) sorts before every class.
    codes[:, :-1] = np.where(Y[:, :-1] == Y[:, 1:], -1, Y[:, :-1])
    # lexsort keys run from least to most significant: frame 0 first, the last frame decides.
    return int(np.lexsort(codes.T)[0])

def score_batch(label_matrix, log_probs, terms):
    '''
    Objective value of every row of an N x T label matrix.

    log_probs: T x C floored log probabilities.

    Hard objectives give -inf to rows that break a constraint.
    '''
    Y = np.asarray(label_matrix, dtype=np.int64)
    if Y.ndim == 1:
        Y = Y[None, :]
    N, T = Y.shape
    frames = np.arange(T)

    score = log_probs[frames[None, :], Y].sum(axis=1)
    score = score + terms.start[Y[:, 0]] + terms.end[Y[:, -1]]

    if T > 1:
        left, right = Y[:, :-1], Y[:, 1:]
        changed = left != right
        score = score + np.where(changed, terms.trans[left, right], 0.0).sum(axis=1)
    else:
        changed = np.zeros((N, 0), dtype=bool)

    # Length of the current run at every frame.
    run = np.ones((N, T), dtype=np.int64)
    for t in range(1, T):
        run[:, t] = np.where(Y[:, t] == Y[:, t - 1], run[:, t - 1] + 1, 1)
    closes = np.concatenate((changed, np.zeros((N, 1), dtype=bool)), axis=1)

    lo, hi, cap = terms.lo[Y], terms.hi[Y], terms.cap[Y]
    final_len, final_hi, final_cap = run[:, -1], hi[:, -1], cap[:, -1]

    if terms.hard:
        broken = (closes & ((run < lo) | (run > hi))).any(axis=1)
        broken |= final_len > np.minimum(final_hi, final_cap)
        score = np.where(broken, NEG_INF, score)
    elif terms.duration_penalty > 0.0:
        short = (closes & (run < lo)).sum(axis=1)
        over = np.where(closes, np.maximum(0, run - hi), 0).sum(axis=1)
        final = np.maximum(0, final_len - final_hi) + (final_len > final_cap)
        score = score - terms.duration_penalty * (short + over + final)
    return score

def score_labels(labels, log_probs, terms):
    '''Objective value of a single label sequence.'''
    if isinstance(labels, LabelSequence):
        labels = labels.labels
    return float(score_batch(np.asarray(labels)[None, :], log_probs, terms)[0])

def path_contributions(labels, log_probs, terms):
    '''
    Per-frame share of the objective along one path.

    Transition scores land on the first frame of the new segment, duration
    penalties on the last frame of the offending segment. The sum equals
    `score_labels` up to summation order.
    '''
    if isinstance(labels, LabelSequence):
        labels = labels.labels
    labels = np.asarray(labels, dtype=np.int64)
    T = labels.shape[0]
    out = log_probs[np.arange(T), labels].astype(float)
    out[0] += terms.start[labels[0]]
    out[-1] += terms.end[labels[-1]]

    segments = segments_of(labels)
    for before, after in zip(segments, segments[1:]):
        out[after.start] += terms.trans[before.label, after.label]
    for i, seg in enumerate(segments):
        c, L = seg.label, seg.length
        final = i == len(segments) - 1
        if terms.hard:
            limit = min(terms.hi[c], terms.cap[c]) if final else terms.hi[c]
            if L > limit or (not final and L < terms.lo[c]):
                out[seg.end] = NEG_INF
        elif terms.duration_penalty > 0.0:
            breaches = max(0, L - int(terms.hi[c]))
            if final:
                breaches += int(L > terms.cap[c])
            else:
                breaches += int(L < terms.lo[c])
            out[seg.end] -= terms.duration_penalty * breaches
    return out

def validate(labels, cs, cfg=None):
    '''
    List every constraint `labels` breaks under `cs`; empty when it is valid.

    cfg: `DecodeConfig` optional; its family switches decide which constraint
    families are checked (all of them by default).
    '''
    if not isinstance(labels, LabelSequence):
        labels = LabelSequence(labels, cs.num_classes)
    if cfg is None:
        use_start_end = use_transitions = use_durations = True
    else:
        use_start_end, use_transitions, use_durations = _families(cfg)

    T = len(labels)
    segments = segments_of(labels)
    report = []

    if use_start_end:
        if segments[0].label not in cs.start_set:
            report.append(Violation(ViolationKind.start, 0, segments[0].label))
        if segments[-1].label not in cs.end_set:
            report.append(Violation(ViolationKind.end, T - 1, segments[-1].label))

    if use_transitions:
        for before, after in zip(segments, segments[1:]):
            if (before.label, after.label) not in cs.transitions:
                report.append(Violation(ViolationKind.transition, after.start, after.label,
                                        previous=before.label))

    if use_durations:
        lo, hi, cap = cs.durations.frame_limits(T)
        for i, seg in enumerate(segments):
            c, L = seg.label, seg.length
            if i == len(segments) - 1:
                broken = L > hi[c] or L > cap[c]
            else:
                broken = L > hi[c] or L < lo[c]
            if broken:
                report.append(Violation(ViolationKind.duration, seg.start, c, segment=seg,
                                        observed=L / T, bound=cs.durations[c]))

    report.sort(key=lambda v: (v.frame, v.kind.value))
    return report

def soft_limit_penalty(probs, cs, cfg):
    '''
    A penalty large enough that soft decoding never keeps a violation when a
    valid sequence exists.

    Twice the summed |log P| plus T * w_t * |log min Conf| plus one, divided by
    the smallest of 1, w_t and w_d (every breach costs at least that share of λ).
    Raises ValueError when either weight is zero.
    '''
    if cfg.w_transition <= 0.0 or cfg.w_duration <= 0.0:
        raise ValueError("the soft limit needs positive transition and duration weights.")
    logs = probs.log(cfg.epsilon_floor)
    conf = cs.transitions.to_matrix()
    min_conf = conf[conf > 0.0].min() if np.any(conf > 0.0) else 1.0
    T = probs.num_frames
    bound = 2.0 * np.abs(logs).sum() + T * cfg.w_transition * abs(log(min_conf)) + 1.0
    return float(bound / min(1.0, cfg.w_transition, cfg.w_duration))
