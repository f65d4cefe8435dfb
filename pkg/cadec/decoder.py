import dataclasses
import logging
from dataclasses import dataclass
from enum import Enum

import numpy as np

from cadec.constraints import ConstraintSet, DurationBounds, TransitionTable
from cadec.errors import DimensionMismatch, InfeasibleConstraints
from cadec.labels import LabelSequence
from cadec.probs import FrameProbMatrix
from cadec.scoring import NEG_INF, objective_terms, path_contributions, tied, validate
from cadec.utilities import RollingMax
#==============================================#
    # In this file (in-order as they appear):
    #       DecodeMode(Enum)
    #       Fallback(Enum)
    #       DecodeConfig(dataclass)
    #       Trellis(dataclass)
    #       DecodeResult(dataclass)
    #       SegmentLattice
    #       decode_constrained()
    #       decode_soft()
    #       decode_classical()
    #       decode_tracking()
#==============================================#

logger = logging.getLogger(__name__)

#==============================================#
# START CLASSES
#==============================================#

class DecodeMode(Enum):
    '''
    `hard`: constraints forbid violations.

    `soft`: violations cost a penalty λ instead.

    `classical`: plain Viterbi, no constraints.

    `tracking`: hard constraints through a single duration counter per state
    (greedy; can miss the optimum).
    '''
    hard = 'hard'
    soft = 'soft'
    classical = 'classical'
    tracking = 'tracking'

class Fallback(Enum):
    '''What a hard decode does when no valid sequence exists.'''
    error = 'error'
    classical = 'classical'

@dataclass(frozen=True)
class DecodeConfig:
    '''
    Decoder settings. String values are accepted for the enum fields.

    w_transition scales log Conf (and the invalid-transition penalty in soft
    mode); w_duration scales the duration penalty and only matters in soft mode.
    soft_penalty is λ. use_start_end / use_transitions / use_durations switch
    a constraint family off for ablations.
    '''
    mode: DecodeMode = DecodeMode.hard
    w_transition: float = 1.0
    w_duration: float = 1.0
    soft_penalty: float = 10.0
    epsilon_floor: float = 1e-10
    infeasible_fallback: Fallback = Fallback.error
    use_start_end: bool = True
    use_transitions: bool = True
    use_durations: bool = True
    keep_trace: bool = False
    keep_trellis: bool = False

    def __post_init__(self):
        try:
            object.__setattr__(self, 'mode', DecodeMode(self.mode))
            object.__setattr__(self, 'infeasible_fallback', Fallback(self.infeasible_fallback))
        except ValueError as err:
            raise ValueError("invalid decode setting: {}".format(err)) from None
        for name in ('w_transition', 'w_duration', 'soft_penalty'):
            value = float(getattr(self, name))
            if not value >= 0.0 or value == float('inf'):
                raise ValueError("{} must be a finite non-negative number.".format(name))
            object.__setattr__(self, name, value)
        if not 0.0 < self.epsilon_floor < 1.0:
            raise ValueError("epsilon_floor must lie in (0, 1).")

    def replace(self, **changes):
        '''Copy with some fields changed.'''
        return dataclasses.replace(self, **changes)

    def to_dict(self):
        '''Plain-value snapshot, enums as strings.'''
        out = dataclasses.asdict(self)
        out['mode'] = self.mode.value
        out['infeasible_fallback'] = self.infeasible_fallback.value
        return out

@dataclass(frozen=True)
class Trellis:
    '''
    Dynamic-programming state of one segment-level decode.

    close[b, c]: best score of frames 0..b with a segment of class c ending at b.

    entry[a, c]: best score of frames 0..a-1 plus the transition into class c at a.

    start[b, c]: first frame of that best segment ending at b (-1 if unreachable).

    prev[a, c]: class left behind when entering c at a (-1 at a = 0).
    '''
    close: np.ndarray
    entry: np.ndarray
    start: np.ndarray
    prev: np.ndarray

    @property
    def durations(self):
        '''Length of the best segment ending at (b, c); 0 where unreachable.'''
        ends = np.arange(self.close.shape[0])[:, None]
        return np.where(np.isfinite(self.close), ends - self.start + 1, 0)

@dataclass(frozen=True)
class DecodeResult:
    '''
    Output of a decoder.

    labels: the decoded sequence.

    log_score: its objective value.

    feasible: for hard decodes, False only when no valid sequence existed and
    the classical fallback was used; for soft decodes, whether the labels
    happen to break no constraint.

    used_fallback: True when the labels come from the classical fallback.

    trace: cumulative per-frame path score, when requested.

    trellis: the DP state, when requested.
    '''
    labels: LabelSequence
    log_score: float
    feasible: bool
    used_fallback: bool = False
    mode: DecodeMode = DecodeMode.hard
    trace: np.ndarray = None
    trellis: Trellis = None

class _Band:
    # Contiguous range of segment lengths [first, last] with one penalty shape:
    # cost + slope * (L - hi).
    __slots__ = ('first', 'last', 'cost', 'slope', 'hi', 'window')

    def __init__(self, first, last, cost, slope, hi):
        self.first = first
        self.last = last
        self.cost = cost
        self.slope = slope
        self.hi = hi
        self.window = RollingMax()

class SegmentLattice:
    '''
    Exact maximiser of the decoding objective over segmentations.

    A segment of class c may end at frame b when its length falls in an
    admissible range, so the best start for it is a sliding-window maximum
    over earlier entry scores. Each (b, c) costs amortised O(1) plus one
    O(C) pass over predecessors, keeping a decode linear in T.
    '''
    def __init__(self, log_probs, terms):
        '''
        log_probs: T x C floored log probabilities.

        terms: `ObjectiveTerms` resolved for this T.
        '''
        self._logs = log_probs
        self._terms = terms
        self._T, self._C = log_probs.shape

    def _bands(self, c):
        T, terms = self._T, self._terms
        lo, hi = int(terms.lo[c]), int(terms.hi[c])
        penalty = terms.duration_penalty

        if not terms.hard and penalty == 0.0:
            return [_Band(1, T, 0.0, 0.0, hi)]

        cuts = sorted({1, min(lo, T + 1), min(hi + 1, T + 1), T + 1})
        bands = []
        for first, stop in zip(cuts, cuts[1:]):
            short = first < lo
            over = first > hi
            if terms.hard and (short or over):
                continue
            bands.append(_Band(first, stop - 1, penalty if short else 0.0,
                               penalty if over else 0.0, hi))
        return bands

    def run(self):
        '''
        Fill the trellis and pick the best final segment.

        Returns (labels array, score, Trellis). Raises InfeasibleConstraints
        when no admissible sequence exists.
        '''
        T, C, terms = self._T, self._C, self._terms
        cum = np.vstack((np.zeros((1, C)), np.cumsum(self._logs, axis=0)))
        cum_rows = cum.tolist()
        cols = np.arange(C)

        entry = np.full((T, C), NEG_INF)
        prev = np.full((T, C), -1, dtype=np.int64)
        close = np.full((T, C), NEG_INF)
        start = np.full((T, C), -1, dtype=np.int64)
        bands = [self._bands(c) for c in range(C)]
        entry_rows = []

        for b in range(T):
            if b == 0:
                entry[0] = terms.start
            else:
                cand = close[b - 1][:, None] + terms.trans
                best_prev = cand.argmax(axis=0)
                prev[b] = best_prev
                entry[b] = cand[best_prev, cols]
            entry_rows.append(entry[b].tolist())

            # A segment closing at the last frame is handled as the final one below.
            if b == T - 1:
                break

            ends = cum_rows[b + 1]
            close_row = [NEG_INF] * C
            start_row = [-1] * C
            for c in range(C):
                best, best_start = NEG_INF, -1
                for band in bands[c]:
                    a = b - band.first + 1
                    if a >= 0:
                        e = entry_rows[a][c]
                        if e != NEG_INF:
                            band.window.push(a, e - cum_rows[a][c] + band.slope * a)
                    band.window.evict(b - band.last + 1)
                    top = band.window.peek()
                    if top is None:
                        continue
                    value = ends[c] + top[1] - band.cost - band.slope * (b + 1 - band.hi)
                    if value > best or (value == best and top[0] < best_start):
                        best, best_start = value, top[0]
                close_row[c] = best
                start_row[c] = best_start
            close[b] = close_row
            start[b] = start_row

        final = self._final(entry, cum)
        score = float(final.max())
        if score == NEG_INF:
            raise InfeasibleConstraints("no label sequence satisfies the constraints.")

        # Walk back through every optimum, keeping the one `preferred_row` would pick.
        c = int(np.argmax(tied(final.max(axis=1), score)))
        a = int(np.argmax(tied(final[c], score)))
        b = T - 1
        labels = np.empty(T, dtype=np.int64)
        while True:
            labels[a:b + 1] = c
            if a == 0:
                break
            b = a - 1
            cand = close[b] + terms.trans[:, c]
            c = int(np.argmax(tied(cand, entry[a, c])))
            a = self._earliest_start(entry, cum, b, c, close[b, c])

        return labels, score, Trellis(close, entry, start, prev)

    def _earliest_start(self, entry, cum, b, c, best):
        # First start of a non-final class-c segment ending at b that reaches `best`.
        terms = self._terms
        first = max(0, b - int(terms.hi[c]) + 1) if terms.hard else 0
        starts = np.arange(first, b + 1)
        lengths = b + 1 - starts
        values = entry[first:b + 1, c] - cum[first:b + 1, c] + cum[b + 1, c]
        lo, hi = terms.lo[c], terms.hi[c]
        if terms.hard:
            values = np.where((lengths >= lo) & (lengths <= hi), values, NEG_INF)
        elif terms.duration_penalty > 0.0:
            breaches = (lengths < lo) + np.maximum(0, lengths - hi)
            values = values - terms.duration_penalty * breaches
        return first + int(np.argmax(tied(values, best)))

    def _final(self, entry, cum):
        # C x T scores of whole paths whose last segment has class c and starts at a.
        T, C, terms = self._T, self._C, self._terms
        lengths = T - np.arange(T)
        final = np.full((C, T), NEG_INF)

        for c in range(C):
            if terms.end[c] == NEG_INF:
                continue
            values = entry[:, c] - cum[:T, c]
            hi, cap = terms.hi[c], terms.cap[c]
            if terms.hard:
                values = np.where(lengths <= min(hi, cap), values, NEG_INF)
            elif terms.duration_penalty > 0.0:
                breaches = np.maximum(0, lengths - hi) + (lengths > cap)
                values = values - terms.duration_penalty * breaches
            final[c] = values + cum[T, c] + terms.end[c]
        return final

#==============================================#
# START FUNCTIONS
#==============================================#

def _as_matrix(probs):
    return probs if isinstance(probs, FrameProbMatrix) else FrameProbMatrix(probs)

def _check_classes(probs, num_classes):
    if probs.num_classes != num_classes:
        raise DimensionMismatch("probability matrix has {} classes, constraints have {}".format(
            probs.num_classes, num_classes))

def _finish(labels, score, probs, terms, cfg, mode, feasible=True, used_fallback=False, trellis=None):
    logs = probs.log(cfg.epsilon_floor)
    trace = np.cumsum(path_contributions(labels, logs, terms)) if cfg.keep_trace else None
    return DecodeResult(LabelSequence(labels, probs.num_classes), score, feasible,
                        used_fallback, mode, trace, trellis if cfg.keep_trellis else None)

def _fallback(probs, cs, cfg, err):
    if cfg.infeasible_fallback is not Fallback.classical:
        raise err
    logger.warning("constraints are infeasible for a %d-frame video; decoding classically",
                   probs.num_frames)
    result = decode_classical(probs, cs.transitions, cfg)
    return dataclasses.replace(result, feasible=False, used_fallback=True)

def decode_constrained(probs, cs, cfg=None):
    '''
    Most probable label sequence that honours the constraint set.

    probs: `FrameProbMatrix | array-like` T x C probabilities.

    cs: `ConstraintSet`

    cfg: `DecodeConfig` (hard mode by default). Soft, classical and tracking
    modes are dispatched to their decoders.

    Among equal-scoring sequences the lowest final class wins, then the
    earliest start of that segment, then the lowest class before it, and so
    on back to frame 0 (see `scoring.preferred_row`).

    Raises DimensionMismatch, and InfeasibleConstraints unless the config
    asks for the classical fallback.
    '''
    cfg = cfg if cfg is not None else DecodeConfig()
    probs = _as_matrix(probs)
    _check_classes(probs, cs.num_classes)

    if cfg.mode is DecodeMode.classical:
        return decode_classical(probs, cs.transitions, cfg)
    if cfg.mode is DecodeMode.tracking:
        return decode_tracking(probs, cs, cfg)

    terms = objective_terms(cs, cfg, probs.num_frames)
    lattice = SegmentLattice(probs.log(cfg.epsilon_floor), terms)
    try:
        labels, score, trellis = lattice.run()
    except InfeasibleConstraints as err:
        logger.info("hard decode infeasible (T=%d)", probs.num_frames)
        return _fallback(probs, cs, cfg, err)
    # Soft results always exist; report whether this one happens to break nothing.
    feasible = cfg.mode is DecodeMode.hard or not validate(LabelSequence(labels, cs.num_classes), cs, cfg)
    return _finish(labels, score, probs, terms, cfg, cfg.mode, feasible=feasible, trellis=trellis)

def decode_soft(probs, cs, cfg=None):
    '''
    Soft-constraint decoding: violations cost λ (cfg.soft_penalty) instead of
    being forbidden, so a result always exists.
    '''
    cfg = (cfg if cfg is not None else DecodeConfig()).replace(mode=DecodeMode.soft)
    return decode_constrained(probs, cs, cfg)

def decode_classical(probs, transitions=None, cfg=None):
    '''
    Standard Viterbi: frame log probabilities plus w_t * log Conf at every
    class change, nothing else.

    transitions: `TransitionTable` or None for uniform confidences. Pairs
    missing from the table score like a floored zero confidence.
    '''
    cfg = (cfg if cfg is not None else DecodeConfig()).replace(mode=DecodeMode.classical)
    probs = _as_matrix(probs)
    C, T = probs.num_classes, probs.num_frames
    if transitions is None:
        transitions = TransitionTable.uniform(C)
    _check_classes(probs, transitions.num_classes)

    everything = frozenset(range(C))
    cs = ConstraintSet(C, everything, everything, transitions, DurationBounds.permissive(C))
    terms = objective_terms(cs, cfg, T)
    logs = probs.log(cfg.epsilon_floor)

    step = terms.trans.copy()
    np.fill_diagonal(step, 0.0)
    V = np.empty((T, C))
    V[0] = logs[0]
    for t in range(1, T):
        V[t] = (V[t - 1][:, None] + step).max(axis=0) + logs[t]

    # Same tie rule as the segment lattice: stay in the class if that is optimal, else the lowest.
    score = float(V[-1].max())
    labels = np.empty(T, dtype=np.int64)
    labels[-1] = int(np.argmax(tied(V[-1], score)))
    for t in range(T - 1, 0, -1):
        c = labels[t]
        cand = V[t - 1] + step[:, c]
        ok = tied(cand, cand.max())
        labels[t - 1] = c if ok[c] else int(np.argmax(ok))
    return _finish(labels, score, probs, terms, cfg, DecodeMode.classical)

def decode_tracking(probs, cs, cfg=None):
    '''
    Hard-constrained Viterbi with one duration counter per (frame, class).

    V[t, c] keeps the best score with label c at frame t, D[t, c] the length
    of that path's current segment and B[t, c] its predecessor class. Only the
    best history survives per state, so a valid sequence can be missed; the
    labels returned always satisfy the constraints.
    '''
    cfg = (cfg if cfg is not None else DecodeConfig()).replace(mode=DecodeMode.tracking)
    probs = _as_matrix(probs)
    _check_classes(probs, cs.num_classes)
    C, T = cs.num_classes, probs.num_frames
    terms = objective_terms(cs, cfg, T)
    logs = probs.log(cfg.epsilon_floor)

    cols = np.arange(C)
    V = np.full((T, C), NEG_INF)
    D = np.zeros((T, C), dtype=np.int64)
    B = np.zeros((T, C), dtype=np.int64)
    V[0] = terms.start + logs[0]
    D[0] = np.where(np.isfinite(V[0]), 1, 0)

    for t in range(1, T):
        alive = np.isfinite(V[t - 1])
        # Continuing needs room below hi; leaving needs at least lo frames.
        stay = alive & (D[t - 1] < terms.hi)
        leave = alive & (D[t - 1] >= terms.lo)
        cand = np.where(leave[:, None], V[t - 1][:, None] + terms.trans, NEG_INF)
        cand[cols, cols] = np.where(stay, V[t - 1], NEG_INF)
        B[t] = cand.argmax(axis=0)
        V[t] = cand[B[t], cols] + logs[t]
        D[t] = np.where(B[t] == cols, D[t - 1] + 1, 1)
        D[t] = np.where(np.isfinite(V[t]), D[t], 0)

    ok = np.isfinite(V[-1]) & (D[-1] <= terms.cap) & np.isfinite(terms.end)
    final = np.where(ok, V[-1] + terms.end, NEG_INF)
    best = int(np.argmax(final))
    if final[best] == NEG_INF:
        err = InfeasibleConstraints("the duration-tracking decoder found no valid sequence.")
        return _fallback(probs, cs, cfg, err)

    labels = np.empty(T, dtype=np.int64)
    labels[-1] = best
    for t in range(T - 1, 0, -1):
        labels[t - 1] = B[t, labels[t]]
    return _finish(labels, float(final[best]), probs, terms, cfg, DecodeMode.tracking)
