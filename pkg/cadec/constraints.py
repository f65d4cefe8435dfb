import json
import logging
from collections import Counter
from dataclasses import dataclass

import numpy as np

from cadec.errors import ClassIndexOutOfRange, EmptyCorpus, ParseError, SchemaVersionMismatch
from cadec.labels import LabelSequence, segments_of
#==============================================#
    # In this file (in-order as they appear):
    #       TransitionTable
    #       DurationBounds
    #       ConstraintSet(dataclass)
    #       extract_constraints()
    #       serialize() / deserialize()
    #       save_constraints() / load_constraints()
#==============================================#

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
ROW_SUM_TOLERANCE = 1e-9

#==============================================#
# START CLASSES
#==============================================#

class TransitionTable:
    '''
    Confidences Conf(A -> B) for ordered pairs of distinct classes.

    Every stored confidence lies in (0, 1] and the outgoing confidences of
    each source class sum to 1. Pairs not stored are not valid transitions.
    '''
    def __init__(self, entries, num_classes):
        '''
        entries: `Mapping[(int, int), float]` confidence per (source, target) pair.

        num_classes: `int` size of the class space.

        Raises ValueError when an invariant does not hold.
        '''
        if num_classes < 1:
            raise ValueError("num_classes must be positive.")
        table = {}
        for (a, b), conf in entries.items():
            a, b, conf = int(a), int(b), float(conf)
            if not (0 <= a < num_classes and 0 <= b < num_classes):
                raise ClassIndexOutOfRange(
                    "transition {}->{} is outside [0, {})".format(a, b, num_classes))
            if a == b:
                raise ValueError("self-transition {}->{} cannot be stored.".format(a, b))
            if not 0.0 < conf <= 1.0:
                raise ValueError("confidence of {}->{} is {}, expected (0, 1].".format(a, b, conf))
            table[(a, b)] = conf

        sums = Counter()
        for (a, _), conf in table.items():
            sums[a] += conf
        for a, total in sums.items():
            if abs(total - 1.0) > ROW_SUM_TOLERANCE:
                raise ValueError("confidences leaving class {} sum to {}, not 1.".format(a, total))

        self._table = dict(sorted(table.items()))
        self._num_classes = int(num_classes)

    @classmethod
    def uniform(cls, num_classes):
        '''Every ordered pair of distinct classes with confidence 1/(C-1).'''
        if num_classes < 2:
            return cls({}, num_classes)
        conf = 1.0 / (num_classes - 1)
        return cls({(a, b): conf for a in range(num_classes)
                    for b in range(num_classes) if a != b}, num_classes)

    def __len__(self):
        return len(self._table)

    def __iter__(self):
        return iter(self._table)

    def __contains__(self, pair):
        return pair in self._table

    def __getitem__(self, pair):
        return self._table[pair]

    def __eq__(self, other):
        if not isinstance(other, TransitionTable):
            return NotImplemented
        return self._num_classes == other._num_classes and self._table == other._table

    def __repr__(self):
        return "TransitionTable({}, num_classes={})".format(self._table, self._num_classes)

    def items(self):
        '''(pair, confidence) items in (source, target) order.'''
        return self._table.items()

    def successors(self, source):
        '''dict of target -> confidence for transitions leaving `source`.'''
        return {b: conf for (a, b), conf in self._table.items() if a == source}

    @property
    def num_classes(self):
        '''Size of the class space.'''
        return self._num_classes

    def to_matrix(self):
        '''C x C confidence matrix, zero where no transition is stored.'''
        mat = np.zeros((self._num_classes, self._num_classes))
        for (a, b), conf in self._table.items():
            mat[a, b] = conf
        return mat

class DurationBounds:
    '''
    Per-class segment duration bounds as fractions of the video length.

    Unobserved classes hold the sentinel (0, 1).
    '''
    def __init__(self, d_min, d_max, observed=None):
        '''
        d_min, d_max: `array-like[float]` one bound per class.

        observed: `array-like[bool]` which classes were seen in the corpus.
        Defaults to all True.

        Raises ValueError unless 0 <= d_min <= d_max <= 1 and d_max > 0.
        '''
        d_min = np.array(d_min, dtype=float).reshape(-1)
        d_max = np.array(d_max, dtype=float).reshape(-1)
        if d_min.shape != d_max.shape or d_min.size == 0:
            raise ValueError("d_min and d_max need one entry per class.")
        if observed is None:
            observed = np.ones(d_min.size, dtype=bool)
        observed = np.array(observed, dtype=bool).reshape(-1)
        if observed.shape != d_min.shape:
            raise ValueError("observed needs one entry per class.")

        if not (np.all(d_min >= 0.0) and np.all(d_min <= d_max)
                and np.all(d_max > 0.0) and np.all(d_max <= 1.0)):
            raise ValueError("duration bounds need 0 <= d_min <= d_max <= 1 and d_max > 0.")
        if np.any((~observed) & ((d_min != 0.0) | (d_max != 1.0))):
            raise ValueError("unobserved classes must carry the bounds (0, 1).")

        for arr in (d_min, d_max, observed):
            arr.setflags(write=False)
        self._d_min = d_min
        self._d_max = d_max
        self._observed = observed

    @classmethod
    def permissive(cls, num_classes):
        '''(0, 1) bounds for every class, all marked observed.'''
        return cls(np.zeros(num_classes), np.ones(num_classes))

    def __len__(self):
        return self._d_min.size

    def __getitem__(self, c):
        return float(self._d_min[c]), float(self._d_max[c])

    def __eq__(self, other):
        if not isinstance(other, DurationBounds):
            return NotImplemented
        return (np.array_equal(self._d_min, other._d_min)
                and np.array_equal(self._d_max, other._d_max)
                and np.array_equal(self._observed, other._observed))

    def __repr__(self):
        return "DurationBounds(d_min={}, d_max={})".format(self._d_min.tolist(), self._d_max.tolist())

    @property
    def d_min(self):
        '''Read-only array of lower bounds.'''
        return self._d_min

    @property
    def d_max(self):
        '''Read-only array of upper bounds.'''
        return self._d_max

    def is_observed(self, c):
        '''False for classes that carry the (0, 1) sentinel because they were never seen.'''
        return bool(self._observed[c])

    @property
    def observed(self):
        '''Read-only boolean array of observed classes.'''
        return self._observed

    def widened(self, slack):
        '''
        Bounds widened to (d_min * (1 - slack), min(1, d_max * (1 + slack))).

        Unobserved classes keep their sentinel.
        '''
        if not 0.0 <= slack <= 1.0:
            raise ValueError("slack must lie in [0, 1].")
        if slack == 0.0:
            return self
        d_min = np.where(self._observed, self._d_min * (1.0 - slack), 0.0)
        d_max = np.where(self._observed, np.minimum(1.0, self._d_max * (1.0 + slack)), 1.0)
        return DurationBounds(d_min, d_max, self._observed)

    def frame_limits(self, num_frames):
        '''
        Integer segment-length limits for a video of `num_frames` frames.

        Returns three int arrays indexed by class:

        lo: shortest length L a segment may have before the video moves on,
        i.e. the first L with L/T >= d_min (T+1 when no such L exists).

        hi: longest run reachable by continuation, i.e. every duration d < L
        satisfies d/T < d_max.

        cap: longest final segment, i.e. the last L with L/T <= d_max.
        '''
        T = int(num_frames)
        if T < 1:
            raise ValueError("num_frames must be positive.")
        frac = np.arange(1, T + 1) / T
        reach_min = frac[None, :] >= self._d_min[:, None]
        lo = np.where(reach_min.any(axis=1), reach_min.argmax(axis=1) + 1, T + 1)
        hi = 1 + np.count_nonzero(frac[None, :T - 1] < self._d_max[:, None], axis=1)
        cap = np.count_nonzero(frac[None, :] <= self._d_max[:, None], axis=1)
        return lo.astype(np.int64), hi.astype(np.int64), cap.astype(np.int64)

@dataclass(frozen=True)
class ConstraintSet:
    '''
    The structural constraints used by the decoder: valid start classes,
    valid end classes, valid transitions with confidences, and per-class
    duration bounds. Immutable and safe to share across decoders.
    '''
    num_classes: int
    start_set: frozenset
    end_set: frozenset
    transitions: TransitionTable
    durations: DurationBounds
    class_names: tuple = None

    def __post_init__(self):
        C = self.num_classes
        if not isinstance(C, (int, np.integer)) or C < 1:
            raise ValueError("num_classes must be a positive integer.")
        object.__setattr__(self, 'num_classes', int(C))
        object.__setattr__(self, 'start_set', frozenset(int(c) for c in self.start_set))
        object.__setattr__(self, 'end_set', frozenset(int(c) for c in self.end_set))
        for name in ('start_set', 'end_set'):
            for c in getattr(self, name):
                if not 0 <= c < C:
                    raise ClassIndexOutOfRange(
                        "{} holds class {} outside [0, {})".format(name, c, C))
        if self.transitions.num_classes != C:
            raise ValueError("transition table is sized for {} classes, not {}.".format(
                self.transitions.num_classes, C))
        if len(self.durations) != C:
            raise ValueError("duration bounds cover {} classes, not {}.".format(len(self.durations), C))
        if self.class_names is not None:
            names = tuple(self.class_names)
            if len(names) != C:
                raise ValueError("class_names must name all {} classes.".format(C))
            object.__setattr__(self, 'class_names', names)

    @classmethod
    def permissive(cls, num_classes, class_names=None):
        '''Every class may start and end, every pair may follow, any duration is allowed.'''
        everything = frozenset(range(num_classes))
        return cls(num_classes, everything, everything,
                   TransitionTable.uniform(num_classes),
                   DurationBounds.permissive(num_classes), class_names)

    def class_name(self, c):
        '''Readable name for class `c`.'''
        return self.class_names[c] if self.class_names is not None else str(c)

    def summary(self):
        '''Multi-line report: set sizes and per-class duration bounds.'''
        lines = [
            "classes:      {}".format(self.num_classes),
            "start set:    {} {}".format(len(self.start_set), sorted(self.class_name(c) for c in self.start_set)),
            "end set:      {} {}".format(len(self.end_set), sorted(self.class_name(c) for c in self.end_set)),
            "transitions:  {}".format(len(self.transitions)),
            "durations (fraction of video):",
        ]
        for c in range(self.num_classes):
            d_min, d_max = self.durations[c]
            tag = '' if self.durations.is_observed(c) else '  (unobserved)'
            lines.append("  {:<24} [{:.4f}, {:.4f}]{}".format(self.class_name(c), d_min, d_max, tag))
        return '\n'.join(lines)

#==============================================#
# START FUNCTIONS
#==============================================#

def extract_constraints(corpus, num_classes, slack=0.0, class_names=None):
    '''
    Count the structural constraints of an annotated corpus.

    corpus: `Iterable[LabelSequence | array-like]` one ground-truth sequence per video.

    num_classes: `int` size of the class space C.

    slack: `float` in [0, 1]; widens duration bounds multiplicatively.

    Transitions are counted between consecutive segments, and each source's
    count is divided by the number of its segments that have a successor, so
    the confidences leaving a class sum to one.

    Raises EmptyCorpus if the corpus is empty, ClassIndexOutOfRange on labels >= C.
    '''
    sequences = []
    for seq in corpus:
        if not isinstance(seq, LabelSequence):
            seq = LabelSequence(seq, num_classes)
        elif seq.labels.max() >= num_classes:
            raise ClassIndexOutOfRange("label {} is outside [0, {})".format(int(seq.labels.max()), num_classes))
        sequences.append(seq)
    if not sequences:
        raise EmptyCorpus("cannot extract constraints from an empty corpus.")

    starts, ends = set(), set()
    pair_counts = Counter()
    source_counts = Counter()
    d_min = np.ones(num_classes)
    d_max = np.zeros(num_classes)
    observed = np.zeros(num_classes, dtype=bool)

    for seq in sequences:
        segments = segments_of(seq)
        T = len(seq)
        starts.add(segments[0].label)
        ends.add(segments[-1].label)
        for before, after in zip(segments, segments[1:]):
            pair_counts[(before.label, after.label)] += 1
            source_counts[before.label] += 1
        for seg in segments:
            frac = seg.length / T
            observed[seg.label] = True
            d_min[seg.label] = min(d_min[seg.label], frac)
            d_max[seg.label] = max(d_max[seg.label], frac)

    entries = {pair: count / source_counts[pair[0]] for pair, count in pair_counts.items()}
    transitions = TransitionTable(entries, num_classes)

    d_min = np.where(observed, d_min, 0.0)
    d_max = np.where(observed, d_max, 1.0)
    durations = DurationBounds(d_min, d_max, observed).widened(slack)

    cs = ConstraintSet(num_classes, starts, ends, transitions, durations, class_names)
    logger.debug("extracted %d transitions, |S|=%d, |E|=%d from %d sequences",
                 len(transitions), len(starts), len(ends), len(sequences))
    return cs

def to_document(cs):
    '''The JSON-ready dict written by `serialize`.'''
    doc = {
        'version': SCHEMA_VERSION,
        'num_classes': cs.num_classes,
    }
    if cs.class_names is not None:
        doc['class_names'] = list(cs.class_names)
    doc['start_set'] = sorted(cs.start_set)
    doc['end_set'] = sorted(cs.end_set)
    doc['transitions'] = [{'from': a, 'to': b, 'conf': conf} for (a, b), conf in cs.transitions.items()]
    doc['durations'] = [
        {'class': c, 'd_min': float(cs.durations.d_min[c]), 'd_max': float(cs.durations.d_max[c])}
        for c in range(cs.num_classes) if cs.durations.is_observed(c)
    ]
    return doc

def serialize(cs):
    '''
    Encode a ConstraintSet as a versioned JSON document (UTF-8 bytes).

    Floats are written with shortest round-trip repr, so deserialising gives
    back identical values. Classes absent from `durations` are unobserved.
    '''
    return (json.dumps(to_document(cs), indent=2) + '\n').encode('utf-8')

def _require(doc, key, where):
    if key not in doc:
        raise ParseError("missing required field", source=where, field=key)
    return doc[key]

def _as_int(value, name, where):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError("expected an integer, got {!r}".format(value), source=where, field=name)
    return value

def _as_float(value, name, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError("expected a number, got {!r}".format(value), source=where, field=name)
    return float(value)

def deserialize(data, source=None):
    '''
    Decode a document written by `serialize`.

    data: `bytes | str` the document.

    source: `str` optional origin reported in errors.

    Raises ParseError (with line or field location) on malformed input and
    SchemaVersionMismatch on an unknown version.
    '''
    if isinstance(data, bytes):
        data = data.decode('utf-8')
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as err:
        raise ParseError(err.msg, source=source, line=err.lineno) from None
    if not isinstance(doc, dict):
        raise ParseError("top level must be an object", source=source)

    version = _as_int(_require(doc, 'version', source), 'version', source)
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(
            "schema version {} is not supported (expected {})".format(version, SCHEMA_VERSION),
            source=source, field='version')

    C = _as_int(_require(doc, 'num_classes', source), 'num_classes', source)
    if C < 1:
        raise ParseError("must be positive", source=source, field='num_classes')

    def class_index(value, name):
        value = _as_int(value, name, source)
        if not 0 <= value < C:
            raise ParseError("class {} is outside [0, {})".format(value, C), source=source, field=name)
        return value

    names = doc.get('class_names')
    if names is not None:
        if not isinstance(names, list) or len(names) != C or not all(isinstance(n, str) for n in names):
            raise ParseError("must list one string per class", source=source, field='class_names')

    sets = {}
    for key in ('start_set', 'end_set'):
        values = _require(doc, key, source)
        if not isinstance(values, list):
            raise ParseError("expected a list", source=source, field=key)
        sets[key] = frozenset(class_index(v, "{}[{}]".format(key, i)) for i, v in enumerate(values))

    raw_transitions = _require(doc, 'transitions', source)
    if not isinstance(raw_transitions, list):
        raise ParseError("expected a list", source=source, field='transitions')
    entries = {}
    for i, item in enumerate(raw_transitions):
        where = "transitions[{}]".format(i)
        if not isinstance(item, dict):
            raise ParseError("expected an object", source=source, field=where)
        a = class_index(_require(item, 'from', source), where + '.from')
        b = class_index(_require(item, 'to', source), where + '.to')
        conf = _as_float(_require(item, 'conf', source), where + '.conf', source)
        if a == b:
            raise ParseError("self-transitions are not stored", source=source, field=where)
        if not 0.0 < conf <= 1.0:
            raise ParseError("confidence {} is outside (0, 1]".format(conf), source=source, field=where + '.conf')
        if (a, b) in entries:
            raise ParseError("duplicate transition {}->{}".format(a, b), source=source, field=where)
        entries[(a, b)] = conf
    try:
        transitions = TransitionTable(entries, C)
    except ValueError as err:
        raise ParseError(str(err), source=source, field='transitions') from None

    raw_durations = _require(doc, 'durations', source)
    if not isinstance(raw_durations, list):
        raise ParseError("expected a list", source=source, field='durations')
    d_min, d_max = np.zeros(C), np.ones(C)
    observed = np.zeros(C, dtype=bool)
    for i, item in enumerate(raw_durations):
        where = "durations[{}]".format(i)
        if not isinstance(item, dict):
            raise ParseError("expected an object", source=source, field=where)
        c = class_index(_require(item, 'class', source), where + '.class')
        if observed[c]:
            raise ParseError("class {} listed twice".format(c), source=source, field=where)
        lo = _as_float(_require(item, 'd_min', source), where + '.d_min', source)
        hi = _as_float(_require(item, 'd_max', source), where + '.d_max', source)
        if not (0.0 <= lo <= hi <= 1.0 and hi > 0.0):
            raise ParseError("bounds ({}, {}) violate 0 <= d_min <= d_max <= 1".format(lo, hi),
                             source=source, field=where)
        d_min[c], d_max[c], observed[c] = lo, hi, True

    return ConstraintSet(C, sets['start_set'], sets['end_set'], transitions,
                         DurationBounds(d_min, d_max, observed),
                         tuple(names) if names is not None else None)

def save_constraints(file, cs):
    '''Write `serialize(cs)` to `file`.'''
    with open(file, 'wb') as f:
        f.write(serialize(cs))

def load_constraints(file):
    '''Read a constraint file. Raises ParseError naming the file.'''
    with open(file, 'rb') as f:
        return deserialize(f.read(), source=file)
