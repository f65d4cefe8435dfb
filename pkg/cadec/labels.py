import logging
import os
from dataclasses import dataclass

import numpy as np

from cadec.errors import ClassIndexOutOfRange, ParseError
#==============================================#
    # In this file (in-order as they appear):
    #       Segment(dataclass)
    #       SegmentList
    #       LabelSequence
    #       ClassMapping
    #       segments_of()
    #       read_label_file()
    #       write_label_file()
    #       read_label_dir()
#==============================================#

logger = logging.getLogger(__name__)

LABEL_SUFFIX = '.txt'

#==============================================#
# START CLASSES
#==============================================#

@dataclass(frozen=True)
class Segment:
    '''
    A maximal run of one class: frames `start` to `end`, both inclusive.
    '''
    label: int
    start: int
    end: int

    @property
    def length(self):
        '''Number of frames in the segment.'''
        return self.end - self.start + 1

    def iou(self, other):
        '''Frame-interval intersection over union with another segment, ignoring labels.'''
        inter = min(self.end, other.end) - max(self.start, other.start) + 1
        if inter <= 0:
            return 0.0
        union = self.length + other.length - inter
        return inter / union

class SegmentList:
    '''
    Run-length view of a label sequence.

    Segments are contiguous, start at frame 0, end at frame T-1, and no two
    neighbours share a class.
    '''
    def __init__(self, segments):
        segments = tuple(segments)
        if not segments:
            raise ValueError("a segment list needs at least one segment.")
        if segments[0].start != 0:
            raise ValueError("the first segment must start at frame 0.")
        for before, after in zip(segments, segments[1:]):
            if after.start != before.end + 1:
                raise ValueError("segments must be contiguous: {} then {}".format(before, after))
            if after.label == before.label:
                raise ValueError("neighbouring segments share class {}".format(after.label))
        for seg in segments:
            if seg.end < seg.start:
                raise ValueError("segment {} is empty.".format(seg))
        self._segments = segments

    def __len__(self):
        return len(self._segments)

    def __iter__(self):
        return iter(self._segments)

    def __getitem__(self, index):
        return self._segments[index]

    def __eq__(self, other):
        if not isinstance(other, SegmentList):
            return NotImplemented
        return self._segments == other._segments

    def __repr__(self):
        return "SegmentList({})".format(
            [(s.label, s.start, s.end) for s in self._segments])

    @property
    def classes(self):
        '''The transcript: class of each segment, in order.'''
        return [s.label for s in self._segments]

    @property
    def num_frames(self):
        '''Total frame count T.'''
        return self._segments[-1].end + 1

    def to_labels(self):
        '''Expand back to a frame-wise label array.'''
        lengths = [s.length for s in self._segments]
        return np.repeat(np.asarray(self.classes, dtype=np.int64), lengths)

class LabelSequence:
    '''
    A frame-wise vector of class indices in [0, num_classes).

    The underlying array is read-only; build a new sequence to change it.
    '''
    def __init__(self, labels, num_classes):
        '''
        labels: `array-like[int]` one class index per frame, length >= 1.

        num_classes: `int` size of the class space C.

        Raises ValueError on an empty sequence, ClassIndexOutOfRange on a bad index.
        '''
        if not isinstance(num_classes, (int, np.integer)) or num_classes < 1:
            raise ValueError("num_classes must be a positive integer.")

        arr = np.array(labels, dtype=np.int64).reshape(-1)
        if arr.size == 0:
            raise ValueError("a label sequence needs at least one frame.")
        if arr.min() < 0 or arr.max() >= num_classes:
            bad = int(arr[(arr < 0) | (arr >= num_classes)][0])
            raise ClassIndexOutOfRange(
                "label {} is outside [0, {})".format(bad, num_classes))

        arr.setflags(write=False)
        self._labels = arr
        self._num_classes = int(num_classes)

    @classmethod
    def from_segments(cls, segments, num_classes):
        '''Build a sequence from a `SegmentList` or an iterable of `Segment`.'''
        if not isinstance(segments, SegmentList):
            segments = SegmentList(segments)
        return cls(segments.to_labels(), num_classes)

    def __len__(self):
        return self._labels.shape[0]

    def __iter__(self):
        return iter(self._labels.tolist())

    def __getitem__(self, index):
        return self._labels[index]

    def __eq__(self, other):
        if not isinstance(other, LabelSequence):
            return NotImplemented
        return (self._num_classes == other._num_classes
                and np.array_equal(self._labels, other._labels))

    def __hash__(self):
        return hash((self._num_classes, self._labels.tobytes()))

    def __repr__(self):
        return "LabelSequence({}, num_classes={})".format(self._labels.tolist(), self._num_classes)

    @property
    def labels(self):
        '''Read-only numpy view of the labels.'''
        return self._labels

    @property
    def num_classes(self):
        '''Size of the class space.'''
        return self._num_classes

    def segments(self):
        '''Shortcut for `segments_of(self)`.'''
        return segments_of(self)

class ClassMapping:
    '''
    Two-way lookup between class names and indices.

    Mapping files hold one `name<TAB>index` pair per line.
    '''
    def __init__(self, names):
        '''
        names: `list[str]` the class name for each index 0..C-1.
        '''
        names = list(names)
        if len(set(names)) != len(names):
            raise ValueError("class names must be unique.")
        self._names = names
        self._index = {name: i for i, name in enumerate(names)}

    @classmethod
    def read(cls, file):
        '''Load a mapping file. Raises ParseError with the offending line.'''
        pairs = {}
        with open(file) as f:
            for lineno, line in enumerate(f, 1):
                if not line.strip():
                    continue
                cols = line.rstrip('\n').split('\t')
                if len(cols) != 2:
                    raise ParseError("expected 'name<TAB>index'", source=file, line=lineno)
                name, index = cols[0].strip(), cols[1].strip()
                try:
                    index = int(index)
                except ValueError:
                    raise ParseError("index '{}' is not an integer".format(index),
                                     source=file, line=lineno) from None
                if index in pairs or index < 0:
                    raise ParseError("index {} is duplicated or negative".format(index),
                                     source=file, line=lineno)
                pairs[index] = name

        if not pairs:
            raise ParseError("mapping file is empty", source=file)
        if sorted(pairs) != list(range(len(pairs))):
            raise ParseError("indices must cover 0..{} without gaps".format(len(pairs) - 1),
                             source=file)
        return cls(pairs[i] for i in range(len(pairs)))

    def write(self, file):
        '''Write the mapping in `name<TAB>index` form.'''
        with open(file, 'w') as f:
            for i, name in enumerate(self._names):
                f.write('{}\t{}\n'.format(name, i))

    def __len__(self):
        return len(self._names)

    def __contains__(self, name):
        return name in self._index

    def index(self, name):
        '''Index of `name`. Raises KeyError if unknown.'''
        return self._index[name]

    def name(self, index):
        '''Name of class `index`.'''
        return self._names[index]

    @property
    def names(self):
        '''All class names in index order.'''
        return list(self._names)

#==============================================#
# START FUNCTIONS
#==============================================#

def segments_of(seq):
    '''
    Run-length encode a label sequence into its maximal segments.

    Accepts a `LabelSequence` or any 1-D array-like of ints.
    '''
    labels = seq.labels if isinstance(seq, LabelSequence) else np.asarray(seq).reshape(-1)
    if labels.size == 0:
        raise ValueError("cannot segment an empty sequence.")

    starts = np.concatenate(([0], np.flatnonzero(np.diff(labels)) + 1))
    ends = np.concatenate((starts[1:] - 1, [labels.size - 1]))
    return SegmentList(Segment(int(labels[s]), int(s), int(e)) for s, e in zip(starts, ends))

def _resolve_token(token, mapping, file, lineno):
    if mapping is not None and token in mapping:
        return mapping.index(token)
    try:
        return int(token)
    except ValueError:
        reason = "unknown class name" if mapping is not None else "not an integer (no mapping given)"
        raise ParseError("'{}' is {}".format(token, reason), source=file, line=lineno) from None

def read_label_tokens(file, mapping=None):
    '''
    Read a label file into a list of class indices without range checks.

    Blank lines are skipped. Raises ParseError naming the file and line.
    '''
    labels = []
    with open(file) as f:
        for lineno, line in enumerate(f, 1):
            token = line.strip()
            if not token:
                continue
            labels.append(_resolve_token(token, mapping, file, lineno))
    if not labels:
        raise ParseError("label file holds no frames", source=file)
    return labels

def read_label_file(file, num_classes, mapping=None):
    '''
    Read one video's labels: one token (class name or integer index) per line.

    Raises ParseError on unreadable tokens, including indices outside the class space.
    '''
    labels = read_label_tokens(file, mapping)
    try:
        return LabelSequence(labels, num_classes)
    except ClassIndexOutOfRange as err:
        raise ParseError(str(err), source=file) from None

def write_label_file(file, seq, mapping=None):
    '''Write one label per line, as names when a mapping is given.'''
    with open(file, 'w') as f:
        for label in seq:
            f.write((mapping.name(label) if mapping is not None else str(label)) + '\n')

def list_label_files(directory):
    '''Sorted label file names (`*.txt`) in `directory`.'''
    return sorted(name for name in os.listdir(directory)
                  if name.endswith(LABEL_SUFFIX) and os.path.isfile(os.path.join(directory, name)))

def read_label_dir(directory, num_classes=None, mapping=None):
    '''
    Read every label file in `directory`.

    Returns a dict of video id (file stem) to LabelSequence, in file-name order.
    When neither `num_classes` nor `mapping` is given, C is inferred as
    1 + the largest index found.
    '''
    raw = {}
    for name in list_label_files(directory):
        raw[name[:-len(LABEL_SUFFIX)]] = (name, read_label_tokens(os.path.join(directory, name), mapping))

    if num_classes is None:
        if mapping is not None:
            num_classes = len(mapping)
        elif raw:
            num_classes = 1 + max(max(labels) for _, labels in raw.values())
        else:
            num_classes = 1

    corpus = {}
    for video, (name, labels) in raw.items():
        try:
            corpus[video] = LabelSequence(labels, num_classes)
        except ClassIndexOutOfRange as err:
            raise ParseError(str(err), source=os.path.join(directory, name)) from None
    logger.debug("read %d label files from %s", len(corpus), directory)
    return corpus
