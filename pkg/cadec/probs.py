import logging
import struct

import numpy as np

from cadec.errors import ParseError
from cadec.labels import LabelSequence
#==============================================#
    # In this file (in-order as they appear):
    #       FrameProbMatrix
    #       read_prob_file()
    #       write_prob_csv()
    #       write_prob_binary()
#==============================================#

logger = logging.getLogger(__name__)

# Binary layout: magic(4) | version(4) | T(4) | C(4), then T*C little-endian float32.
BINARY_MAGIC = b'CPRB'
BINARY_VERSION = 1
BINARY_HEADER = struct.Struct('<4sIII')

#==============================================#
# START CLASSES
#==============================================#

class FrameProbMatrix:
    '''
    T x C matrix of per-frame class probabilities, the decoder's input.

    Entries are non-negative and finite, and every row holds at least one
    positive entry. Rows need not sum to one.
    '''
    def __init__(self, probs):
        '''
        probs: `array-like` shape (T, C) with T >= 1 and C >= 1.

        Raises ValueError when the matrix breaks an invariant.
        '''
        arr = np.array(probs, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("probabilities must form a non-empty T x C matrix.")
        if not np.all(np.isfinite(arr)):
            raise ValueError("probabilities must be finite.")
        if np.any(arr < 0.0):
            raise ValueError("probabilities must be non-negative.")
        empty = np.flatnonzero(~np.any(arr > 0.0, axis=1))
        if empty.size:
            raise ValueError("frame {} has no positive probability.".format(int(empty[0])))
        arr.setflags(write=False)
        self._probs = arr

    @property
    def probs(self):
        '''Read-only array view.'''
        return self._probs

    @property
    def num_frames(self):
        '''T'''
        return self._probs.shape[0]

    @property
    def num_classes(self):
        '''C'''
        return self._probs.shape[1]

    def __len__(self):
        return self._probs.shape[0]

    def __eq__(self, other):
        if not isinstance(other, FrameProbMatrix):
            return NotImplemented
        return np.array_equal(self._probs, other._probs)

    def log(self, floor):
        '''Natural log of the entries after flooring them at `floor` (> 0).'''
        if floor <= 0.0:
            raise ValueError("floor must be positive.")
        return np.log(np.maximum(self._probs, floor))

    def argmax(self):
        '''Frame-wise argmax as a LabelSequence (lowest class on ties).'''
        return LabelSequence(self._probs.argmax(axis=1), self.num_classes)

#==============================================#
# START FUNCTIONS
#==============================================#

def _read_binary(raw, file):
    if len(raw) < BINARY_HEADER.size:
        raise ParseError("truncated header", source=file)
    magic, version, T, C = BINARY_HEADER.unpack_from(raw)
    if version != BINARY_VERSION:
        raise ParseError("unsupported binary version {}".format(version), source=file)
    expected = BINARY_HEADER.size + 4 * T * C
    if len(raw) != expected:
        raise ParseError("expected {} bytes for a {}x{} matrix, found {}".format(
            expected, T, C, len(raw)), source=file)
    body = np.frombuffer(raw, dtype='<f4', offset=BINARY_HEADER.size, count=T * C)
    return body.reshape(T, C)

def _read_csv(raw, file):
    try:
        text = raw.decode('utf-8')
    except UnicodeDecodeError:
        raise ParseError("neither a binary matrix nor UTF-8 text", source=file) from None

    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            row = [float(cell) for cell in line.split(',')]
        except ValueError:
            raise ParseError("non-numeric cell", source=file, line=lineno) from None
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise ParseError("row has {} columns, expected {}".format(len(row), width),
                             source=file, line=lineno)
        rows.append(row)
    if not rows:
        raise ParseError("no rows", source=file)
    return np.array(rows)

def read_prob_file(file):
    '''
    Read a probability matrix, detecting the format from its first bytes.

    Files starting with the binary magic are read as little-endian float32;
    everything else is parsed as CSV (T rows of C comma-separated floats).

    Raises ParseError on malformed content.
    '''
    with open(file, 'rb') as f:
        raw = f.read()

    if raw[:len(BINARY_MAGIC)] == BINARY_MAGIC:
        arr = _read_binary(raw, file)
    else:
        arr = _read_csv(raw, file)

    try:
        return FrameProbMatrix(arr)
    except ValueError as err:
        raise ParseError(str(err), source=file) from None

def write_prob_csv(file, matrix):
    '''Write the matrix as CSV with round-trip precision.'''
    probs = matrix.probs if isinstance(matrix, FrameProbMatrix) else np.asarray(matrix)
    np.savetxt(file, probs, fmt='%.17g', delimiter=',')

def write_prob_binary(file, matrix):
    '''Write the matrix in the binary layout (values stored as float32).'''
    probs = matrix.probs if isinstance(matrix, FrameProbMatrix) else np.asarray(matrix)
    T, C = probs.shape
    with open(file, 'wb') as f:
        f.write(BINARY_HEADER.pack(BINARY_MAGIC, BINARY_VERSION, T, C))
        f.write(np.ascontiguousarray(probs, dtype='<f4').tobytes())
