import logging

import numpy as np

from cadec.decoder import DecodeConfig, DecodeMode, DecodeResult, Fallback, _as_matrix, _check_classes
from cadec.errors import InfeasibleConstraints, InstanceTooLarge
from cadec.labels import LabelSequence
from cadec.scoring import NEG_INF, objective_terms, preferred_row, score_batch, tied, validate
#==============================================#
    # In this file (in-order as they appear):
    #       oracle_decode()
#==============================================#

logger = logging.getLogger(__name__)

MAX_SEQUENCES = 10 ** 7
CHUNK = 1 << 16

#==============================================#
# START FUNCTIONS
#==============================================#

def _enumerate(T, C, first, stop):
    # Rows first..stop-1 of the lexicographic list of all C**T sequences.
    index = np.arange(first, stop, dtype=np.int64)
    powers = C ** np.arange(T - 1, -1, -1, dtype=np.int64)
    return (index[:, None] // powers[None, :]) % C

def _chunks(T, C):
    total = C ** T
    for first in range(0, total, CHUNK):
        yield _enumerate(T, C, first, min(first + CHUNK, total))

def _search(logs, terms):
    T, C = logs.shape
    best = max(float(score_batch(rows, logs, terms).max()) for rows in _chunks(T, C))
    if best == NEG_INF:
        return None, NEG_INF

    # Second pass: among every optimum keep the one the decoders' tie rule picks.
    winner = None
    for rows in _chunks(T, C):
        rows = rows[tied(score_batch(rows, logs, terms), best)]
        if rows.shape[0] == 0:
            continue
        if winner is not None:
            rows = np.vstack((winner[None, :], rows))
        winner = rows[preferred_row(rows)].copy()
    return winner, best

def oracle_decode(probs, cs, cfg=None):
    '''
    Exhaustive reference decoder for tiny instances.

    Scores every one of the C**T label sequences with the same objective the
    dynamic program maximises and returns the best. Ties follow the
    decoders' rule (`scoring.preferred_row`), so both return the same labels.

    Raises InstanceTooLarge when C**T exceeds ten million, and
    InfeasibleConstraints when no sequence is valid (unless the config asks
    for the classical fallback, which is then enumerated too).
    '''
    cfg = cfg if cfg is not None else DecodeConfig()
    probs = _as_matrix(probs)
    _check_classes(probs, cs.num_classes)
    T, C = probs.num_frames, probs.num_classes
    if C ** T > MAX_SEQUENCES:
        raise InstanceTooLarge("{}**{} sequences is beyond the oracle's limit of {}".format(
            C, T, MAX_SEQUENCES))

    # The tracking decoder targets the same hard objective.
    if cfg.mode is DecodeMode.tracking:
        cfg = cfg.replace(mode=DecodeMode.hard)

    logs = probs.log(cfg.epsilon_floor)
    row, score = _search(logs, objective_terms(cs, cfg, T))
    if score == NEG_INF:
        err = InfeasibleConstraints("no label sequence satisfies the constraints.")
        if cfg.infeasible_fallback is not Fallback.classical:
            raise err
        classical = cfg.replace(mode=DecodeMode.classical)
        row, score = _search(logs, objective_terms(cs, classical, T))
        logger.warning("constraints are infeasible for T=%d, enumerating the classical objective", T)
        return DecodeResult(LabelSequence(row, C), score, False, True, DecodeMode.classical)

    feasible = True
    if cfg.mode is DecodeMode.soft:
        feasible = not validate(LabelSequence(row, C), cs, cfg)
    return DecodeResult(LabelSequence(row, C), score, feasible, False, cfg.mode)
