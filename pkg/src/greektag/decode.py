"""Decoding: best tag sequence under the trained model.

``tag_sequence`` runs the trigram Viterbi kernel over per-position
candidate sets (the tags with nonzero lexical probability), breaking
exact score ties by the lexicographically smallest sequence of
canonical tag strings.  ``brute_force_best`` is the exhaustive oracle:
it enumerates every candidate sequence and scores each with
``Model.sequence_log_prob``, so the two must agree bit-for-bit on any
instance small enough to enumerate.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import _viterbi
from .errors import ModelError, SearchSpaceError
from .model import NEG_INF, Model
from .tags import BOUNDARY, Tag
from .text import Sequence, tokenize

#: Upper bound on sequences the oracle will enumerate.
ORACLE_LIMIT = 1_000_000


def _candidates(model: Model, norm: str) -> list[Tag]:
    probs = model.lexical_probs(norm)
    if not probs:
        raise ModelError(f"no candidate tags for {norm!r} (empty lexicon?)")
    return [t for t, _ in probs]  # sorted by canonical tag string


def tag_sequence(model: Model, tokens, beam: int = 0) -> list[Tag]:
    """Highest-probability tag sequence for one token sequence.

    ``beam > 0`` keeps only the best ``beam`` trellis states per
    position (approximate; exact ties at the cut survive).
    """
    K = len(tokens)
    if K == 0:
        return []
    cands = [_candidates(model, tok.norm) for tok in tokens]
    emis = [model.log_emissions(tok.norm) for tok in tokens]

    counts = np.array([len(c) for c in cands], np.int64)
    adims = np.array([len(cands[k - 2]) if k >= 2 else 1 for k in range(K)], np.int64)
    bdims = np.array([len(cands[k - 1]) if k >= 1 else 1 for k in range(K)], np.int64)
    off = np.zeros(K, np.int64)
    total = 0
    for k in range(K):
        off[k] = total
        total += adims[k] * bdims[k] * counts[k]

    inc = np.empty(total, np.float64)
    pos = 0
    boundary = [BOUNDARY]
    for k in range(K):
        prev2 = cands[k - 2] if k >= 2 else boundary
        prev1 = cands[k - 1] if k >= 1 else boundary
        table = emis[k]
        for a in prev2:
            for b in prev1:
                for t in cands[k]:
                    inc[pos] = model.log_transition(t, b, a) + table.get(t, NEG_INF)
                    pos += 1

    path = _viterbi.viterbi(counts, adims, bdims, off, inc, beam)
    return [cands[k][path[k]] for k in range(K)]


def brute_force_best(model: Model, tokens, limit: int = ORACLE_LIMIT) -> list[Tag]:
    """Exhaustive argmax over all candidate tag sequences (test oracle).

    Applies the same tie-break as ``tag_sequence``: candidates are
    enumerated in lexicographic order and only strictly better scores
    replace the incumbent.
    """
    K = len(tokens)
    if K == 0:
        return []
    cands = [_candidates(model, tok.norm) for tok in tokens]
    size = 1
    for c in cands:
        size *= len(c)
        if size > limit:
            raise SearchSpaceError(
                f"instance enumerates over {limit} sequences"
            )
    best = None
    best_score = NEG_INF
    for combo in itertools.product(*cands):
        score = model.sequence_log_prob(tokens, combo)
        if best is None or score > best_score:
            best = combo
            best_score = score
    return list(best)


def tag_corpus(model: Model, sequences, beam: int = 0) -> list[Sequence]:
    """Tag pre-tokenized sequences, returning copies with tags filled."""
    return [
        Sequence(seq.tokens, tuple(tag_sequence(model, seq.tokens, beam)))
        for seq in sequences
    ]


def tag_text(model: Model, text: str, beam: int = 0):
    """Tokenize raw text and tag it; sequences decode independently.
    Returns the flattened (token, tag) pairs."""
    pairs = []
    for seq in tag_corpus(model, tokenize(text), beam):
        pairs.extend(zip(seq.tokens, seq.gold_tags))
    return pairs
