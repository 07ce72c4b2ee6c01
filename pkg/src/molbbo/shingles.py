"""Radius-1 shingle-count descriptors for molecular graphs.

Every vertex contributes exactly one shingle: its atom type together with
the multiset of (bond order, neighbor type) pairs on its incident edges.
Shingle occurrence counts fill a fixed-length integer vector whose columns
are assigned by a first-seen-order dictionary, so no hashing is involved
and collisions cannot occur.
"""

from collections import Counter
from typing import NamedTuple

import numpy as np

from . import graphcore
from .graph import SYMBOLS, MolecularGraph

DEFAULT_CAPACITY = 2000


class CapacityError(RuntimeError):
    """Raised when a dictionary would grow past its capacity."""


class ShingleKey(NamedTuple):
    """A radius-1 atom environment: center symbol plus sorted neighbor pairs."""

    center: str
    neighbors: tuple  # ((order, symbol), ...) sorted ascending

    @classmethod
    def from_code(cls, code: bytes) -> "ShingleKey":
        center = SYMBOLS[code[0]]
        pairs = tuple(
            (code[i], SYMBOLS[code[i + 1]]) for i in range(1, len(code), 2)
        )
        return cls(center, pairs)

    def to_code(self) -> bytes:
        out = bytearray((SYMBOLS.index(self.center),))
        for order, symbol in self.neighbors:
            out.append(order)
            out.append(SYMBOLS.index(symbol))
        return bytes(out)


def code_to_text(code: bytes) -> str:
    """Serialize a shingle code as "center|order:neighbor,...", e.g. "C|1:C,2:O"."""
    center = SYMBOLS[code[0]]
    parts = [
        "%d:%s" % (code[i], SYMBOLS[code[i + 1]]) for i in range(1, len(code), 2)
    ]
    if not parts:
        return center
    return center + "|" + ",".join(parts)


def text_to_code(text: str) -> bytes:
    center, _, rest = text.partition("|")
    out = bytearray((SYMBOLS.index(center),))
    if rest:
        for part in rest.split(","):
            order, _, symbol = part.partition(":")
            out.append(int(order))
            out.append(SYMBOLS.index(symbol))
    return bytes(out)


def extract_shingles(g: MolecularGraph) -> Counter:
    """Multiset of ShingleKeys for ``g``, one per vertex."""
    counts = Counter(graphcore.shingle_codes(g.types, g.adj))
    return Counter({ShingleKey.from_code(c): m for c, m in counts.items()})


class ShingleDictionary:
    """Ordered shingle-to-column map with dense first-seen indexing.

    Indices are never reassigned; size is bounded by ``capacity`` and
    exceeding it is a hard error (the default 2000 is sized for the
    C/N/O/F chemistry and its radius-1 environments).
    """

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._index = {}

    def __len__(self):
        return len(self._index)

    def __contains__(self, code: bytes) -> bool:
        return code in self._index

    def index_of(self, code: bytes):
        """Column of ``code``, or None when unknown."""
        return self._index.get(code)

    def add(self, code: bytes) -> int:
        """Return the column of ``code``, appending it when unseen."""
        idx = self._index.get(code)
        if idx is None:
            if len(self._index) >= self.capacity:
                raise CapacityError(
                    "shingle dictionary capacity %d exceeded; the configured "
                    "chemistry needs a larger vector" % self.capacity
                )
            idx = len(self._index)
            self._index[code] = idx
        return idx

    def codes(self):
        """Shingle codes in column order."""
        return list(self._index)

    def to_strings(self):
        """Serialized dictionary: one "center|order:neighbor,..." per column."""
        return [code_to_text(c) for c in self._index]

    @classmethod
    def from_strings(cls, strings, capacity: int = DEFAULT_CAPACITY):
        dct = cls(capacity)
        for s in strings:
            dct.add(text_to_code(s))
        return dct


def sparse_encode(g: MolecularGraph, dct: ShingleDictionary, frozen: bool = False):
    """Columns and counts of ``g``'s shingles, plus the unseen-drop tally.

    Returns (indices, counts, unseen). With ``frozen`` the dictionary is
    left untouched and shingles it does not contain are dropped, counted
    in ``unseen``; otherwise new shingles are appended and unseen is 0.
    """
    multiset = Counter(graphcore.shingle_codes(g.types, g.adj))
    indices = []
    counts = []
    unseen = 0
    for code, mult in multiset.items():
        if frozen:
            idx = dct.index_of(code)
            if idx is None:
                unseen += mult
                continue
        else:
            idx = dct.add(code)
        indices.append(idx)
        counts.append(mult)
    return indices, counts, unseen


def encode(g: MolecularGraph, dct: ShingleDictionary, frozen: bool = False):
    """Shingle-count vector of ``g``, length ``dct.capacity``.

    Unfrozen encoding appends unseen shingles to the dictionary, so
    entries sum to the heavy-atom count; frozen encoding drops unseen
    shingles instead (their tally is available via ``sparse_encode``).
    """
    vec = np.zeros(dct.capacity, dtype=np.int64)
    indices, counts, _ = sparse_encode(g, dct, frozen)
    vec[indices] = counts
    return vec
