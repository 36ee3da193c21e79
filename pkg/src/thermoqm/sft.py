"""Validated subshifts of finite type and their word combinatorics.

Symbols are 0-based internally; file formats render them 1-based.  Words are
tuples of ints.  All enumerations are in lexicographic order and all
tie-breaking (connectors, lifts, star words) is shortest-then-lexicographic,
so every operation here is a deterministic function of its inputs.
"""

from __future__ import annotations

import json
import os

import numpy as np

from .errors import InvalidMatrix, NotPrimitive, ResourceLimit

DEFAULT_WORD_CAP = 10**8
WORD_CAP_ENV = "THERMOQM_MAX_WORDS"

Word = tuple


def word_cap(explicit=None):
    """Effective enumeration cap: explicit arg > env override > default."""
    if explicit is not None:
        return int(explicit)
    env = os.environ.get(WORD_CAP_ENV)
    if env is not None:
        return int(env)
    return DEFAULT_WORD_CAP


def _int_matmul(a, b):
    d = len(a)
    return [[sum(a[i][k] * b[k][j] for k in range(d)) for j in range(d)] for i in range(d)]


class WordIndex:
    """Bijection between the admissible words of one depth and 0..count-1.

    Index order is lexicographic, equivalently numeric order of the base-d
    codes, so the mapping is stable across calls.
    """

    def __init__(self, sft, depth, words):
        self.sft = sft
        self.depth = depth
        self.words = words
        d = sft.d
        codes = np.empty(len(words), dtype=np.int64)
        for i, w in enumerate(words):
            c = 0
            for s in w:
                c = c * d + s
            codes[i] = c
        self.codes = codes
        self._pos = {w: i for i, w in enumerate(words)}

    def __len__(self):
        return len(self.words)

    def __contains__(self, word):
        return tuple(word) in self._pos

    def index(self, word):
        return self._pos[tuple(word)]

    def word(self, i):
        return self.words[i]

    def index_of_codes(self, codes):
        """Vectorized code -> index lookup; codes must all be admissible."""
        idx = np.searchsorted(self.codes, codes)
        if np.any(idx >= len(self.codes)) or np.any(self.codes[idx] != codes):
            raise KeyError("inadmissible word code in lookup")
        return idx

    def parent(self, i):
        """Index of words[i][:-1] in the depth-1 table."""
        return self.sft.cylinders(self.depth - 1).index(self.words[i][:-1])

    def children(self, i):
        """Indices of the admissible one-symbol refinements [w . s]."""
        w = self.words[i]
        child = self.sft.cylinders(self.depth + 1)
        return [child.index(w + (s,)) for s in self.sft.successors[w[-1]]]


class Sft:
    """A primitive subshift of finite type with its specification data."""

    def __init__(self, R, name=None):
        R = np.asarray(R)
        if R.ndim != 2 or R.shape[0] != R.shape[1] or R.shape[0] == 0:
            raise InvalidMatrix("transition matrix must be square and nonempty")
        if not np.isin(R, (0, 1)).all():
            raise InvalidMatrix("transition matrix entries must be 0 or 1")
        R = R.astype(np.int8)
        if (R.sum(axis=1) == 0).any() or (R.sum(axis=0) == 0).any():
            raise InvalidMatrix("transition matrix has an all-zero row or column")
        self.R = R
        self.d = R.shape[0]
        self.name = name
        self.M = self._specification_constant()
        self.successors = [tuple(int(s) for s in np.nonzero(R[i])[0]) for i in range(self.d)]
        self.predecessors = [tuple(int(s) for s in np.nonzero(R[:, j])[0]) for j in range(self.d)]
        # boolean reachability by path length, used by connector construction
        self._reach = self._reach_tables(self.M + 1)
        self.connectors = {
            (i, j): self._least_path(i, j, self.M - 1)
            for i in range(self.d)
            for j in range(self.d)
        }
        self._cyl = {}
        self._intpow = {0: [[int(i == j) for j in range(self.d)] for i in range(self.d)]}

    def _specification_constant(self):
        d = self.d
        wielandt = (d - 1) ** 2 + 1 if d > 1 else 1
        B = self.R.astype(bool)
        P = B.copy()
        closure = B.copy()
        for k in range(1, wielandt + 1):
            if P.all():
                return k
            P = (P.astype(np.int64) @ B.astype(np.int64)) > 0
            closure |= P
        if not closure.all():
            raise NotPrimitive("matrix is reducible: some symbol pairs are never joinable")
        raise NotPrimitive("matrix is irreducible but periodic: no positive power up to the Wielandt bound")

    def _reach_tables(self, kmax):
        B = self.R.astype(bool)
        tables = [np.eye(self.d, dtype=bool)]
        for _ in range(kmax):
            tables.append((tables[-1].astype(np.int64) @ B.astype(np.int64)) > 0)
        return tables

    def _least_path(self, i, j, length):
        """Lexicographically least word u with i.u.j admissible, |u| = length."""
        if length == 0:
            if not self.R[i, j]:
                raise NotPrimitive("no connector of the required length")
            return ()
        out = []
        cur = i
        for step in range(length):
            remaining = length - step  # symbols still to place after choosing one
            placed = False
            for s in self.successors[cur]:
                if self._reach[remaining][s, j]:
                    out.append(s)
                    cur = s
                    placed = True
                    break
            if not placed:
                raise NotPrimitive("no connector of the required length")
        return tuple(out)

    # -- integer counting -------------------------------------------------

    def _R_intpow(self, n):
        if n not in self._intpow:
            base = [[int(x) for x in row] for row in self.R]
            k = max(q for q in self._intpow if q <= n)
            acc = self._intpow[k]
            while k < n:
                acc = _int_matmul(acc, base)
                k += 1
                self._intpow[k] = acc
        return self._intpow[n]

    def word_count(self, n):
        """Exact |W_n| as a python int."""
        if n == 0:
            return 1
        P = self._R_intpow(n - 1)
        return sum(sum(row) for row in P)

    def periodic_count(self, n):
        """Exact trace(R^n) = number of length-n wrapping words."""
        P = self._R_intpow(n)
        return sum(P[i][i] for i in range(self.d))

    # -- membership -------------------------------------------------------

    def is_word(self, word):
        R = self.R
        return all(R[a, b] for a, b in zip(word, word[1:]))

    def wraps(self, word):
        return len(word) >= 1 and self.is_word(word) and self.R[word[-1], word[0]] == 1

    # -- enumeration ------------------------------------------------------

    def words(self, n, cap=None):
        """All admissible words of length n, lexicographic."""
        if n < 0:
            raise ValueError("word length must be >= 0")
        if n == 0:
            return [()]
        count = self.word_count(n)
        if count > word_cap(cap):
            raise ResourceLimit(f"|W_{n}| = {count} exceeds the word cap")
        out = []
        succ = self.successors
        stack = [(s,) for s in range(self.d - 1, -1, -1)]
        while stack:
            w = stack.pop()
            if len(w) == n:
                out.append(w)
            else:
                last = w[-1]
                for s in reversed(succ[last]):
                    stack.append(w + (s,))
        return out

    def periodic_words(self, n, cap=None):
        """All wrapping words of length exactly n, lexicographic."""
        if n < 1:
            raise ValueError("periodic words have length >= 1")
        total = self.word_count(n)
        if total > word_cap(cap):
            raise ResourceLimit(f"|W_{n}| = {total} exceeds the word cap")
        return [w for w in self.words(n, cap=cap) if self.R[w[-1], w[0]]]

    def cylinders(self, k, cap=None):
        """Cached WordIndex for depth k >= 1."""
        if k < 1:
            raise ValueError("cylinder depth must be >= 1")
        if k not in self._cyl:
            self._cyl[k] = WordIndex(self, k, self.words(k, cap=cap))
        return self._cyl[k]

    def parent_map(self, k):
        """Array mapping each depth-k index to the index of its parent cylinder."""
        child = self.cylinders(k)
        parent = self.cylinders(k - 1)
        return np.array([parent.index(w[:-1]) for w in child.words], dtype=np.int64)

    def child_map(self, k):
        """(count_k, d) array of child indices at depth k+1, -1 where inadmissible."""
        cur = self.cylinders(k)
        nxt = self.cylinders(k + 1)
        out = np.full((len(cur), self.d), -1, dtype=np.int64)
        for i, w in enumerate(cur.words):
            for s in self.successors[w[-1]]:
                out[i, s] = nxt.index(w + (s,))
        return out

    # -- periodic closure operations ---------------------------------------

    def lift(self, word):
        """Shortest (then lexicographically least) periodic extension word.u."""
        word = tuple(word)
        if len(word) < 1:
            raise ValueError("lift needs a nonempty word")
        if not self.is_word(word):
            raise ValueError("word is not admissible")
        last, first = word[-1], word[0]
        for ell in range(0, self.M + 1):
            if self._reach[ell + 1][last, first]:
                return word + self._least_path(last, first, ell)
        raise NotPrimitive("no periodic extension within the specification bound")

    def star(self, a, b):
        """Deterministic periodic concatenation a.u.b.v with |u|, |v| <= M."""
        a, b = tuple(a), tuple(b)
        if not self.wraps(a) or not self.wraps(b):
            raise ValueError("star needs periodic inputs")
        for lu in range(0, self.M + 1):
            if not self._reach[lu + 1][a[-1], b[0]]:
                continue
            u = self._least_path(a[-1], b[0], lu)
            for lv in range(0, self.M + 1):
                if self._reach[lv + 1][b[-1], a[0]]:
                    v = self._least_path(b[-1], a[0], lv)
                    return a + u + b + v
        raise NotPrimitive("no star word within the specification bound")

    # -- word helpers -------------------------------------------------------

    def cyclic_window(self, word, start, width):
        """width symbols of the bi-infinite repetition of word, from position start."""
        n = len(word)
        return tuple(word[(start + i) % n] for i in range(width))

    def rotations(self, word):
        n = len(word)
        return [word[j:] + word[:j] for j in range(n)]

    # -- serialization ------------------------------------------------------

    def to_json(self):
        return {"d": int(self.d), "rows": [[int(x) for x in row] for row in self.R]}

    @classmethod
    def from_json(cls, obj, name=None):
        rows = obj["rows"]
        if "d" in obj and int(obj["d"]) != len(rows):
            raise InvalidMatrix("declared d does not match the number of rows")
        return cls(rows, name=name)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_json(json.load(fh), name=os.path.basename(path))

    def __repr__(self):
        tag = self.name or f"{self.d}x{self.d}"
        return f"Sft({tag}, M={self.M})"


def build_sft(R, name=None):
    """Validate a 0/1 matrix and return the Sft it generates."""
    return Sft(R, name=name)


def full_shift(d):
    return Sft(np.ones((d, d), dtype=int), name=f"full_shift({d})")


def golden_mean():
    return Sft([[1, 1], [1, 0]], name="golden_mean")


def encode_word(word, d):
    c = 0
    for s in word:
        c = c * d + s
    return c


def decode_word(code, d, length):
    out = []
    for _ in range(length):
        out.append(code % d)
        code //= d
    return tuple(reversed(out))


def render_word(word):
    """1-based external rendering; comma separated once symbols pass 9."""
    syms = [str(s + 1) for s in word]
    return ",".join(syms) if any(s > 8 for s in word) else "".join(syms)


def parse_word(text, d):
    """Inverse of render_word."""
    if text == "":
        return ()
    parts = text.split(",") if "," in text else list(text)
    word = tuple(int(p) - 1 for p in parts)
    if any(s < 0 or s >= d for s in word):
        raise ValueError(f"symbol out of range in {text!r}")
    return word
