"""Subshifts with exact word-admissibility oracles.

Words are tuples of small nonnegative ints.  Four kinds of subshift are
provided: SFTs (memory-1 adjacency matrix, or a forbidden-word list compiled
to a higher-block vertex shift), Sturmian rotation codings with exact
quadratic-irrational arithmetic, window-limited generated subshifts, and
products.  Admissibility is exact for SFT/Sturmian/Product and depth-exact
(up to a certified window) for generated subshifts.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from suspshift.quadratic import QuadraticReal, as_qr

Word = tuple  # tuple of ints


class DepthExceeded(Exception):
    """A generated subshift was queried beyond its certified window."""


class EmptySubshift(Exception):
    pass


def parse_word(s: str) -> Word:
    return tuple(int(c) for c in s)


def word_str(w: Word) -> str:
    return "".join(str(c) for c in w)


@dataclass(frozen=True)
class Cylinder:
    """The set {x : x[anchor .. anchor+len(word)) = word}."""

    word: Word
    anchor: int = 0

    def __len__(self):
        return len(self.word)

    def end(self) -> int:
        return self.anchor + len(self.word)


def cylinders_disjoint(c1: Cylinder, c2: Cylinder) -> bool:
    """Exact disjointness: the two anchored words disagree somewhere on the
    overlap of their windows, or one cannot hold with the other (never, if
    windows are disjoint)."""
    lo = max(c1.anchor, c2.anchor)
    hi = min(c1.end(), c2.end())
    for i in range(lo, hi):
        if c1.word[i - c1.anchor] != c2.word[i - c2.anchor]:
            return True
    return False


# ---------------------------------------------------------------------------
# point oracles


class PointOracle:
    """Total rule producing x[i..j) for any finite window."""

    def block(self, i: int, j: int) -> Word:
        raise NotImplementedError

    def symbol(self, i: int) -> int:
        return self.block(i, i + 1)[0]


class PeriodicPoint(PointOracle):
    """Bi-infinite periodic extension of a finite word (period anchored at 0)."""

    def __init__(self, word: Word):
        if not word:
            raise ValueError("empty period")
        self.word = tuple(word)
        self.period = len(word)

    def block(self, i, j):
        return tuple(self.word[k % self.period] for k in range(i, j))

    def __repr__(self):
        return f"PeriodicPoint({word_str(self.word)})"


class SturmianPoint(PointOracle):
    """Rotation coding of the orbit of `phase` under x -> x + alpha mod 1."""

    def __init__(self, sturmian: "Sturmian", phase):
        self.st = sturmian
        self.phase = as_qr(phase, sturmian.alpha.d)

    def block(self, i, j):
        return tuple(self.st.symbol_at(self.phase, k) for k in range(i, j))


# ---------------------------------------------------------------------------
# base class


class Subshift:
    alphabet_size: int

    def admissible(self, word: Word) -> bool:
        raise NotImplementedError

    def language(self, n: int) -> frozenset:
        cache = self.__dict__.setdefault("_lang_cache", {})
        if n not in cache:
            cache[n] = self._language(n)
        return cache[n]

    def _language(self, n: int) -> frozenset:
        raise NotImplementedError

    def periodic_points(self, n: int) -> list:
        """Fixed points of sigma^n, as PointOracles."""
        raise NotImplementedError

    def entropy_exact(self):
        return None

    def _check_symbols(self, word: Word):
        for c in word:
            if not 0 <= c < self.alphabet_size:
                raise ValueError(f"symbol {c} outside alphabet of size {self.alphabet_size}")

    def to_json(self) -> dict:
        raise NotImplementedError


def topological_entropy(subshift: Subshift, horizon: int | None = None) -> float:
    """Entropy in nats: exact (log Perron root) for SFTs, otherwise the
    subadditive upper estimate (1/n) log |language(n)| at n = horizon."""
    exact = subshift.entropy_exact()
    if exact is not None:
        return exact
    if horizon is None:
        raise ValueError("non-SFT subshift needs an explicit horizon")
    count = len(subshift.language(horizon))
    if count == 0:
        raise EmptySubshift()
    return math.log(count) / horizon


# ---------------------------------------------------------------------------
# subshifts of finite type


class SFT(Subshift):
    """Subshift of finite type.

    Construct from a memory-1 adjacency matrix (rows of 0/1) or from a list
    of forbidden words; forbidden lists are compiled to a memory-m vertex
    shift so entropy and periodic counting go through one exact path.
    """

    def __init__(self, alphabet_size: int, adjacency=None, forbidden=None):
        self.alphabet_size = alphabet_size
        if (adjacency is None) == (forbidden is None):
            raise ValueError("give exactly one of adjacency, forbidden")
        if adjacency is not None:
            self.memory = 1
            self.forbidden = tuple(
                (i, j)
                for i in range(alphabet_size)
                for j in range(alphabet_size)
                if not adjacency[i][j]
            )
        else:
            self.forbidden = tuple(tuple(f) for f in forbidden)
            for f in self.forbidden:
                self._check_symbols(f)
                if len(f) < 1:
                    raise ValueError("empty forbidden word")
            self.memory = max((len(f) for f in self.forbidden), default=2) - 1
            self.memory = max(self.memory, 1)
        self._compile()

    def _forbidden_free(self, word: Word) -> bool:
        for f in self.forbidden:
            lf = len(f)
            for i in range(len(word) - lf + 1):
                if word[i : i + lf] == f:
                    return False
        return True

    def _compile(self):
        m = self.memory
        vertices = [
            w
            for w in itertools.product(range(self.alphabet_size), repeat=m)
            if self._forbidden_free(w)
        ]
        edges = {}
        for u in vertices:
            outs = []
            for c in range(self.alphabet_size):
                w = u + (c,)
                if self._forbidden_free(w):
                    outs.append(w[1:])
                edges[u] = outs
        # trim to the essential part: every vertex must have in- and out-edges
        alive = set(vertices)
        changed = True
        while changed:
            changed = False
            indeg = {v: 0 for v in alive}
            for u in list(alive):
                outs = [v for v in edges.get(u, ()) if v in alive]
                if not outs:
                    alive.discard(u)
                    changed = True
                    continue
                for v in outs:
                    indeg[v] += 1
            for v in list(alive):
                if indeg.get(v, 0) == 0:
                    alive.discard(v)
                    changed = True
        self.vertices = sorted(alive)
        self.vindex = {v: i for i, v in enumerate(self.vertices)}
        self.edges = {
            u: [v for v in edges.get(u, ()) if v in alive] for u in self.vertices
        }
        self._vertex_factors = set()
        for v in self.vertices:
            for i in range(len(v)):
                for j in range(i + 1, len(v) + 1):
                    self._vertex_factors.add(v[i:j])

    def is_empty(self) -> bool:
        return not self.vertices

    def admissible(self, word: Word) -> bool:
        self._check_symbols(word)
        word = tuple(word)
        m = self.memory
        if len(word) == 0:
            return not self.is_empty()
        if len(word) < m:
            return word in self._vertex_factors
        if not self._forbidden_free(word):
            return False
        blocks = [word[i : i + m] for i in range(len(word) - m + 1)]
        if any(b not in self.vindex for b in blocks):
            return False
        return all(
            blocks[i + 1] in self.edges[blocks[i]] for i in range(len(blocks) - 1)
        )

    def _language(self, n: int) -> frozenset:
        if n < 1:
            raise ValueError("n >= 1")
        words = [()]
        for _ in range(n):
            words = [
                w + (c,)
                for w in words
                for c in range(self.alphabet_size)
                if self.admissible(w + (c,))
            ]
        return frozenset(words)

    def _adjacency_matrix(self):
        k = len(self.vertices)
        a = [[0] * k for _ in range(k)]
        for u in self.vertices:
            for v in self.edges[u]:
                a[self.vindex[u]][self.vindex[v]] = 1
        return a

    def entropy_exact(self) -> float:
        if self.is_empty():
            raise EmptySubshift()
        a = np.array(self._adjacency_matrix(), dtype=float)
        eig = np.linalg.eigvals(a)
        lam = max(abs(z) for z in eig)
        return float(math.log(lam))

    def fixed_point_count(self, n: int) -> int:
        """Exact #Fix(sigma^n) = trace of the vertex adjacency to the n-th
        power, computed in integer arithmetic."""
        a = self._adjacency_matrix()
        k = len(a)
        if k == 0:
            return 0
        p = [[1 if i == j else 0 for j in range(k)] for i in range(k)]
        base = a
        e = n
        while e:
            if e & 1:
                p = _intmat_mul(p, base)
            base = _intmat_mul(base, base)
            e >>= 1
        return sum(p[i][i] for i in range(k))

    def periodic_points(self, n: int) -> list:
        """All fixed points of sigma^n, as periodic oracles with period word
        x[0..n)."""
        if n < 1:
            raise ValueError("n >= 1")
        out = []
        # closed n-paths in the vertex graph <-> points with sigma^n x = x
        for start in self.vertices:
            stack = [(start, ())]
            while stack:
                v, path = stack.pop()
                if len(path) == n:
                    if v == start:
                        out.append(PeriodicPoint(tuple(p[0] for p in path)))
                    continue
                for w in self.edges[v]:
                    stack.append((w, path + (v,)))
        out.sort(key=lambda p: p.word)
        return out

    def to_json(self):
        if self.memory == 1 and not any(len(f) != 2 for f in self.forbidden):
            adj = [
                [1 if (i, j) not in set(self.forbidden) else 0 for j in range(self.alphabet_size)]
                for i in range(self.alphabet_size)
            ]
            return {"kind": "sft", "alphabet_size": self.alphabet_size, "adjacency": adj}
        return {
            "kind": "sft",
            "alphabet_size": self.alphabet_size,
            "forbidden": [word_str(f) for f in self.forbidden],
        }


def _intmat_mul(x, y):
    k, mid, n2 = len(x), len(y), len(y[0])
    out = [[0] * n2 for _ in range(k)]
    for i in range(k):
        xi = x[i]
        oi = out[i]
        for t in range(mid):
            xt = xi[t]
            if xt:
                yt = y[t]
                for j in range(n2):
                    oi[j] += xt * yt[j]
    return out


def full_shift(k: int) -> SFT:
    return SFT(k, adjacency=[[1] * k for _ in range(k)])


def golden_mean_sft() -> SFT:
    """Binary shift forbidding the word 11."""
    return SFT(2, forbidden=[(1, 1)])


# ---------------------------------------------------------------------------
# Sturmian subshifts


class Sturmian(Subshift):
    """Rotation coding by angle alpha (exact quadratic irrational in (0,1)).

    Convention "low": symbol 1 iff {phase + i*alpha} lies in [0, alpha).
    Convention "high": symbol 1 iff it lies in [1 - alpha, 1).
    """

    alphabet_size = 2

    def __init__(self, alpha: QuadraticReal, convention: str = "low"):
        alpha = as_qr(alpha)
        if alpha.is_rational:
            raise ValueError("rotation number must be irrational")
        if not (as_qr(0, alpha.d) < alpha < as_qr(1, alpha.d)):
            raise ValueError("rotation number must lie in (0,1)")
        if convention not in ("low", "high"):
            raise ValueError("convention must be 'low' or 'high'")
        self.alpha = alpha
        self.convention = convention
        one = as_qr(1, alpha.d)
        if convention == "low":
            self._i1 = (as_qr(0, alpha.d), alpha)  # [0, alpha)
        else:
            self._i1 = (one - alpha, one)  # [1-alpha, 1)

    def symbol_at(self, phase: QuadraticReal, i: int) -> int:
        x = (phase + i * self.alpha).frac()
        lo, hi = self._i1
        return 1 if (lo <= x < hi) else 0

    def point(self, phase) -> SturmianPoint:
        return SturmianPoint(self, phase)

    def _breakpoints(self, n: int, anchor: int = 0):
        pts = set()
        lo, hi = self._i1
        for j in range(anchor, anchor + n):
            sh = j * self.alpha
            pts.add((lo - sh).frac())
            pts.add((hi - sh).frac())
        return sorted(pts)

    def _language(self, n: int) -> frozenset:
        """Walk the circle once: each breakpoint flips the symbols whose
        coding interval boundary it carries, so consecutive arcs differ in
        O(1) positions and the n+1 words come out in linear exact work."""
        if n < 1:
            raise ValueError("n >= 1")
        lo, hi = self._i1
        tags = {}
        for j in range(n):
            sh = j * self.alpha
            # just right of frac(lo - j a) the j-th symbol becomes 1; just
            # right of frac(hi - j a) it becomes 0
            tags.setdefault((lo - sh).frac(), []).append((j, 1))
            tags.setdefault((hi - sh).frac(), []).append((j, 0))
        pts = sorted(tags)
        word = [self.symbol_at(pts[0], j) for j in range(n)]
        words = {tuple(word)}
        for x in pts[1:]:
            for j, val in tags[x]:
                word[j] = val
            words.add(tuple(word))
        return frozenset(words)

    def cylinder_arcs(self, word: Word, anchor: int = 0):
        """Arcs of phases whose coding matches `word` at `anchor`; exact,
        returned as a list of non-wrapping [lo, hi) pairs in [0, 1)."""
        self._check_symbols(word)
        one = as_qr(1, self.alpha.d)
        zero = as_qr(0, self.alpha.d)
        arcs = [(zero, one)]
        lo1, hi1 = self._i1
        for j, c in enumerate(word):
            sh = (anchor + j) * self.alpha
            if c == 1:
                pieces = _arc_minus(lo1 - sh, hi1 - sh, one)
            else:
                pieces = _arc_minus(hi1 - sh, lo1 - sh + 1, one)
            arcs = _arcs_intersect(arcs, pieces)
            if not arcs:
                return []
        return arcs

    def cylinder_measure(self, word: Word, anchor: int = 0) -> QuadraticReal:
        """Mass of the cylinder under the unique invariant measure = total
        arc length (Lebesgue on the circle), exact."""
        arcs = self.cylinder_arcs(word, anchor)
        total = as_qr(0, self.alpha.d)
        for lo, hi in arcs:
            total = total + (hi - lo)
        return total

    def admissible(self, word: Word) -> bool:
        return len(word) == 0 or bool(self.cylinder_arcs(word))

    def periodic_points(self, n: int) -> list:
        return []  # irrational rotation codings are aperiodic

    def to_json(self):
        return {
            "kind": "sturmian",
            "alpha": self.alpha.to_json(),
            "convention": self.convention,
        }


def _arc_minus(lo: QuadraticReal, hi: QuadraticReal, one: QuadraticReal):
    """Normalize the arc [lo, hi) with 0 < hi - lo <= 1 to non-wrapping
    pieces in [0, 1)."""
    width = hi - lo
    zero = one - one
    s = lo.frac()
    e = s + width
    if e <= one:
        return [(s, e)]
    return [(s, one), (zero, e - one)]


def _arcs_intersect(a, b):
    out = []
    for lo1, hi1 in a:
        for lo2, hi2 in b:
            lo = lo1 if lo1 >= lo2 else lo2
            hi = hi1 if hi1 <= hi2 else hi2
            if lo < hi:
                out.append((lo, hi))
    return out


# ---------------------------------------------------------------------------
# products and generated subshifts


class ProductSubshift(Subshift):
    """Product of two subshifts; symbol s = s1 * n2 + s2."""

    def __init__(self, first: Subshift, second: Subshift):
        self.first = first
        self.second = second
        self.alphabet_size = first.alphabet_size * second.alphabet_size

    def split(self, word: Word):
        n2 = self.second.alphabet_size
        return tuple(c // n2 for c in word), tuple(c % n2 for c in word)

    def join(self, w1: Word, w2: Word) -> Word:
        n2 = self.second.alphabet_size
        return tuple(a * n2 + b for a, b in zip(w1, w2))

    def admissible(self, word: Word) -> bool:
        self._check_symbols(word)
        w1, w2 = self.split(word)
        return self.first.admissible(w1) and self.second.admissible(w2)

    def _language(self, n: int) -> frozenset:
        return frozenset(
            self.join(w1, w2)
            for w1 in self.first.language(n)
            for w2 in self.second.language(n)
        )

    def periodic_points(self, n: int) -> list:
        pts = []
        for p1 in self.first.periodic_points(n):
            for p2 in self.second.periodic_points(n):
                pts.append(PeriodicPoint(self.join(p1.block(0, n), p2.block(0, n))))
        return pts

    def to_json(self):
        return {
            "kind": "product",
            "first": self.first.to_json(),
            "second": self.second.to_json(),
        }


class GeneratedSubshift(Subshift):
    """Window-limited subshift given by its language up to a certified depth.

    Queries beyond the window raise DepthExceeded; nothing is silently
    approximated.
    """

    def __init__(self, alphabet_size: int, language_source, window: int, label=""):
        """language_source: callable n -> iterable of admissible n-words."""
        self.alphabet_size = alphabet_size
        self.window = window
        self.label = label
        self._source = language_source
        self._cache = {}

    def language(self, n: int) -> frozenset:
        if n < 1:
            raise ValueError("n >= 1")
        if n > self.window:
            raise DepthExceeded(f"window {self.window} < {n}")
        if n not in self._cache:
            self._cache[n] = frozenset(tuple(w) for w in self._source(n))
        return self._cache[n]

    def admissible(self, word: Word) -> bool:
        self._check_symbols(word)
        if len(word) == 0:
            return True
        return tuple(word) in self.language(len(word))

    def periodic_points(self, n: int) -> list:
        """Period-n candidates certified only up to the window: w^k admissible
        for the largest k with k*n <= window."""
        k = self.window // n
        if k < 2:
            raise DepthExceeded("window too small to screen periodicity")
        out = []
        for w in self.language(n):
            if self.admissible(w * k):
                out.append(PeriodicPoint(w))
        return out

    def to_json(self):
        return {
            "kind": "generated",
            "alphabet_size": self.alphabet_size,
            "window": self.window,
            "label": self.label,
        }


# ---------------------------------------------------------------------------
# verification helpers (used by the test suite and the CLI)


def verify_factor_closure(subshift: Subshift, n: int) -> bool:
    """Every factor of every word in language(n) is again admissible."""
    lang = {m: subshift.language(m) for m in range(1, n + 1)}
    for w in lang[n]:
        for i in range(n):
            for j in range(i + 1, n + 1):
                if w[i:j] not in lang[j - i]:
                    return False
    return True


def verify_right_extendability(subshift: Subshift, n: int) -> bool:
    lang_n = subshift.language(n)
    lang_next = subshift.language(n + 1)
    heads = {w[:-1] for w in lang_next}
    return lang_n <= heads


def subshift_from_json(obj: dict) -> Subshift:
    kind = obj["kind"]
    if kind == "sft":
        size = int(obj["alphabet_size"])
        if "adjacency" in obj:
            return SFT(size, adjacency=obj["adjacency"])
        return SFT(size, forbidden=[parse_word(f) for f in obj["forbidden"]])
    if kind == "sturmian":
        return Sturmian(
            QuadraticReal.from_json(obj["alpha"]), obj.get("convention", "low")
        )
    if kind == "product":
        return ProductSubshift(
            subshift_from_json(obj["first"]), subshift_from_json(obj["second"])
        )
    raise ValueError(f"unknown subshift kind {kind!r}")
