"""Shift-invariant measures with exact cylinder masses.

Markov measures keep transitions and the stationary vector in exact
arithmetic (rationals, or a quadratic field for Perron data such as the
Parry measure); logarithms enter only at output time.  All measure kinds
expose one evaluation interface, mass(word) = mass of the anchored
cylinder, so the metric D and the periodic-structure counts can treat them
uniformly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from suspshift.quadratic import QuadraticReal, as_qr
from suspshift.subshifts import PointOracle, SFT, Sturmian, Subshift, Word


class InsufficientData(Exception):
    pass


def _zero_like(x):
    return x - x


def _xlogx(p) -> float:
    fp = float(p)
    if fp <= 0.0:
        return 0.0
    return fp * math.log(fp)


def solve_left_stationary(p_rows):
    """Exact left fixed vector: pi P = pi, sum(pi) = 1.

    Entries may be Fractions or QuadraticReals; plain Gaussian elimination
    over the common field.
    """
    k = len(p_rows)
    # unknowns pi_0 .. pi_{k-1}; equations: sum_i pi_i (P[i][j] - delta_ij) = 0
    # for j < k-1, plus normalization sum_i pi_i = 1
    rows = []
    for j in range(k - 1):
        row = [p_rows[i][j] - (1 if i == j else 0) for i in range(k)]
        rows.append(row + [Fraction(0)])
    rows.append([Fraction(1)] * k + [Fraction(1)])
    # elimination
    n = k
    for col in range(n):
        piv = next((r for r in range(col, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            raise ValueError("singular stationary system")
        rows[col], rows[piv] = rows[piv], rows[col]
        pivval = rows[col][col]
        rows[col] = [x / pivval for x in rows[col]]
        for r in range(len(rows)):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    return [rows[i][n] for i in range(n)]


class Measure:
    """Interface: exact anchored-cylinder masses on a fixed subshift."""

    subshift: Subshift

    def mass(self, word: Word):
        raise NotImplementedError

    def block_distribution(self, n: int):
        """Dict word -> exact mass over the length-n words of the subshift."""
        return {
            w: m
            for w in sorted(self.subshift.language(n))
            if (m := self.mass(w)) != 0
        }


class MarkovMeasure(Measure):
    """Memory-1 Markov measure: row-stochastic P supported on the allowed
    transitions, with its exact stationary row vector."""

    def __init__(self, p_rows, pi=None, subshift: Subshift | None = None):
        self.P = [list(row) for row in p_rows]
        k = len(self.P)
        for row in self.P:
            if len(row) != k:
                raise ValueError("P must be square")
            total = row[0]
            for x in row[1:]:
                total = total + x
            if total != 1:
                raise ValueError("rows of P must sum to 1 exactly")
            for x in row:
                if _sign(x) < 0:
                    raise ValueError("negative transition probability")
        self.pi = list(pi) if pi is not None else solve_left_stationary(self.P)
        check = [sum_exact(self.pi[i] * self.P[i][j] for i in range(k)) for j in range(k)]
        if any(check[j] != self.pi[j] for j in range(k)):
            raise ValueError("pi is not stationary for P")
        if sum_exact(self.pi) != 1:
            raise ValueError("pi must sum to 1")
        self.subshift = subshift if subshift is not None else _full_sft(k)
        if isinstance(self.subshift, SFT) and self.subshift.memory == 1:
            for i in range(k):
                if self.pi[i] == 0:
                    continue
                for j in range(k):
                    if self.P[i][j] != 0 and not self.subshift.admissible((i, j)):
                        raise ValueError(f"P charges forbidden transition {i}->{j}")

    @property
    def states(self) -> int:
        return len(self.P)

    def mass(self, word: Word):
        if len(word) == 0:
            return Fraction(1)
        m = self.pi[word[0]]
        for a, b in zip(word, word[1:]):
            m = m * self.P[a][b]
        return m

    def entropy_rate(self) -> float:
        """Exact formula -sum_i pi_i sum_j P_ij log P_ij, in nats/symbol."""
        h = 0.0
        for i in range(self.states):
            for j in range(self.states):
                p = self.P[i][j]
                if p != 0:
                    h -= float(self.pi[i]) * _xlogx(p)
        return h

    def block_entropy_total(self, n: int) -> float:
        """H of the length-n block distribution (stationary Markov closed
        form H_n = H(pi) + (n-1) h)."""
        h1 = -sum(_xlogx(p) for p in self.pi)
        return h1 + (n - 1) * self.entropy_rate()

    def block_entropy(self, n: int) -> float:
        return self.block_entropy_total(n) / n

    def to_json(self):
        return {
            "kind": "markov",
            "P": [[str(x) for x in row] for row in self.P],
            "pi": [str(x) for x in self.pi],
        }


def sum_exact(xs):
    xs = list(xs)
    total = xs[0]
    for x in xs[1:]:
        total = total + x
    return total


def _sign(x) -> int:
    if isinstance(x, QuadraticReal):
        return x.sign()
    return (x > 0) - (x < 0)


def _full_sft(k: int) -> SFT:
    return SFT(k, adjacency=[[1] * k for _ in range(k)])


def bernoulli(probs, subshift=None) -> MarkovMeasure:
    probs = [Fraction(p) if not isinstance(p, (Fraction, QuadraticReal)) else p for p in probs]
    rows = [list(probs) for _ in probs]
    return MarkovMeasure(rows, pi=list(probs), subshift=subshift)


def parry_measure(sft: SFT) -> MarkovMeasure:
    """Measure of maximal entropy from Perron eigendata, exact when the
    vertex graph has at most two vertices (Perron root is then rational or a
    quadratic irrational)."""
    if sft.memory != 1:
        raise ValueError("parry_measure needs a memory-1 vertex shift")
    a = sft._adjacency_matrix()
    k = len(a)
    if k == 1:
        return MarkovMeasure([[Fraction(1)]], subshift=sft)
    if k != 2:
        raise ValueError("exact Parry construction implemented for <= 2 vertices")
    tr = a[0][0] + a[1][1]
    det = a[0][0] * a[1][1] - a[0][1] * a[1][0]
    disc = tr * tr - 4 * det
    root = math.isqrt(disc)
    if root * root == disc:
        lam = as_qr(Fraction(tr + root, 2))
    else:
        d, sq = _squarefree(disc)
        lam = QuadraticReal(Fraction(tr, 2), Fraction(sq, 2), d)
    # right vector r with A r = lam r; left vector l with l A = lam l
    r = [as_qr(a[0][1], lam.d if not lam.is_rational else 2), lam - a[0][0]]
    l = [as_qr(a[1][0], r[0].d), lam - a[0][0]]
    p_rows = [
        [
            (a[i][j] * r[j] / (lam * r[i])) if a[i][j] else as_qr(0, r[0].d)
            for j in range(2)
        ]
        for i in range(2)
    ]
    norm = l[0] * r[0] + l[1] * r[1]
    pi = [l[i] * r[i] / norm for i in range(2)]
    # map vertex indices to alphabet symbols (memory-1: vertex = (symbol,))
    order = [v[0] for v in sft.vertices]
    size = sft.alphabet_size
    zero = as_qr(0, r[0].d)
    full_p = [[zero for _ in range(size)] for _ in range(size)]
    full_pi = [zero for _ in range(size)]
    for i, si in enumerate(order):
        full_pi[si] = pi[i]
        for j, sj in enumerate(order):
            full_p[si][sj] = p_rows[i][j]
    for s in range(size):
        if s not in order:
            full_p[s][order[0]] = as_qr(1, r[0].d)  # dead symbols: arbitrary row
    return MarkovMeasure(full_p, pi=full_pi, subshift=sft)


def _squarefree(n: int):
    """n = sq^2 * d with d squarefree; returns (d, sq)."""
    sq = 1
    d = n
    f = 2
    while f * f <= d:
        while d % (f * f) == 0:
            d //= f * f
            sq *= f
        f += 1
    return d, sq


class EmpiricalMeasure(Measure):
    """Block frequencies of an orbit segment, exact rationals.

    When the segment length equals the period of a periodic point the
    measure is exactly shift-invariant.
    """

    def __init__(self, oracle: PointOracle, start: int, length: int,
                 max_block: int, subshift: Subshift | None = None,
                 exact_period: bool = False):
        if length < 1:
            raise ValueError("length >= 1")
        self.oracle = oracle
        self.start = start
        self.length = length
        self.max_block = max_block
        self.exact_period = exact_period
        self.subshift = subshift if subshift is not None else _full_sft(
            max(oracle.block(start, start + length)) + 1
        )
        seg = oracle.block(start, start + length + max_block - 1)
        self._tables = {}
        for n in range(1, max_block + 1):
            counts = {}
            for i in range(length):
                w = tuple(seg[i : i + n])
                counts[w] = counts.get(w, 0) + 1
            self._tables[n] = {w: Fraction(c, length) for w, c in counts.items()}

    @classmethod
    def of_periodic_point(cls, point, max_block: int, subshift=None):
        return cls(point, 0, point.period, max_block, subshift, exact_period=True)

    def mass(self, word: Word):
        n = len(word)
        if n == 0:
            return Fraction(1)
        if n > self.max_block:
            raise InsufficientData(f"block length {n} > max_block {self.max_block}")
        return self._tables[n].get(tuple(word), Fraction(0))

    def block_entropy(self, n: int) -> float:
        # a full period carries the exact block law; otherwise demand data
        if not self.exact_period and self.length < 10 * n:
            raise InsufficientData(f"orbit segment {self.length} < 10*{n}")
        return -sum(_xlogx(p) for p in self._tables[n].values()) / n


class SturmianMeasure(Measure):
    """The unique invariant measure of a Sturmian coding; cylinder masses
    are exact arc lengths."""

    def __init__(self, sturmian: Sturmian):
        self.subshift = sturmian
        self._cache = {}

    def mass(self, word: Word):
        word = tuple(word)
        if word not in self._cache:
            self._cache[word] = self.subshift.cylinder_measure(word)
        return self._cache[word]


class ConvexCombination(Measure):
    def __init__(self, t, mu: Measure, nu: Measure):
        self.t = Fraction(t) if not isinstance(t, (Fraction, QuadraticReal)) else t
        self.mu = mu
        self.nu = nu
        self.subshift = mu.subshift

    def mass(self, word: Word):
        return self.t * self.mu.mass(word) + (1 - self.t) * self.nu.mass(word)


def block_entropy(measure: Measure, n: int) -> float:
    """(1/n) H of the length-n block distribution."""
    if hasattr(measure, "block_entropy"):
        return measure.block_entropy(n)
    dist = measure.block_distribution(n)
    return -sum(_xlogx(p) for p in dist.values()) / n


def integrate_locally_constant(table: dict, measure: Measure):
    """Integral of the locally constant function with anchored window table
    {word: value}; exact when value and mass types are field-compatible."""
    words = sorted(table)
    total = None
    for w in words:
        term = table[w] * measure.mass(w)
        total = term if total is None else total + term
    return total


# ---------------------------------------------------------------------------
# the convex metric D on measures


@dataclass(frozen=True)
class DMetricConfig:
    """Truncated defining sum of D: indicator functions of the subshift's
    anchored cylinders in length-lexicographic order, weights 2^-i."""

    subshift: Subshift
    depth: int = 8  # number of cylinder indicators used

    def cylinders(self):
        out = []
        n = 1
        while len(out) < self.depth:
            for w in sorted(self.subshift.language(n)):
                out.append(w)
                if len(out) == self.depth:
                    break
            n += 1
        return out


@dataclass(frozen=True)
class DistanceResult:
    value: float
    bound: float  # truncation error bound 2^(1-N)

    def __float__(self):
        return self.value


def d_distance(mu: Measure, nu: Measure, config: DMetricConfig) -> DistanceResult:
    total = 0.0
    for i, w in enumerate(config.cylinders(), start=1):
        diff = mu.mass(w) - nu.mass(w)
        total += abs(float(diff)) / 2.0**i
    return DistanceResult(total, 2.0 ** (1 - config.depth))


def measure_from_json(obj: dict, subshift: Subshift | None = None) -> Measure:
    if obj["kind"] == "markov":
        p_rows = [[Fraction(x) for x in row] for row in obj["P"]]
        pi = [Fraction(x) for x in obj["pi"]] if "pi" in obj else None
        return MarkovMeasure(p_rows, pi=pi, subshift=subshift)
    if obj["kind"] == "sturmian":
        if not isinstance(subshift, Sturmian):
            raise ValueError("sturmian measure needs a Sturmian subshift")
        return SturmianMeasure(subshift)
    raise ValueError(f"unknown measure kind {obj['kind']!r}")
