"""Suspension flows over subshifts with locally constant roofs.

A flow point is (base point, height) with 0 <= height < roof(base); all
heights and times live in one quadratic field per flow, so the flow map,
return times and section membership are decided exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from suspshift.quadratic import QuadraticReal, as_qr
from suspshift.measures import Measure, _xlogx, sum_exact
from suspshift.subshifts import (
    Cylinder,
    PointOracle,
    Subshift,
    Word,
    cylinders_disjoint,
)


class HorizonExceeded(Exception):
    pass


class NotHit(Exception):
    """No return to the section within the shift budget."""


class IncommensurableRoof(Exception):
    pass


class Roof:
    """Locally constant roof: value depends on the window [-m, m] around the
    current coordinate; all values positive elements of one quadratic field."""

    def __init__(self, window_radius: int, table: dict):
        self.m = window_radius
        self.table = {tuple(w): as_qr(v) for w, v in table.items()}
        if not self.table:
            raise ValueError("empty roof table")
        for w, v in self.table.items():
            if len(w) != 2 * self.m + 1:
                raise ValueError("table keys must have length 2m+1")
            if v.sign() <= 0:
                raise ValueError("roof values must be positive")
        self.min_value = min(self.table.values())
        self.max_value = max(self.table.values())

    @classmethod
    def constant(cls, value, alphabet_size: int = 2) -> "Roof":
        return cls(0, {(c,): as_qr(value) for c in range(alphabet_size)})

    @classmethod
    def by_symbol(cls, values) -> "Roof":
        return cls(0, {(c,): as_qr(v) for c, v in enumerate(values)})

    def value_at(self, oracle: PointOracle, i: int) -> QuadraticReal:
        w = tuple(oracle.block(i - self.m, i + self.m + 1))
        try:
            return self.table[w]
        except KeyError:
            raise KeyError(f"roof undefined on window {w}")

    def value_of_word(self, word: Word) -> QuadraticReal:
        return self.table[tuple(word)]

    def integral(self, measure: Measure):
        """Exact integral of the roof against a shift-invariant measure."""
        total = None
        for w, v in sorted(self.table.items()):
            mass = measure.mass(w)
            if mass == 0:
                continue
            term = v * mass
            total = term if total is None else total + term
        return total

    def to_json(self):
        from suspshift.subshifts import word_str

        return {
            "window": self.m,
            "table": {word_str(w): v.to_json() for w, v in self.table.items()},
        }


@dataclass(frozen=True)
class SuspensionFlow:
    base: Subshift
    roof: Roof

    def roof_at(self, oracle: PointOracle, i: int) -> QuadraticReal:
        return self.roof.value_at(oracle, i)


@dataclass(frozen=True)
class FlowPoint:
    """(sigma^index of the base point, height), 0 <= height < roof there."""

    oracle: PointOracle
    index: int
    height: QuadraticReal

    def base_block(self, i: int, j: int) -> Word:
        return self.oracle.block(self.index + i, self.index + j)


def make_flow_point(flow: SuspensionFlow, oracle: PointOracle, height=0,
                    index: int = 0) -> FlowPoint:
    h = as_qr(height)
    r = flow.roof_at(oracle, index)
    if h.sign() < 0 or h >= r:
        raise ValueError("height outside [0, roof)")
    return FlowPoint(oracle, index, h)


def flow(flow_sys: SuspensionFlow, p: FlowPoint, s, max_shifts: int = 100000) -> FlowPoint:
    """Exact time-s flow map; s may be negative.  Normalizes to the unique
    representative with 0 <= height < roof."""
    h = p.height + as_qr(s)
    idx = p.index
    shifts = 0
    while True:
        r = flow_sys.roof_at(p.oracle, idx)
        if h.sign() >= 0 and h < r:
            return FlowPoint(p.oracle, idx, h)
        if h.sign() < 0:
            idx -= 1
            h = h + flow_sys.roof_at(p.oracle, idx)
        else:
            h = h - r
            idx += 1
        shifts += 1
        if shifts > max_shifts:
            raise HorizonExceeded(f"normalization needed more than {max_shifts} shifts")


# ---------------------------------------------------------------------------
# cross-sections


@dataclass(frozen=True)
class SectionPiece:
    cylinder: Cylinder
    offset: QuadraticReal  # height above the base coordinate of the anchor


class CrossSection:
    """Finite union of (anchored cylinder, time offset) pieces."""

    def __init__(self, pieces, validity_depth: int = 0, meta=None):
        self.pieces = [
            SectionPiece(c if isinstance(c, Cylinder) else Cylinder(*c), as_qr(o))
            for (c, o) in pieces
        ]
        self.validity_depth = validity_depth
        self.meta = meta or {}

    def __len__(self):
        return len(self.pieces)

    def check_disjoint(self) -> bool:
        """Equal offsets force disjoint cylinders; distinct offsets are
        disjoint as subsets of the flow space."""
        for i, p1 in enumerate(self.pieces):
            for p2 in self.pieces[i + 1 :]:
                if p1.offset == p2.offset and not cylinders_disjoint(
                    p1.cylinder, p2.cylinder
                ):
                    return False
        return True

    def match_at(self, oracle: PointOracle, index: int):
        """Piece indices whose cylinder condition holds at base coordinate
        `index`, with their offsets."""
        out = []
        for k, piece in enumerate(self.pieces):
            c = piece.cylinder
            if tuple(oracle.block(index + c.anchor, index + c.anchor + len(c.word))) == tuple(
                c.word
            ):
                out.append((piece.offset, k))
        return out


@dataclass(frozen=True)
class TowerPartition:
    """A labeling of the pieces of a cross-section into named atoms; the
    towers above the atoms partition the flow space."""

    section: CrossSection
    labels: tuple

    def __post_init__(self):
        if len(self.labels) != len(self.section.pieces):
            raise ValueError("labels must cover the pieces exactly")

    def atoms(self) -> dict:
        out = {}
        for piece, label in zip(self.section.pieces, self.labels):
            out.setdefault(label, []).append(piece)
        return out

    def label_of(self, piece_index: int):
        return self.labels[piece_index]


def base_section(flow_sys: SuspensionFlow) -> CrossSection:
    """The canonical section base x {0}."""
    zero = as_qr(0)
    pieces = [
        (Cylinder((c,), 0), zero) for c in range(flow_sys.base.alphabet_size)
        if flow_sys.base.admissible((c,))
    ]
    return CrossSection(pieces)


def certify_global_section(flow_sys: SuspensionFlow, section: CrossSection,
                           depth: int):
    """Empirical globality certificate: every admissible base word of length
    `depth` supports at least one section piece strictly inside its window,
    so every orbit hits the section within depth * max(roof).

    Returns that exact flow-time bound, or None when some word escapes (the
    section is then not certified global at this depth)."""
    base = flow_sys.base
    for w in base.language(depth):
        hit = False
        for i in range(depth):
            for piece in section.pieces:
                c = piece.cylinder
                lo = i + c.anchor
                hi = lo + len(c.word)
                if 0 <= lo and hi <= depth and tuple(w[lo:hi]) == tuple(c.word):
                    hit = True
                    break
            if hit:
                break
        if not hit:
            return None
    return flow_sys.roof.max_value * depth


def return_to_section(
    flow_sys: SuspensionFlow, p: FlowPoint, section: CrossSection, max_shifts: int = 10000
):
    """Smallest t > 0 with flow(p, t) in the section; exact arithmetic.

    Returns (return_time, landing FlowPoint, piece index).  A point already
    on the section returns at the next hit, never at time 0.
    """
    idx = p.index
    col_start = -p.height  # flow time at which the current column was entered
    first = True
    for _ in range(max_shifts):
        r = flow_sys.roof_at(p.oracle, idx)
        hits = section.match_at(p.oracle, idx)
        if first:
            hits = [(off, k) for (off, k) in hits if off > p.height]
            first = False
        hits = [(off, k) for (off, k) in hits if off < r]
        if hits:
            off, k = min(hits, key=lambda t: t[0])
            return col_start + off, FlowPoint(p.oracle, idx, off), k
        col_start = col_start + r
        idx += 1
    raise NotHit(f"no return within {max_shifts} base shifts")


def abramov_entropy(h_base: float, roof_integral) -> float:
    """Suspension-flow entropy h_base / integral(roof)."""
    ri = float(roof_integral)
    if ri <= 0:
        raise ValueError("roof integral must be positive")
    return h_base / ri


def theta_slab_mass(flow_sys: SuspensionFlow, measure: Measure, cylinder: Cylinder,
                    lo, hi):
    """Exact mass under the normalized product measure of the tower slab
    {(x, t): x in cylinder, lo <= t < hi}; requires hi <= roof on the slab."""
    lo, hi = as_qr(lo), as_qr(hi)
    roof = flow_sys.roof
    total = None
    for w in sorted(roof.table):
        # refine the cylinder by the roof window at coordinate 0
        joint = _join_cylinder(cylinder, w, roof.m, flow_sys.base)
        if joint is None:
            continue
        mass = measure.mass(joint.word)
        if mass == 0:
            continue
        r = roof.table[w]
        lo_c = lo if lo > 0 else as_qr(0)
        hi_c = hi if hi < r else r
        if lo_c >= hi_c:
            continue
        term = mass * (hi_c - lo_c)
        total = term if total is None else total + term
    if total is None:
        return as_qr(0)
    return total / roof.integral(measure)


def _join_cylinder(c: Cylinder, roof_word: Word, m: int, base: Subshift):
    """Intersect `c` with the roof-window cylinder [-m, m] -> roof_word;
    returns an anchored cylinder or None if empty.  The result is re-anchored
    to its own leftmost coordinate."""
    lo = min(c.anchor, -m)
    hi = max(c.end(), m + 1)
    word = []
    for i in range(lo, hi):
        a = c.word[i - c.anchor] if c.anchor <= i < c.end() else None
        b = roof_word[i + m] if -m <= i <= m else None
        if a is not None and b is not None and a != b:
            return None
        v = a if a is not None else b
        if v is None:
            raise ValueError(
                "slab cylinder must form a contiguous window with the roof window"
            )
        word.append(v)
    joint = Cylinder(tuple(word), lo)
    return joint if base.admissible(joint.word) else None


# ---------------------------------------------------------------------------
# time-delta tower entropy (exact, discrete tower model)


def time_delta_tower_entropy(measure: Measure, roof: Roof, delta, labels, n: int,
                             return_total: bool = False):
    """(1/n) H of the length-n itinerary distribution of the time-delta map
    for the tower partition {rest} + {[label]x[0,delta)}.

    Exact for roofs with window radius 0 and all values in delta*N; `labels`
    maps each base symbol to its partition atom (the level-0 label).
    """
    delta = as_qr(delta)
    if roof.m != 0:
        raise IncommensurableRoof("discrete tower model needs window-0 roofs")
    levels = {}
    for w, v in roof.table.items():
        q = v / delta
        if not q.is_rational or q.a.denominator != 1 or q.a <= 0:
            raise IncommensurableRoof(f"roof value {v!r} not in delta*N")
        levels[w[0]] = int(q.a)
    dist = {}
    subshift = measure.subshift
    for w in sorted(subshift.language(n)):
        mass = measure.mass(w)
        if mass == 0:
            continue
        for start_level in range(levels[w[0]]):
            itin = []
            sym_i, lev = 0, start_level
            for _ in range(n):
                itin.append(labels[w[sym_i]] if lev == 0 else "rest")
                lev += 1
                if lev == levels[w[sym_i]]:
                    sym_i += 1
                    lev = 0
                    if sym_i >= n:
                        break
            if len(itin) < n:
                continue  # cannot happen: levels >= 1 per column
            itin = tuple(itin)
            dist[itin] = dist[itin] + mass if itin in dist else mass
    total_mass = sum_exact(list(dist.values()))
    h_total = -sum(_xlogx(p / total_mass) for p in dist.values())
    return h_total if return_total else h_total / n


# ---------------------------------------------------------------------------
# induced-system entropy identity (Kac / Abramov mechanism)


def return_time_distribution(measure, a_symbols, tau_max: int = 30):
    """Exact induced return-time law on A = union of single-symbol cylinders
    of a memory-1 Markov measure, truncated at tau_max.

    Returns (dict tau -> exact probability, truncated tail mass).
    """
    from suspshift.measures import MarkovMeasure

    if not isinstance(measure, MarkovMeasure):
        raise ValueError("exact return-time law needs a Markov measure")
    k = measure.states
    a_set = set(a_symbols)
    mu_a = sum_exact([measure.pi[s] for s in a_set])
    if mu_a == 0:
        raise ValueError("mu(A) must be positive")
    start = {s: measure.pi[s] / mu_a for s in a_set}
    # v[c] = prob of sitting at complement symbol c without having returned
    v = {}
    for s, w in start.items():
        for c in range(k):
            if c not in a_set and measure.P[s][c] != 0:
                v[c] = v.get(c, Fraction(0)) + w * measure.P[s][c]
    tau_dist = {
        1: sum_exact(
            [w * measure.P[s][t] for s, w in start.items() for t in a_set
             if measure.P[s][t] != 0] or [Fraction(0)]
        )
    }
    for tau in range(2, tau_max + 1):
        hit = None
        for c, wc in v.items():
            for t in a_set:
                if measure.P[c][t] != 0:
                    term = wc * measure.P[c][t]
                    hit = term if hit is None else hit + term
        tau_dist[tau] = hit if hit is not None else Fraction(0)
        nxt = {}
        for c, wc in v.items():
            for c2 in range(k):
                if c2 not in a_set and measure.P[c][c2] != 0:
                    nxt[c2] = nxt.get(c2, Fraction(0)) + wc * measure.P[c][c2]
        v = nxt
    truncated = 1 - sum_exact(list(tau_dist.values()))
    return tau_dist, truncated


def kac_expected_return(measure, a_symbols, tau_max: int = 30):
    """Exact truncated mean return time to A; Kac predicts 1/mu(A).

    Returns (partial expectation as an exact value, truncated tail mass).
    """
    tau_dist, truncated = return_time_distribution(measure, a_symbols, tau_max)
    partial = sum_exact([Fraction(k) * p for k, p in tau_dist.items()])
    return partial, truncated


def induced_entropy_identity(measure, a_symbols, n: int, tau_max: int = 30):
    """Exact check of mu(A) * h(induced, P v R_A) = h(ambient, P-bar) at
    finite block length n, for A a union of single-symbol cylinders of a
    memory-1 Markov measure whose landings concentrate on one symbol.

    Returns (lhs, rhs, gap, truncated_mass).
    """
    a_set = set(a_symbols)
    mu_a = sum_exact([measure.pi[s] for s in a_set])
    tau_dist, truncated = return_time_distribution(measure, a_symbols, tau_max)
    # the label of one induced step is the return time; with a single landing
    # symbol the steps are i.i.d., so H_n = n * H_1 exactly
    h1 = -sum(_xlogx(p) for p in tau_dist.values() if p != 0)
    lhs = float(mu_a) * h1
    # ambient side: blocks labelled by membership in A
    rhs_total = _projected_block_entropy(measure, a_set, n)
    rhs = rhs_total / n
    return lhs, rhs, abs(lhs - rhs), float(truncated)


def _projected_block_entropy(measure, a_set, n: int) -> float:
    """H of the length-n distribution of the A-vs-rest label process."""
    dist = {}
    for w in measure.subshift.language(n):
        mass = measure.mass(w)
        if mass == 0:
            continue
        lab = tuple(1 if c in a_set else 0 for c in w)
        dist[lab] = dist.get(lab, Fraction(0)) + mass
    return -sum(_xlogx(p) for p in dist.values())


# ---------------------------------------------------------------------------
# orbit capacity


def orbit_capacity_discrete(subshift, cylinders, horizon: int, orbits,
                            period_max: int = 0):
    """Occupation-frequency estimate of E = union of anchored cylinders.

    upper: max over the supplied orbit oracles of the occupation frequency
    along [0, horizon); lower: best invariant mass among periodic measures up
    to period_max (exact for SFTs).
    """
    cylinders = [c if isinstance(c, Cylinder) else Cylinder(*c) for c in cylinders]

    def occupies(oracle, i):
        for c in cylinders:
            if tuple(oracle.block(i + c.anchor, i + c.anchor + len(c.word))) == tuple(c.word):
                return True
        return False

    upper = 0.0
    for oracle in orbits:
        count = sum(1 for i in range(horizon) if occupies(oracle, i))
        upper = max(upper, count / horizon)

    lower = Fraction(0)
    witness = None
    for m in range(1, period_max + 1):
        for p in subshift.periodic_points(m):
            count = sum(1 for i in range(m) if occupies(p, i))
            val = Fraction(count, m)
            if val > lower:
                lower, witness = val, p
    return upper, lower, witness


class FiniteWordOracle(PointOracle):
    """Oracle backed by a finite sampled word over [start, start+len)."""

    def __init__(self, word: Word, start: int = 0):
        self.word = tuple(word)
        self.start = start

    def block(self, i, j):
        if i < self.start or j > self.start + len(self.word):
            raise HorizonExceeded("query outside the sampled window")
        return self.word[i - self.start : j - self.start]


def sample_sft_orbit(sft, length: int, rng, start: int = 0) -> FiniteWordOracle:
    """Seeded random walk on the essential vertex graph, as a finite oracle
    over [start, start+length)."""
    v = rng.choice(sft.vertices)
    word = list(v)
    while len(word) < length + sft.memory:
        v = rng.choice(sft.edges[v])
        word.append(v[-1])
    return FiniteWordOracle(tuple(word[:length]), start)


def occupation_fraction_flow(flow_sys, point: FlowPoint, slabs, duration,
                             max_shifts: int = 200000):
    """Exact fraction of [0, duration) the orbit of `point` spends in the
    union of tower slabs (cylinder, lo, hi)."""
    duration = as_qr(duration)
    idx, h = point.index, point.height
    spent = as_qr(0)
    elapsed = as_qr(0)
    for _ in range(max_shifts):
        r = flow_sys.roof_at(point.oracle, idx)
        seg_end = r if elapsed + (r - h) <= duration else h + (duration - elapsed)
        for (cyl, lo, hi) in slabs:
            c = cyl if isinstance(cyl, Cylinder) else Cylinder(*cyl)
            blk = tuple(point.oracle.block(idx + c.anchor, idx + c.anchor + len(c.word)))
            if blk != tuple(c.word):
                continue
            lo_c = as_qr(lo) if as_qr(lo) > h else h
            hi_c = as_qr(hi) if as_qr(hi) < seg_end else seg_end
            if lo_c < hi_c:
                spent = spent + (hi_c - lo_c)
        elapsed = elapsed + (seg_end - h)
        if elapsed >= duration:
            return spent / duration
        idx += 1
        h = as_qr(0)
    raise HorizonExceeded("occupation scan exceeded the shift budget")


def flow_to_json(flow_sys: SuspensionFlow) -> dict:
    return {"base": flow_sys.base.to_json(), "roof": flow_sys.roof.to_json()}


def flow_from_json(obj: dict) -> SuspensionFlow:
    from suspshift.subshifts import parse_word, subshift_from_json

    base = subshift_from_json(obj["base"])
    roof_obj = obj["roof"]
    table = {
        parse_word(w): QuadraticReal.from_json(v)
        for w, v in roof_obj["table"].items()
    }
    return SuspensionFlow(base, Roof(int(roof_obj.get("window", 0)), table))
