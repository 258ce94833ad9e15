"""Exact edge-percolation probability space.

Every edge e is independently open with probability mu(e); an atom is one
subset K of the edge set and has probability
prod_{e in K} mu(e) * prod_{e not in K} (1 - mu(e)).
All weights are rationals and all arithmetic is exact: event probabilities
are sums of atom probabilities, computed as integer numerator sums over the
product of the per-edge denominators.

Enumeration walks bitmasks in increasing order over the global edge index
and rebuilds a union-find per subset.  Edges outside a spec's restriction
mask never enter the enumeration; their factors sum to 1 and are
marginalized analytically.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .graphs import BunkbedGraph, Graph

DEFAULT_ENUMERATION_CAP = 30

# below this many atoms a process pool costs more than it saves
PARALLEL_MIN_ATOMS = 1 << 18

ZERO = Fraction(0)
ONE = Fraction(1)


class EnumerationCapError(RuntimeError):
    """Raised when an exact enumeration would exceed the configured cap."""

    def __init__(self, needed: int, cap: int, context: str = ""):
        self.needed = needed
        self.cap = cap
        self.context = context
        where = f" ({context})" if context else ""
        super().__init__(
            f"enumeration over {needed} edges exceeds the cap of {cap}{where}"
        )


class WeightParseError(ValueError):
    """Raised when a weight file cannot be parsed or does not cover the graph."""


def _check_probability(value: Fraction, what: str) -> Fraction:
    if not ZERO <= value <= ONE:
        raise ValueError(f"{what} must lie in [0, 1], got {value}")
    return value


@dataclass(frozen=True)
class Weight:
    """A per-edge rational open probability on a fixed graph."""

    graph: Graph
    values: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.values) != self.graph.edge_count:
            raise ValueError(
                f"need {self.graph.edge_count} edge values, got {len(self.values)}"
            )
        vals = tuple(Fraction(v) for v in self.values)
        for i, v in enumerate(vals):
            _check_probability(v, f"weight of edge {i}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def uniform(cls, graph: Graph, p) -> "Weight":
        return cls(graph, (Fraction(p),) * graph.edge_count)

    def replace(self, edge: int, value) -> "Weight":
        vals = list(self.values)
        vals[edge] = Fraction(value)
        return Weight(self.graph, tuple(vals))


@dataclass(frozen=True)
class SymmetricWeight:
    """A weight on a bunkbed whose two copies of each base edge are equal.

    The symmetry is structural: only one value per base edge is stored, so
    unequal copies cannot be represented.  Post edges are unconstrained.
    """

    bunkbed: BunkbedGraph
    base_values: tuple[Fraction, ...]
    post_values: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.base_values) != self.bunkbed.base.edge_count:
            raise ValueError("one value per base edge required")
        if len(self.post_values) != self.bunkbed.base.vertex_count:
            raise ValueError("one value per base vertex required")
        bv = tuple(Fraction(v) for v in self.base_values)
        pv = tuple(Fraction(v) for v in self.post_values)
        for i, v in enumerate(bv):
            _check_probability(v, f"weight of base edge {i}")
        for i, v in enumerate(pv):
            _check_probability(v, f"weight of post {i}")
        object.__setattr__(self, "base_values", bv)
        object.__setattr__(self, "post_values", pv)

    @classmethod
    def uniform(cls, bb: BunkbedGraph, p) -> "SymmetricWeight":
        f = Fraction(p)
        return cls(bb, (f,) * bb.base.edge_count, (f,) * bb.base.vertex_count)

    def to_weight(self) -> Weight:
        """The induced weight on the bunkbed's total graph."""
        values = [ZERO] * self.bunkbed.total.edge_count
        for e, v in enumerate(self.base_values):
            values[self.bunkbed.minus_edge(e)] = v
            values[self.bunkbed.plus_edge(e)] = v
        for x, v in enumerate(self.post_values):
            values[self.bunkbed.post_edge(x)] = v
        return Weight(self.bunkbed.total, tuple(values))


@dataclass(frozen=True)
class ConnectivitySpec:
    """A conjunction of pairwise connectivity constraints.

    positive pairs must be connected, negative pairs must not be.  With a
    restriction, connectivity is read from K intersected with the given
    edge-index mask and only masked edges are enumerated; the event must
    not depend on edges outside the mask.
    """

    positive: tuple[tuple[int, int], ...] = ()
    negative: tuple[tuple[int, int], ...] = ()
    restriction: frozenset[int] | None = None

    @classmethod
    def connected(cls, x: int, y: int, restriction=None) -> "ConnectivitySpec":
        r = None if restriction is None else frozenset(restriction)
        return cls(positive=((x, y),), restriction=r)

    def validate(self, graph: Graph) -> None:
        for x, y in self.positive + self.negative:
            if not (0 <= x < graph.vertex_count and 0 <= y < graph.vertex_count):
                raise ValueError(f"pair ({x}, {y}) out of range")
        if self.restriction is not None:
            for e in self.restriction:
                if not 0 <= e < graph.edge_count:
                    raise ValueError(f"restriction edge {e} out of range")


@dataclass(frozen=True)
class ProbabilityReport:
    """An exact probability plus how it was obtained.

    atoms_evaluated is the total size of the enumerated atom spaces; it is
    a deterministic function of the inputs, independent of internal result
    caching.
    """

    value: Fraction
    method: str  # 'brute_force' or 'decomposition'
    atoms_evaluated: int
    elapsed: float

    def __post_init__(self):
        _check_probability(self.value, "probability")


def atom_probability(w: Weight, edge_subset) -> Fraction:
    """Probability of the single atom K = edge_subset."""
    k = set(edge_subset)
    p = ONE
    for i, v in enumerate(w.values):
        p *= v if i in k else ONE - v
    return p


# ---------------------------------------------------------------------------
# Enumeration core
# ---------------------------------------------------------------------------


def _integer_factors(values: Sequence[Fraction]) -> tuple[list[int], list[int], int]:
    """Per-edge (open, closed) numerators and the common denominator."""
    opens: list[int] = []
    closeds: list[int] = []
    denom = 1
    for v in values:
        opens.append(v.numerator)
        closeds.append(v.denominator - v.numerator)
        denom *= v.denominator
    return opens, closeds, denom


def _half_tables(opens: Sequence[int], closeds: Sequence[int]) -> tuple[list[int], list[int], int]:
    """Products of factors over all sub-masks of the low and high edge halves.

    Bit j of a sub-mask is edge j of the half, so the full atom numerator is
    lo[mask & (2^half - 1)] * hi[mask >> half].
    """
    m = len(opens)
    half = m // 2
    lo = [1]
    for e in range(half):
        lo = [x * closeds[e] for x in lo] + [x * opens[e] for x in lo]
    hi = [1]
    for e in range(half, m):
        hi = [x * closeds[e] for x in hi] + [x * opens[e] for x in hi]
    return lo, hi, half


def _event_range(
    n: int,
    edges: Sequence[tuple[int, int]],
    positive: Sequence[tuple[int, int]],
    negative: Sequence[tuple[int, int]],
    opens: Sequence[int],
    closeds: Sequence[int],
    start: int,
    stop: int,
) -> int:
    """Integer numerator of the event over atoms [start, stop)."""
    lo_table, hi_table, half = _half_tables(opens, closeds)
    lo_mask = (1 << half) - 1
    init = list(range(n))
    parent = init[:]
    total = 0
    pos = list(positive)
    neg = list(negative)
    for mask in range(start, stop):
        parent[:] = init
        mm = mask
        for u, v in edges:
            if mm & 1:
                ru = u
                while parent[ru] != ru:
                    ru = parent[ru]
                rv = v
                while parent[rv] != rv:
                    rv = parent[rv]
                if ru != rv:
                    parent[rv] = ru
            mm >>= 1
        ok = True
        for x, y in pos:
            rx = x
            while parent[rx] != rx:
                rx = parent[rx]
            ry = y
            while parent[ry] != ry:
                ry = parent[ry]
            if rx != ry:
                ok = False
                break
        if ok:
            for x, y in neg:
                rx = x
                while parent[rx] != rx:
                    rx = parent[rx]
                ry = y
                while parent[ry] != ry:
                    ry = parent[ry]
                if rx == ry:
                    ok = False
                    break
        if ok:
            total += lo_table[mask & lo_mask] * hi_table[mask >> half]
    return total


def _event_range_worker(args) -> int:
    return _event_range(*args)


def event_probability(
    w: Weight,
    spec: ConnectivitySpec,
    *,
    cap: int = DEFAULT_ENUMERATION_CAP,
    threads: int = 1,
) -> ProbabilityReport:
    """Exact probability of the event by exhaustive subset enumeration.

    Sums atom probabilities over every edge subset satisfying all positive
    and negative constraints.  With a restriction only masked edges are
    enumerated (2^|mask| atoms); unmasked edges marginalize to 1.
    """
    t0 = time.perf_counter()
    spec.validate(w.graph)
    g = w.graph
    if spec.restriction is None:
        enum_edges = list(range(g.edge_count))
    else:
        enum_edges = sorted(spec.restriction)
    m = len(enum_edges)
    if m > cap:
        raise EnumerationCapError(m, cap)
    endpoints = [g.edges[e] for e in enum_edges]
    opens, closeds, denom = _integer_factors([w.values[e] for e in enum_edges])
    atoms = 1 << m

    numerator = None
    if threads > 1 and atoms >= PARALLEL_MIN_ATOMS:
        numerator = _parallel_event(
            g.vertex_count, endpoints, spec, opens, closeds, atoms, threads
        )
    if numerator is None:
        numerator = _event_range(
            g.vertex_count, endpoints, spec.positive, spec.negative,
            opens, closeds, 0, atoms,
        )
    value = Fraction(numerator, denom)
    return ProbabilityReport(
        value=value,
        method="brute_force",
        atoms_evaluated=atoms,
        elapsed=time.perf_counter() - t0,
    )


def _parallel_event(n, endpoints, spec, opens, closeds, atoms, threads) -> int | None:
    """Partition the bitmask range into chunks and sum exact partial results.

    Returns None if a worker pool cannot be created; the caller then falls
    back to the sequential path.
    """
    from concurrent.futures import ProcessPoolExecutor

    chunks = threads * 4
    step = (atoms + chunks - 1) // chunks
    tasks = [
        (n, endpoints, spec.positive, spec.negative, opens, closeds,
         lo, min(lo + step, atoms))
        for lo in range(0, atoms, step)
    ]
    try:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            return sum(pool.map(_event_range_worker, tasks))
    except OSError:
        return None


def connection_probability(
    w: Weight,
    x: int,
    y: int,
    *,
    cap: int = DEFAULT_ENUMERATION_CAP,
    threads: int = 1,
    restriction=None,
) -> Fraction:
    """Probability that x and y end up in one open component; 1 when x == y."""
    if x == y:
        if not 0 <= x < w.graph.vertex_count:
            raise ValueError(f"vertex {x} out of range")
        return ONE
    spec = ConnectivitySpec.connected(x, y, restriction=restriction)
    return event_probability(w, spec, cap=cap, threads=threads).value


def sum_over_all_atoms(w: Weight, *, cap: int = DEFAULT_ENUMERATION_CAP) -> Fraction:
    """Sum of all atom probabilities; must be exactly 1 (normalization self-test)."""
    m = w.graph.edge_count
    if m > cap:
        raise EnumerationCapError(m, cap)
    opens, closeds, denom = _integer_factors(w.values)
    lo_table, hi_table, half = _half_tables(opens, closeds)
    lo_mask = (1 << half) - 1
    total = 0
    for mask in range(1 << m):
        total += lo_table[mask & lo_mask] * hi_table[mask >> half]
    return Fraction(total, denom)


# ---------------------------------------------------------------------------
# Aggregated enumeration: the full measure grouped by connectivity partition
# ---------------------------------------------------------------------------


@dataclass
class ConnectivityDistribution:
    """The exact measure of one enumeration, grouped by the partition of the
    vertex set into open components.

    labels[i] assigns each vertex a component representative under slot i;
    numerators[i] is the total atom numerator landing on that slot, over
    `denominator`.  Any conjunction of connectivity constraints measurable
    over the enumerated edges can be read off exactly.
    """

    graph: Graph
    restriction: tuple[int, ...] | None
    labels: list[tuple[int, ...]]
    numerators: list[int]
    denominator: int

    def probability(self, spec: ConnectivitySpec) -> Fraction:
        spec.validate(self.graph)
        pos = spec.positive
        neg = spec.negative
        total = 0
        for lab, num in zip(self.labels, self.numerators):
            ok = True
            for x, y in pos:
                if lab[x] != lab[y]:
                    ok = False
                    break
            if ok:
                for x, y in neg:
                    if lab[x] == lab[y]:
                        ok = False
                        break
            if ok:
                total += num
        return Fraction(total, self.denominator)

    def connection(self, x: int, y: int) -> Fraction:
        if x == y:
            return ONE
        total = 0
        for lab, num in zip(self.labels, self.numerators):
            if lab[x] == lab[y]:
                total += num
        return Fraction(total, self.denominator)


_INT64_SAFE = 1 << 62


def connectivity_distributions(
    graph: Graph,
    weights: Sequence[Weight],
    *,
    restriction=None,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> list[ConnectivityDistribution]:
    """One enumeration pass shared by several weights on the same graph.

    The union-find work per atom is identical for every weight, so checking
    many weights against one graph costs one connectivity sweep plus one
    multiply-add per weight per atom.  When every weight's total
    denominator fits comfortably in int64 the per-weight accumulation is
    vectorized in chunks; otherwise exact big-integer accumulation is used.
    """
    for w in weights:
        if w.graph is not graph and w.graph != graph:
            raise ValueError("all weights must live on the given graph")
    if restriction is None:
        enum_edges = list(range(graph.edge_count))
        restr = None
    else:
        enum_edges = sorted(restriction)
        restr = tuple(enum_edges)
    m = len(enum_edges)
    if m > cap:
        raise EnumerationCapError(m, cap)
    endpoints = [graph.edges[e] for e in enum_edges]
    n = graph.vertex_count

    tables = []
    denoms = []
    for w in weights:
        opens, closeds, denom = _integer_factors([w.values[e] for e in enum_edges])
        lo, hi, half = _half_tables(opens, closeds)
        tables.append((lo, hi))
        denoms.append(denom)
    half = m // 2
    lo_mask = (1 << half) - 1
    atoms = 1 << m

    # every atom numerator and every slot sum is bounded by the denominator
    vectorized = all(d < _INT64_SAFE for d in denoms)

    slots: dict[tuple[int, ...], int] = {}
    labels: list[tuple[int, ...]] = []
    sums: list[list[int]] | None = None
    np_tables = None
    np_sums = None
    if vectorized:
        np_tables = [
            (np.asarray(lo, dtype=np.int64), np.asarray(hi, dtype=np.int64))
            for lo, hi in tables
        ]
        np_sums = [np.zeros(0, dtype=np.int64) for _ in weights]
    else:
        sums = [[] for _ in weights]
    triples = None if vectorized else list(zip(sums, (t[0] for t in tables), (t[1] for t in tables)))

    init = list(range(n))
    parent = init[:]
    vrange = range(n)
    chunk_size = 1 << 16
    for chunk_start in range(0, atoms, chunk_size):
        chunk_stop = min(chunk_start + chunk_size, atoms)
        slot_buf: list[int] = [] if vectorized else None
        for mask in range(chunk_start, chunk_stop):
            parent[:] = init
            mm = mask
            for u, v in endpoints:
                if mm & 1:
                    ru = u
                    while parent[ru] != ru:
                        ru = parent[ru]
                    rv = v
                    while parent[rv] != rv:
                        rv = parent[rv]
                    if ru != rv:
                        parent[rv] = ru
                mm >>= 1
            for i in vrange:
                r = i
                while parent[r] != r:
                    r = parent[r]
                parent[i] = r
            key = tuple(parent)
            idx = slots.get(key)
            if idx is None:
                idx = len(labels)
                slots[key] = idx
                labels.append(key)
                if not vectorized:
                    for s in sums:
                        s.append(0)
            if vectorized:
                slot_buf.append(idx)
            else:
                lo = mask & lo_mask
                hi = mask >> half
                for s, lt, ht in triples:
                    s[idx] += lt[lo] * ht[hi]
        if vectorized:
            idx_arr = np.asarray(slot_buf, dtype=np.int64)
            mask_arr = np.arange(chunk_start, chunk_stop, dtype=np.int64)
            lo_arr = mask_arr & lo_mask
            hi_arr = mask_arr >> half
            nslots = len(labels)
            for wi, (lo_t, hi_t) in enumerate(np_tables):
                if np_sums[wi].shape[0] < nslots:
                    np_sums[wi] = np.concatenate(
                        [np_sums[wi], np.zeros(nslots - np_sums[wi].shape[0], dtype=np.int64)]
                    )
                np.add.at(np_sums[wi], idx_arr, lo_t[lo_arr] * hi_t[hi_arr])

    if vectorized:
        out_sums = [[int(x) for x in np_sums[i]] for i in range(len(weights))]
    else:
        out_sums = sums
    return [
        ConnectivityDistribution(
            graph=graph,
            restriction=restr,
            labels=labels,
            numerators=out_sums[i],
            denominator=denoms[i],
        )
        for i in range(len(weights))
    ]


def connectivity_distribution(
    w: Weight, *, restriction=None, cap: int = DEFAULT_ENUMERATION_CAP
) -> ConnectivityDistribution:
    return connectivity_distributions(w.graph, [w], restriction=restriction, cap=cap)[0]


# ---------------------------------------------------------------------------
# Weight file format
# ---------------------------------------------------------------------------


def parse_rational(token: str) -> Fraction:
    try:
        if "/" in token:
            num, den = token.split("/")
            return Fraction(int(num), int(den))
        return Fraction(int(token))
    except (ValueError, ZeroDivisionError) as exc:
        raise WeightParseError(f"bad rational {token!r}") from exc


def format_rational(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def _parse_weight_lines(text: str):
    default = None
    edge_lines: dict[tuple[int, int], Fraction] = {}
    post_lines: dict[int, Fraction] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        try:
            if parts[0] == "default" and len(parts) == 2:
                if default is not None:
                    raise WeightParseError(f"line {lineno}: repeated default")
                default = parse_rational(parts[1])
            elif parts[0] == "w" and len(parts) == 4:
                u, v = int(parts[1]), int(parts[2])
                key = (u, v) if u < v else (v, u)
                if key in edge_lines:
                    raise WeightParseError(f"line {lineno}: duplicate weight for edge {key}")
                edge_lines[key] = parse_rational(parts[3])
            elif parts[0] == "post" and len(parts) == 3:
                x = int(parts[1])
                if x in post_lines:
                    raise WeightParseError(f"line {lineno}: duplicate post weight for {x}")
                post_lines[x] = parse_rational(parts[2])
            else:
                raise WeightParseError(f"line {lineno}: unrecognized line {line!r}")
        except ValueError as exc:
            if isinstance(exc, WeightParseError):
                raise
            raise WeightParseError(f"line {lineno}: {exc}") from exc
    return default, edge_lines, post_lines


def parse_weight_file(text: str, graph: Graph) -> Weight:
    """Parse a plain weight file for `graph` (w lines keyed by endpoints)."""
    default, edge_lines, post_lines = _parse_weight_lines(text)
    if post_lines:
        raise WeightParseError("post lines are only valid for symmetric bunkbed weights")
    values = []
    for e in graph.edges:
        if e in edge_lines:
            values.append(edge_lines.pop(e))
        elif default is not None:
            values.append(default)
        else:
            raise WeightParseError(f"no weight for edge {e} and no default")
    if edge_lines:
        raise WeightParseError(f"weights given for unknown edges: {sorted(edge_lines)}")
    try:
        return Weight(graph, tuple(values))
    except ValueError as exc:
        raise WeightParseError(str(exc)) from exc


def parse_symmetric_weight_file(text: str, bb: BunkbedGraph) -> SymmetricWeight:
    """Parse a symmetric weight file: w lines keyed by base edge endpoints,
    post lines keyed by base vertex."""
    default, edge_lines, post_lines = _parse_weight_lines(text)
    base_values = []
    for e in bb.base.edges:
        if e in edge_lines:
            base_values.append(edge_lines.pop(e))
        elif default is not None:
            base_values.append(default)
        else:
            raise WeightParseError(f"no weight for base edge {e} and no default")
    if edge_lines:
        raise WeightParseError(f"weights given for unknown base edges: {sorted(edge_lines)}")
    post_values = []
    for x in range(bb.base.vertex_count):
        if x in post_lines:
            post_values.append(post_lines.pop(x))
        elif default is not None:
            post_values.append(default)
        else:
            raise WeightParseError(f"no weight for post {x} and no default")
    if post_lines:
        raise WeightParseError(f"posts given for unknown vertices: {sorted(post_lines)}")
    try:
        return SymmetricWeight(bb, tuple(base_values), tuple(post_values))
    except ValueError as exc:
        raise WeightParseError(str(exc)) from exc


def format_weight(w: Weight) -> str:
    """Render a plain weight with one explicit line per edge."""
    lines = [f"w {u} {v} {format_rational(val)}" for (u, v), val in zip(w.graph.edges, w.values)]
    return "\n".join(lines) + "\n"


def format_symmetric_weight(sw: SymmetricWeight) -> str:
    lines = [
        f"w {u} {v} {format_rational(val)}"
        for (u, v), val in zip(sw.bunkbed.base.edges, sw.base_values)
    ]
    lines += [f"post {x} {format_rational(val)}" for x, val in enumerate(sw.post_values)]
    return "\n".join(lines) + "\n"
