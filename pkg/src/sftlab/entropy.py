"""Shannon entropy, finite-size and transfer-matrix upper bounds, placement lower bounds."""

from __future__ import annotations

import csv
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components

from .errors import EmptyMeasure, InvalidDistribution, NonConvergence, StateExplosion
from .grid import Alphabet, Pattern, Shape
from .sft import (
    BoundaryCondition,
    Compound,
    DistanceRules,
    SftRules,
    enumerate_admissible,
    is_locally_admissible,
)


@dataclass(frozen=True)
class FiniteDistribution:
    weights: Mapping[Hashable, float]

    def __post_init__(self):
        w = dict(self.weights)
        if any(v < 0 for v in w.values()):
            raise InvalidDistribution("negative weight")
        total = math.fsum(w.values())
        if abs(total - 1.0) > 1e-9:
            raise InvalidDistribution(f"weights sum to {total}, not 1")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, outcomes: Iterable) -> "FiniteDistribution":
        outcomes = list(outcomes)
        if not outcomes:
            raise InvalidDistribution("no outcomes")
        p = 1.0 / len(outcomes)
        return cls({o: p for o in outcomes})

    @classmethod
    def from_counts(cls, counts: Mapping) -> "FiniteDistribution":
        total = sum(counts.values())
        if total <= 0:
            raise InvalidDistribution("empty counts")
        return cls({k: v / total for k, v in counts.items()})

    @property
    def support(self) -> list:
        return [o for o, p in self.weights.items() if p > 0]

    def prob(self, outcome) -> float:
        return self.weights.get(outcome, 0.0)

    def marginal(self, coords) -> "FiniteDistribution":
        """Projection of a distribution on tuples onto the given coordinate indices."""
        out: dict = {}
        for o, p in self.weights.items():
            key = tuple(o[i] for i in coords)
            out[key] = out.get(key, 0.0) + p
        return FiniteDistribution(out)


def shannon_entropy(d: FiniteDistribution) -> float:
    """H(d) in nats, with 0 log 0 = 0."""
    return -math.fsum(p * math.log(p) for p in d.weights.values() if p > 0)


# ---------------------------------------------------------------------------
# upper bounds


def finite_size_upper_bound(rules: SftRules, N: int, **kw) -> float:
    """(1/N^2) log of the number of locally admissible N x N patterns."""
    if N < 1:
        raise ValueError("N must be >= 1")
    count = enumerate_admissible(Shape.rect((0, 0), (N - 1, N - 1)), rules, **kw)
    return math.log(count) / (N * N)


def rule_thickness(rules: SftRules) -> int:
    """Columns per transfer-matrix state: 1 for 2x2 rules, the largest distance otherwise."""
    base = rules.base if isinstance(rules, Compound) else rules
    if isinstance(base, DistanceRules):
        return max(1, base.max_distance)
    if isinstance(rules, Compound) and rules.forbidden_words:
        return max(1, max(w.shape.width for w in rules.forbidden_words) - 1)
    return 1


@dataclass
class TransferMatrix:
    """Column-block transfer matrix for strips of height ``width``.

    A state is a locally admissible block ``width`` rows tall and ``thickness``
    columns wide; state i may be followed by j when the two blocks side by side
    are locally admissible.
    """

    width: int
    thickness: int
    states: list
    adjacency: sparse.csr_matrix = field(repr=False)

    @classmethod
    def build(cls, rules: SftRules, width: int, max_states: int = 20000) -> "TransferMatrix":
        tau = rule_thickness(rules)
        block = Shape.rect((0, 0), (tau - 1, width - 1))
        states = []
        index = {}
        for p in enumerate_admissible(block, rules, mode="stream"):
            index[p.grid.tobytes()] = len(states)
            states.append(p)
            if len(states) > max_states:
                raise StateExplosion(f"more than {max_states} states at width {width}")
        nxt = block.translate_by((tau, 0))
        rows, cols = [], []
        for i, st in enumerate(states):
            for q in enumerate_admissible(nxt, rules, BoundaryCondition(st), mode="stream"):
                rows.append(i)
                cols.append(index[q.grid.tobytes()])
        n = len(states)
        adj = sparse.csr_matrix((np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(n, n))
        return cls(width, tau, states, adj)

    def strip_count(self, length: int) -> int:
        """Exact number of locally admissible patterns of height ``width`` and ``length`` blocks."""
        if length < 1:
            raise ValueError("length must be >= 1")
        n = len(self.states)
        succ = [self.adjacency.indices[self.adjacency.indptr[i] : self.adjacency.indptr[i + 1]].tolist() for i in range(n)]
        vec = [1] * n
        for _ in range(length - 1):
            vec = [sum(vec[j] for j in succ[i]) for i in range(n)]
        return sum(vec)

    def spectral_radius(self, tol: float = 1e-12, max_iter: int = 100_000):
        return spectral_radius(self.adjacency, tol=tol, max_iter=max_iter)


def _power_bracket(a: sparse.csr_matrix, tol: float, max_iter: int):
    """Collatz-Wielandt bracket on the Perron root of an irreducible block.

    Iterates on A + I so that periodic blocks still converge; v stays positive.
    """
    n = a.shape[0]
    shifted = (a + sparse.identity(n, format="csr", dtype=a.dtype)).astype(float)
    v = np.ones(n)
    lo, hi = 0.0, float("inf")
    for _ in range(max_iter):
        w = shifted @ v
        ratios = w / v
        lo, hi = float(ratios.min()), float(ratios.max())
        if hi - lo <= tol * hi:
            return lo - 1.0, hi - 1.0
        v = w / np.linalg.norm(w)
    raise NonConvergence(f"no convergence after {max_iter} iterations", bracket=(lo - 1.0, hi - 1.0))


def spectral_radius(a, tol: float = 1e-12, max_iter: int = 100_000) -> float:
    """Perron root of a nonnegative sparse matrix, maximised over strongly connected blocks."""
    a = sparse.csr_matrix(a)
    n = a.shape[0]
    if n == 0:
        return 0.0
    ncomp, labels = connected_components(a, directed=True, connection="strong")
    best = 0.0
    for c in range(ncomp):
        idx = np.flatnonzero(labels == c)
        sub = a[idx][:, idx]
        if sub.nnz == 0:
            continue
        lo, hi = _power_bracket(sub, tol, max_iter)
        best = max(best, 0.5 * (lo + hi))
    return best


def strip_entropy_upper_bound(rules: SftRules, w: int, tol: float = 1e-12, max_states: int = 20000) -> float:
    """log(lambda) / (w * thickness) for the width-w strip transfer matrix."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    tm = TransferMatrix.build(rules, w, max_states=max_states)
    lam = tm.spectral_radius(tol=tol)
    return math.log(lam) / (w * tm.thickness)


# ---------------------------------------------------------------------------
# lower bounds


@dataclass(frozen=True)
class WrGrid:
    """Independent 0/- choices on the sublattice with coordinates divisible by R1 + 1."""

    R1: int
    d: int = 2


@dataclass(frozen=True)
class LabelGrid:
    """Independent choice among m labels at a set of sites of density alpha."""

    alpha: float
    m: int


@dataclass(frozen=True)
class LowerBound:
    value: float
    witnesses: int | None = None
    witnesses_admissible: bool | None = None


def placement_lower_bound(style, N: int | None = None, rules: SftRules | None = None) -> LowerBound:
    """Certified entropy lower bound; optionally materialise the witnesses on N x N.

    Materialisation is available for ``WrGrid``: every member of the 2^(#grid
    sites) family is built on [0, N-1]^2 and checked against ``rules``
    (default: WR with R2 = R1).
    """
    if isinstance(style, WrGrid):
        if style.R1 < 1 or style.d < 1:
            raise ValueError("parameters must be positive")
        value = math.log(2) / (style.R1 + 1) ** style.d
        if N is None:
            return LowerBound(value)
        from .widom_rowlinson import WR_ALPHABET, WrParams, wr_rules

        rules = rules or wr_rules(WrParams(style.R1, style.R1))
        step = style.R1 + 1
        grid_sites = [(x, y) for y in range(0, N, step) for x in range(0, N, step)]
        base = np.zeros((N, N), dtype=np.int16)
        minus = WR_ALPHABET.index("-")
        ok = True
        count = 0
        for bits in itertools.product((0, 1), repeat=len(grid_sites)):
            g = base.copy()
            for (x, y), b in zip(grid_sites, bits):
                if b:
                    g[y, x] = minus
            count += 1
            if not is_locally_admissible(Pattern.from_array(WR_ALPHABET, g), rules):
                ok = False
        return LowerBound(value, count, ok)
    if isinstance(style, LabelGrid):
        if style.alpha < 0 or style.m < 1:
            raise ValueError("parameters must be positive")
        return LowerBound(style.alpha * math.log(style.m))
    raise TypeError(f"unknown placement style {style!r}")


# ---------------------------------------------------------------------------
# empirical measures


@dataclass
class EmpiricalMeasure:
    window_counts: dict
    total: int

    def __post_init__(self):
        if any(c < 0 for c in self.window_counts.values()):
            raise ValueError("negative count")
        if self.total != sum(self.window_counts.values()):
            raise ValueError("total does not match counts")

    @classmethod
    def from_windows(cls, windows: Iterable[Pattern]) -> "EmpiricalMeasure":
        counts = Counter(windows)
        return cls(dict(counts), sum(counts.values()))

    @classmethod
    def from_arrays(cls, alphabet: Alphabet, samples: np.ndarray) -> "EmpiricalMeasure":
        """Windows given as an (S, N, N) integer array."""
        samples = np.asarray(samples)
        flat = samples.reshape(samples.shape[0], -1)
        uniq, counts = np.unique(flat, axis=0, return_counts=True)
        n = samples.shape[1]
        wc = {
            Pattern.from_array(alphabet, u.reshape(n, samples.shape[2])): int(c)
            for u, c in zip(uniq, counts)
        }
        return cls(wc, int(counts.sum()))

    def distribution(self) -> FiniteDistribution:
        if self.total == 0:
            raise EmptyMeasure("no windows recorded")
        return FiniteDistribution.from_counts(self.window_counts)


def block_entropy_rate(e: EmpiricalMeasure, N: int) -> float:
    if e.total == 0 or not e.window_counts:
        raise EmptyMeasure("no windows recorded")
    for w in e.window_counts:
        if not (w.shape.is_rect and w.shape.width == N and w.shape.height == N):
            raise ValueError("windows must be N x N")
    return shannon_entropy(e.distribution()) / (N * N)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        wr.writerows(rows)
