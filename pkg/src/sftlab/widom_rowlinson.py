"""Widom-Rowlinson shifts: boundary ensembles, heat-bath sampling and the Peierls machinery."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from numba import njit
from scipy import ndimage

from .entropy import FiniteDistribution
from .errors import (
    InfeasibleBoundary,
    NotMinusAtV,
    NotMultiple,
    RegionTooLarge,
    StaleContour,
    check,
)
from .grid import Alphabet, Coord, Pattern, Shape, ring
from .sft import BoundaryCondition, DistanceRule, DistanceRules, enumerate_admissible, is_locally_admissible

WR_ALPHABET = Alphabet(("0", "+", "-"))
ZERO, PLUS, MINUS = 0, 1, 2

# connectivity used for U-components, the exterior of A and contours
CONTOUR_STRUCTURE = np.ones((3, 3), dtype=bool)
# connectivity of the complement when deciding what a contour encloses
ENCLOSURE_STRUCTURE = ndimage.generate_binary_structure(2, 1)


@dataclass(frozen=True)
class WrParams:
    R1: int
    R2: int
    d: int = 2

    def __post_init__(self):
        if self.R1 < 1:
            raise ValueError("R1 must be >= 1")
        if self.R2 < self.R1:
            raise ValueError("R2 must be >= R1")
        if self.d < 2:
            raise ValueError("d must be >= 2")


def wr_rules(p: WrParams) -> DistanceRules:
    return DistanceRules(
        WR_ALPHABET,
        (
            DistanceRule({"+", "-"}, {"+", "-"}, p.R1),
            DistanceRule({"+"}, {"-"}, p.R2),
        ),
    )


def spin_flip(x: Pattern) -> Pattern:
    """Swap + and -, keeping 0."""
    table = [WR_ALPHABET.index({"0": "0", "+": "-", "-": "+"}[s]) for s in x.alphabet]
    return x.relabel(WR_ALPHABET, table)


def delta_plus_boundary(k: int, R1: int) -> BoundaryCondition:
    """+ at every (R1+1)-th site of each face of the ring at distance k, corners excluded.

    For k = 0 the ring is the origin alone and carries +.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    step = R1 + 1
    if k % step:
        raise NotMultiple(f"k={k} is not a multiple of R1+1={step}")
    vals = {}
    for s in ring(k):
        on_x, on_y = abs(s.x) == k, abs(s.y) == k
        if k == 0:
            plus = True
        elif on_x and not on_y:
            plus = s.y % step == 0
        elif on_y and not on_x:
            plus = s.x % step == 0
        else:
            plus = False
        vals[s] = "+" if plus else "0"
    return BoundaryCondition(Pattern.from_dict(WR_ALPHABET, vals))


def delta_minus_boundary(k: int, R1: int) -> BoundaryCondition:
    return BoundaryCondition(spin_flip(delta_plus_boundary(k, R1).fixed))


def make_boundary(kind: str, k: int, R1: int) -> BoundaryCondition | None:
    if kind == "plus":
        return delta_plus_boundary(k, R1)
    if kind == "minus":
        return delta_minus_boundary(k, R1)
    if kind == "free":
        return None
    raise ValueError(f"unknown boundary {kind!r}")


def exact_conditional_distribution(k: int, p: WrParams, bc: BoundaryCondition | None = None, max_sites: int = 25):
    """Uniform distribution over admissible interiors of [-k, k]^2 given the boundary."""
    interior = Shape.square(k - 1)
    if len(interior) > max_sites:
        raise RegionTooLarge(f"{len(interior)} interior sites exceeds the limit {max_sites}")
    bc = bc if bc is not None else delta_plus_boundary(k, p.R1)
    support = enumerate_admissible(interior, wr_rules(p), bc, mode="list")
    if not support:
        raise InfeasibleBoundary("boundary admits no interior")
    return FiniteDistribution.uniform(support)


def with_boundary(interior: Pattern, bc: BoundaryCondition | None) -> Pattern:
    """Full-box configuration from an interior pattern and its boundary ring."""
    if bc is None:
        return interior
    from .grid import concat_disjoint

    return concat_disjoint(interior, bc.fixed)


# ---------------------------------------------------------------------------
# heat-bath sampler


@njit(cache=True, nogil=True)
def _add_site(nz1, p2, m2, y, x, sym, sign, R1, R2):
    if sym != ZERO:
        for dy in range(-R1, R1 + 1):
            for dx in range(-R1, R1 + 1):
                nz1[y + dy, x + dx] += sign
        tgt = p2 if sym == PLUS else m2
        for dy in range(-R2, R2 + 1):
            for dx in range(-R2, R2 + 1):
                tgt[y + dy, x + dx] += sign


@njit(cache=True, nogil=True)
def _init_counters(grid, nz1, p2, m2, R1, R2, pad):
    h, w = grid.shape
    for y in range(pad, h - pad):
        for x in range(pad, w - pad):
            if grid[y, x] != ZERO:
                _add_site(nz1, p2, m2, y, x, grid[y, x], 1, R1, R2)


@njit(cache=True, nogil=True)
def _run_sweeps(grid, nz1, p2, m2, fys, fxs, perms, us, R1, R2, rec_ys, rec_xs, out_rec, out_counts):
    n_sweeps, n_free = perms.shape
    cand = np.empty(3, dtype=np.int8)
    n_plus = 0
    n_minus = 0
    for i in range(n_free):
        s = grid[fys[i], fxs[i]]
        if s == PLUS:
            n_plus += 1
        elif s == MINUS:
            n_minus += 1
    for t in range(n_sweeps):
        for j in range(n_free):
            i = perms[t, j]
            y = fys[i]
            x = fxs[i]
            cur = grid[y, x]
            nz = nz1[y, x] - (1 if cur != ZERO else 0)
            pp = p2[y, x] - (1 if cur == PLUS else 0)
            mm = m2[y, x] - (1 if cur == MINUS else 0)
            nc = 1
            cand[0] = ZERO
            if nz == 0 and mm == 0:
                cand[nc] = PLUS
                nc += 1
            if nz == 0 and pp == 0:
                cand[nc] = MINUS
                nc += 1
            new = cand[int(us[t, j] * nc)]
            if new != cur:
                _add_site(nz1, p2, m2, y, x, cur, -1, R1, R2)
                _add_site(nz1, p2, m2, y, x, new, 1, R1, R2)
                grid[y, x] = new
                if cur == PLUS:
                    n_plus -= 1
                elif cur == MINUS:
                    n_minus -= 1
                if new == PLUS:
                    n_plus += 1
                elif new == MINUS:
                    n_minus += 1
        for r in range(rec_ys.shape[0]):
            out_rec[t, r] = grid[rec_ys[r], rec_xs[r]]
        out_counts[t, 0] = n_plus
        out_counts[t, 1] = n_minus


@dataclass
class HeatBathResult:
    config: Pattern
    plus_density: np.ndarray
    minus_density: np.ndarray
    center_symbol: np.ndarray
    recorded: np.ndarray = field(repr=False)
    record_sites: list = field(default_factory=list)
    seed: int | None = None

    def trace_rows(self):
        for t in range(len(self.plus_density)):
            yield t + 1, float(self.plus_density[t]), float(self.minus_density[t]), WR_ALPHABET[int(self.center_symbol[t])]


def heat_bath_sample(
    k: int,
    p: WrParams,
    bc: BoundaryCondition | None,
    sweeps: int,
    seed,
    record: list | None = None,
    chunk: int = 256,
) -> HeatBathResult:
    """Single-site heat bath on [-k, k]^2 from the all-zero interior.

    With a boundary condition the ring at distance k is fixed and the interior
    [-k+1, k-1]^2 is resampled; with ``bc=None`` the whole box is free.  Each
    sweep visits every free site once in a fresh random order and replaces it
    by a uniform choice among the symbols admissible given the rest.
    ``record`` lists sites whose symbol is stored after every sweep; the
    centre is always tracked separately.
    """
    if sweeps < 0:
        raise ValueError("sweeps must be >= 0")
    rules = wr_rules(p)
    box = Shape.square(k)
    if bc is not None:
        if not bc.fixed.shape.issubset(box) or not is_locally_admissible(bc.fixed, rules):
            raise InfeasibleBoundary("boundary condition is not locally admissible")
        free = Shape.square(k - 1)
    else:
        free = box
    pad = p.R2
    size = 2 * k + 1 + 2 * pad
    grid = np.zeros((size, size), dtype=np.int8)
    if bc is not None:
        for s, sym in bc.fixed.items():
            grid[s.y + k + pad, s.x + k + pad] = WR_ALPHABET.index(sym)
    nz1 = np.zeros((size, size), dtype=np.int32)
    p2 = np.zeros_like(nz1)
    m2 = np.zeros_like(nz1)
    _init_counters(grid, nz1, p2, m2, p.R1, p.R2, pad)
    coords = free.coords()
    fxs = (coords[:, 0] + k + pad).astype(np.int64)
    fys = (coords[:, 1] + k + pad).astype(np.int64)
    record = [Coord(*s) for s in (record or [])]
    for s in record:
        if s not in free:
            raise ValueError(f"record site {tuple(s)} is not a free site")
    tracked = [Coord(0, 0)] + record
    rec_xs = np.array([s.x + k + pad for s in tracked], dtype=np.int64)
    rec_ys = np.array([s.y + k + pad for s in tracked], dtype=np.int64)
    out_rec = np.zeros((sweeps, len(tracked)), dtype=np.int8)
    out_counts = np.zeros((sweeps, 2), dtype=np.int64)
    rng = np.random.default_rng(seed)
    n_free = len(coords)
    base = np.arange(n_free, dtype=np.int64)
    done = 0
    while done < sweeps:
        m = min(chunk, sweeps - done)
        perms = rng.permuted(np.broadcast_to(base, (m, n_free)), axis=1)
        us = rng.random((m, n_free))
        _run_sweeps(grid, nz1, p2, m2, fys, fxs, perms, us, p.R1, p.R2, rec_ys, rec_xs,
                    out_rec[done : done + m], out_counts[done : done + m])
        done += m
    inner = grid[pad : pad + 2 * k + 1, pad : pad + 2 * k + 1]
    config = Pattern.from_array(WR_ALPHABET, inner, origin=(-k, -k))
    return HeatBathResult(
        config=config,
        plus_density=out_counts[:, 0] / n_free,
        minus_density=out_counts[:, 1] / n_free,
        center_symbol=out_rec[:, 0].copy(),
        recorded=out_rec[:, 1:].copy(),
        record_sites=record,
        seed=seed,
    )


def run_chains(k, p, bc, sweeps, chains, seed, record=None, threads=1):
    """Independent chains, one RNG stream per chain spawned from ``seed``."""
    streams = np.random.SeedSequence(seed).spawn(chains)
    job = lambda ss: heat_bath_sample(k, p, bc, sweeps, np.random.default_rng(ss), record)  # noqa: E731
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(job, streams))
    return [job(ss) for ss in streams]


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    batched_stderr: float
    n: int

    @property
    def conservative_stderr(self) -> float:
        return max(self.stderr, self.batched_stderr)


def estimate_minus_event(samples, batches: int = 20, symbol: int = MINUS) -> Estimate:
    """Fraction of samples equal to ``symbol`` (default -) at a site.

    ``samples`` holds recorded symbol codes at the site, shaped (chains, T)
    or (T,).  The binomial standard error treats draws as independent; the
    batched-means error splits every chain into ``batches`` consecutive
    blocks and uses the spread of block means.
    """
    a = np.atleast_2d(np.asarray(samples)) == symbol
    n = a.size
    if n == 0:
        raise ValueError("no samples")
    mean = float(a.mean())
    se = math.sqrt(mean * (1 - mean) / n)
    chains, T = a.shape
    b = max(1, min(batches, T))
    usable = (T // b) * b
    if usable == 0:
        return Estimate(mean, se, se, n)
    bm = a[:, :usable].reshape(chains, b, -1).mean(axis=2).ravel()
    bse = float(bm.std(ddof=1) / math.sqrt(bm.size)) if bm.size > 1 else se
    return Estimate(mean, se, bse, n)


# ---------------------------------------------------------------------------
# contours


@dataclass(frozen=True)
class ContourData:
    v: Coord
    U: Shape
    A: Shape
    C: Shape
    M: Shape
    M_from_C: Shape

    @property
    def moats_agree(self) -> bool:
        return self.M == self.M_from_C


def _mask_shape(mask, x0, y0) -> Shape:
    return Shape(x0, y0, mask)


def _as_frame(x: Pattern, pad: int):
    """Configuration codes on the bounding box padded by ``pad`` zeros, plus the box mask."""
    h, w = x.grid.shape
    g = np.zeros((h + 2 * pad, w + 2 * pad), dtype=np.int16)
    g[pad : pad + h, pad : pad + w] = np.maximum(x.grid, 0)
    inside = np.zeros_like(g, dtype=bool)
    inside[pad : pad + h, pad : pad + w] = x.shape.mask
    return g, inside, x.shape.x0 - pad, x.shape.y0 - pad


def _dilate(mask, r):
    if r <= 0:
        return mask.copy()
    return ndimage.binary_dilation(mask, structure=np.ones((2 * r + 1, 2 * r + 1), bool))


def contour_decompose(x: Pattern, v, p: WrParams, strict: bool = True) -> ContourData:
    """U, A, C and the moat M around the minus site v.

    U is the union of R2-boxes about the minus sites, A the 8-connected
    component of U holding v, C the sites outside A that are 8-adjacent to A
    and 8-connected to infinity avoiding A, and M the sites of A within
    distance R2 of C.  The moat is also rebuilt from C alone (sites enclosed
    by C within distance R2 of it).  The two can differ when an exterior
    pocket is cut off by C within distance R2 of it; ``strict`` raises on
    that, otherwise ``moats_agree`` reports it.
    """
    v = Coord(*v)
    if x[v] != "-":
        raise NotMinusAtV(f"x{tuple(v)} is {x[v]!r}, not '-'")
    R2 = p.R2
    pad = R2 + 2
    g, _, x0, y0 = _as_frame(x, pad)
    vy, vx = v.y - y0, v.x - x0
    U = _dilate(g == MINUS, R2)
    labels, _ = ndimage.label(U, structure=CONTOUR_STRUCTURE)
    A = labels == labels[vy, vx]
    out_lab, _ = ndimage.label(~A, structure=CONTOUR_STRUCTURE)
    exterior = out_lab == out_lab[0, 0]
    C = exterior & _dilate(A, 1)
    M = A & _dilate(C, R2)
    enc_lab, _ = ndimage.label(~C, structure=ENCLOSURE_STRUCTURE)
    enclosed = (enc_lab != enc_lab[0, 0]) & ~C
    M_alt = enclosed & _dilate(C, R2)

    check(not (C & A).any(), "contour-disjoint", "C meets A")
    check(bool(A[vy, vx]), "v-in-A")
    check(not (M & (g != ZERO)).any(), "moat-zeros", "moat holds a nonzero symbol")
    # thickness: from each contour site, every cardinal ray entering A stays in M for R2 steps
    cys, cxs = np.nonzero(C)
    for cy, cx in zip(cys.tolist(), cxs.tolist()):
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            if A[cy + dy, cx + dx]:
                ray = [M[cy + j * dy, cx + j * dx] for j in range(1, R2 + 1)]
                check(all(ray), "moat-thickness", f"ray from {(cx + x0, cy + y0)} leaves M")
    cd = ContourData(
        v=v,
        U=_mask_shape(U, x0, y0),
        A=_mask_shape(A, x0, y0),
        C=_mask_shape(C, x0, y0),
        M=_mask_shape(M, x0, y0),
        M_from_C=_mask_shape(M_alt, x0, y0),
    )
    check(cd.moats_agree or not strict, "moat-equivalence", "M from (A, C) differs from M from C alone")
    return cd


def flip_set(x: Pattern, cd: ContourData, p: WrParams) -> list:
    """Minus sites of A linked to the moat by a chain of minus sites in A with gaps <= R2."""
    minus = [s for s in cd.A if s in x.shape and x[s] == "-"]
    if not minus or not cd.M:
        return []
    near = cd.M.dilate(p.R2)
    pts = np.array(minus)
    seeds = [i for i, s in enumerate(minus) if s in near]
    seen = set(seeds)
    stack = list(seeds)
    while stack:
        i = stack.pop()
        d = np.abs(pts - pts[i]).max(axis=1)
        for j in np.flatnonzero(d <= p.R2).tolist():
            if j not in seen:
                seen.add(j)
                stack.append(j)
    return [minus[i] for i in sorted(seen)]


def flip_rho(x: Pattern, cd: ContourData, p: WrParams, verify_contour: bool = True) -> Pattern:
    """Flip the minus sites chained to the moat; the result is checked for admissibility."""
    if verify_contour and contour_decompose(x, cd.v, p, strict=False) != cd:
        raise StaleContour("contour data does not belong to this configuration")
    flips = flip_set(x, cd, p)
    g = x.grid.copy()
    for s in flips:
        g[s.y - x.shape.y0, s.x - x.shape.x0] = PLUS
    y = Pattern(WR_ALPHABET, x.shape, g)
    check(is_locally_admissible(y, wr_rules(p)), "flip-admissible", "flipped configuration violates a rule")
    changed = Shape.from_sites(flips)
    check(changed.issubset(cd.A), "flip-inside-A")
    check(all(y[s] == "0" for s in cd.M if s in y.shape), "flip-keeps-moat")
    return y


def preimage_bound(C_size: int, d: int = 2) -> int:
    """Maximum number of preimages of one image under the flip map: 2^(4^d |C|)."""
    return 2 ** (4**d * C_size)


def rho_preimage_census(y: Pattern, ensemble, cd_class: Shape, p: WrParams, v) -> int:
    """Number of x in the ensemble with moat ``cd_class`` and flip_rho(x) = y."""
    count = 0
    C_size = None
    for x in ensemble:
        cd = contour_decompose(x, v, p)
        if cd.M != cd_class:
            continue
        C_size = len(cd.C)
        if flip_rho(x, cd, p).same_position(y):
            count += 1
    if C_size is not None:
        check(count <= preimage_bound(C_size, p.d), "preimage-bound", f"{count} preimages")
    return count


# ---------------------------------------------------------------------------
# greedy moat subsets


@dataclass
class GreedyMoat:
    direction: Coord
    B: Shape
    B1: Shape
    B2: Shape
    B3: Shape
    warnings: list = field(default_factory=list)


DIRECTIONS = (Coord(1, 0), Coord(-1, 0), Coord(0, 1), Coord(0, -1))


def greedy_moat_sites(cd: ContourData, p: WrParams) -> GreedyMoat:
    """Contour sites with a straight run of R2 moat sites, thinned to an R1-separated set.

    B: contour sites t with t + j u in M for 1 <= j <= R2, for the best
    cardinal u.  B': the union of those rays.  B'': greedy row-major
    selection from B' keeping pairwise distance > R1.  B''': B'' minus every
    site within R1 of a site outside M, so each remaining site can be set to
    + on its own without touching anything but zeros.
    """
    R1, R2, d = p.R1, p.R2, p.d
    M = cd.M.sites
    best = None
    for u in DIRECTIONS:
        B = [t for t in cd.C if all((t.x + j * u.x, t.y + j * u.y) in M for j in range(1, R2 + 1))]
        if best is None or len(B) > len(best[1]):
            best = (u, B)
    u, B = best
    warnings = []
    if len(B) * 2 * d < len(cd.C):
        warnings.append(f"|B|={len(B)} < |C|/(2d)={len(cd.C) / (2 * d):.2f}")
    rays = [Coord(t.x + j * u.x, t.y + j * u.y) for t in B for j in range(1, R2 + 1)]
    B1 = Shape.from_sites(rays) if rays else Shape.empty()
    if len(B1) != len(rays):
        warnings.append("rays overlap")
    chosen = []
    blocked: set = set()
    for s in B1:
        if s in blocked:
            continue
        chosen.append(s)
        for dy in range(-R1, R1 + 1):
            for dx in range(-R1, R1 + 1):
                blocked.add((s.x + dx, s.y + dy))
    B2 = Shape.from_sites(chosen) if chosen else Shape.empty()
    check(len(B2) * (4**d) * R1**d >= len(B1), "greedy-thinning", f"|B''|={len(B2)}, |B'|={len(B1)}")
    B3_sites = [
        s for s in chosen
        if all((s.x + dx, s.y + dy) in M for dy in range(-R1, R1 + 1) for dx in range(-R1, R1 + 1))
    ]
    B3 = Shape.from_sites(B3_sites) if B3_sites else Shape.empty()
    pts = np.array(B3_sites).reshape(-1, 2)
    if len(pts) > 1:
        dist = np.abs(pts[:, None, :] - pts[None, :, :]).max(axis=2)
        np.fill_diagonal(dist, R1 + 1)
        check(dist.min() > R1, "greedy-separation")
    check(B3.issubset(cd.M), "greedy-in-moat")
    check(B3.isdisjoint(cd.C.dilate(R1)), "greedy-away-from-contour")
    if R2 > 2 ** (3 * d + 1) * R1 ** (2 * d):
        check(
            len(B3) * 2 ** (3 * d + 1) * R1**d >= len(cd.C) * R2,
            "greedy-cardinality",
            f"|B'''|={len(B3)}, |C|={len(cd.C)}",
        )
    else:
        warnings.append("BoundRegimeViolated: R2 <= 2^(3d+1) R1^(2d), cardinality bound not asserted")
    return GreedyMoat(u, Shape.from_sites(B) if B else Shape.empty(), B1, B2, B3, warnings)


# ---------------------------------------------------------------------------
# Peierls estimate


@dataclass(frozen=True)
class PeierlsReport:
    exponent: Fraction
    alpha: float
    bound: float
    valid: bool


def peierls_exponent(p: WrParams) -> Fraction:
    """Exponent e with alpha = 2^-e."""
    d = p.d
    return Fraction(p.R2, 2 ** (3 * d + 2) * p.R1**d) - (3 * d - 1)


def peierls_report(p: WrParams) -> PeierlsReport:
    e = peierls_exponent(p)
    alpha = 2.0 ** (-float(e))
    bound = alpha / (1 - alpha) if alpha < 1 else math.inf
    valid = p.R2 > 2 ** (5 * p.d + 2) * p.R1 ** (2 * p.d)
    return PeierlsReport(e, alpha, bound, valid)


def peierls_term(C_size: int, p: WrParams) -> float:
    """2^(-|C| R2 / (2^(3d+2) R1^d)), the weight of one moat class."""
    return 2.0 ** (-C_size * p.R2 / (2 ** (3 * p.d + 2) * p.R1**p.d))


# ---------------------------------------------------------------------------
# exhaustive ensemble checks


@dataclass
class ClassStats:
    C_size: int
    size: int = 0
    images: dict = field(default_factory=dict)
    B3: Shape = field(default_factory=Shape.empty)
    C_consistent: bool = True
    checked: set = field(default_factory=set, repr=False)


@dataclass
class EnsembleReport:
    k: int
    params: WrParams
    v: Coord
    Z: int
    E_size: int
    classes: dict
    violations: list
    peierls_sum: float

    @property
    def probability(self) -> float:
        return self.E_size / self.Z

    @property
    def class_total(self) -> int:
        return sum(c.size for c in self.classes.values())

    @property
    def max_census(self) -> int:
        return max((max(c.images.values()) for c in self.classes.values() if c.images), default=0)

    def summary(self) -> dict:
        return {
            "k": self.k,
            "R1": self.params.R1,
            "R2": self.params.R2,
            "v": list(self.v),
            "Z": self.Z,
            "E_minus_v": self.E_size,
            "classes": len(self.classes),
            "class_total": self.class_total,
            "max_preimages": self.max_census,
            "probability": self.probability,
            "peierls_sum": self.peierls_sum,
            "violations": self.violations,
        }


def verify_ensemble(k: int, p: WrParams, v=(0, 0), max_nodes: int = 10**8) -> EnsembleReport:
    """Run every Peierls mechanism over the exhaustive ensemble E_{-,v} at box size k.

    Each x with x(v) = - under the plus boundary is decomposed (both moat
    definitions compared), flipped, and sorted into its moat class.  Per
    class the preimage census is compared with 2^(4^d |C|), and the
    greedy set B''' is checked by flipping all of it to + in every image.
    Violations are collected as strings rather than raised.
    """
    v = Coord(*v)
    rules = wr_rules(p)
    bc = delta_plus_boundary(k, p.R1)
    interior = Shape.square(k - 1)
    Z = enumerate_admissible(interior, rules, bc, max_nodes=max_nodes)
    fixed_v = Pattern.from_dict(WR_ALPHABET, {v: "-"})
    from .grid import concat_disjoint

    bc_v = BoundaryCondition(concat_disjoint(bc.fixed, fixed_v))
    region = interior - Shape.from_sites([v])
    classes: dict = {}
    violations: list = []
    E_size = 0
    failed = 0
    for rest in enumerate_admissible(region, rules, bc_v, mode="stream", max_nodes=max_nodes):
        E_size += 1
        x = concat_disjoint(rest, bc_v.fixed)
        try:
            cd = contour_decompose(x, v, p)
            y = flip_rho(x, cd, p, verify_contour=False)
        except Exception as exc:  # collected for the report
            violations.append(f"config {E_size}: {exc}")
            failed += 1
            continue
        cls = classes.get(cd.M)
        if cls is None:
            cls = classes[cd.M] = ClassStats(len(cd.C))
            try:
                cls.B3 = greedy_moat_sites(cd, p).B3
            except Exception as exc:
                violations.append(f"greedy: {exc}")
        elif cls.C_size != len(cd.C):
            cls.C_consistent = False
        cls.size += 1
        key = y.grid.tobytes()
        cls.images[key] = cls.images.get(key, 0) + 1
        if cls.B3 and key not in cls.checked:
            cls.checked.add(key)
            g = y.grid.copy()
            for s in cls.B3:
                g[s.y - y.shape.y0, s.x - y.shape.x0] = PLUS
            if not is_locally_admissible(Pattern(WR_ALPHABET, y.shape, g), rules):
                violations.append(f"config {E_size}: flipping B''' breaks admissibility")
    peierls_sum = 0.0
    for M, cls in classes.items():
        if max(cls.images.values()) > preimage_bound(cls.C_size, p.d):
            violations.append(f"preimage bound exceeded for a class with |C|={cls.C_size}")
        family = 2 ** len(cls.B3) * len(cls.images)
        if family > Z:
            violations.append(f"injection family {family} exceeds Z={Z}")
        peierls_sum += peierls_term(cls.C_size, p)
    if E_size != sum(c.size for c in classes.values()) + failed:
        violations.append("class sizes do not add up to |E|")
    return EnsembleReport(k, p, v, Z, E_size, classes, violations, peierls_sum)
