"""Hierarchical arrow tilings X_k, their level-n squares, x_omega points and the relabelled shifts Y_{m,n}.

Symbol codes: arrow (color c, kind t) is ``8 c + t`` with colors NW, NE, SW,
SE and kinds up, down, left, right, turn_ne, turn_se, turn_sw, turn_nw; blank
label j (1-based) is ``31 + j``.  Arrays are indexed ``[y, x]`` with row 0 at
the bottom.  A circuit around a square runs clockwise: its top row points
right, right column down, bottom row left and left column up, with turn
symbols at the four corners.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from .errors import (
    LabelOutOfRange,
    LevelTooLarge,
    LevelTooSmall,
    NoOccurrences,
    PrefixTooShort,
    UnknownSymbol,
)
from .grid import Alphabet, Coord, Pattern
from .sft import Allowed2x2

COLORS = ("NW", "NE", "SW", "SE")
KINDS = ("up", "down", "left", "right", "turn_ne", "turn_se", "turn_sw", "turn_nw")
N_ARROWS = 32
BLANK = 32
MAX_LEVEL = 10
MAX_WINDOW_LEVEL = 60

_C = {c: i for i, c in enumerate(COLORS)}
_K = {t: i for i, t in enumerate(KINDS)}
# quadrant offsets (east, north) of each color inside the next level
QUADRANT = {"NW": (0, 1), "NE": (1, 1), "SW": (0, 0), "SE": (1, 0)}


def arrow(color: str, kind: str) -> int:
    return 8 * _C[color] + _K[kind]


CORNER_CODE = arrow("SW", "turn_sw")


@dataclass(frozen=True)
class Arrow:
    color: str
    kind: str

    def __str__(self):
        return f"{self.color}:{self.kind}"


@dataclass(frozen=True)
class Blank:
    label: int = 1

    def __str__(self):
        return f"blank:{self.label}"


@dataclass(frozen=True)
class CornerLabel:
    i: int | None = None

    def __str__(self):
        return "c" if self.i is None else f"c:{self.i}"


def parse_symbol(s: str):
    head, _, tail = s.partition(":")
    if head in _C and tail in _K:
        return Arrow(head, tail)
    if head == "blank" and tail.isdigit():
        return Blank(int(tail))
    if head == "c":
        return CornerLabel(int(tail) if tail else None)
    raise UnknownSymbol(f"not a tile symbol: {s!r}")


ARROW_NAMES = tuple(f"{c}:{t}" for c in COLORS for t in KINDS)


@lru_cache(maxsize=None)
def hochman_alphabet(k: int) -> Alphabet:
    """32 arrows followed by k blank labels."""
    if k < 1:
        raise ValueError("k must be >= 1")
    return Alphabet(ARROW_NAMES + tuple(f"blank:{j}" for j in range(1, k + 1)))


@lru_cache(maxsize=None)
def y1_alphabet() -> Alphabet:
    """X_1 symbols plus the unlabelled corner mark c (code 33)."""
    return Alphabet(hochman_alphabet(1).symbols + ("c",))


@lru_cache(maxsize=None)
def y_alphabet(m: int) -> Alphabet:
    """X_1 symbols plus corner labels c:1..c:m (codes 33..32+m)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    return Alphabet(hochman_alphabet(1).symbols + tuple(f"c:{i}" for i in range(1, m + 1)))


def side(n: int) -> int:
    """Side length 5 * 2^n - 4 of the level-n square."""
    return 5 * 2**n - 4


# ---------------------------------------------------------------------------
# level squares


def _surround(core: np.ndarray, color: str) -> np.ndarray:
    s = core.shape[0]
    c8 = 8 * _C[color]
    out = np.empty((s + 2, s + 2), dtype=np.int16)
    out[1:-1, 1:-1] = core
    out[-1, 1:-1] = c8 + _K["right"]
    out[0, 1:-1] = c8 + _K["left"]
    out[1:-1, 0] = c8 + _K["up"]
    out[1:-1, -1] = c8 + _K["down"]
    out[-1, 0] = c8 + _K["turn_nw"]
    out[-1, -1] = c8 + _K["turn_ne"]
    out[0, -1] = c8 + _K["turn_se"]
    out[0, 0] = c8 + _K["turn_sw"]
    return out


@lru_cache(maxsize=None)
def level_array(n: int) -> np.ndarray:
    """Codes of P_n with every blank labelled 1 (read-only, cached)."""
    if n < 0:
        raise ValueError("level must be >= 0")
    if n == 0:
        a = np.array([[BLANK]], dtype=np.int16)
    else:
        prev = level_array(n - 1)
        a = np.block(
            [
                [_surround(prev, "SW"), _surround(prev, "SE")],
                [_surround(prev, "NW"), _surround(prev, "NE")],
            ]
        ).astype(np.int16)
    a.setflags(write=False)
    return a


def level_values(n: int, xs, ys) -> np.ndarray:
    """Codes of P_n at local coordinates (xs, ys), evaluated without building P_n."""
    xs = np.array(xs, dtype=np.int64, copy=True)
    ys = np.array(ys, dtype=np.int64, copy=True)
    if xs.size and (xs.min() < 0 or ys.min() < 0 or xs.max() >= side(n) or ys.max() >= side(n)):
        raise ValueError("coordinates outside P_n")
    out = np.full(xs.shape, BLANK, dtype=np.int16)
    active = np.ones(xs.shape, dtype=bool)
    for level in range(n, 0, -1):
        h = side(level - 1) + 2
        qx = xs >= h
        qy = ys >= h
        lx = xs - qx * h
        ly = ys - qy * h
        color = np.where(qy, np.where(qx, _C["NE"], _C["NW"]), np.where(qx, _C["SE"], _C["SW"]))
        top, bottom = ly == h - 1, ly == 0
        left, right = lx == 0, lx == h - 1
        kind = np.full(xs.shape, -1, dtype=np.int16)
        kind[top] = _K["right"]
        kind[bottom] = _K["left"]
        kind[left] = _K["up"]
        kind[right] = _K["down"]
        kind[top & left] = _K["turn_nw"]
        kind[top & right] = _K["turn_ne"]
        kind[bottom & right] = _K["turn_se"]
        kind[bottom & left] = _K["turn_sw"]
        hit = active & (kind >= 0)
        out[hit] = (8 * color + kind)[hit]
        active &= ~hit
        xs = lx - 1
        ys = ly - 1
    return out


@dataclass(frozen=True)
class LevelSquare:
    n: int
    pattern: Pattern
    blank_sites: tuple


def _apply_labels(codes: np.ndarray, k: int, labels, coords_order=None) -> np.ndarray:
    """Replace label-1 blanks by the requested labels (row-major order of blanks)."""
    if labels is None:
        return codes
    out = codes.copy()
    ys, xs = np.nonzero(out == BLANK)
    if isinstance(labels, np.random.Generator):
        vals = labels.integers(1, k + 1, size=len(ys))
    else:
        vals = np.asarray(list(labels), dtype=np.int64)
        if len(vals) != len(ys):
            raise ValueError(f"expected {len(ys)} blank labels, got {len(vals)}")
    if len(vals) and (vals.min() < 1 or vals.max() > k):
        raise LabelOutOfRange(f"blank labels must lie in 1..{k}")
    out[ys, xs] = BLANK + vals - 1
    return out


def build_level_square(n: int, k: int = 1, blank_labels=None, max_level: int = MAX_LEVEL) -> LevelSquare:
    """P_n with lower-left corner at the origin; blank labels default to 1."""
    if n > max_level:
        raise LevelTooLarge(f"level {n} exceeds the cap {max_level}")
    codes = _apply_labels(level_array(n), k, blank_labels)
    pat = Pattern.from_array(hochman_alphabet(k), codes)
    ys, xs = np.nonzero(codes >= BLANK)
    blanks = tuple(Coord(int(x), int(y)) for y, x in zip(ys, xs))
    return LevelSquare(n, pat, blanks)


def _windows_2x2(a: np.ndarray) -> set:
    return set(zip(a[:-1, :-1].ravel().tolist(), a[:-1, 1:].ravel().tolist(),
                   a[1:, :-1].ravel().tolist(), a[1:, 1:].ravel().tolist()))


def collapsed_windows(base_level: int = 3) -> set:
    """2x2 windows (ll, lr, ul, ur) of P_base surrounded by a NW circuit, blanks collapsed."""
    return _windows_2x2(_surround(level_array(base_level), "NW"))


def derive_allowed_2x2(k: int = 1, base_level: int = 3) -> Allowed2x2:
    """Allowed 2x2 windows read off P_base plus a NW circuit, blanks expanded to k labels."""
    allowed = set()
    for w in collapsed_windows(base_level):
        opts = [range(BLANK, BLANK + k) if s == BLANK else (s,) for s in w]
        allowed.update(itertools.product(*opts))
    return Allowed2x2(hochman_alphabet(k), frozenset(allowed))


# ---------------------------------------------------------------------------
# x_omega


def _parse_omega(omega) -> tuple:
    om = tuple(omega)
    for c in om:
        if c not in _C:
            raise ValueError(f"unknown direction {c!r}")
    return om


def omega_corner(omega, n: int) -> Coord:
    """Lower-left corner of B_n, the copy of P_n around the origin in x_omega.

    Step j surrounds B_{j-1} by a circuit colored omega_j and places it in
    that quadrant of P_j.
    """
    omega = _parse_omega(omega)
    if n > len(omega):
        raise PrefixTooShort(f"need {n} directions, have {len(omega)}")
    x = y = 0
    for j in range(1, n + 1):
        qx, qy = QUADRANT[omega[j - 1]]
        h = side(j - 1) + 2
        x -= 1 + qx * h
        y -= 1 + qy * h
    return Coord(x, y)


def omega_level_for(omega, lo, hi) -> int:
    """Smallest n with the rectangle [lo, hi] inside B_n."""
    omega = _parse_omega(omega)
    for n in range(0, min(len(omega), MAX_WINDOW_LEVEL) + 1):
        c = omega_corner(omega, n)
        s = side(n)
        if c.x <= lo[0] and c.y <= lo[1] and hi[0] < c.x + s and hi[1] < c.y + s:
            return n
    raise PrefixTooShort("direction prefix does not cover the requested window")


def x_omega_codes(omega, lo, hi) -> np.ndarray:
    """Codes of x_omega on the rectangle [lo, hi] (blanks labelled 1)."""
    n = omega_level_for(omega, lo, hi)
    c = omega_corner(omega, n)
    ys, xs = np.mgrid[lo[1] : hi[1] + 1, lo[0] : hi[0] + 1]
    return level_values(n, xs - c.x, ys - c.y)


def build_x_omega_window(omega, radius: int, k: int = 1, labels=None) -> Pattern:
    """x_omega on [-radius, radius]^2; blank labels as in :func:`build_level_square`."""
    codes = x_omega_codes(omega, (-radius, -radius), (radius, radius))
    codes = _apply_labels(codes, k, labels)
    return Pattern.from_array(hochman_alphabet(k), codes, origin=(-radius, -radius))


# ---------------------------------------------------------------------------
# locating level squares


def collapse_codes(p: Pattern) -> np.ndarray:
    """Arrow codes kept, every blank label mapped to 32, corner marks to the SW corner arrow.

    Sites outside the shape become -1.
    """
    table = []
    for s in p.alphabet:
        sym = parse_symbol(s)
        if isinstance(sym, Arrow):
            table.append(arrow(sym.color, sym.kind))
        elif isinstance(sym, Blank):
            table.append(BLANK)
        else:
            table.append(-2)
    table = np.asarray(table, dtype=np.int16)
    out = np.where(p.shape.mask, table[np.maximum(p.grid, 0)], -1).astype(np.int16)
    return out


def locate_in_codes(a: np.ndarray, n: int) -> np.ndarray:
    """Lower-left corners (x, y), in array coordinates, of copies of P_n in ``a``; row-major order."""
    s = side(n)
    H, W = a.shape
    if H < s or W < s:
        return np.zeros((0, 2), dtype=np.int64)
    if n == 0:
        ys, xs = np.nonzero(a == BLANK)
        return np.stack([xs, ys], axis=1).astype(np.int64)
    h, w = H - s + 1, W - s + 1
    cand = (
        (a[:h, :w] == CORNER_CODE)
        & (a[s - 1 :, :w] == arrow("NW", "turn_nw"))
        & (a[s - 1 :, s - 1 :] == arrow("NE", "turn_ne"))
        & (a[:h, s - 1 :] == arrow("SE", "turn_se"))
    )
    ref = level_array(n)
    found = []
    for y, x in zip(*np.nonzero(cand)):
        if np.array_equal(a[y : y + s, x : x + s], ref):
            found.append((int(x), int(y)))
    return np.array(found, dtype=np.int64).reshape(-1, 2)


def locate_level_subsquares(p: Pattern, n: int) -> list:
    """Lower-left corners of all copies of P_n inside p (blank labels ignored)."""
    a = collapse_codes(p)
    pts = locate_in_codes(a, n)
    return [Coord(int(x) + p.shape.x0, int(y) + p.shape.y0) for x, y in pts]


def subsquare_frequency(omega, n: int, radius: int) -> float:
    """Level-n corners of x_omega in [-radius, radius]^2 per site.

    Corners are located in a window enlarged to the upper right so that
    squares with a corner near the edge are not missed.
    """
    s = side(n)
    codes = x_omega_codes(omega, (-radius, -radius), (radius + s - 1, radius + s - 1))
    pts = locate_in_codes(codes, n)
    inside = (pts[:, 0] <= 2 * radius) & (pts[:, 1] <= 2 * radius)
    return int(inside.sum()) / (2 * radius + 1) ** 2


def level_frequency_in_square(n: int, K: int) -> Fraction:
    """Exact density 4^(K-n) / side(K)^2 of level-n corners in P_K."""
    if n > K:
        return Fraction(0)
    return Fraction(4 ** (K - n), side(K) ** 2)


def alpha_limit(n: int) -> Fraction:
    """Limit of the level-n corner density: 4^-n / 25."""
    return Fraction(1, 25 * 4**n)


def alpha_lower_bound(n: int) -> Fraction:
    return Fraction(1, 100 * 4**n)


def containment_failures(omega, n: int, radius: int) -> int:
    """Boxes u + [-n, n]^2 around blanks of x_omega not covered by a single level-2n square.

    Blanks v in [-radius, radius]^2 are examined; the window is enlarged by
    side(2n) on every side so that the covering square is visible.
    """
    L = 2 * n
    s = side(L)
    m = s + 2 * n
    lo = (-radius - m, -radius - m)
    hi = (radius + m, radius + m)
    codes = x_omega_codes(omega, lo, hi)
    H, W = codes.shape
    corners = locate_in_codes(codes, L)
    # covered[by, bx]: the box with lower-left (bx, by) and side 2n+1 lies in one square
    diff = np.zeros((H + 1, W + 1), dtype=np.int64)
    span = s - (2 * n + 1)
    for cx, cy in corners:
        diff[cy, cx] += 1
        diff[cy, cx + span + 1] -= 1
        diff[cy + span + 1, cx] -= 1
        diff[cy + span + 1, cx + span + 1] += 1
    covered = diff.cumsum(0).cumsum(1)[:H, :W] > 0
    off = m
    ys, xs = np.nonzero(codes[off : off + 2 * radius + 1, off : off + 2 * radius + 1] == BLANK)
    failures = 0
    for y, x in zip(ys + off, xs + off):
        block = covered[y - 2 * n : y + 1, x - 2 * n : x + 1]
        failures += int(block.size - block.sum())
    return failures


# ---------------------------------------------------------------------------
# Y_{m,n}

Y1_CORNER = 33


def _corner_mask(codes: np.ndarray, n: int) -> np.ndarray:
    mask = np.zeros(codes.shape, dtype=bool)
    pts = locate_in_codes(codes, n)
    if len(pts):
        mask[pts[:, 1], pts[:, 0]] = True
    return mask


def relabel_to_Y(p: Pattern, n: int, m: int, labeling=None) -> Pattern:
    """Replace each located level-n lower-left corner by a label c:i.

    ``labeling`` gives one label in 1..m per corner in row-major order, or a
    numpy Generator for uniform random labels; None labels everything 1.
    """
    if p.alphabet != hochman_alphabet(1):
        raise UnknownSymbol("relabelling expects a pattern over X_1")
    codes = collapse_codes(p)
    mask = _corner_mask(codes, n)
    ys, xs = np.nonzero(mask)
    if labeling is None:
        vals = np.ones(len(ys), dtype=np.int64)
    elif isinstance(labeling, np.random.Generator):
        vals = labeling.integers(1, m + 1, size=len(ys))
    else:
        vals = np.asarray(list(labeling), dtype=np.int64)
        if len(vals) != len(ys):
            raise ValueError(f"expected {len(ys)} labels, got {len(vals)}")
    if len(vals) and (vals.min() < 1 or vals.max() > m):
        raise LabelOutOfRange(f"labels must lie in 1..{m}")
    g = p.grid.copy()
    g[ys, xs] = 32 + vals
    return Pattern(y_alphabet(m), p.shape, g)


def project_pi(py: Pattern) -> Pattern:
    """Forget corner labels: every c:i becomes c."""
    table = [Y1_CORNER if s.startswith("c") else y1_alphabet().index(s) for s in py.alphabet]
    return py.relabel(y1_alphabet(), table)


def restore_x1(py1: Pattern, n: int) -> Pattern:
    """Undo the corner marking: c becomes the SW corner arrow (a blank at level 0)."""
    back = BLANK if n == 0 else CORNER_CODE
    table = [back if s.startswith("c") else hochman_alphabet(1).index(s) for s in py1.alphabet]
    return py1.relabel(hochman_alphabet(1), table)


def count_labelings(p: Pattern, n: int, m: int) -> int:
    return m ** len(locate_level_subsquares(p, n))


def sample_mu_prime(window: Pattern, m: int, seed) -> Pattern:
    """Independent uniform labels 1..m on the corner marks of a Y_{1,n} pattern."""
    rng = np.random.default_rng(seed)
    c_idx = window.alphabet.index("c")
    g = window.grid.copy()
    sites = g == c_idx
    labels = rng.integers(1, m + 1, size=int(sites.sum()))
    table = [y_alphabet(m).index(s) if s != "c" else -1 for s in window.alphabet]
    out = np.where(window.shape.mask, np.asarray(table, dtype=np.int16)[np.maximum(g, 0)], -1)
    out[sites] = 32 + labels
    return Pattern(y_alphabet(m), window.shape, out)


_HASH_P = (2147483647, 2147483629)
_HASH_B = ((1_000_003, 998_244_353), (911_382_323, 972_663_749))


def _rolling(a: np.ndarray, N: int, base: int, prime: int, axis: int) -> np.ndarray:
    """Polynomial hash of every length-N run along ``axis`` (values already < prime)."""
    a = np.moveaxis(a, axis, 0)
    L = a.shape[0]
    pref = np.zeros((L + 1,) + a.shape[1:], dtype=np.int64)
    for i in range(L):
        pref[i + 1] = (pref[i] * base + a[i]) % prime
    bN = pow(base, N, prime)
    out = (pref[N:] - (pref[:-N] * bN) % prime) % prime
    return np.moveaxis(out, 0, axis)


def window_hashes(a: np.ndarray, N: int) -> np.ndarray:
    """Two independent 31-bit 2D rolling hashes of every N x N window, packed into int64."""
    vals = a.astype(np.int64) + 1
    hs = []
    for (bx, by), prime in zip(_HASH_B, _HASH_P):
        h = _rolling(vals % prime, N, bx % prime, prime, axis=1)
        h = _rolling(h, N, by % prime, prime, axis=0)
        hs.append(h)
    return hs[0] * _HASH_P[1] + hs[1]


@dataclass(frozen=True)
class YmnCount:
    N: int
    m: int
    n: int
    K: int
    count: int
    x1_windows: int
    max_corners: int
    alpha_measured: float
    lower: int
    upper: int

    @property
    def log_rate(self) -> float:
        return math.log(self.count) / self.N**2

    @property
    def target(self) -> float:
        return self.alpha_measured * math.log(self.m)


def ymn_pattern_count(N: int, m: int, n: int, K: int) -> YmnCount:
    """Distinct N x N windows of P_K over every corner labelling, counted exactly.

    Windows are identified by their Y_{1,n} content (distinct windows are
    detected with a double 31-bit rolling hash); a window holding F level-n
    corners contributes m^F labelled windows.  The bracket is
    m^(max F) <= count <= (#distinct X_1 windows) m^(max F).
    """
    if K < n or side(K) < N:
        raise LevelTooSmall(f"P_{K} cannot hold N={N} windows with level-{n} corners")
    if N < 1 or m < 1:
        raise ValueError("N and m must be >= 1")
    base = level_array(K)
    mask = _corner_mask(base, n)
    ycodes = np.where(mask, Y1_CORNER, base)
    hy = window_hashes(ycodes, N).ravel()
    hx = window_hashes(base, N).ravel()
    csum = np.zeros((base.shape[0] + 1, base.shape[1] + 1), dtype=np.int64)
    csum[1:, 1:] = mask.cumsum(0).cumsum(1)
    F = (csum[N:, N:] - csum[:-N, N:] - csum[N:, :-N] + csum[:-N, :-N]).ravel()
    uniq, first = np.unique(hy, return_index=True)
    per_F = Counter(F[first].tolist())
    count = sum(c * m**f for f, c in per_F.items())
    maxF = int(F.max())
    x1 = int(np.unique(hx).size)
    alpha = float(level_frequency_in_square(n, K))
    return YmnCount(N, m, n, K, count, x1, maxF, alpha, m**maxF, x1 * m**maxF)


# ---------------------------------------------------------------------------
# frequency ratios


@dataclass(frozen=True)
class LevelCountRatio:
    ratio: Fraction
    count1: int
    count2: int


def level_count_ratio(windows, N1: int, N2: int, complete: bool = True) -> LevelCountRatio:
    """Ratio of level-N1 to level-N2 square counts over an ensemble of windows.

    With ``complete`` every located square counts.  Otherwise only corners in
    the core region (the window minus a strip of width side(N2) - 1 on the
    top and right) count, so every counted corner of either level has room
    for its whole square.
    """
    if N1 > N2:
        raise ValueError("N1 must be <= N2")
    c1 = c2 = 0
    s2 = side(N2)
    for w in windows:
        a = collapse_codes(w) if isinstance(w, Pattern) else np.asarray(w)
        p1 = locate_in_codes(a, N1)
        p2 = locate_in_codes(a, N2)
        if not complete:
            H, W = a.shape
            xmax, ymax = W - s2, H - s2

            def core(p):
                return int(((p[:, 0] <= xmax) & (p[:, 1] <= ymax)).sum())

            c1 += core(p1)
            c2 += core(p2)
        else:
            c1 += len(p1)
            c2 += len(p2)
    if c2 == 0:
        raise NoOccurrences(f"no level-{N2} squares in the ensemble")
    return LevelCountRatio(Fraction(c1, c2), c1, c2)
