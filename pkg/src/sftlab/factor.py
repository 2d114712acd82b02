"""Sliding block codes and the two-step factorisation through the corner-labelled shifts.

A code of radius r maps a pattern to the pattern on its r-erosion, the value at
v depending only on the input on v + [-r, r]^2.  Every code carries a per-site
``local_rule`` (block -> target index) and optionally a whole-array rule
(codes array -> codes array shrunk by r on each side) used for speed.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import AlphabetMismatch, ImageNotFound, NeighborhoodContainsBlank, ShapeTooSmall, TooManyLabelings
from .grid import Alphabet, Pattern
from .hochman import (
    BLANK,
    CORNER_CODE,
    arrow,
    hochman_alphabet,
    level_array,
    locate_in_codes,
    side,
    y_alphabet,
)


@dataclass(frozen=True, eq=False)
class SlidingBlockCode:
    radius: int
    source: Alphabet
    target: Alphabet
    local_rule: Callable[[np.ndarray], int] = field(repr=False)
    array_rule: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    name: str = ""
    table: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.radius < 0:
            raise ValueError("radius must be >= 0")

    def apply_array(self, a: np.ndarray) -> np.ndarray:
        r = self.radius
        H, W = a.shape
        if H <= 2 * r or W <= 2 * r:
            raise ShapeTooSmall(f"{H}x{W} input too small for radius {r}")
        if self.array_rule is not None:
            return np.asarray(self.array_rule(a), dtype=np.int32)
        out = np.empty((H - 2 * r, W - 2 * r), dtype=np.int32)
        for i in range(H - 2 * r):
            for j in range(W - 2 * r):
                out[i, j] = self.local_rule(a[i : i + 2 * r + 1, j : j + 2 * r + 1])
        return out

    def to_json_obj(self) -> dict:
        obj = {"name": self.name, "radius": self.radius,
               "source": list(self.source.symbols), "target": list(self.target.symbols)}
        if self.table is not None:
            obj["table"] = [self.target[t] for t in self.table]
        return obj


def apply_code(c: SlidingBlockCode, p: Pattern, vectorized: bool = True) -> Pattern:
    """Image of p on its radius-erosion (1-block codes keep the shape)."""
    if p.alphabet != c.source:
        raise AlphabetMismatch("pattern alphabet differs from the code's source alphabet")
    r = c.radius
    out_shape = p.shape.erode(r)
    if not out_shape:
        raise ShapeTooSmall("erosion of the pattern shape is empty")
    a = np.maximum(p.grid, 0)
    if vectorized:
        vals = c.apply_array(a)
    else:
        vals = SlidingBlockCode(r, c.source, c.target, c.local_rule).apply_array(a)
    # vals covers the r-erosion of the bounding box; cut it down to the eroded shape
    oy, ox = out_shape.y0 - p.shape.y0 - r, out_shape.x0 - p.shape.x0 - r
    vals = vals[oy : oy + out_shape.height, ox : ox + out_shape.width]
    return Pattern(c.target, out_shape, vals)


def one_block_code(source: Alphabet, target: Alphabet, table, name: str = "") -> SlidingBlockCode:
    table = np.asarray(table, dtype=np.int32)
    if table.shape != (len(source),) or table.min() < 0 or table.max() >= len(target):
        raise ValueError("table must map every source index to a target index")
    return SlidingBlockCode(
        0, source, target,
        local_rule=lambda b: int(table[b[0, 0]]),
        array_rule=lambda a: table[a],
        name=name, table=tuple(int(t) for t in table),
    )


def compose(c2: SlidingBlockCode, c1: SlidingBlockCode) -> SlidingBlockCode:
    """c2 after c1, radius r1 + r2."""
    if c1.target != c2.source:
        raise AlphabetMismatch("target of the inner code is not the source of the outer code")
    return SlidingBlockCode(
        c1.radius + c2.radius, c1.source, c2.target,
        local_rule=lambda b: int(c2.apply_array(c1.apply_array(b))[0, 0]),
        array_rule=lambda a: c2.apply_array(c1.apply_array(a)),
        name=f"{c2.name}.{c1.name}",
    )


# ---------------------------------------------------------------------------
# codes on X_k


def identity_code(alphabet: Alphabet) -> SlidingBlockCode:
    return one_block_code(alphabet, alphabet, range(len(alphabet)), name="identity")


def collapse_code(k: int) -> SlidingBlockCode:
    """Forget blank labels: X_k onto X_1."""
    table = [min(i, BLANK) for i in range(len(hochman_alphabet(k)))]
    return one_block_code(hochman_alphabet(k), hochman_alphabet(1), table, name="collapse")


def parity_code(k: int) -> SlidingBlockCode:
    """Blank labels reduced mod 2: odd labels to blank:1, even to blank:2; arrows fixed."""
    table = [i if i < BLANK else BLANK + (i - BLANK) % 2 for i in range(len(hochman_alphabet(k)))]
    return one_block_code(hochman_alphabet(k), hochman_alphabet(2), table, name="parity")


_SW_UP = arrow("SW", "up")


def sw_parity_code(k: int) -> SlidingBlockCode:
    """Radius-1 code: a blank whose left neighbour is the SW-colored up arrow keeps its label parity.

    Every other blank becomes blank:1 and arrows are unchanged.  Only one
    blank per level-1 square qualifies, so level-2 images number 2^4.
    """
    src = hochman_alphabet(k)
    tgt = hochman_alphabet(2)

    def local(b):
        s = int(b[1, 1])
        if s < BLANK:
            return s
        if int(b[1, 0]) == _SW_UP:
            return BLANK + (s - BLANK) % 2
        return BLANK

    def whole(a):
        c = a[1:-1, 1:-1]
        left = a[1:-1, :-2]
        par = BLANK + (c - BLANK) % 2
        return np.where(c < BLANK, c, np.where(left == _SW_UP, par, BLANK))

    return SlidingBlockCode(1, src, tgt, local, whole, name="sw-parity")


def named_code(name: str, k: int) -> SlidingBlockCode:
    if name == "collapse":
        return collapse_code(k)
    if name == "parity":
        return parity_code(k)
    if name == "identity":
        return identity_code(hochman_alphabet(k))
    if name == "sw-parity":
        return sw_parity_code(k)
    raise ValueError(f"unknown code {name!r}")


# ---------------------------------------------------------------------------
# images of level squares and the factorisation


MAX_LABELINGS = 1 << 16


@dataclass(frozen=True)
class LevelImages:
    """Distinct images of the labelled level-2n square, each on its n-eroded square."""

    n: int
    images: tuple
    index: dict = field(repr=False)

    @property
    def m(self) -> int:
        return len(self.images)


def level_square_images(c: SlidingBlockCode, n: int, max_labelings: int = MAX_LABELINGS) -> LevelImages:
    """Apply c to every blank labelling of P_{2n}; images in order of first appearance.

    Labellings run lexicographically over the blanks in row-major order.
    """
    if n != c.radius:
        raise ValueError("images are taken at level 2n for a code of radius n")
    k = len(c.source) - BLANK
    base = level_array(2 * n)
    ys, xs = np.nonzero(base == BLANK)
    total = k ** len(ys)
    if total > max_labelings:
        raise TooManyLabelings(f"{total} labelings exceed the limit {max_labelings}")
    images, index = [], {}
    a = base.astype(np.int32)
    for labels in itertools.product(range(k), repeat=len(ys)):
        a[ys, xs] = BLANK + np.asarray(labels, dtype=np.int32)
        img = c.apply_array(a)
        key = img.tobytes()
        if key not in index:
            index[key] = len(images)
            img.setflags(write=False)
            images.append(img)
    return LevelImages(n, tuple(images), index)


def build_psi1(c: SlidingBlockCode, n: int, images: LevelImages) -> SlidingBlockCode:
    """X_k to Y_{m,2n}: level-2n corners become c:i (i = index of the square's image + 1),
    blanks lose their labels, arrows stay."""
    s = side(2 * n)
    r = s - 1
    tgt = y_alphabet(images.m)

    def whole(a):
        a = np.asarray(a)
        H, W = a.shape
        collapsed = np.where(a >= BLANK, BLANK, a)
        out = collapsed.astype(np.int32).copy()
        for x, y in locate_in_codes(collapsed, 2 * n):
            img = c.apply_array(a[y : y + s, x : x + s])
            i = images.index.get(img.tobytes())
            if i is None:
                raise ImageNotFound(f"square at {(int(x), int(y))} has an unlisted image")
            out[y, x] = BLANK + 1 + i
        return out[r : H - r, r : W - r]

    return SlidingBlockCode(r, c.source, tgt, lambda b: int(whole(b)[0, 0]), whole, name="psi1")


def build_psi2(c: SlidingBlockCode, n: int, images: LevelImages, blank_label: int = 1) -> SlidingBlockCode:
    """Y_{m,2n} to the image of c.

    Sites whose n-box lies in a level-2n square with corner c:i copy the
    i-th image; elsewhere corners become SW corner arrows (blanks at level 0), blanks get
    ``blank_label`` and c is applied (such neighbourhoods never hold blanks).
    """
    s = side(2 * n)
    r = max(s - 1 - n, n)
    src = y_alphabet(images.m)
    k = len(c.source) - BLANK
    if not 1 <= blank_label <= k:
        raise ValueError("blank label outside 1..k")

    # a level-0 square is a single blank
    corner = BLANK if n == 0 else CORNER_CODE

    def whole(b):
        b = np.asarray(b)
        H, W = b.shape
        is_c = b > BLANK
        xt = np.where(is_c, corner, np.where(b == BLANK, BLANK + blank_label - 1, b)).astype(np.int32)
        out = c.apply_array(xt)  # covers [n, H-n) x [n, W-n)
        covered = np.zeros(out.shape, dtype=bool)
        collapsed = np.where(is_c, corner, b)
        for x, y in locate_in_codes(collapsed, 2 * n):
            if not is_c[y, x]:
                continue
            img = images.images[int(b[y, x]) - BLANK - 1]
            # sites x+n .. x+s-1-n in input coords, minus n for out coords
            out[y : y + s - 2 * n, x : x + s - 2 * n] = img
            covered[y : y + s - 2 * n, x : x + s - 2 * n] = True
        blanks = (xt >= BLANK).astype(np.int32)
        cs = np.zeros((H + 1, W + 1), dtype=np.int64)
        cs[1:, 1:] = blanks.cumsum(0).cumsum(1)
        w = 2 * n + 1
        near_blank = (cs[w:, w:] - cs[:-w, w:] - cs[w:, :-w] + cs[:-w, :-w]) > 0
        lo = r - n
        crop = (slice(lo, out.shape[0] - lo), slice(lo, out.shape[1] - lo))
        bad = near_blank[crop] & ~covered[crop]
        if bad.any():
            raise NeighborhoodContainsBlank(f"{int(bad.sum())} uncovered sites see a blank")
        return out[crop]

    return SlidingBlockCode(r, src, c.target, lambda blk: int(whole(blk)[0, 0]), whole, name="psi2")


@dataclass
class Decomposition:
    code: SlidingBlockCode
    n: int
    images: LevelImages
    psi1: SlidingBlockCode
    psi2: SlidingBlockCode

    @property
    def m(self) -> int:
        return self.images.m

    def composite(self) -> SlidingBlockCode:
        return compose(self.psi2, self.psi1)

    def check_window(self, p: Pattern) -> bool:
        """psi2(psi1(p)) equals c(p) on the erosion where the composite is defined."""
        lhs = apply_code(self.composite(), p)
        rhs = apply_code(self.code, p)
        return lhs.same_position(rhs.subpattern(lhs.shape))


def decompose(c: SlidingBlockCode, max_labelings: int = MAX_LABELINGS) -> Decomposition:
    n = c.radius
    images = level_square_images(c, n, max_labelings)
    return Decomposition(c, n, images, build_psi1(c, n, images), build_psi2(c, n, images))
