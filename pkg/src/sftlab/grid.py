"""Sites, shapes and patterns on Z^2.

Storage convention: a shape is a boolean mask over its bounding box and a
pattern is an integer array over the same box, both indexed ``[y - y0, x - x0]``
(row 0 is the bottom row).  Sites outside the mask carry ``-1``.  Serialized
rectangles list values row by row, bottom row first, left to right.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import OverlappingShapes, SiteOutOfShape, UnknownSymbol


class Coord(NamedTuple):
    x: int
    y: int

    def __add__(self, other):  # type: ignore[override]
        return Coord(self.x + other[0], self.y + other[1])

    def __sub__(self, other):
        return Coord(self.x - other[0], self.y - other[1])

    def __neg__(self):
        return Coord(-self.x, -self.y)


def chebyshev(a, b) -> int:
    """l-infinity distance between two sites."""
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Shape:
    """A finite set of sites, stored as a trimmed mask over its bounding box."""

    def __init__(self, x0: int, y0: int, mask: np.ndarray):
        mask = np.asarray(mask, dtype=bool)
        if mask.ndim != 2:
            raise ValueError("mask must be 2-dimensional")
        if not mask.any():
            x0 = y0 = 0
            mask = np.zeros((0, 0), dtype=bool)
        else:
            rows = np.flatnonzero(mask.any(axis=1))
            cols = np.flatnonzero(mask.any(axis=0))
            mask = mask[rows[0] : rows[-1] + 1, cols[0] : cols[-1] + 1]
            x0 += int(cols[0])
            y0 += int(rows[0])
        self.x0 = int(x0)
        self.y0 = int(y0)
        self.mask = _frozen(mask.copy())

    # -- constructors -----------------------------------------------------
    @classmethod
    def rect(cls, lo, hi) -> "Shape":
        """The box [lo.x, hi.x] x [lo.y, hi.y]; empty when hi < lo in some axis."""
        w = hi[0] - lo[0] + 1
        h = hi[1] - lo[1] + 1
        if w <= 0 or h <= 0:
            return cls.empty()
        return cls(lo[0], lo[1], np.ones((h, w), dtype=bool))

    @classmethod
    def square(cls, r: int, center=(0, 0)) -> "Shape":
        return cls.rect((center[0] - r, center[1] - r), (center[0] + r, center[1] + r))

    @classmethod
    def empty(cls) -> "Shape":
        return cls(0, 0, np.zeros((0, 0), dtype=bool))

    @classmethod
    def from_sites(cls, sites: Iterable) -> "Shape":
        pts = np.array([(s[0], s[1]) for s in sites], dtype=np.int64).reshape(-1, 2)
        if len(pts) == 0:
            return cls.empty()
        x0, y0 = pts.min(axis=0)
        x1, y1 = pts.max(axis=0)
        mask = np.zeros((y1 - y0 + 1, x1 - x0 + 1), dtype=bool)
        mask[pts[:, 1] - y0, pts[:, 0] - x0] = True
        return cls(int(x0), int(y0), mask)

    # -- basic protocol ---------------------------------------------------
    @property
    def width(self) -> int:
        return self.mask.shape[1]

    @property
    def height(self) -> int:
        return self.mask.shape[0]

    @property
    def lo(self) -> Coord:
        return Coord(self.x0, self.y0)

    @property
    def hi(self) -> Coord:
        return Coord(self.x0 + self.width - 1, self.y0 + self.height - 1)

    @cached_property
    def is_rect(self) -> bool:
        return self.mask.size > 0 and bool(self.mask.all())

    @cached_property
    def _count(self) -> int:
        return int(self.mask.sum())

    def __len__(self) -> int:
        return self._count

    def __bool__(self) -> bool:
        return self._count > 0

    def __contains__(self, site) -> bool:
        i = site[1] - self.y0
        j = site[0] - self.x0
        return 0 <= i < self.height and 0 <= j < self.width and bool(self.mask[i, j])

    def coords(self) -> np.ndarray:
        """(n, 2) array of (x, y) in row-major order (y, then x)."""
        ys, xs = np.nonzero(self.mask)
        return np.stack([xs + self.x0, ys + self.y0], axis=1)

    def __iter__(self) -> Iterator[Coord]:
        for x, y in self.coords().tolist():
            yield Coord(x, y)

    @cached_property
    def sites(self) -> frozenset:
        return frozenset(self)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Shape):
            return NotImplemented
        return (
            self.x0 == other.x0
            and self.y0 == other.y0
            and self.mask.shape == other.mask.shape
            and bool(np.array_equal(self.mask, other.mask))
        )

    def __hash__(self) -> int:
        return hash((self.x0, self.y0, self.mask.shape, self.mask.tobytes()))

    def __repr__(self) -> str:
        if self.is_rect:
            return f"Shape.rect({tuple(self.lo)}, {tuple(self.hi)})"
        return f"Shape(<{len(self)} sites in {tuple(self.lo)}..{tuple(self.hi)}>)"

    # -- set algebra ------------------------------------------------------
    def _common_frame(self, other: "Shape"):
        boxes = [s for s in (self, other) if s]
        if not boxes:
            return 0, 0, np.zeros((0, 0), bool), np.zeros((0, 0), bool)
        x0 = min(s.x0 for s in boxes)
        y0 = min(s.y0 for s in boxes)
        x1 = max(s.x0 + s.width for s in boxes)
        y1 = max(s.y0 + s.height for s in boxes)
        a = np.zeros((y1 - y0, x1 - x0), dtype=bool)
        b = np.zeros_like(a)
        if self:
            a[self.y0 - y0 : self.y0 - y0 + self.height, self.x0 - x0 : self.x0 - x0 + self.width] = self.mask
        if other:
            b[other.y0 - y0 : other.y0 - y0 + other.height, other.x0 - x0 : other.x0 - x0 + other.width] = other.mask
        return x0, y0, a, b

    def union(self, other: "Shape") -> "Shape":
        x0, y0, a, b = self._common_frame(other)
        return Shape(x0, y0, a | b)

    def intersection(self, other: "Shape") -> "Shape":
        x0, y0, a, b = self._common_frame(other)
        return Shape(x0, y0, a & b)

    def difference(self, other: "Shape") -> "Shape":
        x0, y0, a, b = self._common_frame(other)
        return Shape(x0, y0, a & ~b)

    __or__ = union
    __and__ = intersection
    __sub__ = difference

    def issubset(self, other: "Shape") -> bool:
        return not (self - other)

    def isdisjoint(self, other: "Shape") -> bool:
        return not (self & other)

    def translate_by(self, t) -> "Shape":
        """Shape shifted by +t (every site s becomes s + t)."""
        return Shape(self.x0 + t[0], self.y0 + t[1], self.mask)

    def dilate(self, r: int) -> "Shape":
        """All sites within l-infinity distance r of the shape."""
        if not self or r <= 0:
            return self
        h, w = self.mask.shape
        out = np.zeros((h + 2 * r, w + 2 * r), dtype=bool)
        for dy in range(2 * r + 1):
            for dx in range(2 * r + 1):
                out[dy : dy + h, dx : dx + w] |= self.mask
        return Shape(self.x0 - r, self.y0 - r, out)

    def erode(self, r: int) -> "Shape":
        """Sites s whose whole box s + [-r, r]^2 lies in the shape."""
        if not self or r <= 0:
            return self
        h, w = self.mask.shape
        if h <= 2 * r or w <= 2 * r:
            return Shape.empty()
        out = np.ones((h - 2 * r, w - 2 * r), dtype=bool)
        for dy in range(2 * r + 1):
            for dx in range(2 * r + 1):
                out &= self.mask[dy : dy + h - 2 * r, dx : dx + w - 2 * r]
        return Shape(self.x0 + r, self.y0 + r, out)


def ring(k: int, center=(0, 0)) -> Shape:
    """[-k, k]^2 minus [-k+1, k-1]^2 (just the centre when k = 0)."""
    return Shape.square(k, center) - Shape.square(k - 1, center)


@dataclass(frozen=True)
class Alphabet:
    symbols: tuple

    def __post_init__(self):
        syms = tuple(str(s) for s in self.symbols)
        if not syms:
            raise ValueError("alphabet must be nonempty")
        if len(set(syms)) != len(syms):
            raise ValueError("alphabet symbols must be distinct")
        object.__setattr__(self, "symbols", syms)

    @cached_property
    def _index(self) -> dict:
        return {s: i for i, s in enumerate(self.symbols)}

    def index(self, symbol: str) -> int:
        try:
            return self._index[symbol]
        except KeyError:
            raise UnknownSymbol(f"symbol {symbol!r} not in alphabet") from None

    def __len__(self) -> int:
        return len(self.symbols)

    def __contains__(self, symbol) -> bool:
        return symbol in self._index

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, i: int) -> str:
        return self.symbols[i]


@dataclass(frozen=True, eq=False)
class Pattern:
    """Symbols on a finite shape.

    ``==`` and ``hash`` compare patterns up to translation; use
    :meth:`same_position` for positioned equality.
    """

    alphabet: Alphabet
    shape: Shape
    grid: np.ndarray = field(repr=False)

    def __post_init__(self):
        g = np.asarray(self.grid)
        if g.shape != self.shape.mask.shape:
            raise ValueError("grid does not match shape bounding box")
        g = np.where(self.shape.mask, g, -1).astype(np.int16)
        bad = self.shape.mask & ((g < 0) | (g >= len(self.alphabet)))
        if bad.any():
            raise UnknownSymbol("pattern contains indices outside the alphabet")
        object.__setattr__(self, "grid", _frozen(g))

    # -- constructors -----------------------------------------------------
    @classmethod
    def from_array(cls, alphabet: Alphabet, values, origin=(0, 0)) -> "Pattern":
        """Rectangular pattern; ``values[i, j]`` is the site (origin.x + j, origin.y + i)."""
        v = np.asarray(values)
        shape = Shape.rect(origin, (origin[0] + v.shape[1] - 1, origin[1] + v.shape[0] - 1))
        return cls(alphabet, shape, v if shape else np.zeros((0, 0), np.int16))

    @classmethod
    def from_symbols(cls, alphabet: Alphabet, rows, origin=(0, 0)) -> "Pattern":
        """Rectangle from nested symbol lists, bottom row first."""
        arr = np.array([[alphabet.index(s) for s in row] for row in rows], dtype=np.int16)
        return cls.from_array(alphabet, arr, origin)

    @classmethod
    def from_dict(cls, alphabet: Alphabet, values: dict) -> "Pattern":
        shape = Shape.from_sites(values.keys())
        grid = np.full(shape.mask.shape, -1, dtype=np.int16)
        for s, sym in values.items():
            idx = sym if isinstance(sym, (int, np.integer)) else alphabet.index(sym)
            grid[s[1] - shape.y0, s[0] - shape.x0] = idx
        return cls(alphabet, shape, grid)

    @classmethod
    def empty(cls, alphabet: Alphabet) -> "Pattern":
        return cls(alphabet, Shape.empty(), np.zeros((0, 0), np.int16))

    @classmethod
    def constant(cls, alphabet: Alphabet, shape: Shape, symbol) -> "Pattern":
        idx = symbol if isinstance(symbol, (int, np.integer)) else alphabet.index(symbol)
        return cls(alphabet, shape, np.full(shape.mask.shape, idx, dtype=np.int16))

    # -- access -----------------------------------------------------------
    def index_at(self, site) -> int:
        if site not in self.shape:
            raise SiteOutOfShape(f"site {tuple(site)} outside pattern shape")
        return int(self.grid[site[1] - self.shape.y0, site[0] - self.shape.x0])

    def __getitem__(self, site) -> str:
        return self.alphabet[self.index_at(site)]

    def items(self):
        for s in self.shape:
            yield s, self[s]

    def to_dict(self) -> dict:
        return dict(self.items())

    def __len__(self) -> int:
        return len(self.shape)

    # -- equality ---------------------------------------------------------
    def __eq__(self, other) -> bool:
        if not isinstance(other, Pattern):
            return NotImplemented
        return (
            self.alphabet == other.alphabet
            and self.grid.shape == other.grid.shape
            and bool(np.array_equal(self.shape.mask, other.shape.mask))
            and bool(np.array_equal(self.grid, other.grid))
        )

    def __hash__(self) -> int:
        return hash((self.alphabet, self.grid.shape, self.grid.tobytes()))

    def same_position(self, other: "Pattern") -> bool:
        return self == other and self.shape.lo == other.shape.lo

    def __repr__(self) -> str:
        return f"Pattern({self.shape!r}, |A|={len(self.alphabet)})"

    # -- operations -------------------------------------------------------
    def translate(self, t) -> "Pattern":
        """Shift action: the result at s equals this pattern at s + t."""
        return Pattern(self.alphabet, self.shape.translate_by((-t[0], -t[1])), self.grid)

    def subpattern(self, s: Shape) -> "Pattern":
        if not s.issubset(self.shape):
            raise SiteOutOfShape("requested shape is not contained in the pattern shape")
        if not s:
            return Pattern.empty(self.alphabet)
        i0 = s.y0 - self.shape.y0
        j0 = s.x0 - self.shape.x0
        return Pattern(self.alphabet, s, self.grid[i0 : i0 + s.height, j0 : j0 + s.width])

    def embed(self, frame: Shape, fill: int = -1) -> np.ndarray:
        """Values over ``frame``'s bounding box; sites outside this pattern get ``fill``."""
        out = np.full(frame.mask.shape, fill, dtype=np.int16)
        if not self.shape or not frame:
            return out
        ox, oy = self.shape.x0 - frame.x0, self.shape.y0 - frame.y0
        # clip to overlap
        i0, j0 = max(0, oy), max(0, ox)
        i1 = min(frame.height, oy + self.shape.height)
        j1 = min(frame.width, ox + self.shape.width)
        if i0 >= i1 or j0 >= j1:
            return out
        src = self.grid[i0 - oy : i1 - oy, j0 - ox : j1 - ox]
        dst = out[i0:i1, j0:j1]
        np.copyto(dst, src, where=src >= 0)
        return out

    def relabel(self, alphabet: Alphabet, table) -> "Pattern":
        """Apply a 1-block symbol map given as an index lookup table."""
        table = np.asarray(table, dtype=np.int16)
        g = np.where(self.shape.mask, table[np.maximum(self.grid, 0)], -1)
        return Pattern(alphabet, self.shape, g)

    # -- serialization ----------------------------------------------------
    def to_json_obj(self) -> dict:
        obj = {"alphabet": list(self.alphabet.symbols)}
        if self.shape.is_rect:
            lo, hi = self.shape.lo, self.shape.hi
            obj["shape"] = {"rect": [lo.x, lo.y, hi.x, hi.y]}
            obj["values"] = self.grid.ravel().tolist()
        else:
            pts = self.shape.coords()
            obj["shape"] = {"sites": pts.tolist()}
            obj["values"] = self.grid[pts[:, 1] - self.shape.y0, pts[:, 0] - self.shape.x0].tolist() if len(pts) else []
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict, alphabet: Alphabet | None = None) -> "Pattern":
        alpha = Alphabet(tuple(obj["alphabet"]))
        if alphabet is not None and alphabet != alpha:
            raise UnknownSymbol("pattern alphabet differs from the expected one")
        shp = obj["shape"]
        vals = obj["values"]
        if "rect" in shp:
            x0, y0, x1, y1 = shp["rect"]
            shape = Shape.rect((x0, y0), (x1, y1))
            grid = np.array(vals, dtype=np.int16).reshape(shape.mask.shape) if shape else np.zeros((0, 0), np.int16)
            return cls(alpha, shape, grid)
        sites = [tuple(s) for s in shp["sites"]]
        if len(sites) != len(vals):
            raise ValueError("sites and values lengths differ")
        return cls.from_dict(alpha, {s: int(v) for s, v in zip(sites, vals)})

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())

    @classmethod
    def from_json(cls, text: str) -> "Pattern":
        return cls.from_json_obj(json.loads(text))


def translate(p: Pattern, t) -> Pattern:
    return p.translate(t)


def subpattern(p: Pattern, s: Shape) -> Pattern:
    return p.subpattern(s)


def concat_disjoint(v: Pattern, w: Pattern) -> Pattern:
    """The pattern on v.shape | w.shape agreeing with v and w."""
    if v.alphabet != w.alphabet:
        raise UnknownSymbol("cannot concatenate patterns over different alphabets")
    if not v.shape.isdisjoint(w.shape):
        raise OverlappingShapes("patterns share at least one site")
    shape = v.shape | w.shape
    grid = v.embed(shape)
    wg = w.embed(shape)
    np.copyto(grid, wg, where=wg >= 0)
    return Pattern(v.alphabet, shape, grid)
