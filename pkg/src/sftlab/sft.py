"""Local rules, admissibility checks, exhaustive enumeration and gluing search."""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterator, Literal

import numpy as np

from .errors import InfeasibleBoundary, RegionTooLarge, UnknownSymbol
from .grid import Alphabet, Pattern, Shape, concat_disjoint

DEFAULT_MAX_NODES = 10**9


class SftRules:
    """Base class for local-constraint specifications."""

    alphabet: Alphabet

    def violations(self, grid: np.ndarray) -> int:
        """Number of violated constraints fully inside ``grid`` (-1 = no site)."""
        raise NotImplementedError

    def to_json_obj(self) -> dict:
        raise NotImplementedError

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj())


# 2x2 windows are keyed (lower-left, lower-right, upper-left, upper-right).
def _window_codes(grid: np.ndarray, q: int):
    a = grid[:-1, :-1].astype(np.int64)
    b = grid[:-1, 1:].astype(np.int64)
    c = grid[1:, :-1].astype(np.int64)
    d = grid[1:, 1:].astype(np.int64)
    full = (a >= 0) & (b >= 0) & (c >= 0) & (d >= 0)
    codes = ((a * q + b) * q + c) * q + d
    return codes, full


@dataclass(frozen=True, eq=False)
class Allowed2x2(SftRules):
    alphabet: Alphabet
    allowed: frozenset  # of (ll, lr, ul, ur) index tuples

    def __post_init__(self):
        q = len(self.alphabet)
        norm = set()
        for w in self.allowed:
            if isinstance(w, Pattern):
                if w.shape.width != 2 or w.shape.height != 2 or not w.shape.is_rect:
                    raise ValueError("allowed patterns must have 2x2 rectangular shape")
                g = w.grid
                w = (g[0, 0], g[0, 1], g[1, 0], g[1, 1])
            w = tuple(int(v) for v in w)
            if len(w) != 4 or any(v < 0 or v >= q for v in w):
                raise UnknownSymbol(f"bad 2x2 window {w}")
            norm.add(w)
        object.__setattr__(self, "allowed", frozenset(norm))

    @cached_property
    def _sorted_codes(self) -> np.ndarray:
        q = len(self.alphabet)
        return np.array(sorted(((a * q + b) * q + c) * q + d for a, b, c, d in self.allowed), dtype=np.int64)

    def window_ok(self, codes: np.ndarray) -> np.ndarray:
        allowed = self._sorted_codes
        if len(allowed) == 0:
            return np.zeros(codes.shape, bool)
        pos = np.searchsorted(allowed, codes)
        pos = np.minimum(pos, len(allowed) - 1)
        return allowed[pos] == codes

    def violations(self, grid):
        if grid.shape[0] < 2 or grid.shape[1] < 2:
            return 0
        codes, full = _window_codes(grid, len(self.alphabet))
        return int((full & ~self.window_ok(codes)).sum())

    def patterns(self) -> list:
        return [Pattern.from_array(self.alphabet, np.array([[a, b], [c, d]])) for a, b, c, d in sorted(self.allowed)]

    def to_json_obj(self):
        return {
            "type": "allowed2x2",
            "alphabet": list(self.alphabet.symbols),
            "allowed": [p.to_json_obj() for p in self.patterns()],
        }

    def __eq__(self, other):
        return isinstance(other, Allowed2x2) and self.alphabet == other.alphabet and self.allowed == other.allowed

    def __hash__(self):
        return hash((self.alphabet, self.allowed))


@dataclass(frozen=True)
class DistanceRule:
    """Symbols of class ``first`` and ``second`` must be more than ``min_exclusive`` apart."""

    first: frozenset
    second: frozenset
    min_exclusive: int

    def __post_init__(self):
        object.__setattr__(self, "first", frozenset(self.first))
        object.__setattr__(self, "second", frozenset(self.second))
        if self.min_exclusive < 1:
            raise ValueError("distances must be >= 1")


@dataclass(frozen=True)
class DistanceRules(SftRules):
    alphabet: Alphabet
    pairs: tuple

    def __post_init__(self):
        object.__setattr__(self, "pairs", tuple(self.pairs))
        for rule in self.pairs:
            for s in rule.first | rule.second:
                if s not in self.alphabet:
                    raise UnknownSymbol(f"rule mentions unknown symbol {s!r}")

    @property
    def max_distance(self) -> int:
        return max((r.min_exclusive for r in self.pairs), default=0)

    def index_classes(self):
        """Per rule: (indices of first class, indices of second class, R)."""
        return [
            (
                sorted(self.alphabet.index(s) for s in r.first),
                sorted(self.alphabet.index(s) for s in r.second),
                r.min_exclusive,
            )
            for r in self.pairs
        ]

    def violations(self, grid):
        total = 0
        h, w = grid.shape
        for a_idx, b_idx, R in self.index_classes():
            ma = np.isin(grid, a_idx)
            mb = np.isin(grid, b_idx)
            if not ma.any() or not mb.any():
                continue
            for dy in range(-R, R + 1):
                for dx in range(-R, R + 1):
                    if (dx == 0 and dy == 0) or abs(dx) >= w or abs(dy) >= h:
                        continue
                    # site s in A, s + (dx, dy) in B
                    ys = slice(max(0, -dy), min(h, h - dy))
                    xs = slice(max(0, -dx), min(w, w - dx))
                    yt = slice(max(0, dy), min(h, h + dy))
                    xt = slice(max(0, dx), min(w, w + dx))
                    hits = ma[ys, xs] & mb[yt, xt]
                    total += int(hits.sum())
        # a symmetric pair with both classes equal is seen from both ends
        return total

    def to_json_obj(self):
        return {
            "type": "distance",
            "alphabet": list(self.alphabet.symbols),
            "rules": [
                {"classes": [sorted(r.first), sorted(r.second)], "min_exclusive": r.min_exclusive}
                for r in self.pairs
            ],
        }


def _word_occurrences(grid: np.ndarray, word: Pattern) -> np.ndarray:
    """Boolean map over placements (lower-left of the word's box) where ``word`` occurs."""
    h, w = grid.shape
    wh, ww = word.grid.shape
    if wh == 0 or wh > h or ww > w:
        return np.zeros((0, 0), bool)
    out = np.ones((h - wh + 1, w - ww + 1), dtype=bool)
    ys, xs = np.nonzero(word.shape.mask)
    for i, j in zip(ys.tolist(), xs.tolist()):
        out &= grid[i : i + h - wh + 1, j : j + w - ww + 1] == word.grid[i, j]
    return out


@dataclass(frozen=True)
class Compound(SftRules):
    base: SftRules
    forbidden_words: tuple = field(default=())

    def __post_init__(self):
        object.__setattr__(self, "forbidden_words", tuple(self.forbidden_words))
        for wd in self.forbidden_words:
            if wd.alphabet != self.base.alphabet:
                raise UnknownSymbol("forbidden word over a different alphabet")
            if not wd.shape:
                raise ValueError("forbidden words must be nonempty")

    @property
    def alphabet(self) -> Alphabet:  # type: ignore[override]
        return self.base.alphabet

    def violations(self, grid):
        total = self.base.violations(grid)
        for wd in self.forbidden_words:
            total += int(_word_occurrences(grid, wd).sum())
        return total

    def to_json_obj(self):
        return {
            "type": "compound",
            "base": self.base.to_json_obj(),
            "forbidden_words": [wd.to_json_obj() for wd in self.forbidden_words],
        }


def rules_from_json_obj(obj: dict) -> SftRules:
    kind = obj["type"]
    if kind == "allowed2x2":
        alpha = Alphabet(tuple(obj["alphabet"]))
        return Allowed2x2(alpha, frozenset(Pattern.from_json_obj(p, alpha) for p in obj["allowed"]))
    if kind == "distance":
        alpha = Alphabet(tuple(obj["alphabet"]))
        pairs = tuple(DistanceRule(frozenset(r["classes"][0]), frozenset(r["classes"][1]), int(r["min_exclusive"])) for r in obj["rules"])
        return DistanceRules(alpha, pairs)
    if kind == "compound":
        base = rules_from_json_obj(obj["base"])
        words = tuple(Pattern.from_json_obj(p, base.alphabet) for p in obj["forbidden_words"])
        return Compound(base, words)
    raise ValueError(f"unknown rules type {kind!r}")


def rules_from_json(text: str) -> SftRules:
    return rules_from_json_obj(json.loads(text))


def full_shift(alphabet: Alphabet) -> Allowed2x2:
    q = len(alphabet)
    import itertools

    return Allowed2x2(alphabet, frozenset(itertools.product(range(q), repeat=4)))


def is_locally_admissible(p: Pattern, r: SftRules) -> bool:
    if p.alphabet != r.alphabet:
        # allow structurally equal alphabets only
        for s in set(p.grid[p.shape.mask].tolist()):
            if p.alphabet[s] not in r.alphabet:
                raise UnknownSymbol(f"symbol {p.alphabet[s]!r} not in rules alphabet")
        table = [r.alphabet.index(s) if s in r.alphabet else 0 for s in p.alphabet]
        p = p.relabel(r.alphabet, table)
    return r.violations(p.grid) == 0


@dataclass(frozen=True)
class BoundaryCondition:
    fixed: Pattern


def forbid_word(r: SftRules, w: Pattern) -> Compound:
    if isinstance(r, Compound):
        return Compound(r.base, r.forbidden_words + (w,))
    return Compound(r, (w,))


# ---------------------------------------------------------------------------
# backtracking enumeration


class _Search:
    """Row-major backtracking over the free sites of a region.

    Distance rules are forward-checked through per-site exclusion counters;
    2x2 windows and forbidden words are checked when their last free site is
    assigned.
    """

    def __init__(self, region: Shape, rules: SftRules, fixed: Pattern | None, max_nodes: int):
        self.rules = rules
        self.region = region
        self.max_nodes = max_nodes
        self.nodes = 0
        q = len(rules.alphabet)
        self.q = q
        if fixed is not None and fixed.shape:
            if not fixed.shape.isdisjoint(region):
                raise ValueError("boundary condition overlaps the free region")
            if fixed.alphabet != rules.alphabet:
                raise UnknownSymbol("boundary alphabet differs from rules alphabet")
            union = region | fixed.shape
        else:
            fixed = None
            union = region
        self.union = union
        self.fixed = fixed
        free = region.coords().tolist()
        self.free = [tuple(s) for s in free]
        n = len(free)
        self.n = n
        slot = {}
        for i, s in enumerate(self.free):
            slot[s] = i
        self.values = [-1] * n
        fixed_items = []
        if fixed is not None:
            for s in fixed.shape.coords().tolist():
                s = tuple(s)
                slot[s] = n + len(fixed_items)
                fixed_items.append(fixed.index_at(s))
        self.values.extend(fixed_items)
        self.slot = slot
        self.feasible = True

        base = rules.base if isinstance(rules, Compound) else rules
        words = rules.forbidden_words if isinstance(rules, Compound) else ()

        def order(sl):
            return sl if sl < n else -1

        self.checks = [[] for _ in range(n)]  # list of (kind, payload)
        # 2x2 windows
        if isinstance(base, Allowed2x2):
            allowed = base.allowed
            for (x, y) in union.coords().tolist():
                quad = [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)]
                if all(s in slot for s in quad):
                    sl = tuple(slot[s] for s in quad)
                    last = max(order(t) for t in sl)
                    if last < 0:
                        if tuple(self.values[t] for t in sl) not in allowed:
                            self.feasible = False
                    else:
                        self.checks[last].append(("w", sl))
            self.allowed = allowed
        # forbidden words
        for wd in words:
            offs = [(int(x) - wd.shape.x0, int(y) - wd.shape.y0, wd.index_at((x, y))) for x, y in wd.shape.coords().tolist()]
            ux0, uy0 = union.x0, union.y0
            for py in range(uy0 - wd.shape.height + 1, uy0 + union.height):
                for px in range(ux0 - wd.shape.width + 1, ux0 + union.width):
                    sites = [(px + dx, py + dy) for dx, dy, _ in offs]
                    if not all(s in slot for s in sites):
                        continue
                    sl = tuple(slot[s] for s in sites)
                    want = tuple(v for _, _, v in offs)
                    last = max(order(t) for t in sl)
                    if last < 0:
                        if tuple(self.values[t] for t in sl) == want:
                            self.feasible = False
                    else:
                        self.checks[last].append(("f", (sl, want)))
        # distance rules: exclusion counters
        self.excl = [[0] * q for _ in range(n)]
        self.spread = [[] for _ in range(n)]  # per free site: list of (later slots, excl table)
        if isinstance(base, DistanceRules):
            for a_idx, b_idx, R in base.index_classes():
                table = [[] for _ in range(q)]
                for s in range(q):
                    ex = set()
                    if s in a_idx:
                        ex.update(b_idx)
                    if s in b_idx:
                        ex.update(a_idx)
                    table[s] = sorted(ex)
                for i, (x, y) in enumerate(self.free):
                    later = []
                    for dy in range(-R, R + 1):
                        for dx in range(-R, R + 1):
                            if dx == 0 and dy == 0:
                                continue
                            t = slot.get((x + dx, y + dy))
                            if t is not None and t < n and t > i:
                                later.append(t)
                    if later:
                        self.spread[i].append((later, table))
                # fixed sites constrain free sites and each other
                if fixed is not None:
                    for (x, y) in fixed.shape.coords().tolist():
                        s = self.values[slot[(x, y)]]
                        if not table[s]:
                            continue
                        for dy in range(-R, R + 1):
                            for dx in range(-R, R + 1):
                                if dx == 0 and dy == 0:
                                    continue
                                t = slot.get((x + dx, y + dy))
                                if t is None:
                                    continue
                                if t < n:
                                    for e in table[s]:
                                        self.excl[t][e] += 1
                                elif self.values[t] in table[s]:
                                    self.feasible = False

    def _tick(self):
        self.nodes += 1
        if self.nodes > self.max_nodes:
            raise RegionTooLarge(f"search exceeded {self.max_nodes} nodes")

    def _ok(self, i: int) -> bool:
        vals = self.values
        for kind, payload in self.checks[i]:
            if kind == "w":
                if (vals[payload[0]], vals[payload[1]], vals[payload[2]], vals[payload[3]]) not in self.allowed:
                    return False
            else:
                sl, want = payload
                if all(vals[t] == v for t, v in zip(sl, want)):
                    return False
        return True

    def _push(self, i: int, s: int, delta: int):
        excl = self.excl
        for later, table in self.spread[i]:
            ex = table[s]
            if ex:
                for t in later:
                    row = excl[t]
                    for e in ex:
                        row[e] += delta

    def _candidates(self, i: int):
        row = self.excl[i]
        return [s for s in range(self.q) if row[s] == 0]

    def _frontiers(self):
        """For each free index i, the earlier free slots still linked to some slot >= i."""
        n = self.n
        reach = list(range(n))
        for i in range(n):
            for later, _ in self.spread[i]:
                reach[i] = max(reach[i], max(later))
            for kind, payload in self.checks[i]:
                sl = payload if kind == "w" else payload[0]
                for t in sl:
                    if t < n:
                        reach[t] = max(reach[t], i)
        fronts = []
        for i in range(n + 1):
            fronts.append(tuple(t for t in range(i) if reach[t] >= i))
        return fronts

    def count(self, first_choices=None) -> int:
        if not self.feasible:
            return 0
        if self.n == 0:
            return 1
        vals = self.values
        n = self.n
        fronts = self._frontiers()
        memo = [dict() for _ in range(n + 1)]

        def rec(i: int) -> int:
            if i == n:
                return 1
            key = tuple(vals[t] for t in fronts[i])
            hit = memo[i].get(key)
            if hit is not None:
                return hit
            total = 0
            choices = self._candidates(i)
            if i == 0 and first_choices is not None:
                choices = [s for s in choices if s in first_choices]
            for s in choices:
                self._tick()
                vals[i] = s
                if not self._ok(i):
                    continue
                self._push(i, s, 1)
                total += rec(i + 1)
                self._push(i, s, -1)
            vals[i] = -1
            memo[i][key] = total
            return total

        return rec(0)

    def stream(self) -> Iterator[list]:
        """Yields the list of free-site values for every admissible filling."""
        if not self.feasible:
            return
        if self.n == 0:
            yield []
            return
        vals = self.values
        n = self.n
        stack = [(0, iter(self._candidates(0)))]
        while stack:
            i, it = stack[-1]
            advanced = False
            for s in it:
                self._tick()
                vals[i] = s
                if not self._ok(i):
                    continue
                if i == n - 1:
                    yield vals[:n]
                    continue
                self._push(i, s, 1)
                stack.append((i + 1, iter(self._candidates(i + 1))))
                advanced = True
                break
            if not advanced:
                vals[i] = -1
                stack.pop()
                if stack:
                    j, _ = stack[-1]
                    self._push(j, vals[j], -1)

    def to_pattern(self, values: list) -> Pattern:
        grid = np.full(self.region.mask.shape, -1, dtype=np.int16)
        xs = np.array([s[0] for s in self.free], dtype=np.intp) - self.region.x0
        ys = np.array([s[1] for s in self.free], dtype=np.intp) - self.region.y0
        grid[ys, xs] = values
        return Pattern(self.rules.alphabet, self.region, grid)


def _count_worker(args):
    region, rules, fixed, max_nodes, choices = args
    return _Search(region, rules, fixed, max_nodes).count(first_choices=choices)


def enumerate_admissible(
    region: Shape,
    rules: SftRules,
    bc: BoundaryCondition | None = None,
    mode: Literal["count", "list", "stream"] = "count",
    max_nodes: int = DEFAULT_MAX_NODES,
    workers: int = 1,
):
    """Patterns on ``region`` that are locally admissible together with ``bc``.

    ``count`` returns an exact ``int``; ``list``/``stream`` yield patterns in
    lexicographic order (sites row-major, then symbol index).  ``max_nodes``
    caps the number of search nodes; exceeding it raises RegionTooLarge.
    """
    fixed = bc.fixed if bc is not None else None
    if mode == "count":
        if workers > 1 and region:
            q = len(rules.alphabet)
            splits = [[s] for s in range(q)]
            with ProcessPoolExecutor(max_workers=workers) as ex:
                parts = list(ex.map(_count_worker, [(region, rules, fixed, max_nodes, c) for c in splits]))
            return sum(parts)
        return _Search(region, rules, fixed, max_nodes).count()
    search = _Search(region, rules, fixed, max_nodes)
    gen = (search.to_pattern(v) for v in search.stream())
    if mode == "stream":
        return gen
    if mode == "list":
        return list(gen)
    raise ValueError(f"unknown mode {mode!r}")


def glue_search(inner: Pattern, outer: Pattern, n: int, k: int, rules: SftRules, max_nodes: int = DEFAULT_MAX_NODES):
    """Fill the annulus [-(n+k), n+k]^2 minus [-n, n]^2 between ``inner`` and ``outer``.

    Returns the filler pattern, or None when exhaustive search proves that no
    filling exists.  Parts of ``outer`` inside the annulus box are ignored.
    """
    box = Shape.square(n + k)
    core = Shape.square(n)
    if not inner.shape.issubset(core):
        raise ValueError("inner pattern must lie in [-n, n]^2")
    for part in (inner, outer):
        if not is_locally_admissible(part, rules):
            raise InfeasibleBoundary("inner/outer data are not locally admissible")
    annulus = box - core
    outside = outer.shape - box
    outer_part = outer.subpattern(outside) if outside else Pattern.empty(rules.alphabet)
    fixed = concat_disjoint(inner, outer_part)
    region = annulus
    for filler in enumerate_admissible(region, rules, BoundaryCondition(fixed), mode="stream", max_nodes=max_nodes):
        return filler
    return None


def least_gluing_k(inner: Pattern, outer: Pattern, n: int, k_max: int, rules: SftRules, max_nodes: int = DEFAULT_MAX_NODES):
    """Smallest k <= k_max for which :func:`glue_search` succeeds, with its filler."""
    for k in range(k_max + 1):
        filler = glue_search(inner, outer, n, k, rules, max_nodes)
        if filler is not None:
            return k, filler
    return None, None
