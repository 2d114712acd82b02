"""Exhaustive census of lattice animals (fixed polyominoes) and of animals enclosing a site."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import TooLarge, check

MAX_N = 10
# edge connectivity for the animals themselves and for their complement
ANIMAL_STRUCTURE = ndimage.generate_binary_structure(2, 1)


def _redelmeier(n: int, visit):
    """Call ``visit(cells)`` once per fixed polyomino of every size 1..n.

    Cells are canonical: the lowest row is y = 0 and its leftmost cell is the
    origin, so each translation class appears exactly once.
    """

    def allowed(c):
        x, y = c
        return y > 0 or (y == 0 and x >= 0)

    def neighbours(c):
        x, y = c
        return ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1))

    cells: list = []
    seen = {(0, 0)}

    def rec(untried: list):
        while untried:
            c = untried.pop()
            cells.append(c)
            visit(cells)
            if len(cells) < n:
                new = []
                for nb in neighbours(c):
                    if allowed(nb) and nb not in seen:
                        new.append(nb)
                for nb in new:
                    seen.add(nb)
                rec(untried + new)
                for nb in new:
                    seen.discard(nb)
            cells.pop()

    rec([(0, 0)])


def enclosed_cells(cells) -> int:
    """Number of sites in bounded components of the complement (edge connectivity)."""
    pts = np.array(cells)
    x0, y0 = pts.min(axis=0) - 1
    x1, y1 = pts.max(axis=0) + 1
    mask = np.zeros((y1 - y0 + 1, x1 - x0 + 1), dtype=bool)
    mask[pts[:, 1] - y0, pts[:, 0] - x0] = True
    lab, _ = ndimage.label(~mask, structure=ANIMAL_STRUCTURE)
    outside = lab == lab[0, 0]
    return int((~mask & ~outside).sum())


@dataclass(frozen=True)
class AnimalCensus:
    n: int
    animals: tuple  # counts for sizes 1..n
    contours: tuple  # translates with the origin strictly inside, sizes 1..n


def animal_census(n: int) -> AnimalCensus:
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > MAX_N:
        raise TooLarge(f"n={n} exceeds the exhaustive limit {MAX_N}")
    animals = [0] * (n + 1)
    contours = [0] * (n + 1)

    def visit(cells):
        size = len(cells)
        animals[size] += 1
        if size >= 7:  # no polyomino with fewer than 7 cells has a hole
            contours[size] += enclosed_cells(cells)

    _redelmeier(n, visit)
    for j in range(1, n + 1):
        check(animals[j] <= 8**j, "animal-bound", f"n={j}: {animals[j]} > 8^{j}")
        check(contours[j] <= 32**j, "contour-bound", f"n={j}: {contours[j]} > 32^{j}")
    return AnimalCensus(n, tuple(animals[1:]), tuple(contours[1:]))


def enumerate_lattice_animals(n: int, mode: str = "animals") -> int:
    """Count of n-site animals up to translation, or of n-site animals with the origin inside."""
    census = animal_census(n)
    if mode == "animals":
        return census.animals[-1]
    if mode == "contours_surrounding_origin":
        return census.contours[-1]
    raise ValueError(f"unknown mode {mode!r}")
