from collections import deque

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sftlab.animals import animal_census, enclosed_cells, enumerate_lattice_animals
from sftlab.errors import TooLarge

FIXED_POLYOMINOES = (1, 2, 6, 19, 63, 216, 760, 2725, 9910, 36446)


def normalise(cells):
    mx = min(x for x, _ in cells)
    my = min(y for _, y in cells)
    return frozenset((x - mx, y - my) for x, y in cells)


def naive_animals(n):
    """Fixed polyominoes of size n by growing every smaller one by one cell."""
    level = {frozenset({(0, 0)})}
    for _ in range(n - 1):
        nxt = set()
        for a in level:
            for x, y in a:
                for c in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
                    if c not in a:
                        nxt.add(normalise(a | {c}))
        level = nxt
    return level


def flood_holes(cells):
    """Cells of bounded complement components, by breadth-first search from outside the box."""
    cells = set(cells)
    x0 = min(x for x, _ in cells) - 1
    x1 = max(x for x, _ in cells) + 1
    y0 = min(y for _, y in cells) - 1
    y1 = max(y for _, y in cells) + 1
    outside = {(x0, y0)}
    todo = deque(outside)
    while todo:
        x, y = todo.popleft()
        for c in ((x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)):
            if x0 <= c[0] <= x1 and y0 <= c[1] <= y1 and c not in cells and c not in outside:
                outside.add(c)
                todo.append(c)
    return (x1 - x0 + 1) * (y1 - y0 + 1) - len(outside) - len(cells)


def test_animal_counts_match_naive_growth():
    census = animal_census(8)
    assert census.animals == FIXED_POLYOMINOES[:8]
    for n in range(1, 8):
        assert len(naive_animals(n)) == census.animals[n - 1]


def test_enclosing_counts_match_flood_fill():
    census = animal_census(9)
    for n in range(1, 10):
        expected = sum(flood_holes(a) for a in naive_animals(n))
        assert census.contours[n - 1] == expected
    assert census.contours[:6] == (0,) * 6
    assert census.contours[6:] == (4, 41, 280)


def test_full_census_and_bounds():
    census = animal_census(10)
    assert census.animals == FIXED_POLYOMINOES
    for n, (a, c) in enumerate(zip(census.animals, census.contours), start=1):
        assert a <= 8**n and c <= 32**n


@given(st.sets(st.tuples(st.integers(0, 5), st.integers(0, 5)), min_size=1, max_size=20))
def test_enclosed_cells_match_flood_fill(cells):
    assert enclosed_cells(list(cells)) == flood_holes(cells)


def test_modes_and_limits():
    assert enumerate_lattice_animals(5) == 63
    assert enumerate_lattice_animals(8, mode="contours_surrounding_origin") == 41
    with pytest.raises(ValueError):
        enumerate_lattice_animals(3, mode="trees")
    with pytest.raises(TooLarge):
        animal_census(11)
    with pytest.raises(ValueError):
        animal_census(0)
