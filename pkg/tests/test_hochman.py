import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sftlab.errors import LabelOutOfRange, LevelTooLarge, LevelTooSmall, NoOccurrences, PrefixTooShort
from sftlab.hochman import (
    BLANK,
    COLORS,
    CORNER_CODE,
    alpha_limit,
    alpha_lower_bound,
    arrow,
    build_level_square,
    build_x_omega_window,
    collapsed_windows,
    containment_failures,
    count_labelings,
    derive_allowed_2x2,
    level_count_ratio,
    hochman_alphabet,
    level_array,
    level_frequency_in_square,
    level_values,
    locate_in_codes,
    locate_level_subsquares,
    omega_corner,
    parse_symbol,
    project_pi,
    relabel_to_Y,
    restore_x1,
    sample_mu_prime,
    side,
    subsquare_frequency,
    window_hashes,
    x_omega_codes,
    y_alphabet,
    ymn_pattern_count,
)
from sftlab.sft import is_locally_admissible

omegas = st.lists(st.sampled_from(COLORS), min_size=12, max_size=12)
# every third step alternates NE and SW, so the origin moves quickly away from all edges
centred_omegas = omegas.map(lambda om: [("NE", "SW")[(j // 3) % 2] if j % 3 == 2 else c for j, c in enumerate(om)])


def naive_locate(a, n):
    """Every lower-left corner where P_n occurs exactly, by direct comparison."""
    t = level_array(n)
    s = t.shape[0]
    H, W = a.shape
    return sorted((x, y) for y in range(H - s + 1) for x in range(W - s + 1) if np.array_equal(a[y : y + s, x : x + s], t))


def test_alphabets():
    assert len(hochman_alphabet(1)) == 33 and len(hochman_alphabet(3)) == 35
    assert len(y_alphabet(4)) == 37
    assert arrow("SW", "up") == 16
    assert str(parse_symbol("NE:turn_sw")) == "NE:turn_sw"
    assert str(parse_symbol("blank:2")) == "blank:2"
    with pytest.raises(ValueError):
        hochman_alphabet(0)


@pytest.mark.parametrize("n", range(0, 6))
def test_level_square_shape_and_blanks(n):
    a = level_array(n)
    assert a.shape == (side(n), side(n))
    assert int((a == BLANK).sum()) == 4**n
    assert not a.flags.writeable


def test_level_zero_and_one():
    assert level_array(0).tolist() == [[BLANK]]
    assert side(1) == 6
    assert level_array(1)[0, 0] == CORNER_CODE


@pytest.mark.parametrize("n", range(0, 5))
def test_level_square_is_four_copies(n):
    big = level_array(n + 1)
    s = side(n)
    h = s + 2
    # each quadrant holds P_n surrounded by a one-site circuit
    for qy, qx in itertools.product((0, 1), repeat=2):
        block = big[qy * h + 1 : qy * h + 1 + s, qx * h + 1 : qx * h + 1 + s]
        assert np.array_equal(block, level_array(n))


@given(st.integers(0, 7), st.data())
def test_level_values_match_array(n, data):
    s = side(n)
    xs = np.array(data.draw(st.lists(st.integers(0, s - 1), min_size=1, max_size=30)))
    ys = np.array(data.draw(st.lists(st.integers(0, s - 1), min_size=len(xs), max_size=len(xs))))
    a = level_array(n)
    assert np.array_equal(level_values(n, xs, ys), a[ys, xs])


def test_level_cap():
    with pytest.raises(LevelTooLarge):
        build_level_square(11)


@pytest.mark.parametrize("K,n", [(3, 0), (3, 1), (4, 2), (4, 4), (5, 3)])
def test_locate_matches_naive(K, n):
    a = np.asarray(level_array(K))
    got = sorted(map(tuple, locate_in_codes(a, n).tolist()))
    assert got == naive_locate(a, n)
    assert len(got) == 4 ** (K - n)


def test_derived_rules():
    assert collapsed_windows(3) == collapsed_windows(4)
    rules = derive_allowed_2x2(1)
    assert len(rules.allowed) == 157
    assert (BLANK,) * 4 not in rules.allowed
    for n in range(0, 8):
        assert is_locally_admissible(build_level_square(n).pattern, rules)
    rules2 = derive_allowed_2x2(2)
    sq = build_level_square(5, 2, np.random.default_rng(0))
    assert is_locally_admissible(sq.pattern, rules2)


def test_labels_out_of_range():
    with pytest.raises(LabelOutOfRange):
        build_level_square(1, 2, [1, 2, 3, 1])
    with pytest.raises(ValueError):
        build_level_square(1, 2, [1])


@given(omegas)
def test_omega_corner_contains_origin(omega):
    for n in range(0, 8):
        c = omega_corner(omega, n)
        assert c.x <= 0 < c.x + side(n) and c.y <= 0 < c.y + side(n)


def test_prefix_too_short():
    with pytest.raises(PrefixTooShort):
        omega_corner(["NE"], 2)
    with pytest.raises(PrefixTooShort):
        x_omega_codes(["SW"] * 3, (-100, -100), (100, 100))
    # a constant direction moves the origin only one site per level away from the edge
    with pytest.raises(PrefixTooShort):
        x_omega_codes(["NW"] * 12, (-30, -30), (30, 30))


@settings(max_examples=30)
@given(centred_omegas, st.integers(3, 12), st.integers(-8, 8), st.integers(-8, 8))
def test_x_omega_windows_are_consistent(omega, r, dx, dy):
    big = x_omega_codes(omega, (-30, -30), (30, 30))
    small = x_omega_codes(omega, (dx - r, dy - r), (dx + r, dy + r))
    assert np.array_equal(small, big[dy - r + 30 : dy + r + 31, dx - r + 30 : dx + r + 31])


@settings(max_examples=10)
@given(centred_omegas)
def test_x_omega_windows_are_admissible(omega):
    assert is_locally_admissible(build_x_omega_window(omega, 20), derive_allowed_2x2(1))


def test_frequency_limits():
    for n in range(0, 4):
        vals = [level_frequency_in_square(n, K) for K in range(n, n + 12)]
        assert all(v >= alpha_lower_bound(n) for v in vals)
        assert abs(vals[-1] - alpha_limit(n)) / alpha_limit(n) < Fraction(1, 1000)
    assert level_frequency_in_square(3, 2) == 0


def test_subsquare_frequency_near_limit():
    omega = ["NE", "SW", "NW", "SE"] * 5
    for n in (0, 1):
        f = subsquare_frequency(omega, n, 200)
        assert abs(f - float(alpha_limit(n))) / float(alpha_limit(n)) < 0.05


def test_containment():
    assert containment_failures(["SW", "NE", "NW", "SE"] * 5, 1, 40) == 0


def test_y_relabelling_round_trip():
    p = build_level_square(4).pattern
    rng = np.random.default_rng(1)
    y = relabel_to_Y(p, 2, 3, rng)
    corners = locate_level_subsquares(p, 2)
    assert len(corners) == 16 and count_labelings(p, 2, 3) == 3**16
    assert {y[c] for c in corners} <= {"c:1", "c:2", "c:3"}
    back = restore_x1(project_pi(y), 2)
    assert back.same_position(p)
    with pytest.raises(LabelOutOfRange):
        relabel_to_Y(p, 2, 2, [3] * 16)


def test_level_zero_corners_restore_to_blanks():
    p = build_level_square(2).pattern
    y = relabel_to_Y(p, 0, 1)
    assert restore_x1(project_pi(y), 0).same_position(p)


def test_sample_mu_prime():
    y1 = project_pi(relabel_to_Y(build_level_square(4).pattern, 1, 1))
    a = sample_mu_prime(y1, 5, seed=3)
    b = sample_mu_prime(y1, 5, seed=3)
    assert a.same_position(b)
    labels = [s for _, s in a.items() if s.startswith("c:")]
    assert len(labels) == 64 and set(labels) <= {f"c:{i}" for i in range(1, 6)}
    assert project_pi(a).same_position(y1)


def test_window_hashes_separate_distinct_windows():
    a = np.asarray(level_array(5))
    N = 7
    h = window_hashes(a, N)
    raw = {}
    for y in range(a.shape[0] - N + 1):
        for x in range(a.shape[1] - N + 1):
            raw.setdefault(a[y : y + N, x : x + N].tobytes(), set()).add(int(h[y, x]))
    assert all(len(v) == 1 for v in raw.values())
    assert len({next(iter(v)) for v in raw.values()}) == len(raw)


@pytest.mark.parametrize("N,m,n,K", [(4, 2, 1, 2), (5, 2, 2, 3), (3, 3, 2, 3), (9, 3, 1, 2)])
def test_ymn_count_matches_labelled_enumeration(N, m, n, K):
    base = np.asarray(level_array(K))
    corners = locate_in_codes(base, n)
    assert m ** len(corners) <= 4096
    seen = set()
    for labels in itertools.product(range(1, m + 1), repeat=len(corners)):
        g = base.astype(np.int32).copy()
        g[corners[:, 1], corners[:, 0]] = BLANK + np.array(labels)
        for y in range(g.shape[0] - N + 1):
            for x in range(g.shape[1] - N + 1):
                seen.add(g[y : y + N, x : x + N].tobytes())
    r = ymn_pattern_count(N, m, n, K)
    assert r.count == len(seen)
    assert r.lower <= r.count <= r.upper


def test_ymn_requires_big_enough_level():
    with pytest.raises(LevelTooSmall):
        ymn_pattern_count(30, 2, 1, 2)


def test_level_count_ratio():
    p = build_level_square(5).pattern
    assert level_count_ratio([p], 1, 3).ratio == 16
    with pytest.raises(NoOccurrences):
        level_count_ratio([build_level_square(2).pattern], 1, 3)
