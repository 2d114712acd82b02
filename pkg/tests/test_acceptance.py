"""Acceptance criteria, one group of tests per criterion, at the stated tolerances."""

import itertools
import json
import math
import time
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from scipy.stats import chisquare

from sftlab import animals, entropy, factor, hochman
from sftlab import widom_rowlinson as wr
from sftlab.cli import main
from sftlab.grid import Coord, Shape
from sftlab.sft import enumerate_admissible

from .oracles import brute_force_count, rect_sites, wr_rule_list
from .test_animals import naive_animals

pytestmark = pytest.mark.acceptance


def seeded_omegas(seed, count, length=40):
    rng = np.random.default_rng(seed)
    return [[hochman.COLORS[i] for i in rng.integers(0, 4, length)] for _ in range(count)]


# 1 -------------------------------------------------------------------------


def test_acceptance_1_level_geometry():
    start = time.perf_counter()
    for n in range(0, 9):
        assert hochman.level_array(n).shape == (5 * 2**n - 4,) * 2
    for n in range(0, 8):
        a = hochman.level_array(n)
        for j in range(0, n + 1):
            assert len(hochman.locate_in_codes(a, j)) == 4 ** (n - j)
    assert time.perf_counter() - start < 60


# 2 -------------------------------------------------------------------------


def test_acceptance_2_rules_accept_p8():
    rules = hochman.derive_allowed_2x2(1)
    assert rules.violations(np.asarray(hochman.level_array(8))) == 0


def test_acceptance_2_rules_accept_x_omega_windows():
    rules = hochman.derive_allowed_2x2(1)
    for i, omega in enumerate(seeded_omegas(2, 12)):
        radius = (10, 50, 200)[i % 3]
        w = hochman.build_x_omega_window(omega, radius)
        assert rules.violations(w.grid) == 0


# 3 -------------------------------------------------------------------------


@pytest.mark.parametrize("n", [0, 1, 2, 3])
def test_acceptance_3_subsquare_frequency(n):
    limit = float(hochman.alpha_limit(n))
    for omega in seeded_omegas(3 + n, 3):
        f = hochman.subsquare_frequency(omega, n, 500)
        assert f > float(hochman.alpha_lower_bound(n))
        assert abs(f - limit) / limit < 0.05


# 4 -------------------------------------------------------------------------


def test_acceptance_4_frequency_ratio():
    for K in (4, 5, 6):
        p = hochman.build_level_square(K).pattern
        for N1, N2 in itertools.combinations(range(0, 5), 2):
            r = hochman.level_count_ratio([p], N1, N2)
            assert r.ratio == Fraction(4 ** (N2 - N1))


# 5 -------------------------------------------------------------------------


@pytest.mark.parametrize("m,n", [(2, 1), (3, 1), (2, 2), (3, 2)])
def test_acceptance_5_ymn_entropy(m, n):
    start = time.perf_counter()
    for K, N in ((n + 2, hochman.side(n + 1)), (n + 3, hochman.side(n + 2)), (7, hochman.side(5))):
        r = hochman.ymn_pattern_count(N, m, n, K)
        assert m ** r.max_corners <= r.count <= r.upper
    # largest feasible instance: N = side(7) inside P_9
    r = hochman.ymn_pattern_count(hochman.side(7), m, n, 9)
    assert r.lower <= r.count <= r.upper
    assert abs(r.log_rate / r.target - 1) < 0.10
    assert time.perf_counter() - start < 600


# 6 -------------------------------------------------------------------------


def test_acceptance_6_corner_label_sampler():
    y1 = hochman.project_pi(hochman.relabel_to_Y(hochman.build_level_square(3).pattern, 2, 1))
    corners = [s for s, sym in y1.items() if sym == "c"]
    assert len(corners) == 4
    a, b = corners[0], corners[-1]
    joint = Counter()
    pooled = Counter()
    rng = np.random.default_rng(6)
    for _ in range(10_000):
        w = hochman.sample_mu_prime(y1, 2, rng)
        joint[(w[a], w[b])] += 1
        pooled.update(w[c] for c in corners)
    cells = [joint[(x, y)] for x in ("c:1", "c:2") for y in ("c:1", "c:2")]
    assert chisquare(cells).pvalue > 0.01
    assert chisquare([pooled["c:1"], pooled["c:2"]]).pvalue > 0.01


# 7 -------------------------------------------------------------------------


@pytest.mark.parametrize("name,m", [("collapse", 1), ("parity", 2), ("identity", 3)])
def test_acceptance_7_factor_decomposition(name, m):
    k = 3
    d = factor.decompose(factor.named_code(name, k))
    assert d.m == m
    rng = np.random.default_rng(7)
    for omega in seeded_omegas(70, 500, length=20):
        w = hochman.build_x_omega_window(omega, 12, k, labels=rng)
        assert d.check_window(w)


# 8 -------------------------------------------------------------------------


def check_ensemble(rep):
    assert rep.violations == []
    assert rep.class_total == rep.E_size
    for cls in rep.classes.values():
        assert max(cls.images.values()) <= wr.preimage_bound(cls.C_size, 2)
        assert sum(cls.images.values()) == cls.size


def test_acceptance_8_contour_mechanics_all_sites():
    # k = 4 is the smallest box of the required kind: the plus boundary needs k divisible by R1 + 1 = 2
    start = time.perf_counter()
    p = wr.WrParams(1, 2)
    total = 0
    for v in Shape.square(3):
        rep = wr.verify_ensemble(4, p, tuple(v))
        check_ensemble(rep)
        total += rep.E_size
    assert total > 0
    assert time.perf_counter() - start < 300


def test_acceptance_8_contour_mechanics_rich_ensemble():
    start = time.perf_counter()
    rep = wr.verify_ensemble(4, wr.WrParams(1, 1))
    check_ensemble(rep)
    assert rep.E_size > 10_000
    assert time.perf_counter() - start < 300


# 9 -------------------------------------------------------------------------


def test_acceptance_9_peierls_formula():
    p = wr.WrParams(1, 2**13)
    assert wr.peierls_exponent(p) == 27
    assert wr.peierls_report(p).alpha == 2.0**-27
    assert not wr.peierls_report(wr.WrParams(1, 4096)).valid
    assert wr.peierls_report(wr.WrParams(1, 4097)).valid


# 10 ------------------------------------------------------------------------


def test_acceptance_10_strip_bound_width_one():
    assert abs(entropy.strip_entropy_upper_bound(wr.wr_rules(wr.WrParams(1, 1)), 1) - math.log(2)) <= 1e-9


def test_acceptance_10_bounds_above_placement():
    rules = wr.wr_rules(wr.WrParams(1, 1))
    lower = entropy.placement_lower_bound(entropy.WrGrid(1)).value
    assert lower == pytest.approx(math.log(2) / 4)
    for N in range(1, 6):
        assert entropy.finite_size_upper_bound(rules, N) >= lower
    for w in range(1, 5):
        assert entropy.strip_entropy_upper_bound(rules, w) >= lower


@pytest.mark.parametrize("w", [1, 2, 3, 4])
def test_acceptance_10_transfer_counts(w):
    rules = wr.wr_rules(wr.WrParams(1, 1))
    tm = entropy.TransferMatrix.build(rules, w)
    for length in range(1, 7):
        expected = enumerate_admissible(Shape.rect((0, 0), (length - 1, w - 1)), rules)
        if w * length <= 9:
            assert expected == brute_force_count(rect_sites(0, 0, length - 1, w - 1), "0+-", wr_rule_list(1, 1))
        assert tm.strip_count(length) == expected


# 11 ------------------------------------------------------------------------


def test_acceptance_11_entropy_inequalities():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        a, b = rng.integers(1, 6, 2)
        w = rng.random((a, b)) * (rng.random((a, b)) < 0.8)
        if w.sum() == 0:
            w[0, 0] = 1.0
        w /= w.sum()
        d = entropy.FiniteDistribution({(i, j): float(w[i, j]) for i in range(a) for j in range(b)})
        h = entropy.shannon_entropy(d)
        assert h <= math.log(a * b) + 1e-9
        assert h <= entropy.shannon_entropy(d.marginal([0])) + entropy.shannon_entropy(d.marginal([1])) + 1e-9
    for n in range(1, 50):
        assert entropy.shannon_entropy(entropy.FiniteDistribution.uniform(range(n))) == pytest.approx(math.log(n), abs=1e-12)
    pair = entropy.FiniteDistribution({(i, j): 1 / 6 for i in range(2) for j in range(3)})
    assert entropy.shannon_entropy(pair) == pytest.approx(
        entropy.shannon_entropy(pair.marginal([0])) + entropy.shannon_entropy(pair.marginal([1])), abs=1e-12)


# 12 ------------------------------------------------------------------------


def test_acceptance_12_lattice_animals():
    census = animals.animal_census(8)
    assert census.animals[:5] == (1, 2, 6, 19, 63)
    assert census.animals[:5] == tuple(len(naive_animals(n)) for n in range(1, 6))
    for n, (a, c) in enumerate(zip(census.animals, census.contours), start=1):
        assert a <= 8**n
        assert c <= 32**n


# 13 ------------------------------------------------------------------------


def test_acceptance_13_heat_bath_matches_exact():
    p = wr.WrParams(1, 1)
    bc = wr.delta_plus_boundary(2, 1)
    exact = entropy.FiniteDistribution(wr.exact_conditional_distribution(2, p, bc).weights)
    others = [s for s in Shape.square(1) if s != Coord(0, 0)]
    res = wr.heat_bath_sample(2, p, bc, 100_000, seed=13, record=others)
    draws = np.column_stack([res.center_symbol, res.recorded])
    counts = Counter(map(tuple, draws.tolist()))
    order = [Coord(0, 0)] + others
    target = {tuple(wr.WR_ALPHABET.index(x[s]) for s in order): pr for x, pr in exact.weights.items()}
    assert set(counts) <= set(target)
    tv = 0.5 * sum(abs(counts.get(key, 0) / len(draws) - pr) for key, pr in target.items())
    assert tv <= 0.05


def test_acceptance_13_minus_probability_decreases_in_r2():
    estimates = []
    for R2 in (1, 2, 4, 8):
        p = wr.WrParams(1, R2)
        runs = wr.run_chains(24, p, wr.delta_plus_boundary(24, 1), 600, 32, seed=12345, threads=4)
        centre = np.array([r.center_symbol[100:] for r in runs])
        estimates.append(wr.estimate_minus_event(centre))
    for a, b in zip(estimates, estimates[1:]):
        assert b.mean <= a.mean + 3 * math.hypot(a.conservative_stderr, b.conservative_stderr)


def test_acceptance_13_reports_reproducible(capsys):
    argv = ["wr-sample", "--r1", "1", "--r2", "2", "--k", "6", "--sweeps", "200", "--chains", "4",
            "--seed", "2024", "--burn-in", "20"]
    texts = []
    for extra in ([], ["--threads", "4"]):
        assert main(argv + extra) == 0
        obj = json.loads(capsys.readouterr().out)
        obj["provenance"].pop("runtime_ms")
        texts.append(json.dumps(obj, indent=2, sort_keys=True))
    assert texts[0] == texts[1]
