import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import sparse

from sftlab.entropy import (
    EmpiricalMeasure,
    FiniteDistribution,
    LabelGrid,
    TransferMatrix,
    WrGrid,
    block_entropy_rate,
    finite_size_upper_bound,
    placement_lower_bound,
    shannon_entropy,
    spectral_radius,
    strip_entropy_upper_bound,
)
from sftlab.errors import EmptyMeasure, InvalidDistribution, NonConvergence
from sftlab.grid import Alphabet, Pattern
from sftlab.widom_rowlinson import WR_ALPHABET, WrParams, wr_rules

from .oracles import brute_force_count, rect_sites, wr_rule_list
from .test_sft import HARD_SQUARE

weights = st.lists(st.floats(0.0, 10.0), min_size=1, max_size=12).filter(lambda w: sum(w) > 1e-6)


def normalise(w):
    s = math.fsum(w)
    return FiniteDistribution({i: x / s for i, x in enumerate(w)})


@given(weights)
def test_entropy_between_zero_and_log_support(w):
    d = normalise(w)
    h = shannon_entropy(d)
    assert -1e-12 <= h <= math.log(len(d.support)) + 1e-9


@given(st.lists(st.floats(0.01, 10.0), min_size=4, max_size=4 * 5).filter(lambda w: len(w) % 4 == 0))
def test_subadditivity(w):
    # joint distribution on pairs (i, j) with 4 values for j
    s = math.fsum(w)
    d = FiniteDistribution({(i // 4, i % 4): x / s for i, x in enumerate(w)})
    h = shannon_entropy(d)
    assert h <= shannon_entropy(d.marginal([0])) + shannon_entropy(d.marginal([1])) + 1e-9


def test_uniform_entropy():
    assert shannon_entropy(FiniteDistribution.uniform(range(7))) == pytest.approx(math.log(7))
    assert shannon_entropy(FiniteDistribution({"a": 1.0})) == 0.0


@pytest.mark.parametrize("w", [{"a": -0.1, "b": 1.1}, {"a": 0.5, "b": 0.4}, {}])
def test_invalid_distribution(w):
    with pytest.raises(InvalidDistribution):
        FiniteDistribution(w)


def test_empty_measure():
    with pytest.raises(EmptyMeasure):
        EmpiricalMeasure({}, 0).distribution()
    with pytest.raises(EmptyMeasure):
        block_entropy_rate(EmpiricalMeasure({}, 0), 2)


def test_block_entropy_rate_of_uniform_windows():
    samples = np.array(list(itertools.product((0, 1), repeat=4))).reshape(16, 2, 2)
    e = EmpiricalMeasure.from_arrays(Alphabet(("0", "1")), samples)
    assert block_entropy_rate(e, 2) == pytest.approx(math.log(2))


def test_finite_size_bound_values():
    rules = wr_rules(WrParams(1, 1))
    assert finite_size_upper_bound(rules, 1) == pytest.approx(math.log(3))
    assert finite_size_upper_bound(rules, 2) == pytest.approx(math.log(9) / 4)


@pytest.mark.parametrize("rules,w", [(wr_rules(WrParams(1, 1)), 1), (wr_rules(WrParams(1, 1)), 3),
                                     (wr_rules(WrParams(1, 2)), 2), (HARD_SQUARE, 4)])
def test_strip_counts_match_exhaustive(rules, w):
    tm = TransferMatrix.build(rules, w)
    tau = tm.thickness
    for length in range(1, 4):
        cols = length * tau
        if cols * w > 10:
            break
        if isinstance(rules, type(HARD_SQUARE)):
            from .oracles import brute_2x2_count
            expected = brute_2x2_count(cols, w, 2, rules.allowed)
        else:
            R1, R2 = rules.pairs[0].min_exclusive, rules.pairs[-1].min_exclusive
            expected = brute_force_count(rect_sites(0, 0, cols - 1, w - 1), "0+-", wr_rule_list(R1, R2))
        assert tm.strip_count(length) == expected


def test_spectral_radius_known_matrices():
    fib = np.array([[1, 1], [1, 0]])
    assert spectral_radius(fib) == pytest.approx((1 + math.sqrt(5)) / 2, rel=1e-10)
    # periodic: a 3-cycle has radius 1
    cyc = np.roll(np.eye(3), 1, axis=1)
    assert spectral_radius(cyc) == pytest.approx(1.0, rel=1e-10)
    # reducible: block diagonal picks the larger block, transient edges ignored
    m = np.zeros((4, 4))
    m[:2, :2] = 1
    m[2, 3] = m[3, 2] = 1
    m[0, 2] = 1
    assert spectral_radius(m) == pytest.approx(2.0, rel=1e-10)
    assert spectral_radius(np.zeros((3, 3))) == 0.0


@given(st.integers(2, 6), st.integers(0, 2**31 - 1))
def test_spectral_radius_matches_dense_eigenvalues(n, seed):
    a = np.random.default_rng(seed).integers(0, 3, (n, n))
    expected = max(abs(np.linalg.eigvals(a)))
    assert spectral_radius(sparse.csr_matrix(a), tol=1e-13) == pytest.approx(expected, rel=1e-8, abs=1e-9)


def test_non_convergence_reports_bracket():
    a = np.random.default_rng(0).integers(1, 5, (6, 6))
    with pytest.raises(NonConvergence) as exc:
        spectral_radius(a, tol=1e-15, max_iter=1)
    lo, hi = exc.value.bracket
    assert lo <= max(abs(np.linalg.eigvals(a))) <= hi


def test_hard_square_strip_bound():
    # the hard-square entropy is about 0.4075; strip bounds lie above it
    vals = [strip_entropy_upper_bound(HARD_SQUARE, w) for w in (1, 2, 4, 6)]
    assert all(v > 0.4075 for v in vals)
    # 2x2 rules do not constrain a single row; two rows give lambda = 1 + sqrt 2
    assert vals[0] == pytest.approx(math.log(2))
    assert vals[1] == pytest.approx(math.log(1 + math.sqrt(2)) / 2)


def test_strip_bound_above_lower_bound():
    rules = wr_rules(WrParams(1, 2))
    lower = placement_lower_bound(WrGrid(1)).value
    for w in (1, 2, 3):
        assert strip_entropy_upper_bound(rules, w) >= lower


def test_placement_lower_bound_values_and_witnesses():
    lb = placement_lower_bound(WrGrid(1), N=4, rules=wr_rules(WrParams(1, 3)))
    assert lb.value == pytest.approx(math.log(2) / 4)
    assert lb.witnesses == 2**4 and lb.witnesses_admissible
    assert placement_lower_bound(WrGrid(2, d=3)).value == pytest.approx(math.log(2) / 27)
    assert placement_lower_bound(LabelGrid(0.25, 3)).value == pytest.approx(0.25 * math.log(3))
    with pytest.raises(ValueError):
        placement_lower_bound(WrGrid(0))
    with pytest.raises(TypeError):
        placement_lower_bound("grid")


def test_empirical_measure_from_windows():
    a = Pattern.from_symbols(WR_ALPHABET, [["0"]])
    b = Pattern.from_symbols(WR_ALPHABET, [["+"]])
    e = EmpiricalMeasure.from_windows([a, a, b, a])
    assert e.distribution().prob(a) == pytest.approx(0.75)
