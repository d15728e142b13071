import numpy as np
import pytest

from causalae.exceptions import ConfigurationError, EvaluationError
from causalae.metrics import (
    UpliftCurve,
    auuc,
    group_lift_curve,
    pehe,
    population_accuracy,
    wilcoxon_signed_rank,
)

from oracles import brute_force_auuc, naive_wilcoxon


# -- pehe ---------------------------------------------------------------------

def test_pehe_zero_for_perfect_prediction():
    ite = np.array([1.0, -1.0, 0.0, 1.0])
    assert pehe(ite, ite) == 0.0


def test_pehe_hand_value():
    assert pehe(np.array([1.0, -1.0]), np.zeros(2)) == pytest.approx(1.0)


def test_pehe_matches_elementwise_oracle():
    rng = np.random.default_rng(0)
    a = rng.standard_normal(40)
    b = rng.standard_normal(40)
    total = 0.0
    for x, y in zip(a, b):
        total += (x - y) ** 2
    assert pehe(a, b) == pytest.approx(total / 40, rel=1e-12)


def test_pehe_is_nonnegative_and_zero_only_when_equal():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = rng.standard_normal(10)
        b = rng.standard_normal(10)
        v = pehe(a, b)
        assert v >= 0.0
        assert (v == 0.0) == bool(np.array_equal(a, b))


def test_pehe_validation():
    with pytest.raises(ConfigurationError):
        pehe(np.zeros(3), np.zeros(4))
    with pytest.raises(ConfigurationError):
        pehe(np.zeros(0), np.zeros(0))


# -- lift curves ----------------------------------------------------------------

def test_lift_curve_all_positive_is_flat_zero():
    y = np.ones(5)
    assert np.allclose(group_lift_curve(y, np.arange(5)), 0.0)


def test_lift_curve_hand_values():
    assert np.allclose(group_lift_curve(np.array([1.0, 0.0]), np.array([0, 1])), [0.5, 0.0])
    assert np.allclose(group_lift_curve(np.array([0.0, 1.0]), np.array([0, 1])), [-0.5, 0.0])


def test_lift_curve_always_ends_at_zero():
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = int(rng.integers(1, 20))
        y = rng.integers(0, 2, n).astype(float)
        order = rng.permutation(n)
        assert group_lift_curve(y, order)[-1] == 0.0


def test_lift_curve_errors():
    with pytest.raises(EvaluationError):
        group_lift_curve(np.array([]), np.array([], dtype=int))
    with pytest.raises(ConfigurationError):
        group_lift_curve(np.array([1.0, 0.0]), np.array([0, 0]))


# -- auuc -------------------------------------------------------------------------

def test_auuc_constant_scores_match_oracle():
    y = np.array([1, 0, 1, 0, 0, 1])
    t = np.array([1, 1, 1, 0, 0, 0])
    scores = np.zeros(6)
    curve = auuc(scores, y, t)
    points, area = brute_force_auuc(scores.tolist(), y.tolist(), t.tolist())
    assert curve.uplifts.tolist() == points
    assert curve.auuc == area


def test_auuc_small_instance_frozen_value():
    # computed once with the brute-force oracle and pinned
    scores = np.array([2.0, 1.0, 2.0, 1.0])
    y = np.array([1, 0, 0, 0])
    t = np.array([1, 1, 0, 0])
    curve = auuc(scores, y, t)
    points, area = brute_force_auuc(scores.tolist(), y.tolist(), t.tolist())
    assert curve.uplifts.tolist() == points
    assert curve.auuc == area
    assert curve.auuc == 0.25
    assert curve.uplifts.tolist() == [0.5, 0.5, 0.0, 0.0]


def test_auuc_matches_oracle_on_random_instances():
    rng = np.random.default_rng(3)
    done = 0
    while done < 300:
        n = int(rng.integers(2, 13))
        t = rng.integers(0, 2, n)
        if t.min() == t.max():
            continue
        y = rng.integers(0, 2, n)
        scores = np.round(rng.standard_normal(n), 1)  # coarse values force ties
        curve = auuc(scores, y, t)
        points, area = brute_force_auuc(scores.tolist(), y.tolist(), t.tolist())
        assert curve.uplifts.tolist() == points
        assert curve.auuc == area
        done += 1


def test_auuc_invariant_under_monotone_transform():
    rng = np.random.default_rng(4)
    for _ in range(30):
        n = int(rng.integers(4, 40))
        t = np.concatenate([np.ones(n // 2, dtype=int), np.zeros(n - n // 2, dtype=int)])
        y = rng.integers(0, 2, n)
        scores = rng.standard_normal(n)
        base = auuc(scores, y, t)
        scaled = auuc(scores * 10.0, y, t)
        shifted = auuc(np.tanh(scores) + 5.0, y, t)
        assert np.array_equal(base.uplifts, scaled.uplifts)
        assert np.array_equal(base.uplifts, shifted.uplifts)
        assert base.auuc == scaled.auuc == shifted.auuc


def test_auuc_curve_shape_and_mean_invariant():
    rng = np.random.default_rng(5)
    n = 50
    t = rng.integers(0, 2, n)
    t[:2] = [0, 1]
    y = rng.integers(0, 2, n)
    curve = auuc(rng.standard_normal(n), y, t)
    assert len(curve.points) == n
    assert np.all(np.diff(curve.fractions) > 0)
    assert curve.fractions[-1] == 1.0
    assert curve.auuc == pytest.approx(float(np.mean(curve.uplifts)))


def test_auuc_requires_both_groups():
    with pytest.raises(EvaluationError):
        auuc(np.zeros(3), np.zeros(3), np.ones(3))


def test_uplift_curve_csv_roundtrip(tmp_path):
    curve = UpliftCurve(
        fractions=np.array([0.5, 1.0]), uplifts=np.array([0.25, 0.0]), auuc=0.125
    )
    path = tmp_path / "uplift.csv"
    curve.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "fraction,uplift"
    assert len(lines) == 3
    frac, up = lines[1].split(",")
    assert float(frac) == 0.5 and float(up) == 0.25


# -- population accuracy -----------------------------------------------------------

def test_population_accuracy_cases():
    a = np.array([0, 1, 2, 3])
    assert population_accuracy(a, a) == 1.0
    assert population_accuracy(a, (a + 1) % 4) == 0.0
    assert population_accuracy(np.array([0, 1, 2, 3]), np.array([0, 1, 0, 0])) == 0.5


# -- wilcoxon -----------------------------------------------------------------------

def test_wilcoxon_identical_samples_degenerate():
    a = np.array([1.0, 2.0, 3.0])
    result = wilcoxon_signed_rank(a, a)
    assert result.p_value == 1.0
    assert result.n_effective == 0


def test_wilcoxon_all_positive_distinct_ten_pairs():
    a = np.arange(1.0, 11.0)
    b = a - np.arange(1.0, 11.0) * 0.1  # strictly positive, distinct magnitudes
    result = wilcoxon_signed_rank(a, b)
    assert result.statistic == 0.0
    assert result.p_value == pytest.approx(2.0 / 1024.0)
    assert result.n_effective == 10


def test_wilcoxon_matches_naive_enumeration():
    rng = np.random.default_rng(6)
    for _ in range(60):
        n = int(rng.integers(1, 9))
        a = rng.integers(-3, 4, n).astype(float)  # small ints force ties and zeros
        b = rng.integers(-3, 4, n).astype(float)
        result = wilcoxon_signed_rank(a, b)
        w, p, n_eff = naive_wilcoxon(a.tolist(), b.tolist())
        assert result.statistic == pytest.approx(w)
        assert result.p_value == pytest.approx(p, abs=1e-12)
        assert result.n_effective == n_eff


def test_wilcoxon_is_symmetric():
    rng = np.random.default_rng(7)
    for _ in range(20):
        a = rng.standard_normal(9)
        b = rng.standard_normal(9)
        r1 = wilcoxon_signed_rank(a, b)
        r2 = wilcoxon_signed_rank(b, a)
        assert r1.statistic == r2.statistic
        assert r1.p_value == r2.p_value


def test_wilcoxon_normal_approximation_branch():
    rng = np.random.default_rng(8)
    a = rng.standard_normal(40)
    b = a + 0.1 + 0.05 * rng.standard_normal(40)
    result = wilcoxon_signed_rank(a, b)
    assert 0.0 <= result.p_value <= 1.0
    assert result.p_value < 0.05  # consistent shift must be detected
    r2 = wilcoxon_signed_rank(b, a)
    assert r2.p_value == result.p_value


def test_wilcoxon_validation():
    with pytest.raises(ConfigurationError):
        wilcoxon_signed_rank(np.zeros(0), np.zeros(0))
    with pytest.raises(ConfigurationError):
        wilcoxon_signed_rank(np.zeros(3), np.zeros(4))
