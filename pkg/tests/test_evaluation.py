import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from modelgrowth.evaluation import (
    EvaluationError,
    EvaluationRecord,
    ThresholdPolicy,
    chi_square_upper_tail,
    compare_approaches,
    evaluate_model,
    exact_kw_p_value,
    kruskal_wallis,
    mean_pct_deviation,
    midranks,
    read_evaluation_csv,
    rmse,
    threshold_counts,
    write_evaluation_csv,
)

finite = st.floats(-1e6, 1e6, allow_nan=False)


def chi2_tail_quad(x, df):
    k = df / 2.0
    pdf = lambda t: math.exp((k - 1) * math.log(t) - t / 2 - k * math.log(2) - math.lgamma(k)) if t > 0 else 0.0
    if x == 0:
        return 1.0
    val, _ = integrate.quad(pdf, 0, x, epsabs=1e-14, epsrel=1e-13, limit=200)
    return 1.0 - val


def test_rmse_examples():
    assert rmse([1, 2], [1, 2]) == 0
    assert rmse([2, 2], [0, 0]) == 2
    assert rmse([1, 2, 3, 4], [2, 4, 1, 3]) == pytest.approx(math.sqrt(10 / 4), abs=1e-12)
    with pytest.raises(EvaluationError):
        rmse([1], [1, 2])
    with pytest.raises(EvaluationError):
        rmse([], [])


@given(st.lists(st.tuples(finite, finite), min_size=1, max_size=30), finite)
def test_rmse_symmetry_and_translation(pairs, c):
    a = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    assert rmse(a, b) == rmse(b, a)
    assert rmse(a + c, b + c) == pytest.approx(rmse(a, b), rel=1e-9, abs=1e-6)


def test_mean_pct_deviation():
    assert mean_pct_deviation([5, 6], [5, 6]) == 0
    assert mean_pct_deviation([110], [100]) == pytest.approx(10.0)
    with pytest.raises(EvaluationError):
        mean_pct_deviation([1, 2], [1, 0])
    r = np.random.default_rng(0)
    p, t = r.uniform(1, 100, 20), r.uniform(1, 100, 20)
    oracle = sum(abs(pi - ti) / ti * 100 for pi, ti in zip(p, t)) / 20
    assert abs(mean_pct_deviation(p, t) - oracle) < 1e-12


def test_evaluate_model_records():
    truth = np.linspace(100, 130, 10)
    recs = evaluate_model("m", "LOC", {"HOLT": truth.copy(), "SVR": truth * 1.1}, truth)
    holt, svr = recs
    assert (holt.rmse_short, holt.rmse_long, holt.mean_pct_dev, holt.above_threshold) == (0, 0, 0, False)
    assert svr.mean_pct_dev == pytest.approx(10.0) and svr.above_threshold
    assert svr.rmse_short == pytest.approx(rmse(truth[:4] * 1.1, truth[:4]))


def test_evaluate_model_short_test_segments():
    excl = []
    assert evaluate_model("m", "BC", {"HOLT": [1, 2, 3]}, [1, 2, 3], exclusions=excl) == []
    assert excl[0]["reason"] == "test_shorter_than_short_steps"
    (rec,) = evaluate_model("m", "BC", {"HOLT": [1, 2, 3, 4]}, [1, 2, 3, 4])
    assert rec.rmse_long is None
    with pytest.raises(EvaluationError):
        evaluate_model("m", "BC", {"HOLT": [1, 2, 3, 4]}, [1, 2, 3, 4, 5])


def test_threshold_boundary_is_strict():
    truth = np.array([100.0, 200.0, 300.0, 400.0])
    pct = mean_pct_deviation(truth * 1.083, truth)
    for eps in (1e-9, 1e-6):
        below = ThresholdPolicy(max_error_pct=pct - eps)
        above = ThresholdPolicy(max_error_pct=pct + eps)
        assert evaluate_model("m", "LOC", {"A": truth * 1.083}, truth, below)[0].above_threshold
        assert not evaluate_model("m", "LOC", {"A": truth * 1.083}, truth, above)[0].above_threshold
    at = ThresholdPolicy(max_error_pct=pct)
    assert not evaluate_model("m", "LOC", {"A": truth * 1.083}, truth, at)[0].above_threshold


@given(st.lists(st.floats(0.5, 2.0), min_size=4, max_size=12), st.floats(1.0, 3.0))
def test_threshold_monotone_in_deviation(factors, k):
    truth = np.arange(1.0, len(factors) + 1) * 10
    pred = truth * np.array(factors)
    scaled = truth + k * (pred - truth)
    a = evaluate_model("m", "LOC", {"A": pred}, truth)[0]
    b = evaluate_model("m", "LOC", {"A": scaled}, truth)[0]
    assert b.mean_pct_dev >= a.mean_pct_dev - 1e-9
    assert b.above_threshold or not a.above_threshold


def test_policy_validation():
    with pytest.raises(ValueError):
        ThresholdPolicy(max_error_pct=0)
    with pytest.raises(ValueError):
        ThresholdPolicy(alpha=1.0)


def test_chi_square_tail_examples():
    assert chi_square_upper_tail(0, 3) == 1.0
    assert chi_square_upper_tail(7.2, 2) == pytest.approx(math.exp(-3.6), abs=1e-10)
    assert chi_square_upper_tail(9.49, 4) == pytest.approx(0.05, abs=1e-3)
    with pytest.raises(ValueError):
        chi_square_upper_tail(1.0, 0)
    with pytest.raises(ValueError):
        chi_square_upper_tail(-1.0, 2)


@pytest.mark.parametrize("df", range(1, 11))
def test_chi_square_tail_vs_quadrature(df):
    for x in (0.01, 0.5, 1.0, df * 0.7, df + 1.0, 2.0 * df + 3, 30.0):
        assert abs(chi_square_upper_tail(x, df) - chi2_tail_quad(x, df)) < 1e-8


def test_kw_textbook_case():
    r = kruskal_wallis([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    assert [g.mean_rank for g in r.groups] == [2, 5, 8]
    assert r.H == pytest.approx(7.2, abs=1e-12)
    assert r.p_value == pytest.approx(0.0273, abs=1e-4)
    assert r.df == 2 and r.tie_correction == 1.0


def test_kw_degenerate_cases():
    r = kruskal_wallis([[3, 4, 5], [3, 4, 5]])
    assert r.H == pytest.approx(0.0, abs=1e-12) and r.p_value == pytest.approx(1.0)
    r = kruskal_wallis([[2, 2], [2, 2, 2]])
    assert (r.H, r.p_value) == (0.0, 1.0)
    with pytest.raises(EvaluationError):
        kruskal_wallis([[1, 2, 3]])
    with pytest.raises(EvaluationError):
        kruskal_wallis([[1], []])
    with pytest.raises(EvaluationError):
        kruskal_wallis([[1], [2]])


def _midranks_oracle(x):
    s = sorted(x)
    return [np.mean([i + 1 for i, v in enumerate(s) if v == xi]) for xi in x]


@given(st.lists(st.integers(0, 5), min_size=1, max_size=15))
def test_midranks_oracle(xs):
    assert midranks(xs).tolist() == _midranks_oracle(xs)


@given(st.lists(st.lists(st.integers(0, 6), min_size=1, max_size=4), min_size=2, max_size=3))
def test_kw_rank_sum_total_and_monotone_invariance(groups):
    N = sum(len(g) for g in groups)
    if N < 3:
        return
    r = kruskal_wallis(groups)
    assert sum(g.rank_sum for g in r.groups) == pytest.approx(N * (N + 1) / 2)
    t = kruskal_wallis([[math.exp(v) * 3 + 1 for v in g] for g in groups])
    assert [g.mean_rank for g in t.groups] == pytest.approx([g.mean_rank for g in r.groups])
    assert t.H == pytest.approx(r.H, rel=1e-9, abs=1e-12)


def test_mean_ranks_match_exhaustive_assignment():
    r = np.random.default_rng(3)
    for _ in range(20):
        sizes = r.integers(2, 4, size=r.integers(2, 4))
        data = r.permutation(np.arange(sizes.sum()) * 1.5)
        groups = np.split(data, np.cumsum(sizes)[:-1])
        # brute force: a value's rank is 1 + how many values are smaller
        expect = [np.mean([1 + sum(v < x for v in data) for x in g]) for g in groups]
        got = [g.mean_rank for g in kruskal_wallis(groups).groups]
        assert got == pytest.approx(expect)


def test_exact_p_value_enumeration():
    p = exact_kw_p_value([[1, 2, 3], [4, 5, 6], [7, 8, 9]])
    # 6 of the 1680 partitions reach the extreme statistic
    assert p == pytest.approx(6 / 1680)
    assert kruskal_wallis([[1, 2], [3, 4]], exact=True).exact_p_value == pytest.approx(2 / 6)
    with pytest.raises(EvaluationError):
        exact_kw_p_value([list(range(6)), list(range(6, 12))])


def _records(errors_by_approach, metric="LOC", long=True):
    out = []
    for a, errs in errors_by_approach.items():
        for i, e in enumerate(errs):
            out.append(EvaluationRecord(f"m{i}", metric, a, e, e * 2 if long else None, e, False))
    return out


def test_compare_identical_errors_never_reject():
    errs = [1.0, 2.0, 3.0, 4.0]
    recs = _records({"HOLT": errs, "ARIMA": errs, "SVR": errs}) + \
        _records({"HOLT": errs, "ARIMA": errs, "SVR": errs}, metric="BC")
    rep = compare_approaches(recs)
    assert len(rep.tests) == 4
    for t in rep.tests:
        assert t.result.p_value == pytest.approx(1.0) and t.reject is False


def test_compare_worst_approach_ranks_highest():
    recs = _records({"HOLT": [1, 2, 3], "ARIMA": [1.5, 2.5, 0.5], "SVR": [10, 11, 12]})
    recs += _records({"HOLT": [1, 2, 3], "ARIMA": [1.5, 2.5, 0.5], "SVR": [10, 11, 12]}, metric="BC")
    rep = compare_approaches(recs, pairwise=True)
    for t in rep.tests:
        ranks = {g.label: g.mean_rank for g in t.result.groups}
        assert max(ranks, key=ranks.get) == "SVR"
        assert len(t.pairwise) == 3
    d = rep.to_dict()
    assert d["tests"][0]["decision"] in ("reject H0", "fail to reject H0")


def test_compare_skips_missing_long_and_errors_when_nothing_usable():
    recs = _records({"HOLT": [1, 2], "SVR": [3, 4]}, long=False)
    rep = compare_approaches(recs)
    assert rep.test("short", "LOC").result is not None
    assert rep.test("long", "LOC").skipped
    with pytest.raises(EvaluationError):
        compare_approaches(_records({"HOLT": [1, 2]}))


def test_evaluation_csv_roundtrip(tmp_path):
    recs = [EvaluationRecord("a/b.mdl", "LOC", "HOLT", 1.25, None, 3.5, False),
            EvaluationRecord("a,b.mdl", "BC", "SVR", 0.1, 2.0, 9.0, True)]
    write_evaluation_csv(recs, tmp_path / "e.csv")
    assert read_evaluation_csv(tmp_path / "e.csv") == recs
    assert threshold_counts(recs) == {"BC": {"SVR": 1}, "LOC": {"HOLT": 0}}
