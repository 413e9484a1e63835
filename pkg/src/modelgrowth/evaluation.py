"""Forecast scoring and approach comparison.

RMSE and mean absolute percent deviation per forecast, the practitioner
threshold flag, and Kruskal-Wallis tests over the per-model errors.
"""

from __future__ import annotations

import csv
import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

log = logging.getLogger(__name__)

METRICS = ("LOC", "BC")
APPROACH_ORDER = ("HOLT", "ARIMA", "SVR", "ANN", "LSTM")
EVAL_COLUMNS = ("model_id", "metric", "approach", "rmse_short", "rmse_long",
                "mean_pct_dev", "above_threshold")


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ThresholdPolicy:
    """Practitioner acceptance constants.

    ``horizon_days`` is the forecast reach engineers asked for; it is
    reported alongside results but does not change how errors are scored.
    """

    max_error_pct: float = 8.3
    horizon_days: int = 28
    alpha: float = 0.05
    short_steps: int = 4

    def __post_init__(self):
        if self.max_error_pct <= 0:
            raise ValueError("max_error_pct must be > 0")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.horizon_days < 1 or self.short_steps < 1:
            raise ValueError("horizon_days and short_steps must be positive")


@dataclass(frozen=True)
class EvaluationRecord:
    model_id: str
    metric: str
    approach: str
    rmse_short: float
    rmse_long: float | None
    mean_pct_dev: float
    above_threshold: bool


def _pair(pred, truth):
    p = np.asarray(pred, dtype=np.float64).ravel()
    t = np.asarray(truth, dtype=np.float64).ravel()
    if p.size != t.size:
        raise EvaluationError(f"length mismatch: {p.size} predictions vs {t.size} truths")
    if p.size == 0:
        raise EvaluationError("cannot score an empty forecast")
    return p, t


def rmse(pred, truth) -> float:
    p, t = _pair(pred, truth)
    d = p - t
    return float(np.sqrt(np.dot(d, d) / d.size))


def mean_pct_deviation(pred, truth) -> float:
    """Mean of ``|pred - truth| / truth * 100``; truths must be positive."""
    p, t = _pair(pred, truth)
    if np.any(t <= 0):
        raise EvaluationError("percent deviation needs strictly positive ground truth")
    return float(np.mean(np.abs(p - t) / t) * 100.0)


def evaluate_model(model_id, metric, forecasts: dict, test, policy: ThresholdPolicy | None = None,
                   exclusions: list | None = None):
    """One record per approach.

    ``rmse_short`` covers the first ``short_steps`` values, ``rmse_long`` the
    whole test segment and is ``None`` when the segment is not longer than
    the short horizon. A test segment shorter than ``short_steps`` excludes
    the model (empty result, logged and appended to ``exclusions``).
    """
    policy = policy or ThresholdPolicy()
    truth = np.asarray(getattr(test, "values", test), dtype=np.float64)
    if truth.size < policy.short_steps:
        log.warning("%s/%s excluded: test segment has %d < %d steps",
                    model_id, metric, truth.size, policy.short_steps)
        if exclusions is not None:
            exclusions.append({"model_id": model_id, "metric": metric, "stage": "evaluate",
                               "reason": "test_shorter_than_short_steps",
                               "test_length": int(truth.size)})
        return []
    out = []
    for approach, pred in forecasts.items():
        pred = np.asarray(pred, dtype=np.float64)
        if pred.size != truth.size:
            raise EvaluationError(f"{model_id}/{metric}/{approach}: forecast length {pred.size} "
                                  f"!= test length {truth.size}")
        s = policy.short_steps
        long = rmse(pred, truth) if truth.size > s else None
        pct = mean_pct_deviation(pred, truth)
        out.append(EvaluationRecord(model_id, metric, str(approach), rmse(pred[:s], truth[:s]),
                                    long, pct, pct > policy.max_error_pct))
    return out


def write_evaluation_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVAL_COLUMNS)
        for r in records:
            w.writerow([r.model_id, r.metric, r.approach, repr(r.rmse_short),
                        "" if r.rmse_long is None else repr(r.rmse_long),
                        repr(r.mean_pct_dev), "true" if r.above_threshold else "false"])


def read_evaluation_csv(path) -> list[EvaluationRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != EVAL_COLUMNS:
            raise EvaluationError(f"{path}: expected columns {','.join(EVAL_COLUMNS)}")
        return [EvaluationRecord(row["model_id"], row["metric"], row["approach"],
                                 float(row["rmse_short"]),
                                 float(row["rmse_long"]) if row["rmse_long"] else None,
                                 float(row["mean_pct_dev"]),
                                 row["above_threshold"].strip().lower() == "true")
                for row in reader]


def approach_sort_key(name: str):
    return (APPROACH_ORDER.index(name), "") if name in APPROACH_ORDER else (len(APPROACH_ORDER), name)


def threshold_counts(records) -> dict[str, dict[str, int]]:
    """Per metric and approach: how many models exceed the error threshold."""
    out: dict[str, dict[str, int]] = {}
    for r in records:
        out.setdefault(r.metric, {}).setdefault(r.approach, 0)
        out[r.metric][r.approach] += int(r.above_threshold)
    return {m: dict(sorted(c.items(), key=lambda kv: approach_sort_key(kv[0])))
            for m, c in sorted(out.items())}


# ---------------------------------------------------------------- chi-square tail

def _gamma_p_series(a, x):
    term = 1.0 / a
    total = term
    ap = a
    for _ in range(100_000):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * 1e-17:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_q_contfrac(a, x):
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 100_000):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def chi_square_upper_tail(x: float, df: int) -> float:
    """P(X >= x) for X ~ chi-square(df), via the regularised incomplete gamma.

    Uses the power series below ``x/2 < df/2 + 1`` and the Lentz continued
    fraction above it.
    """
    if df <= 0 or int(df) != df:
        raise ValueError("df must be a positive integer")
    if x < 0 or math.isnan(x):
        raise ValueError("x must be >= 0")
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    a, z = df / 2.0, x / 2.0
    if z < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _gamma_p_series(a, z)))
    return min(1.0, max(0.0, _gamma_q_contfrac(a, z)))


# ---------------------------------------------------------------- Kruskal-Wallis

def midranks(values) -> np.ndarray:
    """1-based ranks; tied values share the mean of their positions."""
    x = np.asarray(values, dtype=np.float64)
    order = np.argsort(x, kind="mergesort")
    sx = x[order]
    ranks = np.empty(x.size)
    starts = np.flatnonzero(np.r_[True, sx[1:] != sx[:-1]])
    ends = np.r_[starts[1:], x.size]
    for s, e in zip(starts, ends):
        ranks[order[s:e]] = 0.5 * (s + 1 + e)
    return ranks


@dataclass(frozen=True)
class GroupRank:
    label: str
    n: int
    rank_sum: float
    mean_rank: float


@dataclass(frozen=True)
class KWTestResult:
    groups: list[GroupRank]
    H: float
    tie_correction: float
    df: int
    p_value: float
    exact_p_value: float | None = None

    def to_dict(self) -> dict:
        return asdict(self)


def _h_from_sums(rank_sums, sizes, N, tie_correction):
    s = float(np.sum(np.asarray(rank_sums) ** 2 / np.asarray(sizes)))
    return (12.0 / (N * (N + 1)) * s - 3.0 * (N + 1)) / tie_correction


def _partition_sums(ranks, sizes):
    """Yield rank sums for every split of ``ranks`` into groups of ``sizes``."""
    idx = tuple(range(len(ranks)))

    def rec(remaining, k):
        if k == len(sizes) - 1:
            yield (sum(ranks[i] for i in remaining),)
            return
        for combo in itertools.combinations(remaining, sizes[k]):
            chosen = set(combo)
            rest = tuple(i for i in remaining if i not in chosen)
            head = sum(ranks[i] for i in combo)
            for tail in rec(rest, k + 1):
                yield (head,) + tail

    yield from rec(idx, 0)


def exact_kw_p_value(groups, max_n: int = 10) -> float:
    """Permutation p-value of H by full enumeration (small samples only)."""
    samples = [np.asarray(g, dtype=np.float64).ravel() for g in groups]
    sizes = [s.size for s in samples]
    N = sum(sizes)
    if N > max_n:
        raise EvaluationError(f"exact enumeration limited to N <= {max_n}, got {N}")
    ranks = midranks(np.concatenate(samples))
    observed = []
    pos = 0
    for n in sizes:
        observed.append(ranks[pos : pos + n].sum())
        pos += n
    stat = lambda sums: float(np.sum(np.asarray(sums) ** 2 / np.asarray(sizes)))  # noqa: E731
    obs = stat(observed)
    tol = 1e-9 * max(1.0, abs(obs))
    hits = total = 0
    rank_list = ranks.tolist()
    for sums in _partition_sums(rank_list, sizes):
        total += 1
        hits += stat(sums) >= obs - tol
    return hits / total


def kruskal_wallis(groups, labels=None, exact: bool = False) -> KWTestResult:
    """Kruskal-Wallis H with tie correction and a chi-square(k-1) p-value.

    When every observation is identical the statistic is undefined; we
    report H = 0 and p = 1 (tie correction 0). ``exact=True`` adds the
    permutation p-value for N <= 10.
    """
    samples = [np.asarray(g, dtype=np.float64).ravel() for g in groups]
    if len(samples) < 2:
        raise EvaluationError("Kruskal-Wallis needs at least two groups")
    if any(s.size == 0 for s in samples):
        raise EvaluationError("every group must be non-empty")
    labels = [str(i) for i in range(len(samples))] if labels is None else [str(l) for l in labels]
    N = sum(s.size for s in samples)
    if N < 3:
        raise EvaluationError("Kruskal-Wallis needs at least three observations")
    pooled = np.concatenate(samples)
    ranks = midranks(pooled)
    out_groups = []
    sums, sizes = [], []
    pos = 0
    for label, s in zip(labels, samples):
        r = float(ranks[pos : pos + s.size].sum())
        pos += s.size
        sums.append(r)
        sizes.append(s.size)
        out_groups.append(GroupRank(label, int(s.size), r, r / s.size))
    _, counts = np.unique(pooled, return_counts=True)
    t = counts.astype(np.float64)
    tie_correction = 1.0 - float(np.sum(t ** 3 - t)) / (N ** 3 - N)
    df = len(samples) - 1
    if tie_correction <= 0.0:
        H, p = 0.0, 1.0
    else:
        H = max(0.0, _h_from_sums(sums, sizes, N, tie_correction))
        p = chi_square_upper_tail(H, df)
    exact_p = exact_kw_p_value(samples) if exact else None
    return KWTestResult(out_groups, H, tie_correction, df, p, exact_p)


# ---------------------------------------------------------------- comparison

def normality_advisory(values) -> dict:
    """Skewness/excess-kurtosis z-scores; advisory only, not a formal test."""
    x = np.asarray(values, dtype=np.float64)
    n = x.size
    if n < 4 or np.std(x) == 0:
        return {"n": int(n), "skewness": None, "excess_kurtosis": None, "looks_normal": None}
    z = (x - x.mean()) / x.std()
    skew = float(np.mean(z ** 3))
    kurt = float(np.mean(z ** 4) - 3.0)
    zs, zk = skew / math.sqrt(6.0 / n), kurt / math.sqrt(24.0 / n)
    return {"n": int(n), "skewness": skew, "excess_kurtosis": kurt,
            "looks_normal": bool(abs(zs) <= 1.96 and abs(zk) <= 1.96)}


@dataclass
class ComparisonTest:
    horizon: str
    metric: str
    result: KWTestResult | None = None
    reject: bool | None = None
    skipped: str | None = None
    normality: dict = field(default_factory=dict)
    pairwise: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = {"horizon": self.horizon, "metric": self.metric}
        if self.result is None:
            d["skipped"] = self.skipped
            return d
        r = self.result
        d.update({
            "n": sum(g.n for g in r.groups),
            "groups": [{"approach": g.label, "n": g.n, "rank_sum": g.rank_sum,
                        "mean_rank": g.mean_rank} for g in r.groups],
            "H": r.H, "tie_correction": r.tie_correction, "df": r.df, "p_value": r.p_value,
            "decision": "reject H0" if self.reject else "fail to reject H0",
            "normality": self.normality,
        })
        if self.pairwise:
            d["pairwise"] = self.pairwise
        return d


@dataclass
class ComparisonReport:
    policy: ThresholdPolicy
    tests: list[ComparisonTest]

    def to_dict(self) -> dict:
        return {"policy": asdict(self.policy), "tests": [t.to_dict() for t in self.tests]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def test(self, horizon, metric) -> ComparisonTest:
        for t in self.tests:
            if t.horizon == horizon and t.metric == metric:
                return t
        raise KeyError((horizon, metric))


def compare_approaches(records, policy: ThresholdPolicy | None = None,
                       pairwise: bool = False) -> ComparisonReport:
    """Four Kruskal-Wallis tests: {short, long} x {LOC, BC}.

    Long-term tests use only records carrying ``rmse_long``. A test whose
    data has fewer than two approaches with two or more values is reported
    as skipped; if all four are skipped that is an error.
    """
    policy = policy or ThresholdPolicy()
    records = list(records)
    tests = []
    metrics = [m for m in METRICS if any(r.metric == m for r in records)]
    metrics += sorted({r.metric for r in records} - set(METRICS))
    for horizon in ("short", "long"):
        for metric in metrics or list(METRICS):
            by_approach: dict[str, list[float]] = {}
            for r in records:
                if r.metric != metric:
                    continue
                value = r.rmse_short if horizon == "short" else r.rmse_long
                if value is not None:
                    by_approach.setdefault(r.approach, []).append(value)
            usable = {a: v for a, v in by_approach.items() if len(v) >= 2}
            t = ComparisonTest(horizon, metric)
            if len(usable) < 2:
                t.skipped = "fewer than 2 approaches with >= 2 values"
                tests.append(t)
                continue
            names = sorted(usable, key=approach_sort_key)
            t.result = kruskal_wallis([usable[a] for a in names], names)
            t.reject = t.result.p_value < policy.alpha
            t.normality = {a: normality_advisory(usable[a]) for a in names}
            if pairwise:
                for a, b in itertools.combinations(names, 2):
                    pr = kruskal_wallis([usable[a], usable[b]], [a, b])
                    t.pairwise.append({"a": a, "b": b, "H": pr.H, "p_value": pr.p_value,
                                       "reject": pr.p_value < policy.alpha})
            tests.append(t)
    if all(t.result is None for t in tests):
        raise EvaluationError("no comparison possible: need >= 2 approaches with >= 2 records each")
    return ComparisonReport(policy, tests)
