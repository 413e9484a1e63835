"""Seeded synthetic model histories for tests, benchmarks and demos.

Model sizes grow roughly linearly with occasional clean-up drops, which is
the shape the forecasters are meant for. The generator also reports the
true per-revision sizes so mining and measurement can be checked against it.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .mining import MANIFEST
from .timeseries import SECONDS_PER_DAY, UnevenSeries

_EPOCH = dt.date(1970, 1, 1)


def _ts(day: dt.date) -> int:
    return (day - _EPOCH).days * SECONDS_PER_DAY


@dataclass(frozen=True)
class TruthRow:
    rev_index: str
    commit_id: str
    timestamp: int
    model_id: str
    loc: int
    block_count: int


def render_model(name: str, blocks: int, rng: np.random.Generator) -> tuple[str, int]:
    """A parseable model with ``blocks`` Block sections; returns (text, loc)."""
    lines = ["Model {", f'  Name "{name}"', "  System {"]
    open_subsystems = 0
    for b in range(blocks):
        if open_subsystems < 3 and rng.random() < 0.08:
            lines.append("    " * (open_subsystems + 1) + "System {")
            open_subsystems += 1
        pad = "    " * (open_subsystems + 1)
        lines += [pad + "Block {", pad + '  BlockType "Gain"', pad + f'  Name "b{b}"']
        if rng.random() < 0.5:
            lines.append(pad + f"  Gain {int(rng.integers(1, 100))}")
        lines.append(pad + "}")
        if open_subsystems and rng.random() < 0.15:
            lines.append("    " * open_subsystems + "}")
            open_subsystems -= 1
    while open_subsystems:
        lines.append("    " * open_subsystems + "}")
        open_subsystems -= 1
    lines += ["  }", "}"]
    return "\n".join(lines) + "\n", len(lines)


def growth_path(rng, n: int, start_blocks: int | None = None) -> np.ndarray:
    """Block counts over ``n`` revisions: linear drift, noise, rare drops."""
    b0 = int(rng.integers(20, 80)) if start_blocks is None else start_blocks
    slope = rng.uniform(0.5, 3.0)
    steps = slope + rng.normal(0.0, slope * 0.6, n - 1)
    drops = rng.random(n - 1) < 0.04
    steps[drops] = -rng.uniform(2.0, 10.0, drops.sum())
    return np.maximum(1, np.round(b0 + np.concatenate(([0.0], np.cumsum(steps))))).astype(int)


def commit_days(rng, n: int, start: dt.date, end: dt.date) -> list[dt.date]:
    span = (end - start).days
    offsets = np.sort(rng.choice(span + 1, size=n, replace=n > span + 1))
    return [start + dt.timedelta(days=int(o)) for o in offsets]


def write_snapshot_corpus(root, n_models: int = 3, seed: int = 0,
                          start: dt.date = dt.date(2015, 1, 1), end: dt.date = dt.date(2016, 6, 30),
                          revisions: tuple[int, int] = (25, 45)) -> list[TruthRow]:
    """Write ``<root>/<rev>/models/*.mdl`` snapshots plus ``manifest.tsv``.

    Each commit changes exactly one model. Returns the ground truth rows in
    commit order.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    events = []
    for m in range(n_models):
        n = int(rng.integers(revisions[0], revisions[1] + 1))
        days = commit_days(rng, n, start, end)
        sizes = growth_path(rng, n)
        for k, (day, size) in enumerate(zip(days, sizes)):
            secs = int(rng.integers(0, SECONDS_PER_DAY))
            events.append((_ts(day) + secs, m, k, int(size)))
    events.sort()
    current: dict[str, str] = {}
    truth = []
    with open(root / MANIFEST, "w", encoding="utf-8", newline="\n") as man:
        man.write("rev_index\tcommit_id\tunix_timestamp\n")
        for i, (ts, m, k, size) in enumerate(events):
            model_id = f"models/model_{m:02d}.mdl"
            text, loc = render_model(f"model_{m:02d}", size, rng)
            current[model_id] = text
            rev = f"{i:05d}"
            commit = f"c{seed:04d}{i:06d}"
            for mid, body in current.items():
                p = root / rev / mid
                p.parent.mkdir(parents=True, exist_ok=True)
                p.write_text(body, encoding="utf-8", newline="\n")
            man.write(f"{rev}\t{commit}\t{ts}\n")
            truth.append(TruthRow(rev, commit, ts, model_id, loc, size))
    return truth


def trending_daily_corpus(n_series: int = 48, seed: int = 0, train_end: dt.date = dt.date(2015, 12, 31),
                          test_end: dt.date = dt.date(2016, 6, 30), mean_train_days: int = 78):
    """Uneven upward-trending size series, one per model, as ``UnevenSeries``.

    Start days are drawn so the training segment averages ``mean_train_days``
    days; commits continue up to ``test_end``.
    """
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_series):
        train_days = int(rng.integers(mean_train_days - 28, mean_train_days + 29))
        start = train_end - dt.timedelta(days=train_days - 1)
        span = (test_end - start).days + 1
        n = int(rng.integers(max(30, span // 4), span // 2))
        days = commit_days(rng, n, start, test_end)
        if days[0] != start:
            days[0] = start
        sizes = growth_path(rng, n) * 12 + rng.integers(0, 12, n)
        ts = np.array([_ts(d) + 3600 * (j % 24) for j, d in enumerate(days)], dtype=np.int64)
        order = np.argsort(ts, kind="mergesort")
        out.append((f"model_{i:02d}", UnevenSeries(ts[order], sizes.astype(float))))
    return out
