"""Revision history of model files.

Two sources are supported: a git working copy (read through the ``git``
command line, first-parent history only) and a snapshot directory holding
one subdirectory per revision plus ``manifest.tsv``.
"""

from __future__ import annotations

import csv
import datetime as dt
import logging
import subprocess
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fnmatch import fnmatchcase
from pathlib import Path

from .metrics import PARSE_FAILED, measure

log = logging.getLogger(__name__)

MANIFEST = "manifest.tsv"
REVISION_COLUMNS = ("model_id", "commit_id", "timestamp", "loc", "block_count")
HISTORY_COLUMNS = ("model_id", "commit_id", "timestamp", "ref")


class MiningError(RuntimeError):
    pass


def _date(value):
    if value is None or isinstance(value, dt.date):
        return value
    return dt.date.fromisoformat(str(value))


@dataclass(frozen=True)
class RepoSource:
    root_path: Path
    include_patterns: tuple[str, ...] = ("*.mdl",)
    since: dt.date | None = None
    until: dt.date | None = None

    def __post_init__(self):
        object.__setattr__(self, "root_path", Path(self.root_path))
        pats = (self.include_patterns,) if isinstance(self.include_patterns, str) else self.include_patterns
        object.__setattr__(self, "include_patterns", tuple(pats))
        object.__setattr__(self, "since", _date(self.since))
        object.__setattr__(self, "until", _date(self.until))
        if not self.include_patterns:
            raise ValueError("include_patterns must not be empty")
        if self.since and self.until and self.since > self.until:
            raise ValueError("since must not be after until")

    def matches(self, path: str) -> bool:
        return any(fnmatchcase(path, p) for p in self.include_patterns)

    def in_window(self, timestamp: int) -> bool:
        day = dt.datetime.fromtimestamp(timestamp, dt.timezone.utc).date()
        return (self.since is None or day >= self.since) and (self.until is None or day <= self.until)

    @property
    def is_snapshot(self) -> bool:
        return (self.root_path / MANIFEST).is_file()


@dataclass(frozen=True)
class Revision:
    """One change to one model file; ``ref`` locates its content."""

    commit_id: str
    timestamp: int
    ref: str
    seq: int
    content: bytes | None = None


@dataclass(frozen=True)
class RevisionRecord:
    model_id: str
    commit_id: str
    timestamp: int
    loc: int
    block_count: int

    @property
    def flagged(self) -> bool:
        return self.block_count == PARSE_FAILED


# ---------------------------------------------------------------- snapshot mode

def read_manifest(root: Path) -> list[tuple[str, str, int]]:
    """Rows ``(rev_index, commit_id, timestamp)``; a header line is tolerated."""
    rows = []
    with open(root / MANIFEST, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise MiningError(f"{root / MANIFEST}:{n}: expected 3 tab-separated columns")
            try:
                ts = int(parts[2])
            except ValueError:
                if n == 1:
                    continue
                raise MiningError(f"{root / MANIFEST}:{n}: bad timestamp {parts[2]!r}") from None
            if ts <= 0:
                raise MiningError(f"{root / MANIFEST}:{n}: timestamp must be positive")
            rows.append((parts[0], parts[1], ts))
    return rows


def _snapshot_files(rev_dir: Path, src: RepoSource) -> dict[str, Path]:
    if not rev_dir.is_dir():
        raise MiningError(f"snapshot directory {rev_dir} missing")
    out = {}
    for p in rev_dir.rglob("*"):
        if p.is_file():
            rel = p.relative_to(rev_dir).as_posix()
            if src.matches(rel):
                out[rel] = p
    return out


def _snapshot_revisions(src: RepoSource, with_content: bool):
    root = src.root_path
    history: dict[str, list[Revision]] = {}
    previous: dict[str, bytes] = {}
    for seq, (rev, commit, ts) in enumerate(read_manifest(root)):
        files = _snapshot_files(root / rev, src)
        current = {rel: p.read_bytes() for rel, p in files.items()}
        if src.in_window(ts):
            for rel in sorted(current):
                if previous.get(rel) != current[rel]:
                    content = current[rel] if with_content else None
                    history.setdefault(rel, []).append(Revision(commit, ts, rev, seq, content))
        previous = current
    return history


# ---------------------------------------------------------------- git mode

def _git(root: Path, *args, input_bytes=None) -> bytes:
    try:
        proc = subprocess.run(["git", "-C", str(root), *args], input=input_bytes,
                              capture_output=True, check=False)
    except FileNotFoundError as exc:
        raise MiningError("git executable not found") from exc
    if proc.returncode != 0:
        msg = proc.stderr.decode("utf-8", "replace").strip()
        if "does not have any commits" in msg:
            return b""
        raise MiningError(f"git {args[0]} failed in {root}: {msg}")
    return proc.stdout


def _git_log(root: Path):
    """Yield ``(seq, commit, timestamp, [(status, path)])`` oldest first."""
    out = _git(root, "log", "--first-parent", "--topo-order", "--reverse", "--no-renames",
               "--diff-merges=first-parent", "--name-status", "-z", "--format=%x01%H %ct")
    commit = None
    changes: list = []
    tokens = out.split(b"\0")
    i = seq = 0
    while i < len(tokens):
        tok = tokens[i].lstrip(b"\n")
        i += 1
        if not tok:
            continue
        if tok.startswith(b"\x01"):
            if commit is not None:
                yield (seq, *commit, changes)
                seq += 1
            sha, ts = tok[1:].decode().split()
            commit, changes = (sha, int(ts)), []
        else:
            changes.append((tok.decode()[:1], tokens[i].decode("utf-8", "surrogateescape")))
            i += 1
    if commit is not None:
        yield (seq, *commit, changes)


def _git_blobs(root: Path, refs: list[str]) -> list[bytes]:
    if not refs:
        return []
    out = _git(root, "cat-file", "--batch", input_bytes="".join(r + "\n" for r in refs).encode())
    blobs = []
    pos = 0
    for ref in refs:
        nl = out.index(b"\n", pos)
        header = out[pos:nl].split()
        if len(header) < 3:
            raise MiningError(f"cannot read {ref}: {out[pos:nl].decode(errors='replace')}")
        size = int(header[2])
        blobs.append(out[nl + 1 : nl + 1 + size])
        pos = nl + 1 + size + 1
    return blobs


def _git_revisions(src: RepoSource, with_content: bool):
    history: dict[str, list[Revision]] = {}
    for seq, sha, ts, changes in _git_log(src.root_path):
        for status, path in changes:
            if not src.matches(path):
                continue
            if status != "D" and src.in_window(ts):
                history.setdefault(path, []).append(Revision(sha, ts, sha, seq))
    if with_content:
        keys = [(m, k) for m in history for k in range(len(history[m]))]
        blobs = _git_blobs(src.root_path, [f"{history[m][k].ref}:{m}" for m, k in keys])
        for (m, k), blob in zip(keys, blobs):
            r = history[m][k]
            history[m][k] = Revision(r.commit_id, r.timestamp, r.ref, r.seq, blob)
    return history


# ---------------------------------------------------------------- public API

def list_model_revisions(src: RepoSource, with_content: bool = True) -> dict[str, list[Revision]]:
    """Per model file, the revisions that changed it, oldest first.

    Ordering is by (timestamp, commit sequence). A file deleted and never
    re-added simply stops; re-adding it continues the same series.
    """
    root = src.root_path
    if not root.is_dir():
        raise MiningError(f"repository {root} is not a readable directory")
    if src.is_snapshot:
        history = _snapshot_revisions(src, with_content)
    elif (root / ".git").exists() or _is_git(root):
        history = _git_revisions(src, with_content)
    else:
        raise MiningError(f"{root} is neither a git repository nor a snapshot directory "
                          f"(no {MANIFEST})")
    return {m: sorted(history[m], key=lambda r: (r.timestamp, r.seq)) for m in sorted(history)}


def _is_git(root: Path) -> bool:
    try:
        return _git(root, "rev-parse", "--git-dir") != b""
    except MiningError:
        return False


def read_content(src: RepoSource, model_id: str, ref: str) -> bytes:
    if src.is_snapshot:
        return (src.root_path / ref / model_id).read_bytes()
    return _git_blobs(src.root_path, [f"{ref}:{model_id}"])[0]


def measure_revisions(revisions: dict, src: RepoSource | None = None, jobs: int = 1) -> list[RevisionRecord]:
    """Measure every revision; models are processed in parallel, order is kept.

    Revisions without attached content are read from ``src``.
    """

    def one(item):
        model_id, revs = item
        out = []
        for r in revs:
            content = r.content
            if content is None:
                if src is None:
                    raise MiningError(f"no content for {model_id}@{r.commit_id} and no source given")
                content = read_content(src, model_id, r.ref)
            size = measure(content.decode("utf-8", errors="replace"))
            if size.block_count == PARSE_FAILED:
                log.warning("block parse failed for %s at %s", model_id, r.commit_id)
            out.append(RevisionRecord(model_id, r.commit_id, int(r.timestamp), size.loc, size.block_count))
        return out

    items = sorted(revisions.items())
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(one, items))
    else:
        parts = [one(it) for it in items]
    return [rec for part in parts for rec in part]


def group_records(records) -> dict[str, list[RevisionRecord]]:
    out: dict[str, list[RevisionRecord]] = {}
    for r in records:
        out.setdefault(r.model_id, []).append(r)
    return out


# ---------------------------------------------------------------- files

def write_history_csv(history: dict, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HISTORY_COLUMNS)
        for model_id in sorted(history):
            for r in history[model_id]:
                w.writerow([model_id, r.commit_id, r.timestamp, r.ref])


def read_history_csv(path) -> dict[str, list[Revision]]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path.name} not found (expected at {path})")
    out: dict[str, list[Revision]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != HISTORY_COLUMNS:
            raise MiningError(f"{path}: expected columns {','.join(HISTORY_COLUMNS)}")
        for seq, row in enumerate(reader):
            out.setdefault(row["model_id"], []).append(
                Revision(row["commit_id"], int(row["timestamp"]), row["ref"], seq))
    return out


def write_revisions_csv(records, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(REVISION_COLUMNS)
        for r in records:
            w.writerow([r.model_id, r.commit_id, r.timestamp, r.loc, r.block_count])


def read_revisions_csv(path) -> list[RevisionRecord]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"{path.name} not found (expected at {path})")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REVISION_COLUMNS:
            raise MiningError(f"{path}: expected columns {','.join(REVISION_COLUMNS)}")
        return [RevisionRecord(row["model_id"], row["commit_id"], int(row["timestamp"]),
                               int(row["loc"]), int(row["block_count"])) for row in reader]
