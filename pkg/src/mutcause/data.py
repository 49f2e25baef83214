"""Per-mutant records: CSV ingest, descriptive statistics, preprocessing."""
from __future__ import annotations

import csv
import io
import logging
import math
import os
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateVariance, EmptyDataset, InvariantViolation, ParseError, SchemaError, UnknownProject

log = logging.getLogger(__name__)

COLUMNS = ("project", "mutant_id", "exec", "cover", "killed")
INT_MAX = 2**63 - 1
_DIGITS = re.compile(r"[0-9]+\Z")


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a)  # own the memory
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Raw observations. ``projects`` is sorted; ``project_index`` maps each record to it."""

    projects: tuple[str, ...]
    project_index: np.ndarray
    mutant_id: tuple[str, ...]
    exec: np.ndarray
    cover: np.ndarray
    killed: np.ndarray
    violations: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n = len(self.mutant_id)
        for name in ("project_index", "exec", "cover", "killed"):
            arr = getattr(self, name)
            if len(arr) != n:
                raise ValueError(f"{name} has length {len(arr)}, expected {n}")
            object.__setattr__(self, name, _frozen(arr))
        if n and set(np.unique(self.project_index)) != set(range(len(self.projects))):
            raise ValueError("every project needs at least one record and indices must be dense")

    @classmethod
    def from_records(
        cls,
        projects: Sequence[str],
        mutant_ids: Sequence[str],
        exec: Sequence[int],
        cover: Sequence[int],
        killed: Sequence[int],
        violations: Iterable[str] = (),
    ) -> "Dataset":
        names = tuple(sorted(set(projects)))
        lookup = {p: i for i, p in enumerate(names)}
        return cls(
            projects=names,
            project_index=np.array([lookup[p] for p in projects], dtype=np.int64),
            mutant_id=tuple(mutant_ids),
            exec=np.asarray(exec, dtype=np.int64),
            cover=np.asarray(cover, dtype=np.int64),
            killed=np.asarray(killed, dtype=np.int8),
            violations=tuple(violations),
        )

    def __len__(self) -> int:
        return len(self.mutant_id)

    @property
    def n_projects(self) -> int:
        return len(self.projects)

    def project_mask(self, project: str) -> np.ndarray:
        try:
            idx = self.projects.index(project)
        except ValueError:
            raise UnknownProject(f"unknown project {project!r}") from None
        return self.project_index == idx

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for i in range(len(self)):
            w.writerow(
                [
                    self.projects[self.project_index[i]],
                    self.mutant_id[i],
                    int(self.exec[i]),
                    int(self.cover[i]),
                    int(self.killed[i]),
                ]
            )
        return buf.getvalue()


def _parse_count(text: str, row: int, column: str) -> int:
    text = text.strip()
    if not _DIGITS.match(text):
        raise ParseError(f"expected a non-negative base-10 integer, got {text!r}", row, column)
    value = int(text)
    if value > INT_MAX:
        raise ParseError(f"value {text} exceeds 2^63-1", row, column)
    return value


def record_problems(exec: int, cover: int) -> list[str]:
    out = []
    if cover > exec:
        out.append(f"cover ({cover}) exceeds exec ({exec})")
    if cover == 0 and exec != 0:
        out.append(f"exec is {exec} but no test covers the mutant")
    return out


def read_csv(text: str, *, lenient: bool = False, source: str = "<string>") -> Dataset:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise SchemaError(f"{source}: file is empty, expected header {','.join(COLUMNS)}") from None
    header = [h.strip() for h in header]
    if tuple(header) != COLUMNS:
        raise SchemaError(f"{source}: header must be exactly {','.join(COLUMNS)}, got {','.join(header)}")

    projects, ids, execs, covers, kills, violations = [], [], [], [], [], []
    for row_no, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(COLUMNS):
            raise ParseError(f"expected {len(COLUMNS)} fields, got {len(row)}", row_no)
        project, mid = row[0].strip(), row[1].strip()
        if not project:
            raise ParseError("empty project name", row_no, "project")
        e = _parse_count(row[2], row_no, "exec")
        c = _parse_count(row[3], row_no, "cover")
        k = row[4].strip()
        if k not in ("0", "1"):
            raise ParseError(f"killed must be 0 or 1, got {k!r}", row_no, "killed")
        problems = record_problems(e, c)
        if problems:
            if not lenient:
                raise InvariantViolation("; ".join(problems), row_no)
            violations.append(f"row {row_no}: " + "; ".join(problems))
        projects.append(project)
        ids.append(mid)
        execs.append(e)
        covers.append(c)
        kills.append(int(k))

    if not ids:
        raise EmptyDataset(f"{source}: no data rows")
    if violations:
        log.warning("%s: kept %d rows violating record invariants (lenient mode)", source, len(violations))
    return Dataset.from_records(projects, ids, execs, covers, kills, violations)


def load_csv(path: str | os.PathLike, lenient: bool = False) -> Dataset:
    with open(path, encoding="utf-8-sig", newline="") as fh:
        return read_csv(fh.read(), lenient=lenient, source=os.fspath(path))


# --- descriptive statistics -----------------------------------------------------------


@dataclass(frozen=True)
class VariableSummary:
    min: float
    q1: float
    median: float
    q3: float
    max: float
    skewness: float


@dataclass(frozen=True)
class ProjectSummary:
    project: str
    n_mutants: int
    mutation_score: float
    exec: VariableSummary
    cover: VariableSummary


def skewness(x: np.ndarray) -> float:
    """Adjusted Fisher-Pearson sample skewness G1 (NaN for n < 3 or constant data)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 3:
        return math.nan
    d = x - x.mean()
    m2 = np.mean(d * d)
    if m2 == 0:
        return math.nan
    g1 = np.mean(d**3) / m2**1.5
    return float(g1 * math.sqrt(n * (n - 1)) / (n - 2))


def describe(values: np.ndarray) -> VariableSummary:
    v = np.asarray(values, dtype=float)
    q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0])
    return VariableSummary(*(float(x) for x in q), skewness=skewness(v))


def summarize(ds: Dataset) -> list[ProjectSummary]:
    """Table-1 style statistics per project, on the raw (untransformed) scale."""
    out = []
    for p, name in enumerate(ds.projects):
        m = ds.project_index == p
        n = int(m.sum())
        out.append(
            ProjectSummary(
                project=name,
                n_mutants=n,
                mutation_score=float(ds.killed[m].sum()) / n,
                exec=describe(ds.exec[m]),
                cover=describe(ds.cover[m]),
            )
        )
    return out


SUMMARY_COLUMNS = ("Subject", "#Mutants", "MS", "Variable", "Min", "Q1", "Median", "Q3", "Max", "Skewness")


def summary_rows(summaries: Sequence[ProjectSummary]) -> list[dict]:
    rows = []
    for s in summaries:
        for var, v in (("Exec", s.exec), ("Cover", s.cover)):
            rows.append(
                dict(
                    zip(
                        SUMMARY_COLUMNS,
                        (s.project, s.n_mutants, s.mutation_score, var, v.min, v.q1, v.median, v.q3, v.max, v.skewness),
                    )
                )
            )
    return rows


# --- preprocessing -------------------------------------------------------------------


@dataclass(frozen=True)
class TransformedDataset:
    """Model-scale data: per-project standardized log1p(exec) and log1p(cover).

    ``exec_center``/``exec_scale`` hold the per-project mean and sd of
    log1p(exec) (likewise for cover) so the transform can be inverted.
    """

    projects: tuple[str, ...]
    project_index: np.ndarray
    exec_z: np.ndarray
    cover_z: np.ndarray
    killed: np.ndarray
    exec_center: np.ndarray = field(default=None)  # type: ignore[assignment]
    exec_scale: np.ndarray = field(default=None)  # type: ignore[assignment]
    cover_center: np.ndarray = field(default=None)  # type: ignore[assignment]
    cover_scale: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        n = len(self.killed)
        if n == 0:
            raise EmptyDataset("transformed dataset has no records")
        P = len(self.projects)
        for name in ("project_index", "exec_z", "cover_z"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match killed")
        for name, default in (("exec_center", 0.0), ("exec_scale", 1.0), ("cover_center", 0.0), ("cover_scale", 1.0)):
            val = getattr(self, name)
            arr = np.full(P, default) if val is None else np.asarray(val, dtype=float)
            object.__setattr__(self, name, _frozen(arr))
        object.__setattr__(self, "project_index", _frozen(np.asarray(self.project_index, dtype=np.int64)))
        object.__setattr__(self, "exec_z", _frozen(np.asarray(self.exec_z, dtype=float)))
        object.__setattr__(self, "cover_z", _frozen(np.asarray(self.cover_z, dtype=float)))
        object.__setattr__(self, "killed", _frozen(np.asarray(self.killed, dtype=np.int8)))
        if set(np.unique(self.project_index)) != set(range(P)):
            raise ValueError("every project needs at least one record and indices must be dense")

    def __len__(self) -> int:
        return len(self.killed)

    @property
    def n_projects(self) -> int:
        return len(self.projects)

    def project_id(self, project: str) -> int:
        try:
            return self.projects.index(project)
        except ValueError:
            raise UnknownProject(f"unknown project {project!r}") from None

    def covariate(self, name: str) -> np.ndarray:
        if name == "exec":
            return self.exec_z
        if name == "cover":
            return self.cover_z
        raise KeyError(f"unknown covariate {name!r}")

    def raw_exec(self, z: np.ndarray | float, project: str) -> np.ndarray:
        p = self.project_id(project)
        return np.expm1(np.asarray(z) * self.exec_scale[p] + self.exec_center[p])

    def raw_cover(self, z: np.ndarray | float, project: str) -> np.ndarray:
        p = self.project_id(project)
        return np.expm1(np.asarray(z) * self.cover_scale[p] + self.cover_center[p])


def _standardize(values: np.ndarray, index: np.ndarray, P: int, label: str, projects: Sequence[str]):
    logged = np.log1p(values.astype(float))
    center = np.zeros(P)
    scale = np.zeros(P)
    z = np.empty_like(logged)
    for p in range(P):
        m = index == p
        x = logged[m]
        sd = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
        if not sd > 0:
            raise DegenerateVariance(f"project {projects[p]!r}: log1p({label}) is constant; cannot standardize")
        center[p] = x.mean()
        scale[p] = sd
        z[m] = (x - center[p]) / sd
    return z, center, scale


def preprocess(ds: Dataset) -> TransformedDataset:
    """log1p then per-project standardization (sample sd, n-1) of exec and cover."""
    P = ds.n_projects
    exec_z, ec, es = _standardize(ds.exec, ds.project_index, P, "exec", ds.projects)
    cover_z, cc, cs = _standardize(ds.cover, ds.project_index, P, "cover", ds.projects)
    return TransformedDataset(
        projects=ds.projects,
        project_index=ds.project_index,
        exec_z=exec_z,
        cover_z=cover_z,
        killed=ds.killed,
        exec_center=ec,
        exec_scale=es,
        cover_center=cc,
        cover_scale=cs,
    )


def observed_mutation_scores(data: Dataset | TransformedDataset) -> np.ndarray:
    counts = np.bincount(data.project_index, minlength=len(data.projects))
    kills = np.bincount(data.project_index, weights=data.killed.astype(float), minlength=len(data.projects))
    return kills / counts
