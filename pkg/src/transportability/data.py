"""Study data model: subject records, validated datasets and the CSV codec.

A combined study holds ``n`` randomized-trial subjects (covariate, arm and
outcome) and ``m`` target-population subjects that only carry the covariate.
"""

from __future__ import annotations

import enum
import io
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Optional

import numpy as np

from .errors import (
    DegenerateTrial,
    EmptyDataset,
    MalformedRow,
    MissingArmData,
    NegativeCovariate,
    NonFiniteValue,
    TargetWithOutcome,
)

CSV_HEADER = "x,s,a,y"


class Sample(enum.IntEnum):
    TARGET = 0
    TRIAL = 1


class Arm(enum.IntEnum):
    CONTROL = 0
    TREATED = 1


class Method(str, enum.Enum):
    NAIVE = "naive"
    INTERACTION_OLS = "interaction_ols"
    IPSW = "ipsw"
    GFORMULA = "gformula"


@dataclass(frozen=True)
class SubjectRecord:
    x: float
    s: Sample
    a: Optional[Arm] = None
    y: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "s", Sample(self.s))
        if self.a is not None:
            object.__setattr__(self, "a", Arm(self.a))

    @classmethod
    def trial(cls, x: float, a: int, y: float) -> "SubjectRecord":
        return cls(float(x), Sample.TRIAL, Arm(a), float(y))

    @classmethod
    def target(cls, x: float) -> "SubjectRecord":
        return cls(float(x), Sample.TARGET)


@dataclass(frozen=True)
class StudyDataset:
    """Validated trial + target records.

    Build through :func:`validate` (or :func:`parse_csv`); the constructor
    itself does not check invariants. Column views are numpy arrays computed
    once and must not be mutated.
    """

    records: tuple[SubjectRecord, ...]
    n: int
    m: int

    @cached_property
    def _trial(self) -> tuple[SubjectRecord, ...]:
        return tuple(r for r in self.records if r.s is Sample.TRIAL)

    @cached_property
    def x_trial(self) -> np.ndarray:
        return np.array([r.x for r in self._trial], dtype=float)

    @cached_property
    def a_trial(self) -> np.ndarray:
        return np.array([int(r.a) for r in self._trial], dtype=float)

    @cached_property
    def y_trial(self) -> np.ndarray:
        return np.array([r.y for r in self._trial], dtype=float)

    @cached_property
    def x_target(self) -> np.ndarray:
        return np.array([r.x for r in self.records if r.s is Sample.TARGET], dtype=float)

    @cached_property
    def x_all(self) -> np.ndarray:
        return np.array([r.x for r in self.records], dtype=float)

    @cached_property
    def s_all(self) -> np.ndarray:
        return np.array([int(r.s) for r in self.records], dtype=float)

    @property
    def n_treated(self) -> int:
        return int(self.a_trial.sum())

    @property
    def n_control(self) -> int:
        return self.n - self.n_treated

    def __len__(self) -> int:
        return len(self.records)


@dataclass(frozen=True)
class AteEstimate:
    method: Method
    value: float
    detail: dict[str, Any] = field(default_factory=dict, compare=False)


def _check_finite(value: float, what: str, index: int) -> None:
    if not math.isfinite(value):
        raise NonFiniteValue(f"record {index}: {what} is not finite ({value!r})")


def validate(records: Iterable[SubjectRecord]) -> StudyDataset:
    records = tuple(records)
    if not records:
        raise EmptyDataset("no records")

    n = m = treated = 0
    for i, r in enumerate(records):
        _check_finite(r.x, "x", i)
        if r.x < 0:
            raise NegativeCovariate(f"record {i}: x must be >= 0, got {r.x!r}")
        if r.s is Sample.TRIAL:
            if r.a is None or r.y is None:
                raise MissingArmData(f"record {i}: trial record needs both a and y")
            _check_finite(r.y, "y", i)
            n += 1
            treated += r.a is Arm.TREATED
        else:
            if r.a is not None or r.y is not None:
                raise TargetWithOutcome(f"record {i}: target record carries a or y")
            m += 1

    if treated == 0 or treated == n:
        raise DegenerateTrial(
            f"trial needs at least one record per arm (treated={treated}, control={n - treated})"
        )
    return StudyDataset(records, n, m)


# -- CSV codec ---------------------------------------------------------------

def _format_number(v: float) -> str:
    # repr() is the shortest round-tripping form; integral values drop ".0"
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def _parse_number(text: str, lineno: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise MalformedRow(f"line {lineno}: cannot parse {what}={text!r}") from None


def _parse_code(text: str, lineno: int, what: str) -> int:
    if text not in ("0", "1"):
        raise MalformedRow(f"line {lineno}: {what} must be 0 or 1, got {text!r}")
    return int(text)


def parse_csv(text: str | io.TextIOBase) -> StudyDataset:
    if not isinstance(text, str):
        text = text.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].rstrip("\r") != CSV_HEADER:
        raise MalformedRow(f"line 1: expected header {CSV_HEADER!r}")

    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.rstrip("\r").split(",")
        if len(cells) != 4:
            raise MalformedRow(f"line {lineno}: expected 4 columns, got {len(cells)}")
        x_txt, s_txt, a_txt, y_txt = cells
        x = _parse_number(x_txt, lineno, "x")
        s = Sample(_parse_code(s_txt, lineno, "s"))
        a = None if a_txt == "" else Arm(_parse_code(a_txt, lineno, "a"))
        y = None if y_txt == "" else _parse_number(y_txt, lineno, "y")
        records.append(SubjectRecord(x, s, a, y))
    return validate(records)


def serialize_csv(dataset: StudyDataset) -> str:
    out = [CSV_HEADER]
    for r in dataset.records:
        a = "" if r.a is None else str(int(r.a))
        y = "" if r.y is None else _format_number(r.y)
        out.append(f"{_format_number(r.x)},{int(r.s)},{a},{y}")
    return "\n".join(out) + "\n"


def read_csv(path) -> StudyDataset:
    with open(path, encoding="utf-8", newline="") as fh:
        return parse_csv(fh.read())


def write_csv(dataset: StudyDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(serialize_csv(dataset))
