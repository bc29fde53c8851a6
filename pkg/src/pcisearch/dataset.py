"""Two-arm trial data: CSV ingestion, the in-memory dataset and a validation report.

The CSV dialect is fixed: comma separated, header on the first line, ``.`` as
decimal separator, UTF-8.  Default columns are ``id, arm, time, event`` followed
by the predictors; ``arm`` is ``0`` (control) / ``1`` (treated) and ``event`` is
``1`` (death observed) / ``0`` (censored).
"""

from __future__ import annotations

import csv
import enum
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np

from .errors import DataValidationError, InsufficientDataError, SchemaError

logger = logging.getLogger(__name__)

DEFAULT_COLUMNS = {"id": "id", "arm": "arm", "time": "time", "event": "event"}


class Arm(enum.IntEnum):
    CONTROL = 0
    TREATED = 1


class EndpointTransform(str, enum.Enum):
    IDENTITY = "identity"
    LOG = "log"

    def forward(self, time):
        return np.log(time) if self is EndpointTransform.LOG else np.asarray(time, dtype=float)

    def inverse(self, y):
        return np.exp(y) if self is EndpointTransform.LOG else np.asarray(y, dtype=float)


@dataclass(frozen=True)
class PatientRecord:
    id: str
    arm: Arm
    time: float
    event: bool
    predictors: tuple[float, ...]


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable column store of trial records.

    ``time`` holds raw survival times (used for Kaplan-Meier); ``endpoint``
    holds the transformed values used for moment estimation.
    """

    predictor_names: tuple[str, ...]
    ids: tuple[str, ...]
    arm: np.ndarray
    time: np.ndarray
    event: np.ndarray
    predictors: np.ndarray
    endpoint_transform: EndpointTransform = EndpointTransform.IDENTITY
    dropped_rows: int = 0
    endpoint: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        names = tuple(self.predictor_names)
        if not names:
            raise DataValidationError("at least one predictor is required")
        if len(set(names)) != len(names):
            raise DataValidationError(f"duplicate predictor names in {names}")
        n = len(self.ids)
        X = np.asarray(self.predictors, dtype=float).reshape(n, len(names))
        arm = np.asarray(self.arm, dtype=np.int8).reshape(n)
        time = np.asarray(self.time, dtype=float).reshape(n)
        event = np.asarray(self.event, dtype=bool).reshape(n)
        if n and not np.all(np.isin(arm, (0, 1))):
            raise DataValidationError("arm must be 0 (control) or 1 (treated)")
        if n and not np.all(time > 0):
            raise DataValidationError("survival times must be positive")
        if not np.all(np.isfinite(X)):
            raise DataValidationError("predictor values must be finite")
        if len(set(self.ids)) != n:
            dup = _first_duplicate(self.ids)
            raise DataValidationError(f"duplicate patient id {dup!r}")
        set_ = object.__setattr__
        set_(self, "predictor_names", names)
        set_(self, "ids", tuple(str(i) for i in self.ids))
        set_(self, "arm", _frozen(arm, np.int8))
        set_(self, "time", _frozen(time, float))
        set_(self, "event", _frozen(event, bool))
        set_(self, "predictors", _frozen(X, float))
        set_(self, "endpoint_transform", EndpointTransform(self.endpoint_transform))
        set_(self, "endpoint", _frozen(self.endpoint_transform.forward(time), float))

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def p(self) -> int:
        return len(self.predictor_names)

    @property
    def records(self) -> Iterator[PatientRecord]:
        for i in range(self.n):
            yield PatientRecord(
                self.ids[i], Arm(int(self.arm[i])), float(self.time[i]),
                bool(self.event[i]), tuple(float(v) for v in self.predictors[i]),
            )

    def arm_count(self, arm: Arm, uncensored_only: bool = False) -> int:
        mask = self.arm == int(arm)
        if uncensored_only:
            mask &= self.event
        return int(mask.sum())

    def subset_rows(self, mask) -> "Dataset":
        mask = np.asarray(mask, dtype=bool)
        return Dataset(
            self.predictor_names,
            tuple(i for i, keep in zip(self.ids, mask) if keep),
            self.arm[mask], self.time[mask], self.event[mask], self.predictors[mask],
            self.endpoint_transform, self.dropped_rows,
        )

    def select_predictors(self, names: Sequence[str]) -> "Dataset":
        idx = [self.predictor_names.index(nm) for nm in names]
        return Dataset(
            tuple(names), self.ids, self.arm, self.time, self.event,
            self.predictors[:, idx], self.endpoint_transform, self.dropped_rows,
        )

    @classmethod
    def from_records(cls, predictor_names, records, endpoint_transform=EndpointTransform.IDENTITY):
        records = list(records)
        p = len(predictor_names)
        for r in records:
            if len(r.predictors) != p:
                raise DataValidationError(
                    f"record {r.id!r} has {len(r.predictors)} predictors, expected {p}")
        return cls(
            tuple(predictor_names),
            tuple(r.id for r in records),
            [int(r.arm) for r in records],
            [r.time for r in records],
            [r.event for r in records],
            np.array([r.predictors for r in records], dtype=float).reshape(len(records), p),
            endpoint_transform,
        )


def _first_duplicate(items):
    seen = set()
    for it in items:
        if it in seen:
            return it
        seen.add(it)
    return None


def _parse_float(cell):
    v = float(cell)
    if not math.isfinite(v):
        raise ValueError(cell)
    return v


def _parse_flag(cell):
    v = float(cell)
    if v not in (0.0, 1.0):
        raise ValueError(cell)
    return int(v)


def load_csv(
    path,
    columns: Mapping[str, str] | None = None,
    predictors: Sequence[str] | None = None,
    transform=EndpointTransform.IDENTITY,
) -> Dataset:
    """Read a trial CSV into a :class:`Dataset`.

    Parameters
    ----------
    path : path-like
        CSV file.
    columns : mapping, optional
        Overrides for the ``id``, ``arm``, ``time`` and ``event`` column names.
    predictors : sequence of str, optional
        Predictor columns, in order.  Defaults to every column not mapped above,
        in header order.
    transform : EndpointTransform or str
        Transform applied to survival times before moment estimation.

    Rows with a missing or unparseable mapped cell, an arm/event code other than
    0/1, or a non-positive time are dropped; the count is kept on
    ``Dataset.dropped_rows``.
    """
    cols = dict(DEFAULT_COLUMNS)
    if columns:
        unknown = set(columns) - set(cols)
        if unknown:
            raise SchemaError(f"unknown column role(s): {sorted(unknown)}")
        cols.update(columns)
    transform = EndpointTransform(transform)

    with open(Path(path), newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: empty file, no header row") from None
        for role, name in cols.items():
            if name not in header:
                raise SchemaError(f"missing column {name!r} (role {role})")
        if predictors is None:
            mapped = set(cols.values())
            predictors = [h for h in header if h not in mapped]
        predictors = list(predictors)
        if not predictors:
            raise SchemaError("no predictor columns")
        for name in predictors:
            if name not in header:
                raise SchemaError(f"missing column {name!r} (predictor)")
        pos = {h: i for i, h in enumerate(header)}
        i_id, i_arm, i_time, i_event = (pos[cols[k]] for k in ("id", "arm", "time", "event"))
        i_pred = [pos[nm] for nm in predictors]

        ids, arms, times, events, rows = [], [], [], [], []
        dropped = 0
        for line in reader:
            if not line or all(not c.strip() for c in line):
                continue
            try:
                pid = line[i_id].strip()
                if not pid:
                    raise ValueError("empty id")
                arm = _parse_flag(line[i_arm])
                t = _parse_float(line[i_time])
                if t <= 0:
                    raise ValueError("non-positive time")
                ev = _parse_flag(line[i_event])
                x = [_parse_float(line[i]) for i in i_pred]
            except (ValueError, IndexError):
                dropped += 1
                continue
            ids.append(pid)
            arms.append(arm)
            times.append(t)
            events.append(bool(ev))
            rows.append(x)

    if dropped:
        logger.info("dropped %d incomplete or unparseable row(s) from %s", dropped, path)
    dup = _first_duplicate(ids)
    if dup is not None:
        raise DataValidationError(f"duplicate patient id {dup!r}")
    for arm in Arm:
        k = sum(1 for a in arms if a == arm)
        if k < 2:
            raise InsufficientDataError(
                f"{arm.name.lower()} arm has {k} usable row(s); at least 2 are required")
    return Dataset(
        tuple(predictors), tuple(ids), arms, times, events,
        np.array(rows, dtype=float).reshape(len(ids), len(predictors)),
        transform, dropped,
    )


def validate(ds: Dataset) -> dict:
    """Summarize a dataset without raising.

    ``sufficient_for_moments`` is true when each arm has at least ``p + 2``
    uncensored records, the minimum the moment estimator accepts.
    """
    p = ds.p
    arms = {}
    for arm in Arm:
        total = ds.arm_count(arm)
        uncensored = ds.arm_count(arm, uncensored_only=True)
        arms[arm.name.lower()] = {
            "n": total,
            "uncensored": uncensored,
            "meets_p_plus_2": uncensored >= p + 2,
        }
    columns = []
    constant = []
    for j, name in enumerate(ds.predictor_names):
        col = ds.predictors[:, j]
        if col.size:
            lo, hi = float(col.min()), float(col.max())
        else:
            lo = hi = None
        is_constant = col.size == 0 or lo == hi
        if is_constant:
            constant.append(name)
        columns.append({"name": name, "min": lo, "max": hi, "constant": is_constant})
    return {
        "n": ds.n,
        "p": p,
        "dropped_rows": ds.dropped_rows,
        "endpoint_transform": ds.endpoint_transform.value,
        "arms": arms,
        "columns": columns,
        "constant_columns": constant,
        "sufficient_for_moments": all(a["meets_p_plus_2"] for a in arms.values()),
    }


def write_csv(ds: Dataset, path) -> None:
    """Write ``ds`` in the default dialect; floats use shortest round-trip repr."""
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "arm", "time", "event", *ds.predictor_names])
        for i in range(ds.n):
            w.writerow([
                ds.ids[i], int(ds.arm[i]), repr(float(ds.time[i])), int(ds.event[i]),
                *(repr(float(v)) for v in ds.predictors[i]),
            ])
