"""Dataset parsing, bundled case-study data, and delimited series output.

Dataset file format: plain comma-separated text with a 3-line commented
header carrying ``name``, ``time_unit`` and ``cause_labels`` metadata,
followed by one ``time,status`` row per unit::

    # name: electrode voltage-endurance test
    # time_unit: hours
    # cause_labels: c1=insulation defect; c2=insulation degradation
    2,c1
    119,c2
    257,cen

Status codes: ``c1`` / ``c2`` for failures attributed to the first or
second cause, ``cu`` for a failure of unknown cause (a failure in every
likelihood sense, just unlabeled), ``cen`` for right-censored.
"""

from __future__ import annotations

import hashlib
import os
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

__all__ = [
    "STATUS_CODES",
    "DataFormatError",
    "CensoredObservation",
    "Dataset",
    "PlotSeries",
    "SERIES_KINDS",
    "parse_dataset",
    "load_bundled",
    "bundled_names",
    "empirical_risks",
    "emit_series",
    "read_series",
]

STATUS_CODES = ("c1", "c2", "cu", "cen")
_HEADER_KEYS = ("name", "time_unit", "cause_labels")


class DataFormatError(ValueError):
    """Malformed dataset or series file; message carries the line number."""


@dataclass(frozen=True)
class CensoredObservation:
    """One unit: observed time plus its status code."""

    time: float
    status: str

    def __post_init__(self):
        if self.status not in STATUS_CODES:
            raise ValueError(f"unknown status {self.status!r}")
        if not (np.isfinite(self.time) and self.time > 0.0):
            raise ValueError(f"time must be finite and > 0, got {self.time!r}")

    @property
    def is_failure(self) -> bool:
        return self.status != "cen"


@dataclass
class Dataset:
    """A censored competing-risks sample.

    Attributes
    ----------
    times : ndarray
        Observed times (failure or censoring), strictly positive.
    status : ndarray of str
        Status code per unit (see module docstring).
    name, time_unit : str
        Free-text metadata from the file header.
    cause_labels : dict
        Maps ``c1`` / ``c2`` to their physical descriptions.
    """

    times: np.ndarray
    status: np.ndarray
    name: str = ""
    time_unit: str = ""
    cause_labels: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.status = np.asarray(self.status, dtype=object)
        if self.times.shape != self.status.shape or self.times.ndim != 1:
            raise ValueError("times and status must be matching 1-d arrays")
        bad = [s for s in self.status if s not in STATUS_CODES]
        if bad:
            raise ValueError(f"unknown status codes {sorted(set(bad))}")
        if np.any(~np.isfinite(self.times)) or np.any(self.times <= 0.0):
            raise ValueError("times must be finite and > 0")

    @property
    def n(self) -> int:
        return self.times.size

    @property
    def is_failure(self) -> np.ndarray:
        return self.status != "cen"

    @property
    def failure_times(self) -> np.ndarray:
        return self.times[self.is_failure]

    @property
    def n_failures(self) -> int:
        return int(np.count_nonzero(self.is_failure))

    def status_counts(self) -> dict:
        return {code: int(np.count_nonzero(self.status == code)) for code in STATUS_CODES}

    def observations(self) -> list:
        return [CensoredObservation(float(t), str(s)) for t, s in zip(self.times, self.status)]

    def checksum(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.times).tobytes())
        h.update(",".join(str(s) for s in self.status).encode())
        return h.hexdigest()


def _parse_cause_labels(text: str) -> dict:
    labels = {}
    for chunk in text.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        if "=" not in chunk:
            raise ValueError(f"expected 'code=description', got {chunk!r}")
        code, desc = chunk.split("=", 1)
        labels[code.strip()] = desc.strip()
    return labels


def parse_dataset(source) -> Dataset:
    """Parse a dataset file (path or text) into a :class:`Dataset`.

    Parameters
    ----------
    source : str or os.PathLike
        File path, or the raw file content if it contains a newline.

    Raises
    ------
    DataFormatError
        On any structural problem; the message includes the 1-based line
        number of the offending row.
    """
    if isinstance(source, (str, os.PathLike)) and "\n" not in str(source):
        try:
            with open(source, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DataFormatError(f"cannot read dataset {source!r}: {exc}") from exc
    else:
        text = str(source)

    meta = {}
    times, status = [], []
    header_seen = 0
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if ":" in body and header_seen < len(_HEADER_KEYS):
                key, value = body.split(":", 1)
                key = key.strip().lower()
                if key in _HEADER_KEYS:
                    meta[key] = value.strip()
                    header_seen += 1
            continue
        parts = [part.strip() for part in line.split(",")]
        if len(parts) != 2:
            raise DataFormatError(
                f"line {lineno}: expected 'time,status', got {raw!r}"
            )
        try:
            t = float(parts[0])
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: bad time {parts[0]!r}") from exc
        if not (np.isfinite(t) and t > 0.0):
            raise DataFormatError(f"line {lineno}: time must be finite and > 0")
        if parts[1] not in STATUS_CODES:
            raise DataFormatError(
                f"line {lineno}: unknown status {parts[1]!r} "
                f"(expected one of {', '.join(STATUS_CODES)})"
            )
        times.append(t)
        status.append(parts[1])
    if not times:
        raise DataFormatError("dataset contains no observation rows")
    try:
        labels = _parse_cause_labels(meta.get("cause_labels", ""))
    except ValueError as exc:
        raise DataFormatError(f"bad cause_labels header: {exc}") from exc
    return Dataset(
        times=np.array(times),
        status=np.array(status, dtype=object),
        name=meta.get("name", ""),
        time_unit=meta.get("time_unit", ""),
        cause_labels=labels,
    )


def bundled_names() -> tuple:
    """Names of the datasets shipped with the package."""
    return ("efst", "afst")


def load_bundled(name: str) -> Dataset:
    """Load a bundled case-study dataset by short name (``efst``/``afst``)."""
    if name not in bundled_names():
        raise DataFormatError(
            f"unknown bundled dataset {name!r}; have {bundled_names()}"
        )
    text = resources.files("bfm").joinpath(f"data/{name}.csv").read_text("utf-8")
    return parse_dataset(text)


def empirical_risks(data: Dataset) -> tuple:
    """Observed cause shares among cause-labeled failures.

    Returns ``(n_c1 / n_labeled, n_c2 / n_labeled)``; unknown-cause failures
    and censored units are excluded from both numerator and denominator.
    """
    counts = data.status_counts()
    labeled = counts["c1"] + counts["c2"]
    if labeled == 0:
        raise ValueError("no cause-labeled failures in dataset")
    return counts["c1"] / labeled, counts["c2"] / labeled


SERIES_KINDS = ("frf", "mrl", "rf", "ttt", "ecdf")


@dataclass(frozen=True)
class PlotSeries:
    """A named curve destined for delimited output and figure rendering.

    ``kind`` tags what the curve is (``frf``, ``rf``, ``mrl``, ``ttt``,
    ``ecdf``) so downstream rendering can group compatible curves.
    """

    name: str
    kind: str
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "y", np.asarray(self.y, dtype=float))
        if self.kind not in SERIES_KINDS:
            raise ValueError(
                f"unknown series kind {self.kind!r} (expected one of {SERIES_KINDS})"
            )
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise ValueError("series x and y must be matching 1-d arrays")
        if self.x.size > 1 and not np.all(np.diff(self.x) > 0.0):
            raise ValueError("series x values must be strictly increasing")


def _atomic_write(path, payload):
    tmp = f"{path}.tmp{os.getpid()}"
    mode = "wb" if isinstance(payload, bytes) else "w"
    kwargs = {} if isinstance(payload, bytes) else {"encoding": "utf-8"}
    with open(tmp, mode, **kwargs) as fh:
        fh.write(payload)
    os.replace(tmp, path)


def emit_series(series, path, format="csv") -> None:
    """Write curves to ``path`` as delimited text or a rendered chart.

    ``format="csv"`` produces a long-format file with one ``name,kind,x,y``
    row per point, ordered as given; ``format="svg"`` renders the curves as
    a single multi-line chart with a legend.  Either way the write is atomic
    (temp file plus rename) so a crashed run never leaves a half-written
    report, and the bytes are deterministic for fixed input.
    """
    if format == "csv":
        lines = ["name,kind,x,y"]
        for s in series:
            for xv, yv in zip(s.x, s.y):
                lines.append(f"{s.name},{s.kind},{float(xv)!r},{float(yv)!r}")
        _atomic_write(path, "\n".join(lines) + "\n")
    elif format == "svg":
        from bfm.figures import render_svg

        _atomic_write(path, render_svg(series))
    else:
        raise ValueError(f"unknown series format {format!r} (expected csv or svg)")


def read_series(path) -> list:
    """Read back curves written by :func:`emit_series` (round-trip exact)."""
    with open(path, "r", encoding="utf-8") as fh:
        rows = fh.read().splitlines()
    if not rows or rows[0] != "name,kind,x,y":
        raise DataFormatError(f"{path}: not a series file")
    grouped: dict = {}
    order = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row.strip():
            continue
        parts = row.split(",")
        if len(parts) != 4:
            raise DataFormatError(f"line {lineno}: expected 4 fields, got {row!r}")
        key = (parts[0], parts[1])
        if key not in grouped:
            grouped[key] = ([], [])
            order.append(key)
        try:
            grouped[key][0].append(float(parts[2]))
            grouped[key][1].append(float(parts[3]))
        except ValueError as exc:
            raise DataFormatError(f"line {lineno}: bad number in {row!r}") from exc
    return [
        PlotSeries(name=k[0], kind=k[1], x=np.array(v[0]), y=np.array(v[1]))
        for k, v in ((key, grouped[key]) for key in order)
    ]
