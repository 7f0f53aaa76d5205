"""Telemetry fusion: time grid, event pulses, and the per-station design matrix.

Performance (PM) data arrives as periodic aggregates, while fault (FM) and
configuration (CM) data arrive as raise/clear events at arbitrary times. To
analyze them jointly, event times are binned onto a uniform grid and each
event stream becomes a rectangular 0/1 pulse column. The PM columns and the
pulse columns are stacked side by side into one numeric matrix per base
station and window.

All timestamps are UTC epoch milliseconds; durations are milliseconds.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

PM, FM, CM = "PM", "FM", "CM"
COLUMN_KINDS = (PM, FM, CM)


class OutOfWindowBefore(ValueError):
    """Timestamp falls before the window start."""


class OutOfWindowAfter(ValueError):
    """Timestamp falls at or after the window end."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time axis: `rows` bins of length `delta_t` starting at `window_start`.

    The row count is always ceil(window / delta_t); a window that is not a
    multiple of the periodicity still gets a (partial) final bin.
    """

    window_start: int
    delta_t: int
    window: int

    def __post_init__(self) -> None:
        if self.delta_t <= 0:
            raise ValueError(f"delta_t must be > 0, got {self.delta_t}")
        if self.window <= 0:
            raise ValueError(f"window must be > 0, got {self.window}")

    @property
    def rows(self) -> int:
        return -(-self.window // self.delta_t)

    @property
    def window_end(self) -> int:
        return self.window_start + self.window

    def bin_start(self, index: int) -> int:
        return self.window_start + index * self.delta_t


def bin_time(t: int, grid: TimeGrid, clamp_end: bool = False) -> int:
    """Row index of timestamp `t`: floor((t - window_start) / delta_t).

    Timestamps before the window raise OutOfWindowBefore. Timestamps at or
    past the window end raise OutOfWindowAfter, unless `clamp_end` is set,
    in which case the exclusive sentinel `rows` is returned (the convention
    for pulse end boundaries).
    """
    if t < grid.window_start:
        raise OutOfWindowBefore(f"timestamp {t} precedes window start {grid.window_start}")
    if t >= grid.window_end:
        if clamp_end:
            return grid.rows
        raise OutOfWindowAfter(f"timestamp {t} at or after window end {grid.window_end}")
    return (t - grid.window_start) // grid.delta_t


@dataclass(frozen=True)
class PmSeries:
    """One periodic performance column, aligned to a grid (NaN = missing report)."""

    column_name: str
    values: np.ndarray
    kind: str = "counter"

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if self.kind not in ("counter", "kpi"):
            raise ValueError(f"PM kind must be 'counter' or 'kpi', got {self.kind!r}")
        if np.isinf(vals).any():
            raise ValueError(f"PM column {self.column_name!r} contains infinities")


@dataclass(frozen=True)
class FmEvent:
    """One alarm raise, optionally cleared later (None = never cleared)."""

    alarm_id: str
    raised_at: int
    cleared_at: Optional[int] = None

    def __post_init__(self) -> None:
        if self.cleared_at is not None and self.cleared_at < self.raised_at:
            raise ValueError(
                f"alarm {self.alarm_id!r} cleared at {self.cleared_at} "
                f"before raise at {self.raised_at}"
            )

    @property
    def interval(self) -> tuple[int, Optional[int]]:
        return (self.raised_at, self.cleared_at)


@dataclass(frozen=True)
class CmEvent:
    """One parameter change, optionally reverted later (None = never reverted)."""

    param_id: str
    old_value: str
    new_value: str
    changed_at: int
    reverted_at: Optional[int] = None

    def __post_init__(self) -> None:
        if self.reverted_at is not None and self.reverted_at < self.changed_at:
            raise ValueError(
                f"parameter {self.param_id!r} reverted at {self.reverted_at} "
                f"before change at {self.changed_at}"
            )

    @property
    def interval(self) -> tuple[int, Optional[int]]:
        return (self.changed_at, self.reverted_at)


@dataclass(frozen=True)
class DesignMatrix:
    """Fused per-station matrix: PM columns first, then FM pulses, then CM pulses."""

    grid: TimeGrid
    names: tuple[str, ...]
    kinds: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "kinds", tuple(self.kinds))
        if data.ndim != 2:
            raise ValueError("design matrix data must be 2-D")
        if data.shape != (self.grid.rows, len(self.names)):
            raise ValueError(
                f"data shape {data.shape} does not match grid rows {self.grid.rows} "
                f"x {len(self.names)} columns"
            )
        if len(self.kinds) != len(self.names):
            raise ValueError("names and kinds length mismatch")
        if len(set(self.names)) != len(self.names):
            raise ValueError("duplicate column names in design matrix")
        for kind in self.kinds:
            if kind not in COLUMN_KINDS:
                raise ValueError(f"unknown column kind {kind!r}")
        if np.isinf(data).any():
            raise ValueError("design matrix contains infinities")
        for j, kind in enumerate(self.kinds):
            if kind in (FM, CM):
                col = data[:, j]
                if not np.isin(col, (0.0, 1.0)).all():
                    raise ValueError(f"{kind} column {self.names[j]!r} is not 0/1 valued")

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def n_columns(self) -> int:
        return self.data.shape[1]

    def kind_counts(self) -> tuple[int, int, int]:
        """Column counts per kind, ordered (PM, FM, CM)."""
        return (self.kinds.count(PM), self.kinds.count(FM), self.kinds.count(CM))

    def column_index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise KeyError(f"no column named {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.column_index(name)]


def reconstruct_pulse(
    events: Iterable[tuple[int, Optional[int]]], grid: TimeGrid
) -> np.ndarray:
    """Binary vector that is 1 in every bin where some event is active.

    An event (raise, clear) is active in bins [bin(raise), bin(clear));
    clear=None holds to the window end. Events overlapping the window edge
    are clipped to it; events entirely outside are ignored. Overlapping
    events of the same stream union together.
    """
    m = grid.rows
    pulse = np.zeros(m, dtype=np.uint8)
    for raised, cleared in events:
        if cleared is not None and cleared < raised:
            raise ValueError(f"event cleared at {cleared} before raise at {raised}")
        if raised >= grid.window_end:
            continue
        # Entirely before the window: [raised, cleared) never reaches window_start.
        if cleared is not None and raised < grid.window_start and cleared <= grid.window_start:
            continue
        if raised < grid.window_start:
            start = 0
        else:
            start = bin_time(raised, grid)
        end = m if cleared is None else bin_time(cleared, grid, clamp_end=True)
        if start == end:
            warnings.warn(
                f"event raised and cleared within bin {start}; pulse is empty",
                RuntimeWarning,
                stacklevel=2,
            )
        pulse[start:end] = 1
    return pulse


def pulse_to_intervals(pulse: np.ndarray) -> list[tuple[int, int]]:
    """Decompose a binary pulse into half-open (first_set, first_clear) bin runs."""
    flat = np.asarray(pulse).ravel().astype(bool)
    padded = np.concatenate(([False], flat, [False]))
    edges = np.flatnonzero(padded[1:] != padded[:-1])
    return [(int(edges[i]), int(edges[i + 1])) for i in range(0, len(edges), 2)]


def _fill_missing(values: np.ndarray) -> np.ndarray:
    """Forward-fill NaNs, back-fill a leading gap, zero out all-NaN columns."""
    out = values.astype(np.float64, copy=True)
    finite = ~np.isnan(out)
    if not finite.any():
        return np.zeros_like(out)
    idx = np.where(finite, np.arange(out.size), -1)
    np.maximum.accumulate(idx, out=idx)
    first = np.flatnonzero(finite)[0]
    idx[idx < 0] = first
    return out[idx]


def build_design_matrix(
    pm: Sequence[PmSeries],
    fm: Sequence[tuple[str, Sequence[FmEvent]]],
    cm: Sequence[tuple[str, Sequence[CmEvent]]],
    grid: TimeGrid,
) -> DesignMatrix:
    """Assemble PM columns and FM/CM event pulses into one design matrix.

    PM gaps are forward-filled (then back-filled at the leading edge; a
    fully missing column becomes zeros). Column order is PM, FM, CM.
    """
    m = grid.rows
    names: list[str] = []
    kinds: list[str] = []
    columns: list[np.ndarray] = []

    for series in pm:
        if series.values.shape != (m,):
            raise ValueError(
                f"PM column {series.column_name!r} has {series.values.shape[0]} rows, "
                f"grid expects {m}"
            )
        names.append(series.column_name)
        kinds.append(PM)
        columns.append(_fill_missing(series.values))

    for alarm_id, events in fm:
        names.append(alarm_id)
        kinds.append(FM)
        columns.append(reconstruct_pulse([e.interval for e in events], grid))

    for param_id, events in cm:
        names.append(param_id)
        kinds.append(CM)
        columns.append(reconstruct_pulse([e.interval for e in events], grid))

    if not columns:
        raise ValueError("design matrix needs at least one column")
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise ValueError(f"duplicate column names: {dupes}")

    data = np.column_stack(columns).astype(np.float64)
    return DesignMatrix(grid=grid, names=tuple(names), kinds=tuple(kinds), data=data)


def truncate_matrix(matrix: DesignMatrix, rows: int) -> DesignMatrix:
    """First `rows` rows of a matrix, with the grid window shortened to match."""
    if not 1 <= rows <= matrix.rows:
        raise ValueError(f"rows must be in [1, {matrix.rows}], got {rows}")
    grid = TimeGrid(
        window_start=matrix.grid.window_start,
        delta_t=matrix.grid.delta_t,
        window=rows * matrix.grid.delta_t,
    )
    return DesignMatrix(
        grid=grid, names=matrix.names, kinds=matrix.kinds, data=matrix.data[:rows].copy()
    )


# ---------------------------------------------------------------------------
# CSV interfaces
# ---------------------------------------------------------------------------


def parse_timestamp(text: str) -> int:
    """Epoch milliseconds from an integer string or an ISO-8601 timestamp."""
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        pass
    iso = text[:-1] + "+00:00" if text.endswith("Z") else text
    try:
        stamp = datetime.fromisoformat(iso)
    except ValueError:
        raise ValueError(f"unparseable timestamp {text!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return int(stamp.timestamp() * 1000)


def _csv_rows(path: str | Path, expected_header: Sequence[str] | None = None):
    """Yield (line_number, row) pairs; validates a fixed header when given."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if expected_header is not None and header[: len(expected_header)] != list(expected_header):
            raise ValueError(
                f"{path} line 1: expected header starting with "
                f"{','.join(expected_header)}, got {','.join(header)}"
            )
        yield 1, header
        for line_no, row in enumerate(reader, start=2):
            if row:
                yield line_no, row


def _pick_bs(seen: dict, bs_id: Optional[str], path) -> None:
    if bs_id is not None and bs_id not in seen:
        raise ValueError(f"{path}: base station {bs_id!r} not present (found {sorted(seen)})")
    if bs_id is None and len(seen) > 1:
        raise ValueError(
            f"{path}: multiple base stations {sorted(seen)}; pass an explicit bs_id"
        )


def read_pm_csv(path: str | Path, grid: TimeGrid, bs_id: Optional[str] = None) -> list[PmSeries]:
    """Parse a PM CSV (header: timestamp,bs_id,<column>...) into grid-aligned series.

    Rows outside the window are skipped; bins never reported stay NaN. When
    a bin is reported twice, the later row wins.
    """
    rows = _csv_rows(path)
    _, header = next(rows)
    if len(header) < 3 or header[0] != "timestamp" or header[1] != "bs_id":
        raise ValueError(f"{path} line 1: PM header must be timestamp,bs_id,<column>...")
    col_names = header[2:]
    parsed: list[tuple[int, str, list[float]]] = []
    stations: dict[str, None] = {}
    for line_no, row in rows:
        if len(row) != len(header):
            raise ValueError(f"{path} line {line_no}: expected {len(header)} fields, got {len(row)}")
        try:
            stamp = parse_timestamp(row[0])
        except ValueError as exc:
            raise ValueError(f"{path} line {line_no}: {exc}") from None
        station = row[1].strip()
        stations[station] = None
        values = []
        for name, cell in zip(col_names, row[2:]):
            cell = cell.strip()
            if cell == "":
                values.append(np.nan)
                continue
            try:
                values.append(float(cell))
            except ValueError:
                raise ValueError(
                    f"{path} line {line_no}: column {name!r} has non-numeric value {cell!r}"
                ) from None
        parsed.append((stamp, station, values))

    _pick_bs(stations, bs_id, path)
    data = np.full((grid.rows, len(col_names)), np.nan)
    for stamp, station, values in parsed:
        if bs_id is not None and station != bs_id:
            continue
        if stamp < grid.window_start or stamp >= grid.window_end:
            continue
        data[bin_time(stamp, grid)] = values
    return [PmSeries(column_name=name, values=data[:, j]) for j, name in enumerate(col_names)]


def _read_events(path, header, make_event, bs_id):
    rows = _csv_rows(path, expected_header=header)
    next(rows)
    grouped: dict[str, list] = {}
    stations: dict[str, None] = {}
    for line_no, row in rows:
        if len(row) != len(header):
            raise ValueError(f"{path} line {line_no}: expected {len(header)} fields, got {len(row)}")
        station = row[0].strip()
        stations[station] = None
        try:
            event = make_event(row)
        except ValueError as exc:
            raise ValueError(f"{path} line {line_no}: {exc}") from None
        grouped.setdefault(row[1].strip(), []).append((station, event))
    _pick_bs(stations, bs_id, path)
    out = []
    for key, tagged in grouped.items():
        events = [e for station, e in tagged if bs_id is None or station == bs_id]
        if events:
            out.append((key, events))
    return out


def read_fm_csv(path: str | Path, bs_id: Optional[str] = None) -> list[tuple[str, list[FmEvent]]]:
    """Parse an FM CSV (bs_id,alarm_id,raised_at,cleared_at); empty cleared_at = open."""

    def make(row):
        cleared = row[3].strip()
        return FmEvent(
            alarm_id=row[1].strip(),
            raised_at=parse_timestamp(row[2]),
            cleared_at=parse_timestamp(cleared) if cleared else None,
        )

    return _read_events(path, ["bs_id", "alarm_id", "raised_at", "cleared_at"], make, bs_id)


def read_cm_csv(path: str | Path, bs_id: Optional[str] = None) -> list[tuple[str, list[CmEvent]]]:
    """Parse a CM CSV (bs_id,param_id,old_value,new_value,changed_at,reverted_at)."""

    def make(row):
        reverted = row[5].strip()
        return CmEvent(
            param_id=row[1].strip(),
            old_value=row[2].strip(),
            new_value=row[3].strip(),
            changed_at=parse_timestamp(row[4]),
            reverted_at=parse_timestamp(reverted) if reverted else None,
        )

    return _read_events(
        path,
        ["bs_id", "param_id", "old_value", "new_value", "changed_at", "reverted_at"],
        make,
        bs_id,
    )


def _format_value(v: float) -> str:
    return "" if np.isnan(v) else repr(float(v))


def manifest_path_for(csv_path: str | Path) -> Path:
    return Path(csv_path).with_suffix(".manifest.json")


def write_matrix_csv(matrix: DesignMatrix, path: str | Path) -> None:
    """Export a matrix as CSV (t_bin column first) plus a sidecar JSON manifest."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_bin", *matrix.names])
        for i in range(matrix.rows):
            writer.writerow([i, *(_format_value(v) for v in matrix.data[i])])
    manifest = {
        "grid": {
            "window_start": matrix.grid.window_start,
            "delta_t": matrix.grid.delta_t,
            "window": matrix.grid.window,
            "rows": matrix.grid.rows,
        },
        "columns": [{"name": n, "kind": k} for n, k in zip(matrix.names, matrix.kinds)],
    }
    with open(manifest_path_for(path), "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def read_matrix_csv(path: str | Path, manifest_path: str | Path | None = None) -> DesignMatrix:
    """Load a matrix exported by write_matrix_csv, using its sidecar manifest."""
    path = Path(path)
    manifest_file = Path(manifest_path) if manifest_path else manifest_path_for(path)
    with open(manifest_file) as fh:
        manifest = json.load(fh)
    grid = TimeGrid(
        window_start=int(manifest["grid"]["window_start"]),
        delta_t=int(manifest["grid"]["delta_t"]),
        window=int(manifest["grid"]["window"]),
    )
    names = tuple(c["name"] for c in manifest["columns"])
    kinds = tuple(c["kind"] for c in manifest["columns"])

    rows = _csv_rows(path)
    _, header = next(rows)
    if header != ["t_bin", *names]:
        raise ValueError(f"{path} line 1: header does not match manifest columns")
    data = np.full((grid.rows, len(names)), np.nan)
    for line_no, row in rows:
        if len(row) != len(names) + 1:
            raise ValueError(f"{path} line {line_no}: expected {len(names) + 1} fields")
        try:
            t_bin = int(row[0])
        except ValueError:
            raise ValueError(f"{path} line {line_no}: bad t_bin {row[0]!r}") from None
        if not 0 <= t_bin < grid.rows:
            raise ValueError(f"{path} line {line_no}: t_bin {t_bin} outside 0..{grid.rows - 1}")
        data[t_bin] = [float(c) if c.strip() else np.nan for c in row[1:]]
    return DesignMatrix(grid=grid, names=names, kinds=kinds, data=data)
