"""Synthetic fault scenarios with known ground truth.

Each scenario is one base station over one observation window: a KPI with
a diurnal baseline, a set of decoy counters and decoy event streams, and
exactly one injected cause (a counter excursion, an alarm, or a config
change) whose active bins push the KPI over its degradation threshold.
The generator returns the fused matrix, the ground-truth cause, the
matching causality filter, and raw CSV renderings of every input stream,
so the same scenario can be replayed through the file-based interfaces.

All randomness flows from one seeded generator in a fixed draw order, so
a seed fully determines the scenario, byte for byte.
"""

from __future__ import annotations

import io
import csv
from dataclasses import dataclass

import numpy as np

from .rca import CausalityFilter, DEFAULT_KPI_THRESHOLD, DEFAULT_MIN_PTS
from .telemetry import (
    CM,
    CmEvent,
    DesignMatrix,
    FM,
    FmEvent,
    PM,
    PmSeries,
    TimeGrid,
    build_design_matrix,
)

# 2021-03-01T00:00:00Z; an arbitrary but fixed epoch so outputs are stable.
DEFAULT_WINDOW_START = 1_614_556_800_000
DEFAULT_DELTA_T = 900_000  # 15 minutes
DEFAULT_ROWS = 120
DEFAULT_BS_ID = "bs-0001"

DAY_MS = 86_400_000

KPI_NAME = "kpi_drop_rate"
KPI_BASE = 0.4
KPI_DIURNAL_AMP = 0.2
KPI_NOISE_SIGMA = 0.1

PM_CAUSE_NAME = "pm_harq_retrans"
FM_CAUSE_NAME = "alm_cell_down"
CM_CAUSE_NAME = "cm_tilt_change"

PM_DECOY_NAMES = ("pm_prb_util", "pm_active_users", "pm_throughput_dl", "pm_cpu_load")
FM_DECOY_NAMES = ("alm_temp_high", "alm_link_flap", "alm_clock_drift")
CM_DECOY_NAMES = ("cm_power_adjust", "cm_neighbor_add")


class InvalidScenario(ValueError):
    """The drawn scenario violates its own construction guarantees."""


@dataclass(frozen=True)
class InjectedCause:
    kind: str  # PM, FM, or CM
    column: str
    start_bin: int
    length: int

    def __post_init__(self) -> None:
        if self.kind not in (PM, FM, CM):
            raise ValueError(f"cause kind must be PM, FM, or CM, got {self.kind!r}")
        if self.length < 1 or self.start_bin < 0:
            raise ValueError("cause run must have start_bin >= 0 and length >= 1")

    @property
    def active_bins(self) -> range:
        return range(self.start_bin, self.start_bin + self.length)


@dataclass(frozen=True)
class SynthScenario:
    seed: int
    grid: TimeGrid
    bs_id: str
    kpi_name: str
    threshold: float
    direction: str
    cause: InjectedCause
    cause_index: int


@dataclass(frozen=True)
class SynthOutput:
    """A generated scenario plus its file-interface renderings."""

    scenario: SynthScenario
    matrix: DesignMatrix
    causality: CausalityFilter
    pm_csv: str
    fm_csv: str
    cm_csv: str
    filter_csv: str


def _pm_decoy(rng: np.random.Generator, shape: int, offsets: np.ndarray) -> np.ndarray:
    """One uncorrelated counter column; `shape` cycles through three textures."""
    m = offsets.size
    level = rng.uniform(20.0, 80.0)
    if shape == 0:
        amp = rng.uniform(2.0, 10.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        wave = amp * np.sin(2.0 * np.pi * offsets / DAY_MS + phase)
        return level + wave + rng.normal(0.0, 0.3 * amp, m)
    if shape == 1:
        return level + np.cumsum(rng.normal(0.0, 1.0, m))
    return level + rng.normal(0.0, rng.uniform(1.0, 5.0), m)


def _place_run(
    rng: np.random.Generator, m: int, length: int, forbidden: range
) -> int | None:
    """Start bin for a run of `length` avoiding `forbidden`; None if unplaceable."""
    for _ in range(20):
        start = int(rng.integers(0, m - length + 1))
        if start + length <= forbidden.start or start >= forbidden.stop:
            return start
    return None


def _decoy_pulses(
    rng: np.random.Generator, m: int, forbidden: range
) -> list[tuple[int, int]]:
    """One or two bin runs per decoy stream, kept clear of the cause run."""
    pulses = []
    for _ in range(int(rng.integers(1, 3))):
        length = int(rng.integers(1, 9))
        length = min(length, m)
        start = _place_run(rng, m, length, forbidden)
        if start is not None:
            pulses.append((start, length))
    return pulses


def _run_to_event_times(
    rng: np.random.Generator, grid: TimeGrid, start: int, length: int
) -> tuple[int, int]:
    """Raise/clear timestamps that bin back onto exactly [start, start+length)."""
    jitter_on = int(rng.integers(0, grid.delta_t))
    jitter_off = int(rng.integers(0, grid.delta_t))
    raised = grid.bin_start(start) + jitter_on
    cleared = grid.bin_start(start + length) + jitter_off
    return raised, cleared


def generate(
    seed: int,
    rows: int = DEFAULT_ROWS,
    delta_t: int = DEFAULT_DELTA_T,
    n_pm_decoys: int = 4,
    n_fm_decoys: int = 3,
    n_cm_decoys: int = 2,
    cause_kind: str | None = None,
    bs_id: str = DEFAULT_BS_ID,
) -> SynthOutput:
    """Draw one scenario. The injected cause kind is random unless forced.

    Construction guarantees, checked before returning (InvalidScenario
    otherwise): every cause-active bin pushes the KPI strictly over its
    threshold, a counter-type cause stays shorter than the density
    clustering core size (so its rows read as anomalies, not as a cluster
    of their own), and decoy event pulses never overlap the cause run.
    """
    if rows < 6:
        raise ValueError("need at least 6 rows for a meaningful scenario")
    rng = np.random.default_rng(seed)
    grid = TimeGrid(window_start=DEFAULT_WINDOW_START, delta_t=delta_t, window=rows * delta_t)
    m = grid.rows

    kinds = (PM, FM, CM)
    if cause_kind is None:
        cause_kind = kinds[int(rng.integers(0, 3))]
    elif cause_kind not in kinds:
        raise ValueError(f"cause_kind must be one of {kinds}, got {cause_kind!r}")

    if cause_kind == PM:
        # Strictly below the clustering core size, so excursion rows stay noise.
        length = int(rng.integers(2, DEFAULT_MIN_PTS))
        cause_name = PM_CAUSE_NAME
    else:
        length = min(int(rng.integers(4, 13)), m - 1)
        cause_name = FM_CAUSE_NAME if cause_kind == FM else CM_CAUSE_NAME
    start = int(rng.integers(0, m - length + 1))
    cause = InjectedCause(kind=cause_kind, column=cause_name, start_bin=start, length=length)
    active = np.zeros(m, dtype=bool)
    active[start : start + length] = True

    offsets = np.arange(m, dtype=np.float64) * delta_t
    phase = rng.uniform(0.0, 2.0 * np.pi)
    kpi = (
        KPI_BASE
        + KPI_DIURNAL_AMP * np.sin(2.0 * np.pi * offsets / DAY_MS + phase)
        + rng.normal(0.0, KPI_NOISE_SIGMA, m)
    )
    effect = rng.uniform(1.6, 2.0)
    kpi[active] += effect

    pm_columns = [PmSeries(column_name=KPI_NAME, values=kpi, kind="kpi")]
    if cause_kind == PM:
        base = rng.normal(50.0, 3.0, m)
        base[active] += rng.uniform(40.0, 60.0)
        pm_columns.append(PmSeries(column_name=PM_CAUSE_NAME, values=base))
    for i in range(n_pm_decoys):
        name = PM_DECOY_NAMES[i] if i < len(PM_DECOY_NAMES) else f"pm_counter_{i:02d}"
        pm_columns.append(PmSeries(column_name=name, values=_pm_decoy(rng, i % 3, offsets)))

    forbidden = range(start, start + length)
    fm_streams: list[tuple[str, list[FmEvent]]] = []
    if cause_kind == FM:
        raised, cleared = _run_to_event_times(rng, grid, start, length)
        fm_streams.append((FM_CAUSE_NAME, [FmEvent(FM_CAUSE_NAME, raised, cleared)]))
    for i in range(n_fm_decoys):
        name = FM_DECOY_NAMES[i] if i < len(FM_DECOY_NAMES) else f"alm_decoy_{i:02d}"
        events = []
        for s, ln in _decoy_pulses(rng, m, forbidden):
            raised, cleared = _run_to_event_times(rng, grid, s, ln)
            events.append(FmEvent(name, raised, cleared))
        fm_streams.append((name, events))

    cm_streams: list[tuple[str, list[CmEvent]]] = []
    if cause_kind == CM:
        changed, reverted = _run_to_event_times(rng, grid, start, length)
        cm_streams.append(
            (CM_CAUSE_NAME, [CmEvent(CM_CAUSE_NAME, "4", "9", changed, reverted)])
        )
    for i in range(n_cm_decoys):
        name = CM_DECOY_NAMES[i] if i < len(CM_DECOY_NAMES) else f"cm_decoy_{i:02d}"
        events = []
        for s, ln in _decoy_pulses(rng, m, forbidden):
            changed, reverted = _run_to_event_times(rng, grid, s, ln)
            old, new = str(int(rng.integers(0, 8))), str(int(rng.integers(8, 16)))
            events.append(CmEvent(name, old, new, changed, reverted))
        cm_streams.append((name, events))

    matrix = build_design_matrix(pm_columns, fm_streams, cm_streams, grid)
    kpi_index = matrix.column_index(KPI_NAME)
    cause_index = matrix.column_index(cause_name)

    # Guarantee checks: the threshold crossing must hold after noise.
    threshold = DEFAULT_KPI_THRESHOLD
    if not (matrix.data[active, kpi_index] > threshold).all():
        raise InvalidScenario(
            f"seed {seed}: injected effect failed to push every active bin over {threshold}"
        )
    pulse = matrix.data[:, cause_index] if cause_kind != PM else None
    if pulse is not None and not np.array_equal(pulse.astype(bool), active):
        raise InvalidScenario(f"seed {seed}: cause pulse does not match its intended bins")

    # Admissible causes: every event stream, plus the injected counter when
    # the cause is a counter. Ordinary counters echo the KPI too strongly to
    # be allowed as causes without expert vetting.
    mask = np.ones(matrix.n_columns, dtype=np.uint8)
    for j, kind in enumerate(matrix.kinds):
        if kind == PM and matrix.names[j] != cause_name:
            mask[j] = 0
    mask[kpi_index] = 0
    causality = CausalityFilter(mask=mask, kpi_column=kpi_index)

    scenario = SynthScenario(
        seed=seed,
        grid=grid,
        bs_id=bs_id,
        kpi_name=KPI_NAME,
        threshold=threshold,
        direction="above_is_bad",
        cause=cause,
        cause_index=cause_index,
    )
    return SynthOutput(
        scenario=scenario,
        matrix=matrix,
        causality=causality,
        pm_csv=_render_pm_csv(matrix, grid, bs_id),
        fm_csv=_render_fm_csv(fm_streams, bs_id),
        cm_csv=_render_cm_csv(cm_streams, bs_id),
        filter_csv=_render_filter_csv(matrix, mask, kpi_index),
    )


def _render_pm_csv(matrix: DesignMatrix, grid: TimeGrid, bs_id: str) -> str:
    pm_names = [n for n, k in zip(matrix.names, matrix.kinds) if k == PM]
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["timestamp", "bs_id", *pm_names])
    for i in range(matrix.rows):
        row = [grid.bin_start(i), bs_id]
        row += [repr(float(matrix.column(n)[i])) for n in pm_names]
        writer.writerow(row)
    return buf.getvalue()


def _render_fm_csv(streams: list[tuple[str, list[FmEvent]]], bs_id: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["bs_id", "alarm_id", "raised_at", "cleared_at"])
    for name, events in streams:
        for e in events:
            writer.writerow([bs_id, name, e.raised_at, "" if e.cleared_at is None else e.cleared_at])
    return buf.getvalue()


def _render_cm_csv(streams: list[tuple[str, list[CmEvent]]], bs_id: str) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["bs_id", "param_id", "old_value", "new_value", "changed_at", "reverted_at"])
    for name, events in streams:
        for e in events:
            writer.writerow(
                [bs_id, name, e.old_value, e.new_value, e.changed_at,
                 "" if e.reverted_at is None else e.reverted_at]
            )
    return buf.getvalue()


def _render_filter_csv(matrix: DesignMatrix, mask: np.ndarray, kpi_index: int) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["kpi_name", "column_name", "allowed"])
    kpi_name = matrix.names[kpi_index]
    for j, name in enumerate(matrix.names):
        writer.writerow([kpi_name, name, int(mask[j])])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Relationship samples
# ---------------------------------------------------------------------------


def shannon_se(sinr_db: np.ndarray) -> np.ndarray:
    """Spectral efficiency of an ideal link at the given SINR (dB)."""
    return np.log2(1.0 + np.power(10.0, np.asarray(sinr_db, dtype=np.float64) / 10.0))


def saturating_throughput(users: np.ndarray) -> np.ndarray:
    """Cell throughput saturating with user count (arbitrary Mbps scale)."""
    u = np.asarray(users, dtype=np.float64)
    return 180.0 * u / (u + 120.0)


def generate_relationship(
    name: str, n: int, seed: int, missing_frac: float = 0.0
) -> tuple[np.ndarray, np.ndarray]:
    """Noisy (x, y) samples of a known relationship.

    "shannon": spectral efficiency vs SINR in dB, dense across the range.
    "shannon_bounded": spectral efficiency vs linear SINR, with noise
    subtracted rather than added so every sample respects the ideal-link
    ceiling log2(1 + x).
    "traffic": throughput vs user count, with the upper range deliberately
    sparse so some clusters sit below any reasonable support threshold.
    Setting missing_frac > 0 knocks random coordinates out to NaN.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = np.random.default_rng(seed)
    if name == "shannon":
        x = rng.uniform(-5.0, 25.0, n)
        y = shannon_se(x) + rng.normal(0.0, 0.08, n)
    elif name == "shannon_bounded":
        x = rng.uniform(0.0, 300.0, n)
        y = np.log2(1.0 + x) - np.abs(rng.normal(0.0, 0.05, n))
    elif name == "traffic":
        sparse = rng.uniform(0.0, 1.0, n) >= 0.85
        x = np.where(sparse, rng.uniform(300.0, 600.0, n), rng.uniform(0.0, 300.0, n))
        y = saturating_throughput(x) + rng.normal(0.0, 4.0, n)
    else:
        raise ValueError(f"unknown relationship {name!r} (expected 'shannon' or 'traffic')")
    if missing_frac > 0.0:
        for arr in (x, y):
            holes = rng.uniform(0.0, 1.0, n) < missing_frac
            arr[holes] = np.nan
    return x, y
