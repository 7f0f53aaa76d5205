import numpy as np
import pytest

from ricdiag import telemetry as tm


def grid_of(rows: int, delta_t: int = 3_600_000, start: int = 0) -> tm.TimeGrid:
    return tm.TimeGrid(window_start=start, delta_t=delta_t, window=rows * delta_t)


class TestTimeGrid:
    def test_rows_is_ceiling(self):
        assert grid_of(5).rows == 5
        # 5 h window at 2 h bins: partial final bin still counts
        assert tm.TimeGrid(window_start=0, delta_t=2, window=5).rows == 3

    def test_operator_shaped_window(self):
        # 1 h bins over 5 days
        grid = tm.TimeGrid(window_start=0, delta_t=3_600_000, window=5 * 86_400_000)
        assert grid.rows == 120

    def test_validation(self):
        with pytest.raises(ValueError):
            tm.TimeGrid(window_start=0, delta_t=0, window=10)
        with pytest.raises(ValueError):
            tm.TimeGrid(window_start=0, delta_t=10, window=0)


class TestBinTime:
    def test_floor_rule(self):
        grid = grid_of(4, delta_t=10, start=100)
        assert tm.bin_time(100, grid) == 0
        assert tm.bin_time(109, grid) == 0
        assert tm.bin_time(110, grid) == 1
        assert tm.bin_time(139, grid) == 3

    def test_window_edges(self):
        grid = grid_of(4, delta_t=10, start=100)
        with pytest.raises(tm.OutOfWindowBefore):
            tm.bin_time(99, grid)
        with pytest.raises(tm.OutOfWindowAfter):
            tm.bin_time(140, grid)
        assert tm.bin_time(140, grid, clamp_end=True) == 4
        assert tm.bin_time(1_000_000, grid, clamp_end=True) == 4


class TestReconstructPulse:
    def test_basic_and_open_ended(self):
        grid = grid_of(6, delta_t=10, start=0)
        pulse = tm.reconstruct_pulse([(10, 30)], grid)
        assert pulse.tolist() == [0, 1, 1, 0, 0, 0]
        pulse = tm.reconstruct_pulse([(25, None)], grid)  # never cleared
        assert pulse.tolist() == [0, 0, 1, 1, 1, 1]

    def test_overlap_unions(self):
        grid = grid_of(6, delta_t=10, start=0)
        # [bin(raise), bin(clear)) per event: bins 0-1 union bins 2-3
        pulse = tm.reconstruct_pulse([(0, 25), (20, 45)], grid)
        assert pulse.tolist() == [1, 1, 1, 1, 0, 0]

    def test_clipping(self):
        grid = grid_of(4, delta_t=10, start=100)
        # raise before the window clips to bin 0, clear past the end to rows
        assert tm.reconstruct_pulse([(50, 125)], grid).tolist() == [1, 1, 0, 0]
        assert tm.reconstruct_pulse([(115, 900)], grid).tolist() == [0, 1, 1, 1]

    def test_outside_events_ignored(self):
        grid = grid_of(4, delta_t=10, start=100)
        assert tm.reconstruct_pulse([(10, 40)], grid).sum() == 0
        assert tm.reconstruct_pulse([(150, 200)], grid).sum() == 0
        # ends exactly at window start: active interval never enters the window
        assert tm.reconstruct_pulse([(50, 100)], grid).sum() == 0

    def test_zero_duration_warns(self):
        grid = grid_of(4, delta_t=10, start=0)
        with pytest.warns(RuntimeWarning):
            pulse = tm.reconstruct_pulse([(12, 14)], grid)  # same bin
        assert pulse.sum() == 0

    def test_reversed_event_rejected(self):
        grid = grid_of(4, delta_t=10, start=0)
        with pytest.raises(ValueError):
            tm.reconstruct_pulse([(20, 10)], grid)


def test_pulse_interval_round_trip_randomized():
    rng = np.random.default_rng(1234)
    for _ in range(100):
        m = int(rng.integers(3, 60))
        pulse = np.zeros(m, dtype=np.uint8)
        runs = []
        cursor = 0
        while True:
            start = cursor + int(rng.integers(0, 3)) + (1 if runs else 0)
            length = int(rng.integers(1, 5))
            if start + length > m:
                break
            runs.append((start, start + length))
            pulse[start : start + length] = 1
            cursor = start + length
        assert tm.pulse_to_intervals(pulse) == runs


class TestEventTypes:
    def test_fm_ordering(self):
        with pytest.raises(ValueError):
            tm.FmEvent(alarm_id="a", raised_at=10, cleared_at=5)
        assert tm.FmEvent("a", 10, None).interval == (10, None)

    def test_cm_ordering(self):
        with pytest.raises(ValueError):
            tm.CmEvent("p", "1", "2", changed_at=10, reverted_at=9)
        assert tm.CmEvent("p", "1", "2", 10, 20).interval == (10, 20)

    def test_pm_series_rejects_inf(self):
        with pytest.raises(ValueError):
            tm.PmSeries(column_name="c", values=np.array([1.0, np.inf]))


class TestBuildDesignMatrix:
    def test_column_order_and_kinds(self):
        grid = grid_of(3, delta_t=10, start=0)
        pm = [tm.PmSeries("k1", np.array([1.0, 2.0, 3.0]), kind="kpi")]
        fm = [("alarm_a", [tm.FmEvent("alarm_a", 0, 10)])]
        cm = [("param_b", [tm.CmEvent("param_b", "1", "2", 20, None)])]
        matrix = tm.build_design_matrix(pm, fm, cm, grid)
        assert matrix.names == ("k1", "alarm_a", "param_b")
        assert matrix.kinds == (tm.PM, tm.FM, tm.CM)
        assert matrix.kind_counts() == (1, 1, 1)
        assert matrix.column("alarm_a").tolist() == [1.0, 0.0, 0.0]
        assert matrix.column("param_b").tolist() == [0.0, 0.0, 1.0]

    def test_gap_filling(self):
        grid = grid_of(5, delta_t=10, start=0)
        vals = np.array([np.nan, 2.0, np.nan, np.nan, 7.0])
        matrix = tm.build_design_matrix([tm.PmSeries("c", vals)], [], [], grid)
        # forward fill, with the leading gap back-filled
        assert matrix.column("c").tolist() == [2.0, 2.0, 2.0, 2.0, 7.0]

    def test_all_missing_column_becomes_zeros(self):
        grid = grid_of(3, delta_t=10, start=0)
        matrix = tm.build_design_matrix(
            [tm.PmSeries("c", np.full(3, np.nan))], [], [], grid
        )
        assert matrix.column("c").tolist() == [0.0, 0.0, 0.0]

    def test_duplicate_names_rejected(self):
        grid = grid_of(2, delta_t=10, start=0)
        pm = [tm.PmSeries("x", np.zeros(2))]
        with pytest.raises(ValueError, match="duplicate"):
            tm.build_design_matrix(pm, [("x", [])], [], grid)

    def test_needs_at_least_one_column(self):
        with pytest.raises(ValueError):
            tm.build_design_matrix([], [], [], grid_of(2, delta_t=10))

    def test_wrong_length_pm_rejected(self):
        grid = grid_of(3, delta_t=10, start=0)
        with pytest.raises(ValueError, match="rows"):
            tm.build_design_matrix([tm.PmSeries("c", np.zeros(2))], [], [], grid)

    def test_fm_column_must_be_binary(self):
        grid = grid_of(2, delta_t=10, start=0)
        with pytest.raises(ValueError, match="not 0/1"):
            tm.DesignMatrix(
                grid=grid, names=("a",), kinds=(tm.FM,), data=np.array([[0.5], [1.0]])
            )


def test_truncate_matrix():
    grid = grid_of(6, delta_t=10, start=0)
    matrix = tm.build_design_matrix(
        [tm.PmSeries("c", np.arange(6, dtype=float))], [], [], grid
    )
    short = tm.truncate_matrix(matrix, 2)
    assert short.rows == 2
    assert short.grid.window == 20
    assert short.column("c").tolist() == [0.0, 1.0]
    with pytest.raises(ValueError):
        tm.truncate_matrix(matrix, 0)
    with pytest.raises(ValueError):
        tm.truncate_matrix(matrix, 7)


class TestParseTimestamp:
    def test_epoch_ms_passthrough(self):
        assert tm.parse_timestamp("1614556800000") == 1_614_556_800_000

    def test_iso_utc(self):
        assert tm.parse_timestamp("2021-03-01T00:00:00Z") == 1_614_556_800_000
        assert tm.parse_timestamp("2021-03-01T00:00:00+00:00") == 1_614_556_800_000

    def test_naive_is_utc(self):
        assert tm.parse_timestamp("2021-03-01T00:00:00") == 1_614_556_800_000

    def test_garbage_rejected(self):
        with pytest.raises(ValueError, match="unparseable"):
            tm.parse_timestamp("yesterday")


class TestPmCsv:
    def write(self, tmp_path, text):
        path = tmp_path / "pm.csv"
        path.write_text(text)
        return path

    def test_happy_path(self, tmp_path):
        grid = grid_of(3, delta_t=10, start=100)
        path = self.write(
            tmp_path,
            "timestamp,bs_id,c1,c2\n100,bs1,1.5,\n110,bs1,2.5,9.0\n",
        )
        series = tm.read_pm_csv(path, grid)
        assert [s.column_name for s in series] == ["c1", "c2"]
        np.testing.assert_array_equal(series[0].values, [1.5, 2.5, np.nan])
        # empty cell stays missing
        assert np.isnan(series[1].values[0])

    def test_duplicate_bin_last_wins(self, tmp_path):
        grid = grid_of(2, delta_t=10, start=0)
        path = self.write(tmp_path, "timestamp,bs_id,c\n0,b,1.0\n5,b,4.0\n")
        series = tm.read_pm_csv(path, grid)
        assert series[0].values[0] == 4.0

    def test_out_of_window_rows_skipped(self, tmp_path):
        grid = grid_of(2, delta_t=10, start=100)
        path = self.write(tmp_path, "timestamp,bs_id,c\n10,b,1.0\n100,b,2.0\n500,b,3.0\n")
        series = tm.read_pm_csv(path, grid)
        np.testing.assert_array_equal(series[0].values, [2.0, np.nan])

    def test_non_numeric_cell_cites_line(self, tmp_path):
        grid = grid_of(2, delta_t=10, start=0)
        path = self.write(tmp_path, "timestamp,bs_id,c\n0,b,1.0\n10,b,oops\n")
        with pytest.raises(ValueError, match="line 3"):
            tm.read_pm_csv(path, grid)

    def test_bad_header(self, tmp_path):
        grid = grid_of(1, delta_t=10, start=0)
        path = self.write(tmp_path, "time,station,c\n0,b,1\n")
        with pytest.raises(ValueError, match="line 1"):
            tm.read_pm_csv(path, grid)

    def test_multi_station_requires_choice(self, tmp_path):
        grid = grid_of(1, delta_t=10, start=0)
        path = self.write(tmp_path, "timestamp,bs_id,c\n0,b1,1\n0,b2,2\n")
        with pytest.raises(ValueError, match="multiple base stations"):
            tm.read_pm_csv(path, grid)
        series = tm.read_pm_csv(path, grid, bs_id="b2")
        assert series[0].values[0] == 2.0

    def test_unknown_station_rejected(self, tmp_path):
        grid = grid_of(1, delta_t=10, start=0)
        path = self.write(tmp_path, "timestamp,bs_id,c\n0,b1,1\n")
        with pytest.raises(ValueError, match="not present"):
            tm.read_pm_csv(path, grid, bs_id="zzz")


class TestEventCsv:
    def test_fm_round_trip(self, tmp_path):
        path = tmp_path / "fm.csv"
        path.write_text(
            "bs_id,alarm_id,raised_at,cleared_at\nb,alm_x,100,200\nb,alm_x,300,\nb,alm_y,50,60\n"
        )
        streams = dict(tm.read_fm_csv(path))
        assert [e.interval for e in streams["alm_x"]] == [(100, 200), (300, None)]
        assert streams["alm_y"][0].cleared_at == 60

    def test_cm_round_trip(self, tmp_path):
        path = tmp_path / "cm.csv"
        path.write_text(
            "bs_id,param_id,old_value,new_value,changed_at,reverted_at\nb,tilt,2,4,100,\n"
        )
        streams = dict(tm.read_cm_csv(path))
        event = streams["tilt"][0]
        assert (event.old_value, event.new_value) == ("2", "4")
        assert event.interval == (100, None)

    def test_fm_bad_order_cites_line(self, tmp_path):
        path = tmp_path / "fm.csv"
        path.write_text("bs_id,alarm_id,raised_at,cleared_at\nb,a,200,100\n")
        with pytest.raises(ValueError, match="line 2"):
            tm.read_fm_csv(path)


def test_matrix_csv_round_trip(tmp_path):
    rng = np.random.default_rng(77)
    grid = grid_of(8, delta_t=10, start=0)
    pm = [tm.PmSeries("c1", rng.normal(5, 2, 8)), tm.PmSeries("c2", rng.uniform(0, 1, 8))]
    fm = [("alm", [tm.FmEvent("alm", 20, 50)])]
    matrix = tm.build_design_matrix(pm, fm, [], grid)

    path = tmp_path / "matrix.csv"
    tm.write_matrix_csv(matrix, path)
    assert tm.manifest_path_for(path).exists()
    loaded = tm.read_matrix_csv(path)

    assert loaded.names == matrix.names
    assert loaded.kinds == matrix.kinds
    assert loaded.grid == matrix.grid
    # repr-formatted floats survive the trip bit for bit
    np.testing.assert_array_equal(loaded.data, matrix.data)


def test_matrix_csv_header_mismatch(tmp_path):
    grid = grid_of(2, delta_t=10, start=0)
    matrix = tm.build_design_matrix([tm.PmSeries("c", np.zeros(2))], [], [], grid)
    path = tmp_path / "matrix.csv"
    tm.write_matrix_csv(matrix, path)
    body = path.read_text().replace("t_bin,c", "t_bin,other")
    path.write_text(body)
    with pytest.raises(ValueError, match="manifest"):
        tm.read_matrix_csv(path)
