"""Channel model, dataset synthesis and mobility traces."""

import random

import pytest

from xlayer.errors import NoApInRange
from xlayer.radio_env import (
    AccessPoint,
    CellLayout,
    EnvironmentConfig,
    MobilityTrace,
    TraceEntry,
    generate_mobility_trace,
    orientation_offsets,
    rss_at,
    sample_rss_vector,
    substream,
    synthesize_radio_map,
)

QUIET = dict(shadowing_sigma_cdbm=0, toa_jitter_ns=0)


def ap(ap_id=1, pos=(0.0, 0.0), tx=2000):
    return AccessPoint(ap_id, pos, tx, cell_id=ap_id)


class TestPathLoss:
    def test_reference_distance(self):
        cfg = EnvironmentConfig(reference_loss_cdbm=4000, **QUIET)
        r = rss_at((1.0, 0.0), ap(tx=2000), cfg, random.Random(0))
        assert r.rss_cdbm == -2000

    def test_decade_adds_exponent_decibels(self):
        cfg = EnvironmentConfig(path_loss_exponent=3.0, **QUIET)
        near = rss_at((1.0, 0.0), ap(), cfg, random.Random(0))
        far = rss_at((10.0, 0.0), ap(), cfg, random.Random(0))
        assert near.rss_cdbm - far.rss_cdbm == 3000

    def test_time_of_arrival_speed_of_light(self):
        cfg = EnvironmentConfig(**QUIET)
        r = rss_at((299.792458, 0.0), ap(), cfg, random.Random(0))
        assert r.toa_ns == 1000

    def test_zero_distance_rejected(self):
        cfg = EnvironmentConfig(**QUIET)
        with pytest.raises(ValueError):
            rss_at((0.0, 0.0), ap(), cfg, random.Random(0))

    def test_monotone_decrease_without_shadowing(self):
        cfg = EnvironmentConfig(**QUIET)
        rng = random.Random(0)
        values = [rss_at((d, 0.0), ap(), cfg, rng).rss_cdbm
                  for d in (5, 20, 80, 320, 640)]
        assert values == sorted(values, reverse=True)

    def test_clamped_to_noise_floor(self):
        cfg = EnvironmentConfig(noise_floor_cdbm=-9000, **QUIET)
        r = rss_at((10_000.0, 0.0), ap(), cfg, random.Random(0))
        assert r.rss_cdbm == -9000

    def test_config_validation(self):
        with pytest.raises(ValueError):
            EnvironmentConfig(path_loss_exponent=1.0)
        with pytest.raises(ValueError):
            EnvironmentConfig(shadowing_sigma_cdbm=-1)


class TestSampleVector:
    APS = [ap(1, (0.0, 0.0)), ap(2, (100.0, 0.0)), ap(3, (0.0, 100.0))]

    def test_all_in_range_sorted(self):
        cfg = EnvironmentConfig(**QUIET)
        v = sample_rss_vector((10.0, 10.0), self.APS, cfg, random.Random(0))
        assert [r.ap_id for r in v.readings] == [1, 2, 3]

    def test_same_seed_identical(self):
        cfg = EnvironmentConfig(shadowing_sigma_cdbm=400, toa_jitter_ns=50)
        a = sample_rss_vector((10.0, 10.0), self.APS, cfg, random.Random(42))
        b = sample_rss_vector((10.0, 10.0), self.APS, cfg, random.Random(42))
        assert a == b

    def test_out_of_range_ap_excluded(self):
        cfg = EnvironmentConfig(noise_floor_cdbm=-8000, **QUIET)
        far = [ap(1, (0.0, 0.0)), ap(2, (5000.0, 0.0))]
        v = sample_rss_vector((1.0, 0.0), far, cfg, random.Random(0))
        assert [r.ap_id for r in v.readings] == [1]

    def test_no_ap_in_range(self):
        cfg = EnvironmentConfig(noise_floor_cdbm=-5000, **QUIET)
        with pytest.raises(NoApInRange):
            sample_rss_vector((4000.0, 0.0), [ap(1)], cfg, random.Random(0))

    def test_orientation_offsets_bounded_and_deterministic(self):
        offs_a = orientation_offsets(7, 2, self.APS)
        offs_b = orientation_offsets(7, 2, self.APS)
        assert offs_a == offs_b
        assert all(-300 <= v <= 300 for v in offs_a.values())
        assert orientation_offsets(7, 3, self.APS) != offs_a


class TestRadioMapSynthesis:
    def test_dataset_shape_matches_parameters(self):
        cfg = EnvironmentConfig(shadowing_sigma_cdbm=400)
        aps = CellLayout(4, 100.0).access_points()
        grid = CellLayout(4, 100.0).map_grid(14)
        records = synthesize_radio_map(grid, 4, 25, aps, cfg, random.Random(1))
        assert len(records) == 14 * 4 * 25
        combos = {(pos, o) for pos, o, _ in records}
        assert len(combos) == 56

    def test_single_record(self):
        cfg = EnvironmentConfig(**QUIET)
        records = synthesize_radio_map([(5.0, 5.0)], 1, 1, [ap()], cfg,
                                       random.Random(1))
        assert len(records) == 1

    def test_same_seed_identical_dataset(self):
        cfg = EnvironmentConfig(shadowing_sigma_cdbm=400, seed=3)
        aps = CellLayout(4, 100.0).access_points()
        grid = CellLayout(4, 100.0).map_grid(6)
        a = synthesize_radio_map(grid, 2, 3, aps, cfg, random.Random(9))
        b = synthesize_radio_map(grid, 2, 3, aps, cfg, random.Random(9))
        assert a == b

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError):
            synthesize_radio_map([], 1, 1, [ap()], EnvironmentConfig(), random.Random(0))


class TestMobilityTrace:
    CELL_ZONE = {1: 0, 2: 0, 3: 1, 4: 1}

    def test_visits_requested_cells(self):
        trace = generate_mobility_trace(self.CELL_ZONE, 4, 1000, random.Random(0))
        cells = [e.cell_id for e in trace]
        assert sorted(cells) == [1, 2, 3, 4]
        assert len({e.zone_id for e in trace}) == 2

    def test_single_cell(self):
        trace = generate_mobility_trace(self.CELL_ZONE, 1, 1000, random.Random(0))
        assert len(trace) == 1

    def test_too_many_cells_rejected(self):
        with pytest.raises(ValueError):
            generate_mobility_trace(self.CELL_ZONE, 20, 1000, random.Random(0))

    def test_times_strictly_increasing(self):
        trace = generate_mobility_trace(self.CELL_ZONE, 4, 500, random.Random(5))
        times = [e.time_ns for e in trace]
        assert times == sorted(times)
        assert len(set(times)) == len(times)
        with pytest.raises(ValueError):
            MobilityTrace([TraceEntry(5, (0, 0), 1, 0), TraceEntry(5, (0, 0), 2, 0)])

    def test_zone_blocks_are_contiguous(self):
        trace = generate_mobility_trace(self.CELL_ZONE, 4, 1000, random.Random(0))
        zones = [e.zone_id for e in trace]
        transitions = sum(1 for a, b in zip(zones, zones[1:]) if a != b)
        assert transitions == 1


class TestSubstream:
    def test_independent_of_call_order(self):
        a = substream(1, "x", 2).random()
        substream(1, "y").random()
        b = substream(1, "x", 2).random()
        assert a == b

    def test_distinct_names_distinct_streams(self):
        assert substream(1, "a").random() != substream(1, "b").random()
