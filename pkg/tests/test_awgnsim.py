"""
Tests for the Gaussian broadcast channel simulator.
"""

import io
import math

import numpy as np
import pytest

from app.core.errors import InvalidConfigError, NotBracketedError, RateNotResolvedError
from app.services.awgnsim import (
    CSV_COLUMNS,
    RNG_NAME,
    ChannelConfig,
    PointResult,
    SimResult,
    SnrConvention,
    average_energy_per_dim,
    capacity_min_snr_db,
    exact_grid_ser,
    noise_variance,
    predicted_gain_db,
    simulate,
    snr_at_rate,
    snr_gap_at,
    transmit_offset,
    union_bound_ser,
    write_csv,
)
from app.services.indexcode import new_circulant


def synthetic_curve(code, snr_points, shift_db, trials=10**6):
    """A curve with log10(rate) = -(snr - shift)/5."""
    cfg = ChannelConfig(snr_db_points=tuple(snr_points), trials_per_point=trials, seed=0)
    points = [
        PointResult(
            snr_db=s,
            trials=trials,
            errors=round(trials * 10 ** (-(s - shift_db) / 5)),
            per_message_errors={},
        )
        for s in snr_points
    ]
    return SimResult(code=code, subset=frozenset(), config=cfg, points=points)


class TestChannelModel:
    """Tests for offsets, energies and noise."""

    def test_even_offset(self):
        assert transmit_offset(new_circulant(4, 3, (1, 0, 0))).tolist() == [0.5, 0.5, 0.5]

    def test_odd_offset(self):
        assert transmit_offset(new_circulant(5, 2, (1, 0))).tolist() == [0.0, 0.0]

    def test_offset_constellation_is_centred(self, qam16_code):
        levels = np.arange(-2, 2) + transmit_offset(qam16_code)[0]
        assert levels.tolist() == [-1.5, -0.5, 0.5, 1.5]
        assert levels.mean() == 0

    def test_energy(self):
        assert average_energy_per_dim(16) == 21.25

    def test_noise_conventions(self):
        assert noise_variance(4, 10.0, SnrConvention.NOISE_VARIANCE_PER_DIM) == pytest.approx(0.1)
        assert noise_variance(4, 0.0, SnrConvention.ES_OVER_N0) == pytest.approx(1.25)


class TestChannelConfig:
    """Tests for configuration validation."""

    @pytest.mark.parametrize(
        "overrides",
        [
            {"trials_per_point": 0},
            {"snr_db_points": ()},
            {"snr_db_points": (1.0, math.inf)},
            {"threads": 0},
            {"seed": -1},
            {"seed": 2**64},
        ],
    )
    def test_rejected(self, overrides):
        values = {"snr_db_points": (5.0,), "trials_per_point": 10, "seed": 1} | overrides
        with pytest.raises(InvalidConfigError):
            ChannelConfig(**values)

    def test_defaults_from_settings(self, settings_env):
        settings_env(max_errors_per_point=7, sim_batch_size=33)
        cfg = ChannelConfig(snr_db_points=(5.0,), trials_per_point=10, seed=1)
        assert cfg.resolved_max_errors() == 7
        assert cfg.resolved_batch_size() == 33


class TestAnalytic:
    """Tests for the closed-form references."""

    def test_exact_grid_example(self, qam16_code):
        assert exact_grid_ser(qam16_code, 10.0) == pytest.approx(0.1635, abs=5e-4)

    def test_union_bound_dominates(self, qam16_code):
        for snr_db in (0.0, 5.0, 10.0, 15.0):
            assert union_bound_ser(qam16_code, snr_db) >= exact_grid_ser(qam16_code, snr_db)

    def test_union_bound_capped(self, qam16_code):
        assert union_bound_ser(qam16_code, -30.0) == 1.0

    def test_predicted_gain(self, qam16_code):
        assert predicted_gain_db(qam16_code, frozenset({1})) == pytest.approx(6.0206, abs=1e-4)
        assert predicted_gain_db(qam16_code, frozenset()) == 0.0


class TestSimulate:
    """Tests for Monte-Carlo runs."""

    def test_reproducible(self, qam16_code):
        cfg = ChannelConfig(snr_db_points=(4.0, 8.0), trials_per_point=500, seed=42, batch_size=64)
        first = simulate(qam16_code, frozenset({1}), cfg)
        second = simulate(qam16_code, frozenset({1}), cfg)
        assert first.points == second.points
        assert first.rng == RNG_NAME
        assert first.seed == 42

    @pytest.mark.parametrize("max_errors", [0, 40])
    def test_thread_count_independent(self, qam16_code, max_errors):
        base = dict(
            snr_db_points=(2.0, 6.0), trials_per_point=1000, seed=7, batch_size=100, max_errors=max_errors
        )
        serial = simulate(qam16_code, frozenset(), ChannelConfig(**base))
        parallel = simulate(qam16_code, frozenset(), ChannelConfig(**base, threads=3))
        assert serial.points == parallel.points

    def test_seed_changes_result(self, qam16_code):
        base = dict(snr_db_points=(2.0, 4.0, 6.0), trials_per_point=2000, max_errors=0)
        a = simulate(qam16_code, frozenset(), ChannelConfig(seed=1, **base))
        b = simulate(qam16_code, frozenset(), ChannelConfig(seed=2, **base))
        assert [p.errors for p in a.points] != [p.errors for p in b.points]

    def test_early_stop(self, qam16_code):
        cfg = ChannelConfig(snr_db_points=(0.0,), trials_per_point=10_000, seed=3, batch_size=100, max_errors=50)
        point = simulate(qam16_code, frozenset(), cfg).points[0]
        assert point.stopped_early
        assert point.errors >= 50
        assert point.trials < 10_000

    def test_noiseless_has_no_errors(self, qam16_code, m8_code):
        cfg = ChannelConfig(snr_db_points=(200.0,), trials_per_point=500, seed=9)
        for code in (qam16_code, m8_code):
            for S in (frozenset(), frozenset({1}), frozenset({2})):
                point = simulate(code, S, cfg).points[0]
                assert point.errors == 0
                assert set(point.per_message_rates.values()) <= {0.0}

    def test_matches_exact_grid(self, qam16_code):
        """S=∅ at 10 dB agrees with the per-coordinate PAM error rate."""
        cfg = ChannelConfig(snr_db_points=(10.0,), trials_per_point=20_000, seed=2024, max_errors=0)
        point = simulate(qam16_code, frozenset(), cfg).points[0]
        assert point.trials == 20_000
        assert point.rate == pytest.approx(exact_grid_ser(qam16_code, 10.0), abs=4 * point.stderr)

    def test_per_message_rates(self, qam16_code):
        cfg = ChannelConfig(snr_db_points=(6.0,), trials_per_point=2000, seed=5, max_errors=0)
        point = simulate(qam16_code, frozenset({2}), cfg).points[0]
        assert set(point.per_message_errors) == {1}
        assert point.per_message_errors[1] == point.errors

    def test_monotone_in_snr(self, qam16_code):
        cfg = ChannelConfig(snr_db_points=(0.0, 4.0, 8.0, 12.0), trials_per_point=4000, seed=11, max_errors=0)
        points = simulate(qam16_code, frozenset(), cfg).points
        for lower, higher in zip(points, points[1:]):
            assert higher.rate <= lower.rate + 3 * max(lower.stderr, higher.stderr)

    def test_side_information_never_hurts(self, qam16_code):
        cfg = ChannelConfig(snr_db_points=(4.0, 8.0), trials_per_point=4000, seed=13, max_errors=0)
        without = simulate(qam16_code, frozenset(), cfg).points
        with_side = simulate(qam16_code, frozenset({1}), cfg).points
        for a, b in zip(without, with_side):
            assert b.rate <= a.rate + 3 * max(a.stderr, b.stderr)

    @pytest.mark.slow
    def test_side_information_gap_near_six_db(self, qam16_code):
        cfg_empty = ChannelConfig(
            snr_db_points=tuple(float(s) for s in range(14, 20)),
            trials_per_point=2_000_000,
            seed=1,
            max_errors=400,
        )
        cfg_side = ChannelConfig(
            snr_db_points=tuple(float(s) for s in range(8, 14)),
            trials_per_point=2_000_000,
            seed=1,
            max_errors=400,
        )
        empty = simulate(qam16_code, frozenset(), cfg_empty)
        side = simulate(qam16_code, frozenset({1}), cfg_side)
        assert snr_gap_at(empty, side, 1e-3) == pytest.approx(6.0, abs=0.75)


class TestCurves:
    """Tests for curve interpolation."""

    def test_identical_curves(self, qam16_code):
        curve = synthetic_curve(qam16_code, range(0, 13), 0.0)
        assert snr_gap_at(curve, curve, 1e-1) == 0

    def test_three_db_shift(self, qam16_code):
        later = synthetic_curve(qam16_code, range(3, 16), 3.0)
        earlier = synthetic_curve(qam16_code, range(0, 13), 0.0)
        assert snr_gap_at(later, earlier, 1e-1) == pytest.approx(3.0, abs=0.01)
        assert snr_at_rate(earlier, 1e-1) == pytest.approx(5.0, abs=0.01)

    def test_not_bracketed(self, qam16_code):
        curve = synthetic_curve(qam16_code, range(0, 5), 0.0)
        with pytest.raises(NotBracketedError):
            snr_at_rate(curve, 1e-3)

    def test_zero_errors_do_not_resolve_rate(self, qam16_code):
        """1e-2 at 10 dB then no errors at 20 dB: the 1e-3 crossing is unknown."""
        curve = synthetic_curve(qam16_code, (10, 20), 0.0, trials=1000)
        assert [p.errors for p in curve.points] == [10, 0]
        with pytest.raises(RateNotResolvedError, match="more trials"):
            snr_at_rate(curve, 1e-3)
        assert snr_at_rate(curve, 1e-2) == pytest.approx(10.0)

    def test_target_range(self, qam16_code):
        with pytest.raises(InvalidConfigError):
            snr_at_rate(synthetic_curve(qam16_code, range(0, 5), 0.0), 1.5)


class TestCapacity:
    """Tests for capacity-limit SNRs."""

    def test_no_side_information(self):
        assert capacity_min_snr_db((0.5, 0.5), frozenset()) == pytest.approx(4.77, abs=0.005)

    def test_half_bit_missing(self):
        assert capacity_min_snr_db((0.5, 0.5), frozenset({1})) == 0.0
        assert capacity_min_snr_db((0.5, 0.5), frozenset({2})) == 0.0

    def test_one_bit_missing(self):
        assert capacity_min_snr_db((1.0, 0.5, 0.5), frozenset({2, 3})) == pytest.approx(
            10 * math.log10(3)
        )

    def test_nothing_missing(self):
        assert capacity_min_snr_db((0.5, 0.5), frozenset({1, 2})) == -math.inf

    def test_negative_rate(self):
        with pytest.raises(InvalidConfigError):
            capacity_min_snr_db((0.5, -0.5), frozenset())


class TestCsv:
    """Tests for CSV output."""

    def test_columns_and_rows(self, qam16_code):
        cfg = ChannelConfig(snr_db_points=(3.0, 6.0), trials_per_point=100, seed=1)
        results = [simulate(qam16_code, S, cfg) for S in (frozenset(), frozenset({1}))]
        buffer = io.StringIO()
        write_csv(results, buffer)
        lines = buffer.getvalue().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert len(lines) == 5
        assert lines[3].startswith("{1},3,100,")

    def test_file_target(self, qam16_code, tmp_path):
        cfg = ChannelConfig(snr_db_points=(3.0,), trials_per_point=50, seed=1)
        path = tmp_path / "curve.csv"
        write_csv([simulate(qam16_code, frozenset(), cfg)], path)
        assert path.read_text().splitlines()[1].startswith("{},3,50,")
