import numpy as np
import pytest

from multistep.core import (
    AtomicSpec,
    ComposedSpec,
    HorizonSpec,
    StrategyKind,
    TimeSeries,
    derive_seed,
    divisor_set,
    enumerate_strategy_space,
    make_windows,
    parse_strategy,
    percent_to_sigma,
    sigma_to_percent,
    strategy_set,
)
from multistep.errors import (
    DataError,
    EmptyDatasetError,
    InvalidHorizonError,
    InvalidParameterisationError,
)


def brute_force_divisors(h):
    return tuple(s for s in range(1, h + 1) if h % s == 0)


class TestDivisorSet:
    def test_examples(self):
        assert divisor_set(10) == (1, 2, 5, 10)
        assert divisor_set(1) == (1,)
        assert divisor_set(80) == brute_force_divisors(80)
        assert len(divisor_set(80)) == 10

    def test_invalid_horizon(self):
        with pytest.raises(InvalidHorizonError):
            divisor_set(0)

    def test_brute_force_up_to_1000(self):
        for h in range(1, 1001):
            assert divisor_set(h) == brute_force_divisors(h)


class TestPercentConversion:
    def test_examples(self):
        assert percent_to_sigma(50, 10) == 5
        assert percent_to_sigma(100, 7) == 7
        assert percent_to_sigma(10, 80) == 8

    def test_non_divisor_names_neighbours(self):
        with pytest.raises(InvalidParameterisationError) as err:
            percent_to_sigma(30, 10)
        assert "20" in str(err.value) and "50" in str(err.value)

    def test_non_integral(self):
        with pytest.raises(InvalidParameterisationError):
            percent_to_sigma(15, 10)

    def test_out_of_range(self):
        with pytest.raises(InvalidParameterisationError):
            percent_to_sigma(0, 10)
        with pytest.raises(InvalidParameterisationError):
            percent_to_sigma(101, 10)

    def test_round_trip_all_divisors(self):
        for h in (1, 7, 10, 40, 80, 96):
            for s in divisor_set(h):
                assert percent_to_sigma(sigma_to_percent(s, h), h) == s


class TestTimeSeries:
    def test_rejects_nan(self):
        with pytest.raises(DataError):
            TimeSeries("bad", [1.0, np.nan, 2.0])

    def test_rejects_empty(self):
        with pytest.raises(DataError):
            TimeSeries("empty", [])

    def test_immutable(self):
        ts = TimeSeries("ok", [1.0, 2.0])
        with pytest.raises(ValueError):
            ts.values[0] = 9.0


class TestMakeWindows:
    def test_count(self):
        ts = TimeSeries("t", np.arange(100.0))
        data = make_windows(ts, HorizonSpec(2, 4))
        assert data.n == 95

    def test_alignment(self):
        ts = TimeSeries("t", [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
        data = make_windows(ts, HorizonSpec(2, 3))
        assert data.inputs[0].tolist() == [1, 2, 3]
        assert data.targets[0].tolist() == [4, 5]
        assert data.inputs[1].tolist() == [2, 3, 4]
        assert data.targets[1].tolist() == [5, 6]

    def test_boundary(self):
        ts = TimeSeries("t", np.arange(169.0))
        with pytest.raises(EmptyDatasetError) as err:
            make_windows(ts, HorizonSpec(10, 160))
        assert "170" in str(err.value)

    def test_flatten_round_trip(self):
        rng = np.random.default_rng(5)
        values = rng.normal(size=53)
        data = make_windows(TimeSeries("t", values), HorizonSpec(4, 7))
        rebuilt = np.concatenate([data.inputs[:, 0], data.inputs[-1, 1:], data.targets[-1]])
        assert np.array_equal(rebuilt, values)


class TestStrategySpace:
    def test_atomic_count_h10(self):
        assert len(enumerate_strategy_space(10)) == 10

    def test_raw_set_direct_families_h80(self):
        raw = strategy_set(80)
        count = sum(1 for s in raw if s.kind in (StrategyKind.DIR_MO, StrategyKind.DIRREC_MO))
        assert count == 20

    def test_degenerate_horizon(self):
        space = enumerate_strategy_space(1)
        assert len(space) == 1
        assert space[0].strategy_id == "δ:100"

    def test_full_grid_h10(self):
        space = enumerate_strategy_space(10, include_rectifiers=True)
        assert len(space) == 110
        assert len({s.strategy_id for s in space}) == 110

    def test_deterministic(self):
        a = enumerate_strategy_space(12, include_rectifiers=True)
        b = enumerate_strategy_space(12, include_rectifiers=True)
        assert [s.strategy_id for s in a] == [s.strategy_id for s in b]

    def test_ordering(self):
        ids = [s.strategy_id for s in enumerate_strategy_space(10)]
        assert ids == [
            "ρ:10", "ρ:20", "ρ:50",
            "δ:10", "δ:20", "δ:50", "δ:100",
            "ι:10", "ι:20", "ι:50",
        ]

    def test_canonical_idempotent(self):
        for spec in strategy_set(20):
            assert spec.canonical().canonical() == spec.canonical()
        for spec in enumerate_strategy_space(20, include_rectifiers=True):
            assert spec.canonical() == spec.canonical().canonical()

    def test_sigma_h_collapses_to_direct(self):
        spec = AtomicSpec(StrategyKind.REC_MO, 10, 10)
        assert spec.canonical().kind is StrategyKind.DIR_MO


class TestStrategyIds:
    def test_round_trip(self):
        for h in (10, 40, 80):
            for spec in enumerate_strategy_space(h, include_rectifiers=True):
                assert parse_strategy(spec.strategy_id, h) == spec

    def test_ascii_aliases(self):
        assert parse_strategy("r:50|d:10", 10) == parse_strategy("ρ:50|δ:10", 10)
        assert parse_strategy("i:20", 10).base.kind is StrategyKind.DIRREC_MO

    def test_fractional_percent(self):
        spec = parse_strategy("δ:2.5", 40)
        assert spec.base.sigma == 1

    def test_bad_inputs(self):
        for bad in ("", "x:10", "ρ:30", "ρ:10|δ:10|δ:10", "ρ"):
            with pytest.raises(InvalidParameterisationError):
                parse_strategy(bad, 10)

    def test_mismatched_horizons(self):
        with pytest.raises(InvalidParameterisationError):
            ComposedSpec(
                AtomicSpec(StrategyKind.REC_MO, 1, 10),
                AtomicSpec(StrategyKind.DIR_MO, 1, 20),
            )

    def test_invalid_sigma(self):
        with pytest.raises(InvalidParameterisationError):
            AtomicSpec(StrategyKind.REC_MO, 3, 10)


class TestDeriveSeed:
    def test_stable_and_distinct(self):
        a = derive_seed(0, "ρ:10", "mg", 10)
        assert a == derive_seed(0, "ρ:10", "mg", 10)
        assert a != derive_seed(1, "ρ:10", "mg", 10)
        assert a != derive_seed(0, "ρ:20", "mg", 10)
        assert 0 <= a < 2**63
