import itertools
import math

import numpy as np
import pytest

from multistep.core import HorizonSpec, StrategyKind, TimeSeries, make_windows, parse_strategy
from multistep.data import MGParams, mackey_glass
from multistep.errors import CoverageError, DataError, ShapeError
from multistep.evaluation import (
    EvalRecord,
    cliques,
    friedman,
    mean_forecast_error,
    mse,
    nemenyi_cd,
    plane_aggregate,
    rank,
    rank_planes,
    records_from_csv,
    records_from_jsonl,
    records_to_csv,
    append_records_jsonl,
    relative_best,
    significance,
    timing_planes,
)


def record(dataset="d", horizon=10, seed=0, sid="ρ:10", mse_=1.0, train=1.0, infer=1.0):
    return EvalRecord(
        dataset=dataset,
        horizon=horizon,
        seed=seed,
        strategy_id=sid,
        test_mse=mse_,
        train_seconds=train,
        inference_seconds=infer,
        n_models=1,
    )


# record invariants require parseable strategy identifiers, so synthetic
# rank-table tests draw names from the real H=10 space
from multistep.core import enumerate_strategy_space as _space

_VALID_IDS = [s.strategy_id for s in _space(10, include_rectifiers=True)]


def valid_sid(name):
    if isinstance(name, str) and (":" in name):
        return name
    pool = {"x": 0, "y": 1, "z": 2, "a": 3, "b": 4, "c": 5, "win": 6, "lose": 7}
    if name in pool:
        return _VALID_IDS[pool[name]]
    return _VALID_IDS[int(str(name).lstrip("s"))]


def full_records(mses_by_task, horizon=10):
    """mses_by_task: {(dataset, seed): {sid: mse}}"""
    out = []
    for (dataset, seed), by_sid in mses_by_task.items():
        for sid, value in by_sid.items():
            out.append(record(dataset, horizon, seed, valid_sid(sid), value))
    return out


class TestMse:
    def test_examples(self):
        assert mse([1.0, 2.0], [1.0, 2.0]) == 0.0
        assert mse([0.0, 0.0], [1.0, 3.0]) == 5.0

    def test_matches_loop_oracle(self):
        rng = np.random.default_rng(0)
        a, b = rng.normal(size=10), rng.normal(size=10)
        acc = 0.0
        for x, y in zip(a, b):
            acc += (x - y) ** 2
        assert abs(mse(a, b) - acc / 10) < 1e-12

    def test_length_mismatch(self):
        with pytest.raises(ShapeError):
            mse([1.0], [1.0, 2.0])


class TestMeanForecastError:
    def test_zero_when_targets_equal_mean(self):
        train = TimeSeries("t", [1.0, 3.0])  # mean 2
        windows = make_windows(TimeSeries("w", np.full(10, 2.0)), HorizonSpec(2, 3))
        assert mean_forecast_error(train, windows) == 0.0

    def test_constant_offset(self):
        train = TimeSeries("t", [-1.0, 1.0])  # mean 0
        windows = make_windows(TimeSeries("w", np.full(10, 2.0)), HorizonSpec(2, 3))
        assert mean_forecast_error(train, windows) == 4.0

    def test_matches_brute_force_on_generated(self):
        series = mackey_glass(MGParams(length=400, warmup=200))
        windows = make_windows(series, HorizonSpec(10, 20))
        train = TimeSeries("train", series.values[:200])
        expected = np.mean(
            [
                (windows.targets[i, j] - train.values.mean()) ** 2
                for i in range(windows.n)
                for j in range(10)
            ]
        )
        assert abs(mean_forecast_error(train, windows) - expected) < 1e-12


class TestRelativeBest:
    def test_examples(self):
        assert relative_best([2.0], [4.0]) == 0.5
        assert relative_best([1.0, 3.0], [1.0, 3.0]) == 1.0

    def test_scale_invariant(self):
        rng = np.random.default_rng(1)
        novel = rng.uniform(1, 5, size=6)
        existing = rng.uniform(1, 5, size=4)
        base = relative_best(novel, existing)
        assert relative_best(novel * 13.0, existing * 13.0) == pytest.approx(base)

    def test_empty(self):
        with pytest.raises(DataError):
            relative_best([], [1.0])


class TestRank:
    def test_simple(self):
        records = full_records({("a", 0): {"x": 1.0, "y": 2.0, "z": 3.0}})
        table = rank(records)
        by = dict(zip(table.strategies, table.avg_rank))
        assert by == {"x": 1.0, "y": 2.0, "z": 3.0}

    def test_tie_averaging(self):
        records = full_records({("a", 0): {"x": 1.0, "y": 1.0, "z": 3.0}})
        table = rank(records)
        by = dict(zip(table.strategies, table.avg_rank))
        assert by == {"x": 1.5, "y": 1.5, "z": 3.0}

    def test_row_sums(self):
        rng = np.random.default_rng(3)
        records = full_records(
            {("a", s): {sid: float(rng.uniform()) for sid in ("x", "y", "z")} for s in range(4)}
        )
        table = rank(records)
        assert np.allclose(table.ranks.sum(axis=1), 6.0)

    def test_ragged_errors(self):
        records = full_records({("a", 0): {"x": 1.0, "y": 2.0}, ("b", 0): {"x": 1.0}})
        with pytest.raises(CoverageError):
            rank(records)

    def test_duplicate_errors(self):
        records = [record(sid="x"), record(sid="x")]
        with pytest.raises(CoverageError):
            rank(records)


def brute_force_friedman(ranks):
    n, k = ranks.shape
    rank_sums = ranks.sum(axis=0)
    return 12.0 / (n * k * (k + 1)) * float((rank_sums**2).sum()) - 3.0 * n * (k + 1)


def chi2_sf_oracle(stat, dof):
    import mpmath

    return float(mpmath.gammainc(dof / 2.0, stat / 2.0, mpmath.inf, regularized=True))


class TestFriedman:
    def test_all_ties(self):
        records = full_records({("a", s): {"x": 1.0, "y": 1.0} for s in range(5)})
        table = rank(records)
        result = friedman(table)
        assert result.statistic == 0.0
        assert result.pvalue == 1.0

    def test_total_dominance_k2_n10(self):
        records = full_records(
            {("a", s): {"win": 1.0, "lose": 2.0} for s in range(10)}
        )
        result = friedman(rank(records))
        assert result.statistic == pytest.approx(10.0, abs=1e-12)
        assert result.pvalue == pytest.approx(chi2_sf_oracle(10.0, 1), abs=1e-6)
        assert result.pvalue == pytest.approx(0.0016, abs=2e-4)

    def test_random_tables_match_oracle(self):
        rng = np.random.default_rng(7)
        for trial in range(20):
            k = int(rng.integers(2, 7))
            n = int(rng.integers(2, 13))
            sids = [f"s{i}" for i in range(k)]
            records = full_records(
                {("a", s): {sid: float(rng.uniform()) for sid in sids} for s in range(n)}
            )
            table = rank(records)
            result = friedman(table)
            expected = brute_force_friedman(table.ranks)
            assert abs(result.statistic - expected) < 1e-9
            assert abs(result.pvalue - chi2_sf_oracle(expected, k - 1)) < 1e-9

    def test_degenerate(self):
        records = full_records({("a", 0): {"x": 1.0, "y": 2.0}})
        with pytest.raises(DataError):
            friedman(rank(records))


class TestNemenyi:
    def test_limit_towards_zero(self):
        assert nemenyi_cd(2, 10**9) < 1e-3

    def test_k10_n216(self):
        # hand evaluation: q = 3.164 (published table), CD = q * sqrt(110/1296)
        expected = 3.164 * math.sqrt(10 * 11 / (6 * 216))
        assert nemenyi_cd(10, 216, 0.05) == pytest.approx(expected, rel=0.01)
        assert nemenyi_cd(10, 216, 0.05) == pytest.approx(0.92, abs=0.01)

    def test_doubling_n(self):
        a = nemenyi_cd(5, 30)
        b = nemenyi_cd(5, 60)
        assert a / b == pytest.approx(math.sqrt(2.0), rel=1e-12)

    def test_published_values(self):
        # alpha=0.05 row of the standard table, 3 decimals
        published = {2: 1.960, 3: 2.343, 4: 2.569, 5: 2.728, 6: 2.850,
                     7: 2.949, 8: 3.031, 9: 3.102, 10: 3.164}
        for k, q in published.items():
            assert nemenyi_cd(k, 1, 0.05) / math.sqrt(k * (k + 1) / 6.0) == pytest.approx(
                q, abs=1e-3
            )

    def test_alpha_outside_table(self):
        with pytest.raises(DataError):
            nemenyi_cd(5, 10, alpha=0.01)

    def test_k_outside_table(self):
        with pytest.raises(DataError):
            nemenyi_cd(1, 10)
        with pytest.raises(DataError):
            nemenyi_cd(101, 10)


def brute_force_cliques(pairs, cd):
    """All maximal subsets with rank spread <= cd."""
    names = [name for name, _ in pairs]
    values = {name: v for name, v in pairs}
    candidates = []
    for size in range(1, len(names) + 1):
        for combo in itertools.combinations(names, size):
            vals = [values[c] for c in combo]
            if max(vals) - min(vals) <= cd:
                candidates.append(set(combo))
    maximal = [c for c in candidates if not any(c < other for other in candidates)]
    return {frozenset(c) for c in maximal}


class TestCliques:
    def test_example(self):
        groups = cliques({"A": 1.0, "B": 1.1, "C": 3.0}, cd=0.5)
        assert groups == [("A", "B"), ("C",)]

    def test_everything_one_clique(self):
        groups = cliques({"A": 1.0, "B": 1.5, "C": 2.0}, cd=10.0)
        assert groups == [("A", "B", "C")]

    def test_matches_exhaustive_oracle(self):
        rng = np.random.default_rng(11)
        for trial in range(30):
            k = int(rng.integers(2, 11))
            pairs = [(f"s{i}", float(rng.uniform(0, 5))) for i in range(k)]
            cd = float(rng.uniform(0.1, 3.0))
            got = {frozenset(c) for c in cliques(pairs, cd)}
            assert got == brute_force_cliques(pairs, cd)

    def test_spread_within_cd(self):
        rng = np.random.default_rng(5)
        pairs = [(f"s{i}", float(rng.uniform(0, 4))) for i in range(8)]
        values = dict(pairs)
        cd = 1.0
        for clique in cliques(pairs, cd):
            vals = [values[c] for c in clique]
            assert max(vals) - min(vals) <= cd


class TestSignificance:
    def test_bundle(self):
        rng = np.random.default_rng(2)
        sids = ["a", "b", "c"]
        records = full_records(
            {("d", s): {sid: float(rng.uniform()) for sid in sids} for s in range(6)}
        )
        table = rank(records)
        result = significance(table, alpha=0.05)
        assert result.nemenyi_cd == pytest.approx(nemenyi_cd(3, 6, 0.05))
        blob = result.to_dict()
        assert set(blob) >= {"friedman_statistic", "nemenyi_cd", "cliques", "alpha"}


def grid_records(horizon=10, seeds=(0,), datasets=("d",), rng_seed=0, timing=False):
    """Records covering the full strategy grid for each task."""
    from multistep.core import enumerate_strategy_space

    rng = np.random.default_rng(rng_seed)
    out = []
    for dataset in datasets:
        for seed in seeds:
            for spec in enumerate_strategy_space(horizon, include_rectifiers=True):
                out.append(
                    record(
                        dataset,
                        horizon,
                        seed,
                        spec.strategy_id,
                        float(rng.uniform(0.5, 2.0)),
                        train=float(rng.uniform(0.5, 2.0)),
                        infer=float(rng.uniform(0.5, 2.0)),
                    )
                )
    return out


class TestPlanes:
    def test_single_task_shows_raw_ranks(self):
        records = grid_records()
        table = rank(records)
        plane = plane_aggregate(records, (StrategyKind.REC_MO, StrategyKind.DIR_MO), table)
        lookup = dict(zip(table.strategies, table.avg_rank))
        sid = plane.strategy_ids[0][1]  # cell (10%, 20%)
        assert plane.values[0, 1] == lookup[sid]
        assert plane.values.shape == (4, 4)

    def test_duplicate_whole_horizon_cells_match(self):
        records = grid_records()
        rr = plane_aggregate(records, (StrategyKind.REC_MO, StrategyKind.REC_MO))
        dd = plane_aggregate(records, (StrategyKind.DIR_MO, StrategyKind.DIR_MO))
        ii = plane_aggregate(records, (StrategyKind.DIRREC_MO, StrategyKind.DIRREC_MO))
        assert rr.values[3, 3] == dd.values[3, 3] == ii.values[3, 3]
        assert rr.strategy_ids[3][3] == "δ:100|δ:100"

    def test_existing_flags(self):
        records = grid_records()
        rd = plane_aggregate(records, (StrategyKind.REC_MO, StrategyKind.DIR_MO))
        assert rd.existing.diagonal().all()  # rectifying family
        rr = plane_aggregate(records, (StrategyKind.REC_MO, StrategyKind.REC_MO))
        assert rr.existing[3, 3] and rr.existing.sum() == 1

    def test_mean_over_seeds_is_mean_of_planes(self):
        seeds = (0, 1, 2)
        records = grid_records(seeds=seeds, rng_seed=3)
        region = (StrategyKind.DIR_MO, StrategyKind.REC_MO)
        combined = plane_aggregate(records, region)
        per_seed = [
            plane_aggregate([r for r in records if r.seed == s], region) for s in seeds
        ]
        stacked = np.stack([p.values for p in per_seed])
        assert np.allclose(combined.values, stacked.mean(axis=0))

    def test_coverage_error(self):
        records = grid_records()[:-1]
        with pytest.raises(CoverageError):
            rank(records)
        complete = grid_records()
        atomic_only = [r for r in complete if "|" not in r.strategy_id]
        with pytest.raises(CoverageError):
            plane_aggregate(atomic_only, (StrategyKind.REC_MO, StrategyKind.REC_MO))

    def test_rank_planes_returns_all_regions(self):
        planes = rank_planes(grid_records())
        assert len(planes) == 9


class TestTimingPlanes:
    def test_all_equal_times(self):
        records = grid_records(timing=True)
        records = [
            EvalRecord(**{**r.to_dict(), "train_seconds": 2.0}) for r in records
        ]
        planes = timing_planes(records, "train")
        for plane in planes.values():
            assert np.allclose(plane.values, 1.0)

    def test_two_to_one(self):
        records = grid_records()
        doubled = []
        for r in records:
            blob = r.to_dict()
            blob["train_seconds"] = 4.0 if r.strategy_id == "ρ:10|ρ:10" else 2.0
            doubled.append(EvalRecord(**blob))
        planes = timing_planes(doubled, "train")
        rr = planes["ρ-ρ"]
        assert rr.values[0, 0] == 2.0
        assert np.sum(np.isclose(rr.values, 2.0)) == 1

    def test_nonpositive_time_errors(self):
        records = grid_records()
        blob = records[0].to_dict()
        blob["train_seconds"] = 0.0
        records[0] = EvalRecord(**blob)
        with pytest.raises(DataError):
            timing_planes(records, "train")


class TestRecordIO:
    def test_csv_round_trip(self, tmp_path):
        records = grid_records()[:7]
        path = tmp_path / "records.csv"
        records_to_csv(records, path)
        assert records_from_csv(path) == records

    def test_jsonl_round_trip(self, tmp_path):
        records = grid_records()[:5]
        path = tmp_path / "records.jsonl"
        append_records_jsonl(records, path)
        append_records_jsonl(records[:1], path)
        assert records_from_jsonl(path) == records + records[:1]

    def test_jsonl_tolerates_truncated_tail(self, tmp_path):
        records = grid_records()[:3]
        path = tmp_path / "records.jsonl"
        append_records_jsonl(records, path)
        with open(path, "a") as fh:
            fh.write('{"dataset": "d", "horizon"')  # interrupted write
        assert records_from_jsonl(path) == records

    def test_strategy_id_must_parse(self):
        with pytest.raises(Exception):
            record(sid="ρ:30")
