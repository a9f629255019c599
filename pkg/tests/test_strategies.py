import numpy as np
import pytest

from multistep.core import (
    AtomicSpec,
    ComposedSpec,
    HorizonSpec,
    StrategyKind,
    TimeSeries,
    WindowDataset,
    enumerate_strategy_space,
    make_windows,
    parse_strategy,
)
from multistep.errors import AliasError, InvalidParameterisationError
from multistep.learners import FittedLearner, LearnerConfig, ridge_closed_form
from multistep.strategies import (
    FittedAtomicStrategy,
    build_alias,
    classic_aliases,
    forecast_atomic,
    forecast_atomic_matrix,
    forecast_composed,
    forecast_composed_matrix,
    is_existing_strategy,
    load_fitted,
    save_fitted,
    shifted_training_inputs,
    train_atomic,
    train_composed,
)

RIDGE = LearnerConfig("ridge", seed=0, hyperparameters={"lam": 1e-10})
PERSIST = LearnerConfig("persistence")


def atom(kind, sigma, horizon):
    return AtomicSpec(kind, sigma, horizon)


class _OracleLearner(FittedLearner):
    """f(x) = last(x) + 1, replicated across outputs."""

    family = "oracle"

    def _predict(self, X):
        return np.repeat(X[:, -1:] + 1.0, self.output_dim, axis=1)


def make_data(values, horizon, window):
    return make_windows(TimeSeries("t", values), HorizonSpec(horizon, window))


def ramp_data(horizon=6, window=8, length=60):
    return make_data(np.arange(length, dtype=float), horizon, window)


class TestTrainAtomic:
    def test_model_counts(self):
        data = make_data(np.arange(40.0), 10, 12)
        assert train_atomic(atom(StrategyKind.DIR_MO, 5, 10), RIDGE, data).n_models == 2
        assert train_atomic(atom(StrategyKind.REC_MO, 1, 10), RIDGE, data).n_models == 1
        assert train_atomic(atom(StrategyKind.REC_MO, 5, 10), RIDGE, data).n_models == 1
        assert train_atomic(atom(StrategyKind.DIRREC_MO, 2, 10), RIDGE, data).n_models == 5

    def test_dirrec_shifted_inputs_use_true_values(self):
        # series 1..20, window 4, horizon 6, sigma 2: the second model's
        # training inputs must end with the true next two values.
        data = make_data(np.arange(1.0, 21.0), 6, 4)
        shifted = shifted_training_inputs(data, sigma=2, index=1)
        assert shifted[0].tolist() == [3.0, 4.0, 5.0, 6.0]
        expected_tail = np.hstack([data.inputs, data.targets])[:, 2:6]
        assert np.array_equal(shifted, expected_tail)
        fitted = train_atomic(atom(StrategyKind.DIRREC_MO, 2, 6), RIDGE, data)
        assert fitted.n_models == 3

    def test_window_must_cover_horizon_for_recursive_families(self):
        from multistep.strategies import check_window_covers_horizon

        short = [parse_strategy("ρ:10", 10)]
        with pytest.raises(InvalidParameterisationError):
            check_window_covers_horizon(short, horizon=10, window=6)
        with pytest.raises(InvalidParameterisationError):
            check_window_covers_horizon([parse_strategy("δ:10|ι:50", 10)], 10, 6)
        # direct has no feedback, and the collapsed single-model case is fine
        check_window_covers_horizon([parse_strategy("δ:50", 10)], 10, 6)
        check_window_covers_horizon([parse_strategy("ρ:100", 10)], 10, 6)
        check_window_covers_horizon(short, horizon=10, window=10)


class TestForecastAtomic:
    def test_recursive_persistence_fixpoint(self):
        data = make_data(np.arange(30.0), 3, 5)
        fitted = train_atomic(atom(StrategyKind.REC_MO, 1, 3), PERSIST, data)
        out = forecast_atomic(fitted, np.array([1.0, 2.0, 3.0, 4.0, 5.0]))
        assert out.tolist() == [5.0, 5.0, 5.0]

    def test_recursive_oracle_hand_trace(self):
        spec = atom(StrategyKind.REC_MO, 1, 3)
        model = _OracleLearner(LearnerConfig("persistence"), input_dim=5, output_dim=1)
        fitted = FittedAtomicStrategy(spec, [model], PERSIST, 0.0)
        out = forecast_atomic(fitted, np.array([1.0, 2.0, 3.0, 4.0, 5.0]))
        assert out.tolist() == [6.0, 7.0, 8.0]

    def test_direct_concatenates(self):
        spec = atom(StrategyKind.DIR_MO, 2, 4)
        models = [
            _OracleLearner(PERSIST, input_dim=4, output_dim=2),
            _OracleLearner(PERSIST, input_dim=4, output_dim=2),
        ]
        fitted = FittedAtomicStrategy(spec, models, PERSIST, 0.0)
        out = forecast_atomic(fitted, np.array([0.0, 0.0, 0.0, 9.0]))
        # both models see the original window ending in 9
        assert out.tolist() == [10.0, 10.0, 10.0, 10.0]

    def test_dirrec_feeds_predictions(self):
        spec = atom(StrategyKind.DIRREC_MO, 1, 3)
        models = [_OracleLearner(PERSIST, input_dim=4, output_dim=1) for _ in range(3)]
        fitted = FittedAtomicStrategy(spec, models, PERSIST, 0.0)
        out = forecast_atomic(fitted, np.array([1.0, 2.0, 3.0, 4.0]))
        assert out.tolist() == [5.0, 6.0, 7.0]

    def test_whole_horizon_kinds_identical(self):
        data = ramp_data(horizon=6)
        outs = []
        for kind in StrategyKind:
            fitted = train_atomic(atom(kind, 6, 6), RIDGE, data)
            outs.append(forecast_atomic_matrix(fitted, data.inputs[:4]))
        assert np.array_equal(outs[0], outs[1])
        assert np.array_equal(outs[1], outs[2])

    def test_direct_never_sees_predictions(self):
        data = ramp_data()
        spec = ComposedSpec(atom(StrategyKind.DIR_MO, 2, 6), atom(StrategyKind.DIR_MO, 3, 6))
        fitted = train_composed(spec, RIDGE, data)

        seen = []

        class Recorder(FittedLearner):
            family = "recorder"

            def __init__(self, inner):
                super().__init__(inner.config, inner.input_dim, inner.output_dim)
                self.inner = inner

            def _predict(self, X):
                seen.append(X.copy())
                return self.inner.predict_matrix(X)

        for strategy in (fitted.base, fitted.rectifier):
            strategy.models = [Recorder(m) for m in strategy.models]
        x = data.inputs[3]
        forecast_composed(fitted, x)
        for X in seen:
            assert np.array_equal(X, x[np.newaxis, :])


class TestComposed:
    def test_absent_rectifier_is_base_alone(self):
        data = ramp_data()
        spec = ComposedSpec(atom(StrategyKind.DIR_MO, 3, 6))
        composed = train_composed(spec, RIDGE, data)
        alone = train_atomic(spec.base, RIDGE, data)
        x = data.inputs[5]
        assert np.array_equal(forecast_composed(composed, x), forecast_atomic(alone, x))
        assert composed.rectifier is None

    def test_elementwise_addition(self):
        class Const(FittedLearner):
            family = "const"

            def __init__(self, values):
                super().__init__(PERSIST, input_dim=2, output_dim=len(values))
                self.values = np.asarray(values, dtype=float)

            def _predict(self, X):
                return np.tile(self.values, (X.shape[0], 1))

        from multistep.strategies import FittedComposedStrategy

        h = 2
        base = FittedAtomicStrategy(atom(StrategyKind.DIR_MO, 2, h), [Const([1.0, 2.0])], PERSIST, 0.0)
        rect = FittedAtomicStrategy(atom(StrategyKind.DIR_MO, 2, h), [Const([0.5, -0.5])], PERSIST, 0.0)
        spec = ComposedSpec(base.spec, rect.spec)
        fitted = FittedComposedStrategy(spec, base, rect, 0.0)
        assert forecast_composed(fitted, np.zeros(2)).tolist() == [1.5, 1.5]

    def test_zero_residuals_give_base_forecast(self):
        # persistence base on a constant series reproduces targets exactly
        data = make_data(np.full(30, 4.0), 4, 6)
        for kind in StrategyKind:
            for sigma in (1, 2, 4):
                spec = ComposedSpec(
                    atom(StrategyKind.DIR_MO, 4, 4), atom(kind, sigma, 4)
                )
                fitted = train_composed(spec, PERSIST, data, rectifier_config=RIDGE)
                beta = forecast_atomic_matrix(fitted.base, data.inputs)
                residuals = data.targets - beta
                assert np.max(np.abs(residuals)) == 0.0
                out = forecast_composed_matrix(fitted, data.inputs)
                assert np.allclose(out, beta, atol=1e-9)

    def test_against_two_stage_oracle(self):
        # independent re-implementation of train-base / residuals /
        # train-rectifier / sum on a 50-point synthetic series
        rng = np.random.default_rng(17)
        values = np.sin(np.arange(50) * 0.3) + 0.1 * rng.normal(size=50)
        h, w, lam = 4, 8, 1e-8
        data = make_data(values, h, w)
        spec = ComposedSpec(atom(StrategyKind.REC_MO, 2, h), atom(StrategyKind.DIR_MO, 2, h))
        cfg = LearnerConfig("ridge", seed=0, hyperparameters={"lam": lam})
        fitted = train_composed(spec, cfg, data)

        # oracle: base = one ridge on (window -> first 2 targets), iterated
        bw, _ = ridge_closed_form(data.inputs, data.targets[:, :2], lam)

        def base_forecast(X):
            window = X.copy()
            blocks = []
            for _ in range(2):
                pred = window @ bw[:-1] + bw[-1]
                blocks.append(pred)
                window = np.hstack([window, pred])[:, -w:]
            return np.hstack(blocks)

        beta_train = base_forecast(data.inputs)
        eta = data.targets - beta_train
        r1, _ = ridge_closed_form(data.inputs, eta[:, :2], lam)
        r2, _ = ridge_closed_form(data.inputs, eta[:, 2:], lam)

        probe = data.inputs[:6]
        expected = base_forecast(probe) + np.hstack(
            [probe @ r1[:-1] + r1[-1], probe @ r2[:-1] + r2[-1]]
        )
        assert np.allclose(forecast_composed_matrix(fitted, probe), expected, atol=1e-9)


class TestAliases:
    def test_rectify(self):
        spec = build_alias("rectify", 10)
        assert spec.base == atom(StrategyKind.REC_MO, 1, 10)
        assert spec.rectifier == atom(StrategyKind.DIR_MO, 1, 10)

    def test_mimo_canonical(self):
        assert build_alias("mimo", 10).strategy_id == "δ:100"

    def test_rectifymo(self):
        spec = build_alias("rectifymo", 10, sigma=5)
        assert spec.base == atom(StrategyKind.REC_MO, 5, 10)
        assert spec.rectifier == atom(StrategyKind.DIR_MO, 5, 10)

    def test_alias_table_complete(self):
        names = set(classic_aliases())
        assert names == {
            "recursive", "direct", "dirrec", "mimo", "rectify",
            "recmo", "dirmo", "dirrecmo", "rectifymo",
        }

    def test_errors(self):
        with pytest.raises(AliasError):
            build_alias("bogus", 10)
        with pytest.raises(AliasError):
            build_alias("dirmo", 10)  # missing sigma
        with pytest.raises(AliasError):
            build_alias("recursive", 10, sigma=2)
        with pytest.raises(InvalidParameterisationError):
            build_alias("dirmo", 10, sigma=3)


class TestExistingClassification:
    def test_atomic_is_existing(self):
        for spec in enumerate_strategy_space(10):
            assert is_existing_strategy(spec)

    def test_rectifymo_family_is_existing(self):
        for sigma in (1, 2, 5, 10):
            assert is_existing_strategy(build_alias("rectifymo", 10, sigma=sigma))

    def test_whole_horizon_pair_is_existing(self):
        assert is_existing_strategy(parse_strategy("δ:100|δ:100", 10))

    def test_mixed_pairs_are_novel(self):
        for sid in ("ρ:50|ρ:100", "δ:50|δ:10", "ρ:10|ι:20", "ι:10|δ:10", "δ:10|δ:10"):
            assert not is_existing_strategy(parse_strategy(sid, 10))

    def test_novel_count_h10(self):
        space = enumerate_strategy_space(10, include_rectifiers=True)
        existing = [s for s in space if is_existing_strategy(s)]
        # 10 atomic + rectifymo at sigma 1,2,5 + the whole-horizon pair
        assert len(existing) == 14


class TestModelCountLaw:
    def test_full_h10_grid(self):
        data = make_data(np.arange(60.0), 10, 10)
        cfg = LearnerConfig("ridge", seed=0)
        for spec in enumerate_strategy_space(10, include_rectifiers=True):
            fitted = train_composed(spec, cfg, data)
            base = spec.base.canonical()
            expected = 1 if base.kind is StrategyKind.REC_MO else base.segments
            if spec.rectifier is not None:
                rect = spec.rectifier.canonical()
                expected += 1 if rect.kind is StrategyKind.REC_MO else rect.segments
            assert fitted.n_models == expected == spec.canonical().model_count


class TestUnbiasedBaseSmoke:
    def test_direct_base_drives_residuals_to_zero(self):
        # noise-free linear dynamics: direct bases fit exactly, so any
        # rectifier faces an all-zero target and the sum stays exact
        values = np.sin(np.arange(80) * 0.25)
        data = make_data(values, 4, 8)
        lam_cfg = LearnerConfig("ridge", seed=0, hyperparameters={"lam": 1e-12})
        for kind in StrategyKind:
            spec = ComposedSpec(atom(StrategyKind.DIR_MO, 1, 4), atom(kind, 2, 4))
            fitted = train_composed(spec, lam_cfg, data)
            beta = forecast_atomic_matrix(fitted.base, data.inputs)
            rms = float(np.sqrt(np.mean((data.targets - beta) ** 2)))
            assert rms <= 1e-6
            out = forecast_composed_matrix(fitted, data.inputs)
            assert float(np.max(np.abs(out - data.targets))) <= 1e-6


class TestSerialisation:
    def test_round_trip(self, tmp_path):
        data = ramp_data()
        spec = parse_strategy("ρ:50|ι:50", 6)
        fitted = train_composed(spec, RIDGE, data)
        path = tmp_path / "fitted.json.gz"
        save_fitted(fitted, path)
        clone = load_fitted(path)
        assert clone.spec == fitted.spec.canonical()
        probe = data.inputs[:5]
        assert np.array_equal(
            forecast_composed_matrix(fitted, probe), forecast_composed_matrix(clone, probe)
        )
