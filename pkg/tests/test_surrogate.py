"""Surrogate models: loss math, early stopping, and the fit/predict contract."""

import math

import numpy as np
import pytest

from molsieve.errors import (
    DimensionMismatch,
    NonFiniteTarget,
    TooFewMembers,
    TooFewSamples,
    Untrained,
)
from molsieve.surrogate import (
    SURROGATES,
    EmbeddingMLP,
    FingerprintMLP,
    GradientBoostedModel,
    RandomForestModel,
    TrainConfig,
    build_surrogate,
    ensemble_variance,
    load_model,
    nll_loss,
    nll_loss_grad,
    save_model,
)
from molsieve.surrogate.base import run_early_stopped_loop


def _toy_data(n=200, d=32, seed=0, noise=0.1):
    rng = np.random.default_rng(seed)
    X = (rng.random((n, d)) < 0.3).astype(np.float64)
    w = rng.normal(size=d)
    y = X @ w + rng.normal(scale=noise, size=n)
    return X, y


class TestNllLoss:
    def test_perfect_unit_variance(self):
        assert nll_loss(0.0, 0.0, 1.0) == 0.0

    def test_unit_error(self):
        assert nll_loss(1.0, 0.0, 1.0) == pytest.approx(0.5)

    def test_clamped_small_variance(self):
        # v clamps to 1e-5 in both terms
        assert nll_loss(0.0, 0.0, 1e-6) == pytest.approx(0.5 * math.log(1e-5))
        assert nll_loss(2.0, 1.0, 1e-6) == pytest.approx(0.5 * math.log(1e-5) + 0.5 * 1e5)

    def test_vectorized(self):
        y = np.array([0.0, 1.0])
        out = nll_loss(y, np.zeros(2), np.ones(2))
        assert out == pytest.approx([0.0, 0.5])

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(3)
        y = rng.normal(size=100)
        mean = rng.normal(size=100)
        log_var = rng.uniform(math.log(1e-4), 2.0, size=100)
        var = np.exp(log_var)
        d_mean, d_logvar = nll_loss_grad(y, mean, var)
        h = 1e-6
        fd_mean = (nll_loss(y, mean + h, var) - nll_loss(y, mean - h, var)) / (2 * h)
        fd_logvar = (nll_loss(y, mean, np.exp(log_var + h)) - nll_loss(y, mean, np.exp(log_var - h))) / (2 * h)
        np.testing.assert_allclose(d_mean, fd_mean, rtol=1e-5, atol=1e-8)
        np.testing.assert_allclose(d_logvar, fd_logvar, rtol=1e-5, atol=1e-8)

    def test_gradient_zero_in_clamped_region(self):
        _, d_logvar = nll_loss_grad(0.5, 0.0, 1e-7)
        assert d_logvar == 0.0


class TestEnsembleVariance:
    def test_equal_members(self):
        assert ensemble_variance([2.5, 2.5, 2.5]) == 0.0

    def test_two_members(self):
        assert ensemble_variance([1.0, 3.0]) == 1.0

    def test_four_members(self):
        assert ensemble_variance([1.0, 2.0, 3.0, 4.0]) == 1.25

    def test_too_few(self):
        with pytest.raises(TooFewMembers):
            ensemble_variance([1.0])


class TestEarlyStopping:
    def test_strictly_increasing_stops_at_patience_plus_one(self):
        """Validation loss rising from epoch 1: patience 10 means epochs
        2..11 fail to improve, training stops at epoch 11, and the epoch-1
        state is restored."""
        restored = []
        history = run_early_stopped_loop(
            max_epochs=50,
            patience=10,
            train_epoch=lambda e: None,
            validation_loss=iter(float(i) for i in range(1, 100)).__next__,
            snapshot=lambda: "state",
            restore=restored.append,
        )
        assert history["epochs_trained"] == 11
        assert history["best_epoch"] == 1
        assert history["best_loss"] == 1.0
        assert restored == ["state"]

    def test_improvement_resets_counter(self):
        losses = iter([5.0, 5.5, 4.0, 4.2, 4.3])
        history = run_early_stopped_loop(
            max_epochs=9,
            patience=2,
            train_epoch=lambda e: None,
            validation_loss=losses.__next__,
            snapshot=lambda: None,
            restore=lambda s: None,
        )
        # the improvement at epoch 3 resets the failure counter
        assert history["epochs_trained"] == 5
        assert history["best_epoch"] == 3

    def test_runs_to_max_epochs_when_improving(self):
        losses = iter(float(100 - i) for i in range(100))
        history = run_early_stopped_loop(
            max_epochs=12,
            patience=3,
            train_epoch=lambda e: None,
            validation_loss=losses.__next__,
            snapshot=lambda: None,
            restore=lambda s: None,
        )
        assert history["epochs_trained"] == 12


class TestFitContract:
    @pytest.mark.parametrize("name", sorted(SURROGATES))
    def test_too_few_samples(self, name):
        X, y = _toy_data(n=4)
        with pytest.raises(TooFewSamples):
            build_surrogate(name).fit(X, y, TrainConfig(seed=0))

    @pytest.mark.parametrize("name", sorted(SURROGATES))
    def test_non_finite_targets(self, name):
        X, y = _toy_data(n=20)
        y[3] = np.nan
        with pytest.raises(NonFiniteTarget):
            build_surrogate(name).fit(X, y, TrainConfig(seed=0))

    def test_untrained_predict(self):
        with pytest.raises(Untrained):
            RandomForestModel().predict(np.zeros((2, 3)))

    def test_dimension_mismatch_on_predict(self):
        X, y = _toy_data(n=30, d=8)
        model = RandomForestModel().fit(X, y, TrainConfig(seed=0, n_trees=5))
        with pytest.raises(DimensionMismatch):
            model.predict(np.zeros((2, 9)))

    @pytest.mark.parametrize("name", sorted(SURROGATES))
    def test_constant_targets(self, name):
        X, _ = _toy_data(n=40, d=16)
        y = np.full(40, 3.25)
        cfg = TrainConfig(seed=1, n_trees=10, max_epochs=5)
        preds = build_surrogate(name).fit(X, y, cfg).predict(X[:7])
        np.testing.assert_allclose(preds.mean, 3.25, atol=1e-6)
        if name in ("rf", "gbt"):
            assert np.all(preds.variance == 0.0)

    def test_predictions_index_to_scalar_records(self):
        X, y = _toy_data(n=30, d=8)
        preds = RandomForestModel().fit(X, y, TrainConfig(seed=0, n_trees=5)).predict(X[:3])
        assert len(preds) == 3
        one = preds[1]
        assert one.mean == preds.mean[1] and one.variance == preds.variance[1]
        assert one.variance >= 0.0

    @pytest.mark.parametrize("name", sorted(SURROGATES))
    def test_variance_nonnegative(self, name):
        X, y = _toy_data(n=60, d=16, noise=1.0)
        cfg = TrainConfig(seed=2, n_trees=10, max_epochs=8, mode="nll" if "mlp" in name else "mse")
        preds = build_surrogate(name).fit(X, y, cfg).predict(X)
        assert np.all(preds.variance >= 0.0)

    @pytest.mark.parametrize("name", sorted(SURROGATES))
    def test_seeded_determinism(self, name):
        X, y = _toy_data(n=80, d=16)
        cfg = TrainConfig(seed=11, n_trees=10, max_epochs=6)
        a = build_surrogate(name).fit(X, y, cfg).predict(X)
        b = build_surrogate(name).fit(X, y, cfg).predict(X)
        assert np.array_equal(a.mean, b.mean)
        assert np.array_equal(a.variance, b.variance)


class TestRandomForest:
    def test_single_tree_memorizes_without_bootstrap(self):
        rng = np.random.default_rng(4)
        X = np.unique((rng.random((60, 16)) < 0.5).astype(float), axis=0)
        y = rng.normal(size=len(X))
        cfg = TrainConfig(seed=0, n_trees=1, rf_max_depth=None, rf_bootstrap=False)
        model = RandomForestModel().fit(X, y, cfg)
        np.testing.assert_allclose(model.predict(X).mean, y, atol=1e-12)

    def test_variance_is_population_variance_of_trees(self):
        X, y = _toy_data(n=100, d=16, noise=1.0)
        cfg = TrainConfig(seed=5, n_trees=7)
        model = RandomForestModel().fit(X, y, cfg)
        preds = model.predict(X[:11])
        members = np.stack(
            [t.predict(np.ascontiguousarray(X[:11], dtype=np.float32), check_input=False)
             for t in model._forest.estimators_]
        )
        np.testing.assert_allclose(preds.mean, members.mean(axis=0))
        expected = [ensemble_variance(members[:, i]) for i in range(11)]
        np.testing.assert_allclose(preds.variance, expected)

    def test_holdout_r2_on_linear_signal(self):
        rng = np.random.default_rng(6)
        n, d = 1500, 32
        X = rng.normal(size=(n, d))
        w = rng.normal(size=d)
        y = X @ w + rng.normal(scale=0.5, size=n)
        cfg = TrainConfig(seed=0)
        model = RandomForestModel().fit(X[:1000], y[:1000], cfg)
        pred = model.predict_mean(X[1000:])
        resid = y[1000:] - pred
        r2 = 1.0 - resid.var() / y[1000:].var()
        assert r2 > 0.5

    def test_jobs_do_not_change_predictions(self):
        X, y = _toy_data(n=80, d=16)
        a = RandomForestModel().fit(X, y, TrainConfig(seed=3, n_trees=10, jobs=1)).predict(X)
        b = RandomForestModel().fit(X, y, TrainConfig(seed=3, n_trees=10, jobs=4)).predict(X)
        assert np.array_equal(a.mean, b.mean)
        assert np.array_equal(a.variance, b.variance)


class TestGradientBoosting:
    def test_variance_matches_staged_predictions(self):
        X, y = _toy_data(n=120, d=16, noise=0.5)
        cfg = TrainConfig(seed=7, n_trees=12)
        model = GradientBoostedModel().fit(X, y, cfg)
        preds = model.predict(X[:9])
        stages = np.stack(list(model._booster.staged_predict(np.ascontiguousarray(X[:9], dtype=np.float32))))
        np.testing.assert_allclose(preds.mean, stages[-1])
        expected = [ensemble_variance(stages[:, i]) for i in range(9)]
        np.testing.assert_allclose(preds.variance, expected, rtol=1e-10)

    def test_mean_equals_predict_mean(self):
        X, y = _toy_data(n=80, d=8)
        model = GradientBoostedModel().fit(X, y, TrainConfig(seed=8, n_trees=10))
        np.testing.assert_allclose(model.predict(X).mean, model.predict_mean(X))


class TestMLP:
    def test_split_sizes_80_20(self):
        X, y = _toy_data(n=100, d=8)
        model = FingerprintMLP().fit(X, y, TrainConfig(seed=0, max_epochs=2))
        assert model.history_["n_train"] == 80
        assert model.history_["n_val"] == 20

    def test_architecture_identical_except_output(self):
        X, y = _toy_data(n=50, d=8)
        mse = FingerprintMLP().fit(X, y, TrainConfig(seed=0, max_epochs=1, mode="mse"))
        nll = FingerprintMLP().fit(X, y, TrainConfig(seed=0, max_epochs=1, mode="nll"))
        mse_shapes = [tuple(p.shape) for p in mse._net.parameters()]
        nll_shapes = [tuple(p.shape) for p in nll._net.parameters()]
        assert mse_shapes[:-2] == nll_shapes[:-2]
        assert mse_shapes[-2][0] == 1 and nll_shapes[-2][0] == 2

    def test_respects_max_epochs_and_patience(self):
        X, y = _toy_data(n=60, d=8)
        model = FingerprintMLP().fit(X, y, TrainConfig(seed=0, max_epochs=7, patience=3))
        assert model.history_["epochs_trained"] <= 7
        assert model.history_["val_losses"]

    def test_nll_variance_recovers_noise_level(self):
        """Constant features make the NLL optimum the sample mean/variance."""
        rng = np.random.default_rng(9)
        X = np.zeros((512, 8))
        y = rng.normal(size=512)
        cfg = TrainConfig(seed=1, mode="nll", max_epochs=50)
        preds = FingerprintMLP().fit(X, y, cfg).predict(X[:4])
        sample_var = float(y.var())
        assert 0.5 * sample_var <= preds.variance[0] <= 2.0 * sample_var

    def test_mse_mode_zero_variance(self):
        X, y = _toy_data(n=50, d=8)
        preds = FingerprintMLP().fit(X, y, TrainConfig(seed=0, max_epochs=3)).predict(X[:5])
        assert np.all(preds.variance == 0.0)

    def test_embedding_mlp_same_behavior(self):
        rng = np.random.default_rng(10)
        X = rng.normal(size=(80, 12))
        y = X @ rng.normal(size=12)
        model = EmbeddingMLP().fit(X, y, TrainConfig(seed=2, max_epochs=10))
        assert model.name == "embed-mlp"
        assert len(model.predict(X)) == 80


class TestCheckpoint:
    def test_roundtrip(self, tmp_path):
        X, y = _toy_data(n=60, d=8)
        model = RandomForestModel().fit(X, y, TrainConfig(seed=0, n_trees=5))
        path = tmp_path / "model.msckpt"
        save_model(model, path)
        loaded = load_model(path)
        np.testing.assert_array_equal(loaded.predict(X).mean, model.predict(X).mean)

    def test_rejects_foreign_file(self, tmp_path):
        path = tmp_path / "junk.msckpt"
        import pickle

        path.write_bytes(pickle.dumps({"hello": 1}))
        with pytest.raises(ValueError):
            load_model(path)
