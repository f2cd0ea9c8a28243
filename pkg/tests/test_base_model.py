import numpy as np
import pytest

from conftest import FAST_GRID, FR, PL, make_dataset
from leaper.base_model import (
    BaseModel,
    HyperGrid,
    MinMaxNormalizer,
    TrainedBaseModel,
    apply_normalizer,
    assemble_features,
    clamp_prediction,
    cv_score,
    fit_normalizer,
    kfold_indices,
    predict_base,
    select_features,
    train_base_model,
)
from leaper.doe import lhs_sample
from leaper.domain import (
    ApplicationProfile,
    Configuration,
    ConfigurationSpace,
    Dataset,
    Sample,
)
from leaper.exceptions import SchemaMismatchError, ValidationError
from leaper.learners import GradientBoostingRegressor, RandomForestRegressor
from leaper.relatedness import mre_arrays
from leaper.synth import SurfaceParams, gen_environment, gen_profile, random_surface


class TestAssemble:
    def test_profile_then_config(self):
        prof = ApplicationProfile(("ilp",), (2.0,))
        x = assemble_features(prof, Configuration((1,)), ConfigurationSpace((PL,)))
        assert x.tolist() == [2.0, 1.0]

    def test_empty_space(self):
        prof = ApplicationProfile(("ilp", "footprint"), (2.0, 64.0))
        x = assemble_features(prof, Configuration(()), ConfigurationSpace(()))
        assert x.tolist() == [2.0, 64.0]

    def test_length(self, space):
        prof = gen_profile(0, 12)
        x = assemble_features(prof, space.config_from_rank(17), space)
        assert len(x) == 12 + space.encoded_width == 12 + 10


class TestNormalizer:
    def test_midpoint(self):
        norm = fit_normalizer([[0.0], [10.0]])
        assert apply_normalizer(norm, [5.0]).tolist() == [0.5]

    def test_constant_column(self):
        norm = fit_normalizer([[3.0, 0.0], [3.0, 1.0]])
        assert apply_normalizer(norm, [7.0, 1.0]).tolist() == [0.0, 1.0]

    def test_clamp(self):
        norm = fit_normalizer([[0.0], [10.0]])
        assert apply_normalizer(norm, [-4.0]).tolist() == [0.0]
        assert apply_normalizer(norm, [14.0]).tolist() == [1.0]

    def test_dimension_mismatch(self):
        with pytest.raises(ValidationError):
            apply_normalizer(fit_normalizer([[0.0], [1.0]]), [1.0, 2.0])

    def test_sklearn_transformer(self):
        X = np.arange(12.0).reshape(4, 3)
        out = MinMaxNormalizer().fit_transform(X)
        assert out.min() == 0.0 and out.max() == 1.0


class TestSelection:
    def test_identity_when_few_features(self):
        rng = np.random.default_rng(0)
        sel = select_features(rng.normal(size=(20, 4)), rng.normal(size=20), k=10)
        assert sel.selected_indices == (0, 1, 2, 3) and not sel.no_signal

    def test_single_informative_feature(self):
        rng = np.random.default_rng(1)
        X = rng.uniform(size=(120, 6))
        y = np.sin(4 * X[:, 3]) + 0.01 * rng.normal(size=120)
        assert select_features(X, y, k=1, seed=0).selected_indices == (3,)

    def test_constant_target(self):
        rng = np.random.default_rng(2)
        sel = select_features(rng.normal(size=(20, 6)), np.ones(20), k=2)
        assert sel.selected_indices == (0, 1) and sel.no_signal


class TestFolds:
    def test_partition(self):
        folds = kfold_indices(23, 5, 7)
        assert sorted(np.concatenate(folds).tolist()) == list(range(23))
        assert [len(f) for f in folds] == [5, 5, 5, 4, 4]

    def test_cv_score_zero_actuals(self):
        assert cv_score([1.0, 3.0], [0.0, 0.0]) == 2.0
        assert cv_score([1.0, 3.0], [0.0, 2.0]) == 0.5


class TestTraining:
    def test_single_candidate_equals_direct_fit(self, source_doe, fast_base):
        est = fast_base.estimator
        Z = est.transform_features(fast_base.features(source_doe.samples))
        y = source_doe.labels("exec_ms")
        forest = RandomForestRegressor(**FAST_GRID["forest"][0], random_state=1).fit(Z, y)
        gbm = GradientBoostingRegressor(**FAST_GRID["boosting"][0], random_state=1).fit(Z, y)
        np.testing.assert_array_equal(est.forest_.predict(Z), forest.predict(Z))
        np.testing.assert_array_equal(est.gbm_.predict(Z), gbm.predict(Z))
        assert len(est.cv_report_["forest"][0]["fold_mre"]) == 3

    def test_one_pragma_function(self, space):
        # a synthetic surface where only the unroll factor has an effect
        drawn = random_surface(space, 3, noise_cv=0.0, n_interactions=0)
        effects = [e if i == 1 else (1.0,) * len(e) for i, e in enumerate(drawn.effects)]
        params = SurfaceParams(3, drawn.base_time_ms, effects, noise_cv=0.0)
        ds = gen_environment(space, gen_profile(3, 8), params, lhs_sample(space, 50, 3).configurations)
        assert len(set(ds.labels("exec_ms"))) == 7
        model = train_base_model(ds, "exec_ms", HyperGrid.single(), folds=5, seed=0)
        assert mre_arrays(model.predict_dataset(ds), ds.labels("exec_ms")) < 0.05

    def test_identical_candidates_first_wins(self, source_doe):
        cand = {"n_estimators": 5}
        grid = HyperGrid([cand, dict(cand)], [{"n_estimators": 5}, {"n_estimators": 5}])
        model = train_base_model(source_doe, "exec_ms", grid, folds=2, seed=0)
        assert model.estimator.forest_index_ == 0 and model.estimator.boosting_index_ == 0

    def test_winner_has_lowest_cv_error(self, source_doe):
        grid = HyperGrid(
            [{"n_estimators": 5, "max_depth": d} for d in (1, None)],
            [{"n_estimators": n} for n in (1, 30)],
        )
        est = train_base_model(source_doe, "exec_ms", grid, folds=3, seed=2).estimator
        for kind, idx in (("forest", est.forest_index_), ("boosting", est.boosting_index_)):
            scores = [e["mean_mre"] for e in est.cv_report_[kind]]
            assert scores[idx] == min(scores)

    def test_missing_metric_lists_samples(self, source_doe):
        with pytest.raises(ValidationError, match=r"\[0, 1, 2, 3\]"):
            samples = [Sample(s.profile, s.configuration, {"exec_time_ms": 1.0})
                       for s in source_doe.samples[:4]]
            train_base_model(Dataset("e", source_doe.space, tuple(samples)), "bram", folds=2)

    def test_folds_exceed_samples(self, source_doe):
        with pytest.raises(ValidationError, match="folds"):
            train_base_model(source_doe.subset(range(4)), "exec_ms", folds=5)

    def test_deterministic(self, source_doe, fast_base):
        from leaper.store import dumps_model

        again = train_base_model(source_doe, "exec_ms", HyperGrid(**FAST_GRID), folds=3, seed=1)
        assert dumps_model(again) == dumps_model(fast_base)

    def test_thread_count_does_not_change_model(self, source_doe, fast_base):
        from leaper.store import dumps_model

        again = train_base_model(
            source_doe, "exec_ms", HyperGrid(**FAST_GRID), folds=3, seed=1, n_jobs=3
        )
        assert dumps_model(again) == dumps_model(fast_base)


class TestPrediction:
    def test_constant_target(self, small_space):
        ds = make_dataset(small_space, 10)
        ds = Dataset("c", small_space, tuple(
            Sample(s.profile, s.configuration, {"exec_time_ms": 7.5}) for s in ds.samples))
        model = train_base_model(ds, "exec_ms", HyperGrid(**FAST_GRID), folds=2)
        c = small_space.config_from_rank(3)
        assert predict_base(model, ds.samples[0].profile, c) == 7.5

    def test_mean_of_forest_and_gbm(self, fast_base, source_doe):
        class Fixed:
            def __init__(self, v):
                self.v = v

            def predict(self, Z):
                return np.full(len(Z), self.v)

        est = BaseModel()
        est.__dict__.update(fast_base.estimator.__dict__)
        est.forest_, est.gbm_ = Fixed(4.0), Fixed(6.0)
        model = TrainedBaseModel("x", fast_base.space, fast_base.feature_names, est)
        s = source_doe.samples[0]
        assert predict_base(model, s.profile, s.configuration) == 5.0

    def test_resource_clamp(self):
        assert clamp_prediction([1.07, -0.2, 0.5], "bram_frac").tolist() == [1.0, 0.0, 0.5]
        assert clamp_prediction([-3.0], "exec_time_ms").tolist() == [1e-9]

    def test_schema_mismatch(self, fast_base, space):
        with pytest.raises(SchemaMismatchError):
            predict_base(fast_base, ApplicationProfile(("ilp",), (1.0,)), space.config_from_rank(0))

    def test_refit_consistency(self, space):
        prof = gen_profile(4, 6)
        rng = np.random.default_rng(4)
        configs = lhs_sample(space, 30, 4).configurations
        samples = [Sample(prof, c, {"exec_time_ms": float(rng.uniform(1, 50))}) for c in configs]
        ds = Dataset("r", space, tuple(samples))
        grid = HyperGrid.single(
            {"n_estimators": 3, "bootstrap": False, "max_features": None},
            {"n_estimators": 5, "learning_rate": 1.0, "max_depth": None},
        )
        model = train_base_model(ds, "exec_ms", grid, folds=2, seed=0)
        np.testing.assert_allclose(model.predict_dataset(ds), ds.labels("exec_ms"), rtol=0, atol=1e-9)

    def test_time_predictions_positive(self, fast_base, space):
        ds = gen_environment(space, gen_profile(1, 8), random_surface(space, 1),
                             lhs_sample(space, 200, 9).configurations)
        assert np.all(fast_base.predict_dataset(ds) > 0)
