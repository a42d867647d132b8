import numpy as np
import pytest

from wxpipe.errors import DimensionMismatchError, EmptyClassError, NonFiniteFeatureError
from wxpipe.features import FeatureVector
from wxpipe.svm import LinearModel, TrainConfig, load_model, objective, save_model, score, train

from conftest import separable_blobs


def fv(*values, image_id=""):
    return FeatureVector(image_id, np.array(values, dtype=np.float64))


class TestTrainConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(lam=0.0)
        with pytest.raises(ValueError):
            TrainConfig(epochs=0)


class TestSymmetricPair:
    def test_sign_pattern(self):
        pos, neg = [fv(1.0, 0.0)], [fv(-1.0, 0.0)]
        model = train(pos, neg)
        assert model.weights[1] == 0.0
        assert model.weights[0] > 0.0
        assert abs(model.bias) < 0.5
        assert score(model, pos[0]) > 0.0 > score(model, neg[0])

    def test_swapping_classes_mirrors_the_model(self):
        pos, neg = [fv(1.0, 0.0)], [fv(-1.0, 0.0)]
        model = train(pos, neg)
        swapped = train([fv(-1.0, 0.0)], [fv(1.0, 0.0)])
        assert np.array_equal(swapped.weights, -model.weights)
        assert swapped.bias == model.bias
        # argmax over the pair reverses
        assert score(model, pos[0]) > score(model, neg[0])
        assert score(swapped, pos[0]) < score(swapped, neg[0])


class TestSeparableBlobs:
    def test_margin_oracle_and_training(self):
        pos, neg = separable_blobs()
        # Independent separability oracle: the direction (1, 0) alone
        # separates the classes with a gap of at least 2.
        gap = min(v.values[0] for v in pos) - max(v.values[0] for v in neg)
        assert gap >= 2.0
        model = train(pos, neg)
        correct = [score(model, v) > 0 for v in pos] + [score(model, v) < 0 for v in neg]
        assert all(correct)
        assert model.final_objective < 1.0

    def test_deterministic(self):
        pos, neg = separable_blobs()
        a = train(pos, neg)
        b = train(pos, neg)
        assert np.array_equal(a.weights, b.weights)
        assert a.bias == b.bias
        assert a.final_objective == b.final_objective

    def test_objective_improves_over_first_epoch(self):
        pos, neg = separable_blobs()
        first = train(pos, neg, TrainConfig(epochs=1))
        final = train(pos, neg, TrainConfig(epochs=30))
        assert final.final_objective <= first.final_objective
        assert final.final_objective <= 1.0  # beats the zero model

    def test_final_objective_matches_objective_op(self):
        pos, neg = separable_blobs(n_per_class=20)
        model = train(pos, neg)
        assert model.final_objective == objective(model, pos, neg)


class TestTrainErrors:
    def test_empty_classes(self):
        with pytest.raises(EmptyClassError):
            train([], [fv(1.0)])
        with pytest.raises(EmptyClassError):
            train([fv(1.0)], [])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            train([fv(1.0, 2.0)], [fv(1.0)])

    def test_non_finite_features_rejected_at_source(self):
        with pytest.raises(NonFiniteFeatureError):
            fv(np.nan)


class TestScore:
    def test_constant_model(self):
        model = LinearModel(weights=np.zeros(3), bias=0.5, lam=0.1, final_objective=0.0)
        assert score(model, fv(7.0, -2.0, 4.0)) == 0.5

    def test_dot_product(self):
        model = LinearModel(weights=np.array([1.0, 2.0]), bias=0.0, lam=0.1, final_objective=0.0)
        assert score(model, fv(3.0, 4.0)) == 11.0

    def test_dimension_mismatch(self):
        model = LinearModel(weights=np.array([1.0, 2.0]), bias=0.0, lam=0.1, final_objective=0.0)
        with pytest.raises(DimensionMismatchError):
            score(model, fv(1.0))


class TestObjective:
    def test_zero_model_is_one(self):
        model = LinearModel(weights=np.zeros(2), bias=0.0, lam=0.1, final_objective=0.0)
        assert objective(model, [fv(3.0, 1.0)], [fv(-2.0, 5.0)]) == 1.0

    def test_separating_model_with_wide_margins(self):
        lam = 0.01
        model = LinearModel(weights=np.array([10.0, 0.0]), bias=0.0, lam=lam, final_objective=0.0)
        value = objective(model, [fv(1.0, 0.0)], [fv(-1.0, 0.0)])
        assert value == pytest.approx(0.5 * lam * 100.0, abs=1e-12)

    def test_margin_quarter_gives_hinge_three_quarters(self):
        lam = 0.1
        model = LinearModel(weights=np.array([0.25, 0.0]), bias=0.0, lam=lam, final_objective=0.0)
        value = objective(model, [fv(1.0, 0.0)], [fv(-1.0, 0.0)])
        assert value == pytest.approx(0.5 * lam * 0.0625 + 0.75, abs=1e-12)

    def test_dimension_mismatch(self):
        model = LinearModel(weights=np.array([1.0]), bias=0.0, lam=0.1, final_objective=0.0)
        with pytest.raises(DimensionMismatchError):
            objective(model, [fv(1.0, 2.0)], [fv(3.0, 4.0)])


class TestPersistence:
    def test_round_trip_exact(self, tmp_path):
        pos, neg = separable_blobs(n_per_class=10)
        model = train(pos, neg, category="foggy")
        path = tmp_path / "model.json"
        save_model(model, path)
        back = load_model(path)
        assert back.category == "foggy"
        assert back.lam == model.lam
        assert back.bias == model.bias
        assert back.final_objective == model.final_objective
        assert np.array_equal(back.weights, model.weights)
