import math
import struct

import numpy as np
import pytest

from scenecontext.predsvm import (
    MAGIC,
    SvmConfig,
    SvmModel,
    concat_features,
    decision_scores,
    load_svm,
    predict_proba,
    save_svm,
    top_k,
    train_svm,
)


def identity_model(W, b):
    """Model with pass-through standardization (mean 0, scale 1)."""
    W = np.asarray(W, dtype=float)
    d = W.shape[1]
    return SvmModel(W, b, np.zeros(d), np.ones(d))


def three_blob_dataset(rng, per_class=120):
    centers = [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)]
    xs, ys = [], []
    for label, (cx, cy) in enumerate(centers):
        angle = rng.uniform(0, 2 * np.pi, size=per_class)
        r = rng.uniform(0, 2.0, size=per_class)
        pts = np.stack([cx + r * np.cos(angle), cy + r * np.sin(angle)], axis=1)
        xs.append(pts)
        ys.append(np.full(per_class, label))
    X = np.concatenate(xs)
    y = np.concatenate(ys)
    order = rng.permutation(len(y))
    return X[order], y[order]


class TestConcat:
    def test_semantic_then_visual(self):
        out = concat_features(np.array([1.0, 2.0]), np.array([9.0]))
        assert out.tolist() == [1.0, 2.0, 9.0]

    def test_semantic_only_passthrough(self):
        out = concat_features(semantic=np.array([1.0, 2.0]))
        assert out.tolist() == [1.0, 2.0]

    def test_visual_only_passthrough(self):
        out = concat_features(visual=np.array([3.0, 4.0, 5.0]))
        assert out.tolist() == [3.0, 4.0, 5.0]

    def test_both_absent(self):
        with pytest.raises(ValueError, match="at least one"):
            concat_features()

    def test_default_widths_sum(self):
        out = concat_features(np.zeros(70), np.zeros(4096))
        assert out.shape == (4166,)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            concat_features(np.array([1.0, np.nan]), np.zeros(2))

    def test_returns_independent_copy(self):
        sem = np.array([1.0, 2.0])
        out = concat_features(semantic=sem)
        out[0] = 77.0
        assert sem[0] == 1.0


class TestScores:
    def test_zero_model_zero_scores(self):
        model = identity_model(np.zeros((5, 3)), np.zeros(5))
        assert np.array_equal(decision_scores(model, np.ones(3)), np.zeros(5))

    def test_hand_margins(self):
        # w0 = (1, -2), b0 = 0.5; w1 = (0, 3), b1 = -1; x = (2, 1)
        # scores = (2 - 2 + 0.5, 3 - 1) = (0.5, 2.0)
        model = identity_model([[1.0, -2.0], [0.0, 3.0]], np.array([0.5, -1.0]))
        scores = decision_scores(model, np.array([2.0, 1.0]))
        assert np.allclose(scores, [0.5, 2.0], atol=1e-15)

    def test_hand_margins_with_standardization(self):
        # mean (1, 1), scale (2, 4): x = (3, 5) standardizes to (1, 1);
        # w = (2, -1), b = 0.25 gives 2 - 1 + 0.25 = 1.25
        model = SvmModel(
            np.array([[2.0, -1.0]]), np.array([0.25]),
            mean=np.array([1.0, 1.0]), scale=np.array([2.0, 4.0]),
        )
        assert decision_scores(model, np.array([3.0, 5.0]))[0] == pytest.approx(1.25, abs=1e-15)

    def test_affine_in_input(self):
        rng = np.random.default_rng(6)
        model = SvmModel(
            rng.normal(size=(4, 6)), rng.normal(size=4),
            mean=rng.normal(size=6), scale=rng.uniform(0.5, 2.0, size=6),
        )
        x1, x2 = rng.normal(size=6), rng.normal(size=6)
        alpha = 0.3
        blended = decision_scores(model, alpha * x1 + (1 - alpha) * x2)
        parts = alpha * decision_scores(model, x1) + (1 - alpha) * decision_scores(model, x2)
        assert np.allclose(blended, parts, atol=1e-12)

    def test_dimension_mismatch(self):
        model = identity_model(np.zeros((2, 3)), np.zeros(2))
        with pytest.raises(ValueError, match="expects"):
            decision_scores(model, np.zeros(4))


class TestProba:
    def test_zero_model_uniform_70(self):
        model = identity_model(np.zeros((70, 5)), np.zeros(70))
        probs = predict_proba(model, np.ones(5))
        assert np.allclose(probs, np.full(70, 1.0 / 70), atol=1e-15)

    def test_closed_form_two_class(self):
        # scores (2, 0) → (e^2/(e^2+1), 1/(e^2+1)) ≈ (0.8808, 0.1192)
        model = identity_model([[2.0], [0.0]], np.zeros(2))
        probs = predict_proba(model, np.array([1.0]))
        e2 = math.exp(2.0)
        assert probs[0] == pytest.approx(e2 / (e2 + 1.0), abs=1e-12)
        assert probs[1] == pytest.approx(1.0 / (e2 + 1.0), abs=1e-12)
        assert round(probs[0], 4) == 0.8808 and round(probs[1], 4) == 0.1192

    def test_valid_distribution_many_inputs(self):
        rng = np.random.default_rng(20240816)
        model = SvmModel(
            rng.normal(size=(7, 9)), rng.normal(size=7),
            mean=rng.normal(size=9), scale=rng.uniform(0.1, 3.0, size=9),
        )
        # moderate inputs: strict interior of (0, 1)
        for x in rng.normal(size=(1000, 9)):
            probs = predict_proba(model, x)
            assert np.all(probs > 0) and np.all(probs < 1)
            assert abs(probs.sum() - 1.0) < 1e-9
        # extreme inputs saturate float64 but the sum contract still holds
        for x in rng.normal(scale=50.0, size=(1000, 9)):
            probs = predict_proba(model, x)
            assert np.all(probs >= 0) and np.all(probs <= 1)
            assert abs(probs.sum() - 1.0) < 1e-9

    def test_argmax_agrees_with_scores(self):
        rng = np.random.default_rng(1)
        model = SvmModel(
            rng.normal(size=(6, 4)), rng.normal(size=6),
            mean=np.zeros(4), scale=np.ones(4),
        )
        for x in rng.normal(size=(200, 4)):
            assert int(np.argmax(predict_proba(model, x))) == int(
                np.argmax(decision_scores(model, x))
            )


class TestTopK:
    def test_toy_top1(self):
        model = identity_model([[2.0], [0.0]], np.zeros(2))
        ranked = top_k(model, np.array([1.0]), 1)
        assert ranked[0][0] == 0

    def test_full_k_is_permutation(self):
        rng = np.random.default_rng(4)
        model = identity_model(rng.normal(size=(8, 3)), rng.normal(size=8))
        ranked = top_k(model, rng.normal(size=3), 8)
        assert sorted(i for i, _ in ranked) == list(range(8))
        probs = [p for _, p in ranked]
        assert probs == sorted(probs, reverse=True)

    def test_ties_break_to_lower_id(self):
        # identical rows give identical scores for every input
        row = np.array([1.0, -0.5])
        model = identity_model(np.stack([row, row, row]), np.zeros(3))
        ranked = top_k(model, np.array([0.3, 0.7]), 3)
        assert [i for i, _ in ranked] == [0, 1, 2]

    def test_k_out_of_range(self):
        model = identity_model(np.zeros((3, 2)), np.zeros(3))
        with pytest.raises(ValueError):
            top_k(model, np.zeros(2), 0)
        with pytest.raises(ValueError):
            top_k(model, np.zeros(2), 4)


class TestTraining:
    def test_separable_three_class_99_percent(self):
        rng = np.random.default_rng(20240816)
        X, y = three_blob_dataset(rng)
        config = SvmConfig(lam=1e-4, epochs=100, batch_size=32, seed=9)
        model = train_svm(X, y, config)
        preds = [top_k(model, x, 1)[0][0] for x in X]
        accuracy = float(np.mean(np.asarray(preds) == y))
        assert accuracy >= 0.99

    def test_determinism(self):
        rng = np.random.default_rng(2)
        X, y = three_blob_dataset(rng, per_class=40)
        config = SvmConfig(epochs=5, batch_size=16, seed=13)
        m1 = train_svm(X, y, config)
        m2 = train_svm(X, y, config)
        assert np.array_equal(m1.W, m2.W) and np.array_equal(m1.b, m2.b)

    def test_input_scaling_absorbed(self):
        rng = np.random.default_rng(3)
        X, y = three_blob_dataset(rng, per_class=40)
        config = SvmConfig(epochs=20, batch_size=16, seed=5)
        base = train_svm(X, y, config)
        scaled = train_svm(X * 10.0, y, config)
        base_preds = [top_k(base, x, 1)[0][0] for x in X]
        scaled_preds = [top_k(scaled, x, 1)[0][0] for x in X * 10.0]
        assert base_preds == scaled_preds

    def test_class_rows_independent_of_class_count(self):
        # each one-vs-rest row is seeded by (seed, class_id), so adding an
        # empty extra class must not disturb the first rows
        rng = np.random.default_rng(8)
        X, y = three_blob_dataset(rng, per_class=30)
        config = SvmConfig(epochs=3, batch_size=8, seed=2)
        m3 = train_svm(X, y, config, class_count=3)
        m4 = train_svm(X, y, config, class_count=4)
        assert np.array_equal(m3.W, m4.W[:3])
        assert np.array_equal(m3.b, m4.b[:3])

    def test_single_class_rejected(self):
        X = np.random.default_rng(0).normal(size=(10, 2))
        with pytest.raises(ValueError, match="distinct"):
            train_svm(X, np.zeros(10, dtype=int), SvmConfig(epochs=1))

    def test_nonfinite_samples_rejected(self):
        X = np.ones((4, 2))
        X[1, 0] = np.nan
        with pytest.raises(ValueError, match="finite"):
            train_svm(X, np.array([0, 1, 0, 1]), SvmConfig(epochs=1))

    def test_labels_out_of_range_rejected(self):
        X = np.random.default_rng(0).normal(size=(6, 2))
        with pytest.raises(ValueError, match="labels"):
            train_svm(X, np.array([0, 1, 2, 0, 1, 2]), SvmConfig(epochs=1), class_count=2)

    def test_constant_feature_survives_standardization(self):
        rng = np.random.default_rng(11)
        X, y = three_blob_dataset(rng, per_class=25)
        X = np.hstack([X, np.full((len(y), 1), 3.5)])
        model = train_svm(X, y, SvmConfig(epochs=5, batch_size=16, seed=1))
        assert np.all(np.isfinite(model.W))
        assert model.scale[2] == 1.0

    def test_objective_curve_decreases_on_separable_set(self):
        rng = np.random.default_rng(14)
        X, y = three_blob_dataset(rng, per_class=60)
        config = SvmConfig(epochs=30, batch_size=16, seed=7)
        model = train_svm(X, y, config, record_objective=True)
        curves = model.objective_curves
        assert curves.shape == (3, 30)
        assert np.all(np.isfinite(curves))
        total = curves.sum(axis=0)
        assert total[-10:].mean() <= total[:10].mean()

    def test_config_validation(self):
        with pytest.raises(ValueError, match="lam"):
            SvmConfig(lam=0.0)
        with pytest.raises(ValueError, match="schedule"):
            SvmConfig(schedule="adam")


class TestModelFile:
    def independent_bytes(self, model):
        out = bytearray(b"SVM1")
        out += struct.pack("<II", model.class_count, model.feature_dim)
        for block in (model.mean, model.scale, model.b, model.W):
            for v in np.asarray(block, dtype=np.float64).reshape(-1):
                out += struct.pack("<d", v)
        return bytes(out)

    def make_model(self, seed=0):
        rng = np.random.default_rng(seed)
        return SvmModel(
            rng.normal(size=(5, 7)), rng.normal(size=5),
            mean=rng.normal(size=7), scale=rng.uniform(0.5, 2.0, size=7),
        )

    def test_writer_matches_independent_serializer(self, tmp_path):
        model = self.make_model()
        path = tmp_path / "model.svm"
        save_svm(model, path)
        assert path.read_bytes() == self.independent_bytes(model)

    def test_round_trip(self, tmp_path):
        model = self.make_model(3)
        path = tmp_path / "model.svm"
        save_svm(model, path)
        back = load_svm(path)
        for name in ("W", "b", "mean", "scale"):
            assert np.array_equal(getattr(model, name), getattr(back, name))

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.svm"
        path.write_bytes(b"JUNK" + struct.pack("<II", 1, 1) + b"\x00" * 32)
        with pytest.raises(ValueError, match="magic"):
            load_svm(path)

    def test_truncation_detected(self, tmp_path):
        model = self.make_model(5)
        path = tmp_path / "model.svm"
        save_svm(model, path)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError, match="header"):
            load_svm(path)

    def test_scale_validated_on_load(self, tmp_path):
        model = self.make_model(7)
        path = tmp_path / "model.svm"
        save_svm(model, path)
        data = bytearray(path.read_bytes())
        # zero out the first scale entry (offset 12 + 7 means * 8 bytes)
        struct.pack_into("<d", data, 12 + 7 * 8, 0.0)
        path.write_bytes(bytes(data))
        with pytest.raises(ValueError, match="positive"):
            load_svm(path)


class TestModelValidation:
    def test_scale_must_be_positive(self):
        with pytest.raises(ValueError, match="positive"):
            SvmModel(np.zeros((2, 2)), np.zeros(2), np.zeros(2), np.array([1.0, 0.0]))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="width"):
            SvmModel(np.zeros((2, 3)), np.zeros(3), np.zeros(3), np.ones(3))

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError, match="finite"):
            SvmModel(np.full((2, 2), np.inf), np.zeros(2), np.zeros(2), np.ones(2))
