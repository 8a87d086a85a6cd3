"""Model graphs, two-phase training, feature extraction, and fusion."""

import numpy as np
import pytest

from hapticnet.engine import conv1d_forward, inner_product, lstm_forward, relu
from hapticnet.errors import InvalidInputError, InvalidSpecError
from hapticnet.features import (
    FeatureVector,
    combine_instances,
    extract_activations,
    fuse_and_train,
    fuse_features,
)
from hapticnet.haptic import InstanceMatrix
from hapticnet.models import (
    HAPTIC_CONV_SPECS,
    Model,
    build_haptic_cnn,
    build_haptic_lstm,
    build_linear_classifier,
    conv_stack_out_len,
    model_from_description,
)
from hapticnet.training import TrainSchedule, train

from oracles import max_rel_error, numerical_gradient


def random_instances(rng, n):
    return rng.standard_normal((n, 32, 150))


def separable_instances(rng, n, margin=1.0):
    """Instances whose label is encoded as a bump sign on channel 0."""
    x = 0.1 * rng.standard_normal((n, 32, 150))
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    bump = np.exp(-0.5 * ((np.arange(150) - 75.0) / 8.0) ** 2)
    x[:, 0, :] += margin * y[:, None] * bump
    return x, y


class TestHapticCnnGraph:
    def test_all_convs_use_groups_32(self):
        model = build_haptic_cnn(seed=0)
        for name in ("conv1", "conv2", "conv3"):
            assert model.layer(name).spec.groups == 32

    def test_forward_shape_and_tap(self):
        model = build_haptic_cnn(seed=0)
        x = np.random.default_rng(0).standard_normal((32, 150))
        score, tap = model.forward(x, tap="conv3")
        assert np.isscalar(score) or score.shape == ()
        assert tap.shape == (64, conv_stack_out_len())

    def test_group_isolation_probe(self):
        # perturbing one input channel may change conv3 only within its group
        model = build_haptic_cnn(seed=1)
        rng = np.random.default_rng(1)
        x = rng.standard_normal((32, 150))
        _, base = model.forward(x, tap="conv3")
        for chan in (0, 7, 31):
            bumped = x.copy()
            bumped[chan] += rng.standard_normal(150)
            _, tapped = model.forward(bumped, tap="conv3")
            changed = np.unique(np.nonzero(np.any(tapped != base, axis=1))[0])
            assert set(changed) <= {2 * chan, 2 * chan + 1}

    def test_parameter_count_closed_form(self):
        model = build_haptic_cnn(seed=0)
        expected = 0
        for spec in HAPTIC_CONV_SPECS:
            expected += spec.out_channels * (spec.in_channels // spec.groups) * spec.kernel_len
            expected += spec.out_channels
        flat = 64 * conv_stack_out_len()
        expected += flat * 1 + 1
        assert model.parameter_count() == expected

    def test_matches_engine_op_composition(self):
        model = build_haptic_cnn(seed=3)
        x = np.random.default_rng(5).standard_normal((32, 150))
        h = x
        for name in ("conv1", "conv2", "conv3"):
            layer = model.layer(name)
            h = relu(conv1d_forward(h, layer.spec, layer.params))
        h = h.reshape(-1)
        fc = model.layer("fc")
        expected = inner_product(h, fc.params)[0]
        assert model.forward(x) == pytest.approx(expected, abs=1e-12)

    def test_unknown_tap_rejected(self):
        model = build_haptic_cnn(seed=0)
        with pytest.raises(InvalidSpecError):
            model.forward(np.zeros((32, 150)), tap="conv9")

    def test_end_to_end_gradient_check(self):
        model = build_haptic_cnn(seed=2)
        rng = np.random.default_rng(2)
        x = rng.standard_normal((32, 150))
        _, grads = model.forward_backward(x, 1.0)
        fc = model.layer("fc")

        def loss_b(bv):
            saved = fc.params.bias.copy()
            fc.params.bias[:] = bv
            out = float(model.forward(x))
            fc.params.bias[:] = saved
            return out

        conv2 = model.layer("conv2")

        def loss_w(wv):
            saved = conv2.params.weights.copy()
            conv2.params.weights[:] = wv
            out = float(model.forward(x))
            conv2.params.weights[:] = saved
            return out

        assert max_rel_error(grads["fc.bias"],
                             numerical_gradient(loss_b, fc.params.bias.copy())) < 1e-4
        assert max_rel_error(grads["conv2.weights"],
                             numerical_gradient(loss_w, conv2.params.weights.copy())) < 1e-4


class TestHapticLstmGraph:
    def test_hidden_size_is_ten(self):
        model = build_haptic_lstm(seed=0)
        assert model.layer("lstm").hidden_size == 10

    def test_zero_initialized_scores_zero(self):
        model = build_haptic_lstm(seed=0)
        for _, value, _ in model.named_params():
            value[:] = 0.0
        x = np.random.default_rng(0).standard_normal((32, 150))
        assert model.forward(x) == 0.0

    def test_matches_engine_op_composition(self):
        model = build_haptic_lstm(seed=4)
        x = np.random.default_rng(7).standard_normal((32, 150))
        h = lstm_forward(x.T, model.layer("lstm").params)
        h = relu(inner_product(h, model.layer("fc1").params))
        expected = inner_product(h, model.layer("fc2").params)[0]
        assert model.forward(x) == pytest.approx(expected, abs=1e-12)

    def test_graph_description_roundtrip(self):
        model = build_haptic_lstm(seed=1)
        rebuilt = model_from_description(model.describe())
        assert [l.name for l in rebuilt.layers] == [l.name for l in model.layers]
        for (n1, v1, _), (n2, v2, _) in zip(model.named_params(), rebuilt.named_params()):
            assert n1 == n2
            assert v1.shape == v2.shape


class TestTraining:
    def test_linear_model_converges_on_separable_set(self):
        rng = np.random.default_rng(0)
        x = rng.standard_normal((200, 8))
        w_true = rng.standard_normal(8)
        y = np.where(x @ w_true > 0, 1.0, -1.0)
        model = build_linear_classifier(8, seed=0)
        schedule = TrainSchedule(epochs=200, batch_size=64, seed=0)
        result = train(model, x, y, schedule)
        acc = np.mean(np.sign(model.forward(x)) == y)
        assert acc >= 0.99
        assert not result.diverged
        assert np.all(np.isfinite(result.loss_curve))
        assert result.loss_curve[-1] <= result.loss_curve[0]

    def test_fixed_seed_is_bitwise_deterministic(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((60, 8))
        y = np.where(rng.random(60) < 0.5, 1.0, -1.0)
        runs = []
        for _ in range(2):
            model = build_linear_classifier(8, seed=5)
            train(model, x, y, TrainSchedule(epochs=20, batch_size=16, seed=9))
            runs.append({n: v.copy() for n, v, _ in model.named_params()})
        for name in runs[0]:
            assert np.array_equal(runs[0][name], runs[1][name])

    def test_two_phase_boundaries_and_reinit(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((50, 6))
        y = np.where(rng.random(50) < 0.5, 1.0, -1.0)
        model = build_linear_classifier(6, seed=1)
        result = train(model, x, y, TrainSchedule(epochs=5, finetune_epochs=7,
                                                  batch_size=25, seed=3))
        assert result.phase_boundaries["logistic"] == (0, 5)
        assert result.phase_boundaries["hinge"] == (5, 12)
        assert len(result.loss_curve) == 12

    def test_freeze_features_only_updates_classifier(self):
        rng = np.random.default_rng(3)
        x, y = separable_instances(rng, 24, margin=2.0)
        model = build_haptic_cnn(seed=7)
        before = {n: v.copy() for n, v, _ in model.named_params()}
        schedule = TrainSchedule(epochs=2, finetune_epochs=3, batch_size=24,
                                 seed=1, freeze_features=True)
        train(model, x, y, schedule)
        after = {n: v.copy() for n, v, _ in model.named_params()}
        # conv weights moved only during phase 1; rerun phase 1 alone to compare
        model2 = build_haptic_cnn(seed=7)
        train(model2, x, y, TrainSchedule(epochs=2, batch_size=24, seed=1,
                                          phase="logistic-pretrain"))
        for name, _, _ in model2.named_params():
            if name.startswith("conv"):
                assert np.array_equal(after[name],
                                      {n: v for n, v, _ in model2.named_params()}[name])
                assert not np.array_equal(after[name], before[name])

    def test_divergence_restores_last_finite_state(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((20, 4)) * 1e3
        y = np.where(rng.random(20) < 0.5, 1.0, -1.0)
        model = build_linear_classifier(4, seed=2)
        # lr large enough to overflow the velocity: the next epoch's loss
        # is non-finite and training must roll back to the last good epoch
        schedule = TrainSchedule(epochs=40, batch_size=20, lr=1e305,
                                 seed=0, phase="hinge-finetune")
        with np.errstate(all="ignore"):
            result = train(model, x, y, schedule)
        assert result.diverged
        for _, value, _ in model.named_params():
            assert np.all(np.isfinite(value))

    def test_rejects_bad_labels(self):
        model = build_linear_classifier(3, seed=0)
        with pytest.raises(InvalidInputError):
            train(model, np.zeros((4, 3)), np.array([0.0, 1, 1, -1]), TrainSchedule(epochs=1))


class TestExtraction:
    def make(self, rng, n=6):
        return [
            InstanceMatrix(values=rng.standard_normal((32, 150)), object_id=f"o{i % 3}",
                           trial_index=i, finger=0, offset=0)
            for i in range(n)
        ]

    def test_conv3_features_non_negative(self):
        model = build_haptic_cnn(seed=0)
        feats = extract_activations(model, self.make(np.random.default_rng(0)), "conv3")
        assert all(np.all(f.values >= 0) for f in feats)
        assert all(f.values.shape == (64 * conv_stack_out_len(),) for f in feats)

    def test_identical_instances_identical_features(self):
        model = build_haptic_cnn(seed=0)
        inst = self.make(np.random.default_rng(1), n=1)[0]
        twin = InstanceMatrix(values=inst.values.copy(), object_id=inst.object_id,
                              trial_index=9, finger=1, offset=2)
        a, b = extract_activations(model, [inst, twin], "conv3")
        assert np.array_equal(a.values, b.values)

    def test_unknown_tap_layer_rejected(self):
        model = build_haptic_cnn(seed=0)
        with pytest.raises(InvalidSpecError):
            extract_activations(model, self.make(np.random.default_rng(2)), "blah")

    def test_pure_function_of_checkpoint_and_instance(self):
        model = build_haptic_cnn(seed=3)
        instances = self.make(np.random.default_rng(3))
        first = extract_activations(model, instances, "conv3")
        second = extract_activations(model, instances, "conv3")
        for a, b in zip(first, second):
            assert np.array_equal(a.values, b.values)


class TestCombineInstances:
    def make_features(self, rng, count, length=7):
        return [
            FeatureVector(object_id="obj", index=(t, 0, 0),
                          values=rng.standard_normal(length))
            for t in range(count)
        ]

    def test_ten_features_concatenate(self):
        feats = self.make_features(np.random.default_rng(0), 10)
        combined = combine_instances(feats, expected_count=10)
        assert combined.values.shape == (70,)

    def test_slices_recover_inputs(self):
        feats = self.make_features(np.random.default_rng(1), 10)
        combined = combine_instances(feats, expected_count=10)
        for t in range(10):
            assert np.array_equal(combined.values[7 * t:7 * (t + 1)], feats[t].values)

    def test_canonical_order_ignores_arrival(self):
        rng = np.random.default_rng(2)
        feats = self.make_features(rng, 8)
        shuffled = [feats[i] for i in rng.permutation(8)]
        assert np.array_equal(combine_instances(feats, 8).values,
                              combine_instances(shuffled, 8).values)

    def test_count_mismatch_rejected(self):
        feats = self.make_features(np.random.default_rng(3), 9)
        with pytest.raises(InvalidInputError):
            combine_instances(feats, expected_count=10)


class TestFusion:
    def make_modalities(self, rng, n=20, d_h=6, d_v=4):
        haptic = [FeatureVector(f"o{i}", (), rng.standard_normal(d_h)) for i in range(n)]
        visual = [FeatureVector(f"o{i}", (), rng.standard_normal(d_v)) for i in range(n)]
        return haptic, visual

    def test_fused_length_is_sum(self):
        haptic, visual = self.make_modalities(np.random.default_rng(0))
        fused = fuse_features(haptic, visual)
        assert all(f.values.shape == (10,) for f in fused)

    def test_provenance_mismatch_rejected(self):
        haptic, visual = self.make_modalities(np.random.default_rng(1))
        with pytest.raises(InvalidInputError, match="o3"):
            fuse_features(haptic, [v for v in visual if v.object_id != "o3"])

    def test_classifier_score_is_affine(self):
        haptic, visual = self.make_modalities(np.random.default_rng(2))
        labels = {f"o{i}": 1.0 if i % 2 else -1.0 for i in range(20)}
        result = fuse_and_train(haptic, visual, labels,
                                TrainSchedule(epochs=10, batch_size=20, seed=0))
        model = result.model
        x = np.random.default_rng(3).standard_normal(10)
        s1 = model.forward(x)
        s2 = model.forward(2.0 * x)
        bias = model.forward(np.zeros(10))
        assert s2 == pytest.approx(2.0 * s1 - bias, abs=1e-9)

    def test_scores_depend_only_on_haptic_segment_when_visual_zeroed(self):
        haptic, visual = self.make_modalities(np.random.default_rng(4))
        labels = {f"o{i}": 1.0 if i % 2 else -1.0 for i in range(20)}
        model = fuse_and_train(haptic, visual, labels,
                               TrainSchedule(epochs=5, batch_size=20, seed=1)).model
        rng = np.random.default_rng(5)
        h = rng.standard_normal(6)
        a = np.concatenate([h, np.zeros(4)])
        b = np.concatenate([h, np.zeros(4)])
        assert model.forward(a) == model.forward(b)
        w = model.layer("fc").params.weights[0]
        expected = float(h @ w[:6] + model.layer("fc").params.bias[0])
        assert model.forward(a) == pytest.approx(expected, abs=1e-12)

    def test_missing_labels_rejected(self):
        haptic, visual = self.make_modalities(np.random.default_rng(6), n=4)
        with pytest.raises(InvalidInputError):
            fuse_and_train(haptic, visual, {"o0": 1.0},
                           TrainSchedule(epochs=1, batch_size=4, seed=0))
