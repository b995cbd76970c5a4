import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dropout_mi.nn import (
    Batch,
    LayerSpec,
    Network,
    TrainConfig,
    TrainingDiverged,
    check_gradients,
    evaluate,
    fc_network,
    load_checkpoint,
    loss_and_gradients,
    predict_proba,
    probe_activations,
    save_checkpoint,
    train,
)
from dropout_mi.nn.network import ALPHA_MIN
from dropout_mi.numerics import Rng


def toy_batch(n=8, dim=2, classes=3, seed=2):
    gen = Rng(seed).generator()
    return Batch(gen.normal(size=(n, dim)), gen.integers(0, classes, n))


@pytest.mark.parametrize("noise", [LayerSpec.gaussian_dropout(0.2), LayerSpec.info_dropout(0.7)])
@pytest.mark.parametrize("activation", ["softplus", "relu"])
def test_gradients_match_finite_differences(noise, activation):
    net = fc_network([2, 16, 8, 3], activation, noise, seed=1)
    res = check_gradients(net, toy_batch(), TrainConfig(beta=3.0, kl_normalizer=1.0), Rng(5))
    assert res.ok, res


def test_layer_spec_validation():
    with pytest.raises(ValueError):
        LayerSpec.gaussian_dropout(0.0)
    with pytest.raises(ValueError):
        LayerSpec.info_dropout(1.5)
    with pytest.raises(ValueError):
        LayerSpec.act("tanh")
    with pytest.raises(ValueError):
        Network([LayerSpec.dense(2, 3), LayerSpec.dense(4, 2)])


def test_noise_defaults_to_penultimate_layer():
    net = fc_network([784, 512, 128, 32, 10], noise=LayerSpec.gaussian_dropout(0.2))
    kinds = [s.kind for s in net.specs]
    assert net.probe_index == kinds.index("gaussian_dropout")
    assert net.specs[net.probe_index - 2].fan_out == 32


def test_forward_same_seed_same_output():
    net = fc_network([4, 8, 3], noise=LayerSpec.gaussian_dropout(0.3), seed=0)
    x = Rng(1).generator().normal(size=(5, 4))
    a = net.forward(x, "train", Rng(7)).logits
    b = net.forward(x, "train", Rng(7)).logits
    c = net.forward(x, "train", Rng(8)).logits
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)


def test_forward_needs_rng_in_train_mode():
    net = fc_network([4, 8, 3], noise=LayerSpec.gaussian_dropout(0.3))
    with pytest.raises(ValueError):
        net.forward(np.zeros((1, 4)), "train")
    with pytest.raises(ValueError):
        net.forward(np.zeros((1, 5)))


def test_vanishing_noise_matches_deterministic():
    net = fc_network([4, 8, 3], noise=LayerSpec.gaussian_dropout(1e-14), seed=3)
    x = Rng(1).generator().normal(size=(5, 4))
    np.testing.assert_allclose(net.forward(x, "mc_inference", Rng(2)).logits,
                               net.forward(x).logits, atol=1e-6)


def test_mc_average_approaches_deterministic_preactivation():
    # noise has mean one, so averaging many draws of the noisy layer output recovers f(x)
    net = fc_network([4, 8, 3], noise=LayerSpec.gaussian_dropout(0.2), seed=3)
    x = Rng(1).generator().normal(size=(3, 4))
    draws = np.mean([net.forward(x, "mc_inference", Rng(0).derive(t)).post_noise for t in range(4000)], axis=0)
    np.testing.assert_allclose(draws, net.forward(x).pre_noise, rtol=0.03, atol=1e-3)


def test_info_dropout_alpha_within_bounds():
    net = fc_network([4, 8, 3], noise=LayerSpec.info_dropout(0.7), seed=0)
    net.params[net.probe_index]["ba"][:] = 50.0
    alpha = net.forward(np.ones((2, 4))).alpha
    assert np.all(alpha <= math.sqrt(0.7) + 1e-12)
    net.params[net.probe_index]["ba"][:] = -50.0
    assert np.all(net.forward(np.ones((2, 4))).alpha >= ALPHA_MIN - 1e-15)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_predict_proba_is_distribution(seed):
    net = fc_network([3, 5, 4], noise=LayerSpec.gaussian_dropout(0.5), seed=seed % 7)
    p = predict_proba(net, Rng(seed).generator().normal(size=(6, 3)), rng=Rng(seed), mc_samples=3)
    np.testing.assert_allclose(p.sum(axis=1), 1.0, atol=1e-12)
    assert np.all(p >= 0)


def test_loss_needs_labels():
    net = fc_network([2, 3])
    with pytest.raises(ValueError):
        loss_and_gradients(net, Batch(np.zeros((2, 2))), TrainConfig())


def test_train_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(beta=-1)
    with pytest.raises(ValueError):
        TrainConfig(batch_size=0)
    assert TrainConfig(learning_rate=1.0, lr_schedule=[(2, 0.5)]).lr_at(3) == 0.5


def test_memorizes_small_batch():
    gen = Rng(11).generator()
    data = Batch(gen.normal(size=(64, 10)), gen.integers(0, 4, 64))
    net = fc_network([10, 64, 32, 4], noise=LayerSpec.gaussian_dropout(1e-6), seed=0)
    cfg = TrainConfig(epochs=500, batch_size=64, learning_rate=0.1, momentum=0.9)
    train(net, data, cfg)
    res = loss_and_gradients(net, data, cfg, mode="deterministic")
    assert res.cross_entropy < 0.05


def test_training_is_reproducible():
    gen = Rng(1).generator()
    data = Batch(gen.normal(size=(40, 5)), gen.integers(0, 2, 40))
    cfg = TrainConfig(epochs=3, batch_size=10, seed=4)
    a = train(fc_network([5, 6, 2], noise=LayerSpec.gaussian_dropout(0.2)), data, cfg)[0]
    b = train(fc_network([5, 6, 2], noise=LayerSpec.gaussian_dropout(0.2)), data, cfg)[0]
    for pa, pb in zip(a.params, b.params):
        for k in pa:
            np.testing.assert_array_equal(pa[k], pb[k])


def test_probe_hook_called_on_listed_epochs():
    gen = Rng(1).generator()
    data = Batch(gen.normal(size=(20, 5)), gen.integers(0, 2, 20))
    cfg = TrainConfig(epochs=4, batch_size=10, probe_epochs=[2, 4])
    _, trace = train(fc_network([5, 6, 2], noise=LayerSpec.gaussian_dropout(0.2)), data, cfg,
                     lambda ctx: (ctx.epoch, ctx.pre_noise.shape))
    assert trace == [(2, (20, 6)), (4, (20, 6))]


def test_divergence_raises_with_partial_trace():
    gen = Rng(1).generator()
    data = Batch(gen.normal(size=(20, 5)) * 1e3, gen.integers(0, 2, 20))
    cfg = TrainConfig(epochs=50, batch_size=10, learning_rate=1e6, momentum=0.9, probe_epochs=[1])
    with pytest.raises(TrainingDiverged) as info:
        with np.errstate(all="ignore"):
            train(fc_network([5, 6, 2], "relu", LayerSpec.gaussian_dropout(0.2)), data, cfg,
                  lambda ctx: ctx.epoch)
    assert info.value.trace in ([], [1])


def test_probe_activations_requires_noise_layer():
    with pytest.raises(ValueError):
        probe_activations(fc_network([2, 3]), np.zeros((1, 2)))


def test_evaluate_returns_accuracy():
    data = toy_batch(20)
    ce, acc = evaluate(fc_network([2, 4, 3], noise=LayerSpec.gaussian_dropout(0.1)), data, Rng(0))
    assert ce > 0 and 0 <= acc <= 1


def test_checkpoint_round_trip(tmp_path):
    net = fc_network([4, 8, 3], noise=LayerSpec.info_dropout(0.5), seed=9)
    save_checkpoint(net, tmp_path / "m.npz", {"epoch": 3})
    loaded, meta = load_checkpoint(tmp_path / "m.npz")
    assert meta == {"epoch": 3} and loaded.seed == 9 and loaded.specs == net.specs
    x = np.ones((2, 4))
    np.testing.assert_array_equal(loaded.forward(x).logits, net.forward(x).logits)


def test_checkpoint_rejects_foreign_file(tmp_path):
    np.savez(tmp_path / "x.npz", __header__=np.frombuffer(b'{"format": "other"}', dtype=np.uint8))
    with pytest.raises(ValueError):
        load_checkpoint(tmp_path / "x.npz")
