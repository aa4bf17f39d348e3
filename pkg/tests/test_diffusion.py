import math

import numpy as np
import pytest

from diffaug.data import LabeledDataset
from diffaug.diffusion import (Denoiser, draw_training_noise, forward_sample, load_denoiser,
                               predict_noise, reverse_step, sample, save_denoiser, simple_loss,
                               timestep_embedding, train)
from diffaug.schedule import NoiseSchedule, make_cosine_schedule
from diffaug.toy import gaussian_mixture
from diffaug.training import TrainConfig


def handmade_schedule(alpha_bars, betas):
    betas = np.asarray(betas, dtype=float)
    return NoiseSchedule(len(betas), betas, 1 - betas, np.asarray(alpha_bars, dtype=float),
                         np.sqrt(betas))


# forward process

def test_forward_zero_noise_limit():
    sched = handmade_schedule([1.0, 0.5], [1e-9, 0.5])
    x0 = np.array([1.5, -2.0])
    np.testing.assert_array_equal(forward_sample(x0, 0, np.array([9.0, 9.0]), sched), x0)


def test_forward_pure_noise_limit():
    sched = handmade_schedule([0.5, 0.0], [0.5, 0.999])
    eps = np.array([0.3, -0.7])
    np.testing.assert_array_equal(forward_sample(np.array([5.0, 5.0]), 1, eps, sched), eps)


def test_forward_scalar_case():
    # abar = 0.25 at t = 1: (1 - 2/3) * (1 - 0.25)
    sched = NoiseSchedule.from_betas([2 / 3, 0.25])
    out = forward_sample(np.array([2.0]), 1, np.array([-1.0]), sched)
    expected = math.sqrt(0.25) * 2.0 + math.sqrt(0.75) * -1.0
    assert out[0] == pytest.approx(expected, abs=1e-12)
    assert out[0] == pytest.approx(0.1340, abs=1e-4)


def test_forward_errors():
    sched = make_cosine_schedule(10)
    with pytest.raises(ValueError):
        forward_sample(np.zeros(2), 0, np.zeros(3), sched)
    with pytest.raises(ValueError):
        forward_sample(np.zeros(2), 10, np.zeros(2), sched)


@pytest.mark.parametrize("frac", [0.25, 0.5, 0.75])
def test_forward_marginal_statistics(frac):
    sched = make_cosine_schedule(200)
    t = int(frac * sched.T)
    n = 100_000
    x0 = np.array([1.0, -1.0])
    eps = np.random.default_rng(t).standard_normal((n, 2))
    xt = forward_sample(np.broadcast_to(x0, (n, 2)), np.full(n, t), eps, sched)
    abar = sched.alpha_bars[t]
    tol = 3 * np.sqrt((1 - abar) / n)
    assert np.all(np.abs(xt.mean(axis=0) - np.sqrt(abar) * x0) < tol)
    assert np.all(np.abs(xt.var(axis=0) / (1 - abar) - 1) < 0.05)


# reverse step

def test_reverse_step_scalar_case():
    sched = NoiseSchedule.from_betas([2 / 3, 0.25])
    assert sched.alphas[1] == pytest.approx(0.75) and sched.alpha_bars[1] == pytest.approx(0.25)
    out = reverse_step(np.array([1.0]), 1, np.array([0.5]), np.array([0.0]), sched)
    expected = (1.0 - 0.25 / math.sqrt(1 - 0.25) * 0.5) / math.sqrt(0.75)
    assert out[0] == pytest.approx(expected, rel=1e-12)
    assert out[0] == pytest.approx(0.9880, abs=1e-4)


def test_reverse_step_zero_beta_is_identity():
    sched = handmade_schedule([0.5, 0.5], [0.0, 0.0])
    x = np.array([0.4, -1.2])
    out = reverse_step(x, 1, np.array([0.7, 0.1]), np.zeros(2), sched)
    np.testing.assert_array_equal(out, x)


def test_reverse_step_noise_is_additive():
    sched = make_cosine_schedule(50)
    x, e, z = np.array([0.3, 0.1]), np.array([-0.2, 0.5]), np.array([1.3, -0.4])
    det = reverse_step(x, 20, e, np.zeros(2), sched)
    full = reverse_step(x, 20, e, z, sched)
    np.testing.assert_allclose(full - det, np.sqrt(sched.betas[20]) * z, rtol=1e-12)


def test_reverse_step_errors():
    sched = make_cosine_schedule(10)
    with pytest.raises(ValueError):
        reverse_step(np.zeros(2), 1, np.zeros(3), np.zeros(2), sched)
    with pytest.raises(ValueError):
        reverse_step(np.zeros(2), 0, np.zeros(2), np.zeros(2), sched)


# noise predictor

def test_prediction_is_deterministic():
    net = Denoiser.initialize(3, 2, (16, 16), 8, seed=1)
    x = np.array([0.1, -0.2, 0.3])
    a = predict_noise(net, x, 5, 1)
    b = predict_noise(net, x, 5, 1)
    assert a.shape == (3,)
    assert a.tobytes() == b.tobytes()


def test_zero_parameters_give_zero_output():
    net = Denoiser(4, 3, (8, 8), 4)
    np.testing.assert_array_equal(predict_noise(net, np.ones(4), 3, 2), np.zeros(4))


def test_hand_computed_single_hidden_layer():
    net = Denoiser(1, 1, hidden=(1,), embedding_dim=2)
    v = net.views
    v["W0"][...] = 2.0
    v["b0"][...] = 0.5
    v["W_emb"][...] = [[1.0, 1.0]]
    v["label_table"][...] = [[0.2, -0.4]]
    v["W1"][...] = 3.0
    v["b1"][...] = 0.1
    t, x = 0, 1.0
    # embedding at t = 0 is (sin 0, cos 0) = (0, 1)
    pre = 2.0 * x + 0.5 + (0.0 + 0.2) + (1.0 - 0.4)
    expected = 3.0 * pre / (1.0 + math.exp(-pre)) + 0.1
    assert predict_noise(net, np.array([x]), t, 0)[0] == pytest.approx(expected, rel=1e-14)


def test_timestep_embedding_layout():
    emb = timestep_embedding([0, 3], 4)
    np.testing.assert_allclose(emb[0], [0, 0, 1, 1])
    np.testing.assert_allclose(emb[1], [math.sin(3), math.sin(3e-2), math.cos(3), math.cos(3e-2)])


def test_label_out_of_range():
    net = Denoiser.initialize(2, 2, (4, 4), 4)
    with pytest.raises(ValueError):
        predict_noise(net, np.zeros(2), 0, 2)


# simplified loss

class ExactStub:
    """Predicts precisely the noise that simple_loss will draw for a given seed."""

    def __init__(self, n, d, T, seed):
        self.eps = draw_training_noise(n, d, T, seed)[1]
        self.params = np.zeros(5)

    def forward(self, x, t, labels):
        return self.eps.copy(), None

    def backward(self, cache, dout):
        return np.zeros_like(self.params)


def test_perfect_prediction_has_zero_loss():
    sched = make_cosine_schedule(50)
    x0 = np.random.default_rng(0).normal(size=(16, 3))
    loss, grad = simple_loss(ExactStub(16, 3, 50, 99), x0, np.zeros(16, int), sched, 99)
    assert loss == 0.0
    assert not grad.any()


def test_zero_predictor_loss_is_dimension():
    sched = make_cosine_schedule(50)
    d = 3
    net = Denoiser(d, 1, (4, 4), 4)
    x0 = np.zeros((20_000, d))
    loss, _ = simple_loss(net, x0, np.zeros(20_000, int), sched, 5)
    assert loss == pytest.approx(d, rel=0.05)


def test_empty_batch_rejected():
    net = Denoiser(2, 1, (4, 4), 4)
    with pytest.raises(ValueError):
        simple_loss(net, np.zeros((0, 2)), np.zeros(0, int), make_cosine_schedule(10), 0)


def directional_fd_errors(net, x0, labels, sched, seed, probes, h=1e-5):
    loss, grad = simple_loss(net, x0, labels, sched, seed)
    base = net.params.copy()
    rng = np.random.default_rng(seed + 1)
    errors = []
    for _ in range(probes):
        v = rng.standard_normal(base.size)
        v /= np.linalg.norm(v)
        net.params[:] = base + h * v
        up, _ = simple_loss(net, x0, labels, sched, seed)
        net.params[:] = base - h * v
        down, _ = simple_loss(net, x0, labels, sched, seed)
        net.params[:] = base
        fd = (up - down) / (2 * h)
        an = float(grad @ v)
        errors.append(abs(fd - an) / max(abs(fd), abs(an)))
    return errors


@pytest.mark.parametrize("hidden", [(16, 16), (8,), (12, 10, 6)])
def test_gradient_matches_finite_differences(hidden):
    net = Denoiser.initialize(3, 3, hidden, 6, seed=4)
    rng = np.random.default_rng(8)
    x0 = rng.normal(size=(12, 3))
    labels = rng.integers(0, 3, 12)
    errors = directional_fd_errors(net, x0, labels, make_cosine_schedule(40), 21, probes=20)
    assert max(errors) < 1e-4


# training and sampling

@pytest.fixture(scope="module")
def point_model():
    x_star = np.array([1.0, -1.0])
    data = LabeledDataset(np.tile(x_star, (128, 1)), np.zeros(128, int), 1)
    cfg = TrainConfig(epochs=200, batch_size=64, learning_rate=3e-3, hidden=(32, 32),
                      embedding_dim=8, schedule={"kind": "cosine", "T": 100, "s": 0.008}, seed=2)
    return x_star, data, cfg, train(data, cfg)


def test_training_is_deterministic(point_model):
    _, data, cfg, net = point_model
    again = train(data, cfg)
    assert again.params.tobytes() == net.params.tobytes()
    assert again.loss_trace == net.loss_trace


def test_single_point_samples_concentrate(point_model):
    x_star, _, _, net = point_model
    samples = sample(net, 0, rng_seed=3, n=1000)
    err = np.linalg.norm(samples.mean(axis=0) - x_star)
    assert err < 0.1 * np.linalg.norm(x_star) + 0.1


def test_sampling_shape_and_determinism(point_model):
    net = point_model[3]
    a = sample(net, 0, rng_seed=11, n=3)
    b = sample(net, 0, rng_seed=11, n=3)
    assert a.shape == (3, 2)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, sample(net, 0, rng_seed=12, n=3))


def test_sample_rejects_bad_count(point_model):
    with pytest.raises(ValueError):
        sample(point_model[3], 0, n=0)


def test_training_loss_decreases():
    data = gaussian_mixture(100, ((-2.0, 0.0), (2.0, 0.0)), 0.7, seed=3)
    cfg = TrainConfig(epochs=500, batch_size=64, learning_rate=3e-3, hidden=(32, 32),
                      embedding_dim=8, schedule={"kind": "cosine", "T": 100, "s": 0.008}, seed=0)
    net = train(data, cfg)
    assert net.loss_trace[-1] < net.loss_trace[0]


@pytest.mark.slow
def test_conditioning_separates_classes():
    means = np.array([(-2.0, 0.0), (2.0, 0.0)])
    data = gaussian_mixture(200, means, 0.5, seed=4)
    cfg = TrainConfig(epochs=600, batch_size=64, learning_rate=3e-3, hidden=(64, 64),
                      embedding_dim=16, schedule={"kind": "cosine", "T": 100, "s": 0.008}, seed=1)
    net = train(data, cfg)
    m0 = sample(net, 0, rng_seed=1, n=500).mean(axis=0)
    m1 = sample(net, 1, rng_seed=2, n=500).mean(axis=0)
    assert np.linalg.norm(m0 - m1) > 0.5 * np.linalg.norm(means[0] - means[1])


def test_train_preconditions():
    cfg = TrainConfig(epochs=1)
    with pytest.raises(ValueError):
        train(LabeledDataset(np.zeros((0, 2)), np.zeros(0, int), 1), cfg)
    with pytest.raises(ValueError, match="no samples"):
        train(LabeledDataset(np.zeros((3, 2)), np.zeros(3, int), 2), cfg)


def test_persistence_round_trip(tmp_path, point_model):
    net = point_model[3]
    save_denoiser(net, tmp_path / "m.json")
    again = load_denoiser(tmp_path / "m.json")
    assert again.params.tobytes() == net.params.tobytes()
    assert again.schedule.alpha_bars.tobytes() == net.schedule.alpha_bars.tobytes()
    assert again.hidden == net.hidden


def test_load_validates_shapes(tmp_path, point_model):
    doc = point_model[3].to_dict()
    doc["params"]["W0"] = [[0.0]]
    import json
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    with pytest.raises(ValueError, match="W0"):
        load_denoiser(tmp_path / "bad.json")
