import math

import numpy as np
import pytest

from emocl.corpus import Utterance
from emocl.errors import DataError
from emocl.model import (
    ModelParams,
    featurize,
    featurize_conversation,
    fnv1a64,
    forward,
    init_params,
    load_checkpoint,
    loss_and_grad,
    save_checkpoint,
    sgd_step,
)

from conftest import make_conversation


def utt(text, speaker="p1", label="a", features=None):
    return Utterance(id="u0", speaker=speaker, text=text, label=label, features=features)


# --- featurization ---

def test_fnv1a64_stable():
    # frozen reference values of the documented 64-bit hash
    assert fnv1a64("") == 0xCBF29CE484222325
    assert fnv1a64("a") == 0xAF63DC4C8601EC8C


def test_featurize_empty_no_prev():
    vec = featurize(utt(""), None, hash_dim=4)
    assert vec.shape == (9,)
    assert not vec.any()


def test_featurize_deterministic():
    a = featurize(utt("hello world"), utt("prev words"), hash_dim=8)
    b = featurize(utt("hello world"), utt("prev words"), hash_dim=8)
    assert np.array_equal(a, b)


def test_featurize_l2_normalized():
    once = featurize(utt("abc"), None, hash_dim=4)
    twice = featurize(utt("abc abc"), None, hash_dim=4)
    assert np.allclose(once, twice)
    assert np.linalg.norm(once[:4]) == pytest.approx(1.0)


def test_featurize_speaker_change_indicator():
    same = featurize(utt("x", speaker="p1"), utt("y", speaker="p1"), hash_dim=2)
    diff = featurize(utt("x", speaker="p1"), utt("y", speaker="p2"), hash_dim=2)
    assert same[-1] == 0.0 and diff[-1] == 1.0


def test_featurize_precomputed_features():
    vec = featurize(utt("", features=(1.0, 2.0, 3.0)), None, hash_dim=3)
    assert vec[:3].tolist() == [1.0, 2.0, 3.0]
    with pytest.raises(DataError, match="dim"):
        featurize(utt("", features=(1.0, 2.0)), None, hash_dim=3)


def test_featurize_conversation_shape():
    conv = make_conversation("c", ["a", "b", "a"])
    X = featurize_conversation(conv, hash_dim=5)
    assert X.shape == (3, 11)


# --- forward ---

def test_forward_zero_weights_uniform():
    params = ModelParams(np.zeros((3, 4)), np.zeros(3), np.zeros((5, 3)), np.zeros(5))
    p = forward(params, np.ones(4))
    assert np.allclose(p, 0.2)


def test_forward_sums_to_one():
    rng = np.random.default_rng(0)
    params = init_params(6, 4, 3, rng)
    p = forward(params, rng.normal(size=6))
    assert p.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(p > 0)


def test_forward_shift_invariance():
    rng = np.random.default_rng(1)
    params = init_params(4, 3, 3, rng)
    x = rng.normal(size=4)
    shifted = ModelParams(params.w1, params.b1, params.w2, params.b2 + 7.0)
    assert np.allclose(forward(params, x), forward(shifted, x), atol=1e-12)


def test_forward_shape_mismatch():
    params = init_params(4, 3, 2, np.random.default_rng(0))
    with pytest.raises(DataError):
        forward(params, np.ones(5))


# --- loss and gradients ---

def test_loss_one_hot_reduction():
    # uniform output over 4 classes -> P[gold] = 0.25
    params = ModelParams(np.zeros((3, 2)), np.zeros(3), np.zeros((4, 3)), np.zeros(4))
    target = np.array([0.0, 1.0, 0.0, 0.0])
    loss, _ = loss_and_grad(params, [(np.ones(2), target)])
    assert loss == pytest.approx(-math.log(0.25), abs=1e-12)


def test_loss_target_equal_prediction_is_entropy():
    rng = np.random.default_rng(2)
    params = init_params(3, 4, 3, rng)
    x = rng.normal(size=3)
    p = forward(params, x)
    loss, _ = loss_and_grad(params, [(x, p)])
    assert loss == pytest.approx(float(-(p * np.log(p)).sum()), abs=1e-9)


def test_loss_rejects_bad_target():
    params = init_params(2, 2, 2, np.random.default_rng(0))
    with pytest.raises(DataError):
        loss_and_grad(params, [(np.ones(2), np.array([0.7, 0.7]))])


def test_loss_batch_order_invariant():
    rng = np.random.default_rng(3)
    params = init_params(4, 3, 3, rng)
    batch = [(rng.normal(size=4), rng.dirichlet(np.ones(3))) for _ in range(5)]
    loss_a, grads_a = loss_and_grad(params, batch)
    loss_b, grads_b = loss_and_grad(params, batch[::-1])
    assert loss_a == pytest.approx(loss_b, abs=1e-12)
    assert np.allclose(grads_a.w1, grads_b.w1, atol=1e-12)


def finite_difference_grads(params, batch, step=1e-5):
    arrays = [params.w1, params.b1, params.w2, params.b2]
    grads = [np.zeros_like(a) for a in arrays]
    for a_idx, arr in enumerate(arrays):
        flat = arr.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up, _ = loss_and_grad(params, batch)
            flat[i] = orig - step
            down, _ = loss_and_grad(params, batch)
            flat[i] = orig
            grads[a_idx].ravel()[i] = (up - down) / (2 * step)
    return ModelParams(*grads)


def assert_grads_close(analytic, numeric):
    for a, n in [(analytic.w1, numeric.w1), (analytic.b1, numeric.b1),
                 (analytic.w2, numeric.w2), (analytic.b2, numeric.b2)]:
        denom = np.maximum(np.abs(n), 1e-4 / 1e-6)  # abs 1e-4 for near-zero coords
        assert np.all(np.abs(a - n) / denom <= 1e-6 + 1e-12)


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(4)
    params = init_params(5, 4, 3, rng)
    batch = [(rng.normal(size=5), rng.dirichlet(np.ones(3))) for _ in range(4)]
    _, analytic = loss_and_grad(params, batch)
    numeric = finite_difference_grads(params, batch)
    assert_grads_close(analytic, numeric)


def test_gradient_check_many_random_draws():
    rng = np.random.default_rng(5)
    for _ in range(20):
        d, h, r = (int(rng.integers(2, 6)) for _ in range(3))
        params = init_params(d, h, max(r, 2), rng)
        batch = [(rng.normal(size=d), rng.dirichlet(np.ones(max(r, 2))))
                 for _ in range(int(rng.integers(1, 4)))]
        _, analytic = loss_and_grad(params, batch)
        numeric = finite_difference_grads(params, batch)
        assert_grads_close(analytic, numeric)


# --- SGD ---

def test_sgd_zero_grads_noop():
    params = init_params(3, 2, 2, np.random.default_rng(0))
    zeros = ModelParams(np.zeros((2, 3)), np.zeros(2), np.zeros((2, 2)), np.zeros(2))
    new = sgd_step(params, zeros, lr=0.5)
    assert np.array_equal(new.w1, params.w1)


def test_sgd_lr_zero_noop():
    rng = np.random.default_rng(6)
    params = init_params(3, 2, 2, rng)
    _, grads = loss_and_grad(params, [(rng.normal(size=3), np.array([1.0, 0.0]))])
    new = sgd_step(params, grads, lr=0.0)
    assert np.array_equal(new.w2, params.w2)


def test_sgd_reduces_loss_on_one_example():
    rng = np.random.default_rng(7)
    params = init_params(4, 3, 2, rng)
    batch = [(rng.normal(size=4), np.array([1.0, 0.0]))]
    before, grads = loss_and_grad(params, batch)
    after, _ = loss_and_grad(sgd_step(params, grads, lr=0.01), batch)
    assert after < before


def test_init_deterministic():
    a = init_params(4, 3, 2, np.random.default_rng(42))
    b = init_params(4, 3, 2, np.random.default_rng(42))
    assert np.array_equal(a.w1, b.w1) and np.array_equal(a.w2, b.w2)
    assert not a.b1.any() and not a.b2.any()
    assert np.abs(a.w1).max() <= 0.1


# --- checkpoints ---

def test_checkpoint_round_trip(tmp_path):
    params = init_params(5, 3, 4, np.random.default_rng(8))
    path = str(tmp_path / "model.json")
    save_checkpoint(params, seed=123, path=path)
    loaded, seed = load_checkpoint(path)
    assert seed == 123
    for a, b in [(params.w1, loaded.w1), (params.b1, loaded.b1),
                 (params.w2, loaded.w2), (params.b2, loaded.b2)]:
        assert np.array_equal(a, b)  # bitwise round-trip via repr floats


def test_checkpoint_rejects_bad_version(tmp_path):
    path = tmp_path / "model.json"
    path.write_text('{"version": 99}')
    with pytest.raises(DataError):
        load_checkpoint(str(path))
