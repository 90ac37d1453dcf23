import numpy as np
import pytest

from hypermapf import autodiff as ad
from hypermapf.autodiff import Tape, Tensor, backward, finite_diff_check


def _rand(shape, seed=0, scale=1.0):
    return Tensor(np.random.default_rng(seed).normal(size=shape) * scale)


def test_segment_softmax_pair_splits_evenly():
    out = ad.segment_softmax(Tensor(np.zeros(2)), np.array([0, 0]))
    assert np.allclose(out.data, [0.5, 0.5])


def test_segment_softmax_segments_sum_to_one():
    rng = np.random.default_rng(1)
    scores = Tensor(rng.normal(size=40) * 5)
    segs = rng.integers(0, 7, size=40)
    out = ad.segment_softmax(scores, segs)
    for s in range(7):
        block = out.data[segs == s]
        if block.size:
            assert abs(block.sum() - 1.0) < 1e-9


def test_segment_softmax_empty_input():
    out = ad.segment_softmax(Tensor(np.zeros(0)), np.zeros(0, dtype=int))
    assert out.data.shape == (0,)


def test_leaky_relu_slope():
    out = ad.leaky_relu(Tensor(np.array([-1.0, 2.0])), 0.2)
    assert np.allclose(out.data, [-0.2, 2.0])


def test_uniform_logits_cross_entropy_is_log_k():
    logits = Tensor(np.zeros((4, 5)))
    loss = ad.cross_entropy_with_logits(logits, np.array([0, 1, 2, 3]))
    assert loss.item() == pytest.approx(np.log(5.0), rel=1e-12)


def test_matmul_gradients_match_finite_differences():
    a, b = _rand((3, 4), 0), _rand((4, 2), 1)
    err = finite_diff_check(lambda x, y: ad.tsum(ad.matmul(x, y)), [a, b])
    assert err <= 1e-6


def test_every_primitive_gradient():
    rng = np.random.default_rng(2)
    m = Tensor(rng.normal(size=(5, 3)))
    w = Tensor(rng.normal(size=(5, 3)))
    segs = np.array([0, 1, 0, 2, 1])
    wseg = Tensor(rng.normal(size=(3, 3)))
    cases = {
        "add": lambda t: ad.tsum(ad.mul(ad.add(t, w), w)),
        "sub": lambda t: ad.tsum(ad.mul(ad.sub(t, w), w)),
        "mul": lambda t: ad.tsum(ad.mul(ad.mul(t, w), w)),
        "scale": lambda t: ad.tsum(ad.scale(t, -1.7)),
        "exp": lambda t: ad.tsum(ad.mul(ad.exp(t), w)),
        "sigmoid": lambda t: ad.tsum(ad.mul(ad.sigmoid(t), w)),
        "tanh": lambda t: ad.tsum(ad.mul(ad.tanh(t), w)),
        "relu": lambda t: ad.tsum(ad.mul(ad.relu(t), w)),
        "leaky": lambda t: ad.tsum(ad.mul(ad.leaky_relu(t), w)),
        "mean_axis": lambda t: ad.tsum(ad.mul(ad.tmean(t, axis=0),
                                              ad.narrow(w, 0, 0, 1))),
        "reshape": lambda t: ad.tsum(ad.mul(ad.reshape(t, (3, 5)),
                                            ad.reshape(w, (3, 5)))),
        "narrow": lambda t: ad.tsum(ad.mul(ad.narrow(t, 0, 1, 4),
                                           ad.narrow(w, 0, 1, 4))),
        "take": lambda t: ad.tsum(ad.mul(ad.take(t, np.array([0, 2, 2])),
                                         ad.narrow(w, 0, 0, 3))),
        "segment_sum": lambda t: ad.tsum(ad.mul(ad.segment_sum(t, segs, 3), wseg)),
        "concat": lambda t: ad.tsum(ad.mul(ad.concat([t, t], axis=1),
                                           ad.concat([w, w], axis=1))),
        "clamp": lambda t: ad.tsum(ad.mul(ad.clamp(t, -0.4, 0.9), w)),
        "minimum": lambda t: ad.tsum(ad.mul(ad.minimum(t, w), w)),
        "log_softmax": lambda t: ad.tsum(ad.mul(ad.log_softmax(t), w)),
        "softmax": lambda t: ad.tsum(ad.mul(ad.softmax(t), w)),
    }
    for name, fn in cases.items():
        err = finite_diff_check(fn, [m])
        assert err <= 1e-6, f"{name}: {err}"


def test_segment_softmax_gradient():
    rng = np.random.default_rng(3)
    scores = Tensor(rng.normal(size=9))
    weights = Tensor(rng.normal(size=9))
    segs = np.array([0, 0, 1, 1, 1, 2, 2, 3, 3])
    err = finite_diff_check(
        lambda s: ad.tsum(ad.mul(ad.segment_softmax(s, segs), weights)), [scores])
    assert err <= 1e-6


def test_segment_softmax_cross_entropy_composite():
    rng = np.random.default_rng(4)
    scores = Tensor(rng.normal(size=8))
    values = Tensor(rng.normal(size=(8, 5)))
    segs = np.array([0, 0, 0, 1, 1, 2, 2, 2])

    def f(s, v):
        attn = ad.segment_softmax(s, segs)
        pooled = ad.segment_sum(ad.mul(ad.reshape(attn, (-1, 1)), v), segs, 3)
        return ad.cross_entropy_with_logits(pooled, np.array([1, 4, 0]))

    assert finite_diff_check(f, [scores, values]) <= 1e-6


def test_conv2d_gradient_and_shape():
    rng = np.random.default_rng(5)
    x = Tensor(rng.normal(size=(2, 3, 5, 5)))
    k = Tensor(rng.normal(size=(4, 3, 3, 3)) * 0.4)
    b = Tensor(rng.normal(size=(4,)))
    sel = Tensor(rng.normal(size=(2, 4, 5, 5)))
    out = ad.conv2d(x, k, b)
    assert out.data.shape == (2, 4, 5, 5)
    err = finite_diff_check(lambda x_, k_, b_: ad.tsum(ad.mul(ad.conv2d(x_, k_, b_), sel)),
                            [x, k, b])
    assert err <= 1e-6


def test_identity_function_error_tiny():
    point = _rand((4,), 6)
    assert finite_diff_check(lambda t: ad.tsum(t), [point]) <= 1e-10


def test_backward_of_sum_is_ones():
    x = _rand((3, 2), 7)
    with Tape() as tape:
        loss = ad.tsum(x)
    grads = backward(tape, loss)
    assert np.array_equal(grads.wrt(x), np.ones((3, 2)))


def test_unused_parameter_gets_zero_gradient():
    x, unused = _rand((3,), 8), _rand((4,), 9)
    with Tape() as tape:
        loss = ad.tsum(ad.mul(x, x))
    grads = backward(tape, loss)
    assert np.array_equal(grads.wrt(unused), np.zeros(4))


def test_backward_rejects_non_scalar_loss():
    x = _rand((3,), 10)
    with Tape() as tape:
        y = ad.mul(x, x)
    with pytest.raises(ValueError):
        backward(tape, y)


def test_backward_is_linear():
    rng = np.random.default_rng(11)
    x = Tensor(rng.normal(size=(6,)))
    w1 = Tensor(rng.normal(size=(6,)))
    w2 = Tensor(rng.normal(size=(6,)))
    a, b = 1.7, -0.4

    def grad_of(fn):
        with Tape() as tape:
            loss = fn()
        return backward(tape, loss).wrt(x)

    g1 = grad_of(lambda: ad.tsum(ad.mul(x, w1)))
    g2 = grad_of(lambda: ad.tsum(ad.mul(ad.sigmoid(x), w2)))
    combined = grad_of(lambda: ad.add(ad.scale(ad.tsum(ad.mul(x, w1)), a),
                                      ad.scale(ad.tsum(ad.mul(ad.sigmoid(x), w2)), b)))
    assert np.allclose(combined, a * g1 + b * g2, atol=1e-12)


def test_shape_mismatch_raises():
    with pytest.raises(ValueError):
        ad.matmul(_rand((2, 3), 0), _rand((2, 3), 1))
    with pytest.raises(ValueError):
        ad.cross_entropy_with_logits(_rand((2, 3, 1), 0), np.array([0, 1]))


def test_no_tape_means_no_recording():
    tape = Tape()
    with tape:
        pass
    x = _rand((2, 2), 12)
    ad.mul(x, x)  # outside any tape
    assert len(tape) == 0
