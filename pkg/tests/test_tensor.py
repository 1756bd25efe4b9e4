import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from detmath.tensor import (
    Tensor,
    conv2d,
    hadamard,
    inverse_permutation,
    matmul,
    permute,
    sigmoid,
    softmax,
)


def test_shape_data_invariant():
    with pytest.raises(ValueError):
        Tensor((2, 3), range(5))
    with pytest.raises(ValueError):
        Tensor((0, 3), [])
    t = Tensor((2, 3), range(6))
    assert t.data == (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)


def test_tensor_is_immutable():
    t = Tensor((2,), [1, 2])
    with pytest.raises(ValueError):
        t.numpy()[0] = 5


def test_transpose():
    t = permute(Tensor((2, 3), [1, 2, 3, 4, 5, 6]), (1, 0))
    assert t.shape == (3, 2)
    assert t.data == (1, 4, 2, 5, 3, 6)


def test_identity_permutation():
    t = Tensor((2, 3, 4), np.arange(24.0))
    assert permute(t, (0, 1, 2)) == t


def test_round_trip_rank3_every_index():
    rng = np.random.default_rng(3)
    t = Tensor.from_array(rng.standard_normal((2, 2, 2)))
    p = permute(t, (2, 0, 1))
    for i, j, k in itertools.product(range(2), repeat=3):
        # output index (k, i, j) holds source (i, j, k)
        assert p.numpy()[k, i, j] == t.numpy()[i, j, k]
    back = permute(p, (1, 2, 0))
    assert back == t


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(1, 4), min_size=1, max_size=4), st.randoms(use_true_random=False))
def test_round_trip_random(shape, rnd):
    axes = list(range(len(shape)))
    rnd.shuffle(axes)
    data = [rnd.uniform(-1e6, 1e6) for _ in range(int(np.prod(shape)))]
    t = Tensor(shape, data)
    assert permute(permute(t, axes), inverse_permutation(axes)) == t


@pytest.mark.parametrize("axes", [(0, 0), (0,), (0, 2), (1, 2)])
def test_bad_permutation(axes):
    with pytest.raises(ValueError):
        permute(Tensor((2, 3), range(6)), axes)


def test_matmul():
    eye = Tensor((2, 2), [1, 0, 0, 1])
    x = Tensor((2, 2), [3.5, -1, 2, 7])
    assert matmul(eye, x) == x
    assert matmul(Tensor((2, 2), [1, 2, 3, 4]), Tensor((2, 1), [5, 6])).data == (17, 39)
    z = matmul(Tensor.zeros((1, 3)), Tensor((3, 2), range(6)))
    assert z.shape == (1, 2) and z.data == (0, 0)
    with pytest.raises(ValueError):
        matmul(Tensor.zeros((2, 3)), Tensor.zeros((2, 3)))


def test_conv_identity_kernel():
    x = Tensor.from_array(np.arange(12.0).reshape(1, 3, 4))
    assert conv2d(x, Tensor((1, 1, 1, 1), [1.0])) == x


def test_conv_counts_in_bounds_taps():
    out = conv2d(Tensor.full((1, 3, 3), 1.0), Tensor.full((1, 1, 3, 3), 1.0)).numpy()[0]
    assert out[1, 1] == 9
    assert out[0, 0] == out[0, 2] == out[2, 0] == out[2, 2] == 4
    assert out[0, 1] == 6


def test_conv_zero_kernel_and_even_kernel():
    x = Tensor.from_array(np.ones((2, 4, 4)))
    assert conv2d(x, Tensor.zeros((3, 2, 3, 3))) == Tensor.zeros((3, 4, 4))
    with pytest.raises(ValueError):
        conv2d(x, Tensor.zeros((1, 2, 2, 2)))
    with pytest.raises(ValueError):
        conv2d(x, Tensor.zeros((1, 3, 3, 3)))


def test_conv_matches_direct_loops():
    rng = np.random.default_rng(0)
    x = rng.standard_normal((2, 4, 5))
    k = rng.standard_normal((3, 2, 3, 5))
    got = conv2d(Tensor.from_array(x), Tensor.from_array(k)).numpy()
    expected = np.zeros((3, 4, 5))
    for o in range(3):
        for r in range(4):
            for c in range(5):
                s = 0.0
                for ch in range(2):
                    for i in range(3):
                        for j in range(5):
                            rr, cc = r + i - 1, c + j - 2
                            if 0 <= rr < 4 and 0 <= cc < 5:
                                s += k[o, ch, i, j] * x[ch, rr, cc]
                expected[o, r, c] = s
    np.testing.assert_allclose(got, expected, rtol=0, atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_conv_is_linear(seed):
    rng = np.random.default_rng(seed)
    x, y = rng.standard_normal((2, 2, 5, 4))
    k = Tensor.from_array(rng.standard_normal((3, 2, 3, 3)))
    a, b = rng.uniform(-3, 3, 2)
    lhs = conv2d(Tensor.from_array(a * x + b * y), k).numpy()
    rhs = a * conv2d(Tensor.from_array(x), k).numpy() + b * conv2d(Tensor.from_array(y), k).numpy()
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-9)


def test_sigmoid():
    assert sigmoid(Tensor((1,), [0.0])).data == (0.5,)
    s = sigmoid(Tensor((3,), [-800.0, 800.0, 1.0])).data
    assert s[0] == 0.0 and s[1] == 1.0
    assert s[2] == pytest.approx(1 / (1 + np.exp(-1.0)), abs=1e-15)


@pytest.mark.parametrize("c", [-500.0, 0.0, 3.25, 1e5])
def test_softmax_uniform(c):
    assert softmax([c, c, c]) == pytest.approx([1 / 3] * 3, abs=1e-15)


@given(st.lists(st.floats(-500, 500), min_size=1, max_size=20), st.floats(-500, 500))
def test_softmax_sums_to_one_and_shift_invariant(xs, c):
    w = softmax(xs)
    assert all(x >= 0 for x in w)
    assert abs(sum(w) - 1) <= 1e-12
    shifted = softmax([x + c for x in xs])
    assert max(abs(a - b) for a, b in zip(w, shifted)) <= 1e-12


def test_hadamard():
    t = Tensor((2, 2), [1, -2, 3, 4])
    assert hadamard(Tensor.full((2, 2), 1.0), t) == t
    with pytest.raises(ValueError):
        hadamard(t, Tensor.zeros((4,)))
