import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from online_bls.adaptive import AdaptiveOnlineBLS
from online_bls.errors import InvalidDecay, InvalidLambda
from online_bls.online import OnlineBLS, one_hot


def rel(W, ref):
    return np.linalg.norm(W - ref) / max(np.linalg.norm(ref), 1e-300)


def test_init_defaults():
    model = AdaptiveOnlineBLS(5, 3, 1e-8, 0.99)
    assert model.mu == 0.99 and model.k == 0
    assert np.array_equal(model.P, np.zeros((5, 5)))
    assert np.array_equal(model.W, np.zeros((5, 3)))


@pytest.mark.parametrize("mu", [1.5, 0.0, -0.1, np.nan])
def test_invalid_decay(mu):
    with pytest.raises(InvalidDecay):
        AdaptiveOnlineBLS(3, 2, 1e-8, mu)


def test_invalid_lambda():
    with pytest.raises(InvalidLambda):
        AdaptiveOnlineBLS(3, 2, 0.0, 0.9)


def test_scatter_recursion():
    rng = np.random.default_rng(0)
    model = AdaptiveOnlineBLS(4, 2, 1e-3, 0.5)
    A = rng.standard_normal((3, 4))
    for a in A:
        model.update(a, one_hot(0, 2))
    P = 0.25 * np.outer(A[0], A[0]) + 0.5 * np.outer(A[1], A[1]) + np.outer(A[2], A[2])
    np.testing.assert_allclose(model.P, P, rtol=1e-14)
    np.testing.assert_allclose(model.L @ model.L.T, P + 1e-3 * np.eye(4), rtol=1e-12)


@settings(max_examples=20, deadline=None)
@given(m=st.integers(1, 20), c=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_mu_one_matches_plain(m, c, seed):
    rng = np.random.default_rng(seed)
    plain, ada = OnlineBLS(m, c, 1e-3), AdaptiveOnlineBLS(m, c, 1e-3, mu=1.0)
    for _ in range(80):
        a, y = rng.standard_normal(m), one_hot(int(rng.integers(c)), c)
        assert np.argmax(plain.predict(a)) == np.argmax(ada.predict(a))
        plain.update(a, y)
        ada.update(a, y)
        assert rel(ada.W, plain.W) <= 1e-8


def test_constant_stream_converges():
    rng = np.random.default_rng(1)
    a, y = rng.standard_normal(6), one_hot(1, 3)
    model = AdaptiveOnlineBLS(6, 3, 1e-8, 0.99)
    errors = []
    for _ in range(60):
        model.update(a, y)
        errors.append(np.linalg.norm(model.predict(a) - y))
    assert all(e1 <= e0 + 1e-12 for e0, e1 in zip(errors, errors[1:]))
    assert errors[-1] < 1e-6


def steps_to_cross(mu, before=50, limit=2000):
    rng = np.random.default_rng(2)
    a = rng.standard_normal(5)
    model = AdaptiveOnlineBLS(5, 2, 1e-2, mu)
    for _ in range(before):
        model.update(a, one_hot(0, 2))
    for step in range(1, limit):
        model.update(a, one_hot(1, 2))
        if np.argmax(model.predict(a)) == 1:
            return step
    return limit


def test_label_flip_crossed_sooner_with_decay():
    assert steps_to_cross(0.9) < steps_to_cross(1.0)


@settings(max_examples=20, deadline=None)
@given(mu=st.floats(0.5, 1.0), seed=st.integers(0, 2**32 - 1))
def test_scatter_stays_psd(mu, seed):
    rng = np.random.default_rng(seed)
    model = AdaptiveOnlineBLS(8, 2, 1e-8, mu)
    scale = rng.choice([1e-3, 1.0, 1e3], size=100)
    for s in scale:
        model.update(s * rng.standard_normal(8), one_hot(int(rng.integers(2)), 2))
    P = model.P
    assert np.max(np.abs(P - P.T)) <= 1e-10 * np.abs(P).max()
    assert np.linalg.eigvalsh(0.5 * (P + P.T)).min() >= -1e-10 * np.linalg.norm(P, 2)
