import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import random_complex
from simirs.numerics import (
    RankDeficientError,
    complex_gaussian,
    db_to_linear,
    dbm_to_watt,
    frobenius_norm,
    make_rng,
    pseudo_inverse,
)


def test_pinv_identity():
    np.testing.assert_allclose(pseudo_inverse(np.eye(2)), np.eye(2), atol=1e-15)


def test_pinv_diagonal():
    np.testing.assert_allclose(
        pseudo_inverse(np.array([[2.0, 0.0], [0.0, 4.0]])), [[0.5, 0.0], [0.0, 0.25]], atol=1e-15
    )


def test_pinv_random_wide_residual(rng):
    H = random_complex(rng, 3, 8)
    assert np.max(np.abs(H @ pseudo_inverse(H) - np.eye(3))) < 1e-10


def test_pinv_matches_numpy(rng):
    H = random_complex(rng, 4, 6)
    np.testing.assert_allclose(pseudo_inverse(H), np.linalg.pinv(H), atol=1e-12)


def test_pinv_rank_deficient():
    H = np.array([[1.0, 2.0, 3.0], [2.0, 4.0, 6.0]])
    with pytest.raises(RankDeficientError):
        pseudo_inverse(H)
    with pytest.raises(np.linalg.LinAlgError):  # subclass contract
        pseudo_inverse(np.zeros((2, 4)))


def test_pinv_rejects_tall_and_nonfinite():
    with pytest.raises(ValueError):
        pseudo_inverse(np.ones((3, 2)))
    with pytest.raises(ValueError):
        pseudo_inverse(np.array([[1.0, np.nan]]))


@given(
    rows=st.integers(1, 6),
    extra=st.integers(0, 6),
    seed=st.integers(0, 2**32 - 1),
    scale=st.floats(1.0, 1e8),
)
def test_pinv_residual_property(rows, extra, seed, scale):
    rng = np.random.default_rng(seed)
    H = scale * random_complex(rng, rows, rows + extra)
    R = H @ pseudo_inverse(H) - np.eye(rows)
    # the bound mixes a dimensionless residual with ||H||_F, so it is only
    # meaningful for ||H||_F >= 1; the scale-free form is checked below
    assert np.linalg.norm(R) < 1e-9 * np.linalg.norm(H)


@given(
    rows=st.integers(1, 6),
    extra=st.integers(0, 6),
    seed=st.integers(0, 2**32 - 1),
    scale=st.floats(1e-12, 1e12),
)
def test_pinv_residual_scale_free(rows, extra, seed, scale):
    rng = np.random.default_rng(seed)
    H = scale * random_complex(rng, rows, rows + extra)
    assert np.linalg.norm(H @ pseudo_inverse(H) - np.eye(rows)) < 1e-9


def test_complex_gaussian_zero_variance():
    assert complex_gaussian(make_rng(0), 0.0) == 0j


def test_complex_gaussian_negative_variance():
    with pytest.raises(ValueError):
        complex_gaussian(make_rng(0), -1.0)


def test_complex_gaussian_moments():
    z = complex_gaussian(make_rng(7), 1.0, size=10**6)
    assert abs(z.mean()) < 0.01
    assert 0.99 <= np.mean(np.abs(z) ** 2) <= 1.01
    # independent halves of equal power
    assert abs(np.var(z.real) - 0.5) < 0.005
    assert abs(np.mean(z.real * z.imag)) < 0.005


def test_rng_determinism():
    a = complex_gaussian(make_rng(42), 2.0, size=100)
    b = complex_gaussian(make_rng(42), 2.0, size=100)
    assert a.tobytes() == b.tobytes()
    assert make_rng(42).random(5).tobytes() == make_rng(42).random(5).tobytes()


def test_rng_is_pcg64_stream():
    # pinned first draw of the documented generator
    assert make_rng(0).integers(0, 2**32) == np.random.Generator(np.random.PCG64(0)).integers(0, 2**32)
    assert isinstance(make_rng(0).bit_generator, np.random.PCG64)


def test_rng_seed_range():
    make_rng(2**64 - 1)
    with pytest.raises(ValueError):
        make_rng(-1)
    with pytest.raises(ValueError):
        make_rng(2**64)


def test_frobenius_examples():
    assert frobenius_norm(np.zeros((2, 3))) == 0.0
    assert frobenius_norm(np.eye(3)) == pytest.approx(np.sqrt(3))
    assert frobenius_norm(np.array([[3.0, 4.0]])) == 5.0


_coef = st.one_of(st.just(0.0), st.floats(1e-100, 1e3), st.floats(-1e3, -1e-100))


@given(seed=st.integers(0, 2**32 - 1), re=_coef, im=_coef)
def test_frobenius_homogeneous(seed, re, im):
    M = random_complex(np.random.default_rng(seed), 3, 4)
    c = complex(re, im)
    assert frobenius_norm(c * M) == pytest.approx(abs(c) * frobenius_norm(M), rel=1e-12)


def test_unit_conversions():
    assert db_to_linear(10.0) == pytest.approx(10.0)
    assert dbm_to_watt(30.0) == pytest.approx(1.0)
    assert dbm_to_watt(-117.0) == pytest.approx(10 ** (-14.7))
    np.testing.assert_allclose(db_to_linear([0.0, 20.0]), [1.0, 100.0])
