"""Small complex linear-algebra helpers and the seeded random source.

All random draws in the package go through :func:`make_rng`, which pins the
bit generator to PCG64 so that a given seed yields the same stream on every
platform and numpy release that keeps PCG64's stream stable.
"""

import warnings

import numpy as np
import scipy.linalg

__all__ = [
    "RankDeficientError",
    "make_rng",
    "complex_gaussian",
    "pseudo_inverse",
    "frobenius_norm",
    "db_to_linear",
    "dbm_to_watt",
]

# relative pivot threshold for declaring H H^H singular
PIVOT_RTOL = 1e-12


class RankDeficientError(np.linalg.LinAlgError):
    """Raised when a matrix that must have full row rank does not."""


def make_rng(seed):
    """Return a PCG64-backed generator for ``seed`` (a non-negative int)."""
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(seed))


def complex_gaussian(rng, variance, size=None):
    """Draw from CN(0, variance).

    Real and imaginary parts are independent N(0, variance/2). With
    ``size=None`` a Python complex is returned.
    """
    if variance < 0:
        raise ValueError(f"variance must be non-negative, got {variance}")
    scale = np.sqrt(variance / 2.0)
    if size is None:
        re, im = rng.standard_normal(2)
        return complex(scale * re, scale * im)
    shape = (size,) if np.isscalar(size) else tuple(size)
    draws = rng.standard_normal(shape + (2,))
    return scale * (draws[..., 0] + 1j * draws[..., 1])


def pseudo_inverse(H):
    """Right pseudo-inverse ``H^H (H H^H)^{-1}`` of a wide full-row-rank matrix.

    The Gram matrix is LU-factorised with partial pivoting; a pivot smaller
    than ``PIVOT_RTOL`` times the largest one is treated as rank deficiency.

    Raises
    ------
    ValueError
        If ``H`` has more rows than columns or contains non-finite entries.
    RankDeficientError
        If ``H`` does not have full row rank.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    rows, cols = H.shape
    if rows > cols:
        raise ValueError(f"pseudo_inverse needs rows <= cols, got {rows}x{cols}")
    if not np.all(np.isfinite(H)):
        raise ValueError("pseudo_inverse input has non-finite entries")
    gram = H @ H.conj().T
    with warnings.catch_warnings():
        # exactly singular input is reported through the pivot test below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(gram, check_finite=False)
    pivots = np.abs(np.diag(lu))
    largest = pivots.max()
    if largest == 0.0 or pivots.min() < PIVOT_RTOL * largest:
        raise RankDeficientError(
            f"matrix of shape {rows}x{cols} is rank deficient "
            f"(pivot ratio {pivots.min() / largest if largest else 0.0:.3e})"
        )
    # (H H^H)^{-1} H, then conjugate-transpose; the Gram matrix is Hermitian
    return scipy.linalg.lu_solve((lu, piv), H, check_finite=False).conj().T


def frobenius_norm(M):
    return float(np.linalg.norm(np.asarray(M), ord=None))


def db_to_linear(db):
    out = 10.0 ** (np.asarray(db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def dbm_to_watt(dbm):
    return db_to_linear(np.asarray(dbm, dtype=float) - 30.0)
