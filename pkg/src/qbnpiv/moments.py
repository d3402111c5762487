"""Empirical sufficient statistics of the quasi-likelihood.

For a sample of size n and resolution level J, the quasi-log-likelihood of a
coefficient vector b is

    -(n/2) * (c - Phi_wx b)' Phi_ww^- (c - Phi_wx b),

where Phi_ww = E_n[phi(W) phi(W)'], Phi_wx = E_n[phi(W) phi(X)'], and
c = E_n[phi(W) Y].  Phi_ww^- is the inverse, replaced by the spectral
generalized inverse under rank deficiency.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import numpy as np

from .basis import Basis, SieveCoefficients, eval_matrix
from .design import Sample
from .errors import DimensionError

__all__ = [
    "EmpiricalMoments",
    "empirical_moments",
    "mhat",
    "quasi_loglik",
    "quasi_loglik_grad",
    "tau_hat",
    "pinv",
]

DEFAULT_PINV_TOL = 1e-10


def pinv(matrix: np.ndarray, tol: float = DEFAULT_PINV_TOL) -> np.ndarray:
    """Spectral pseudo-inverse zeroing singular values below ``tol * s_max``."""
    matrix = np.asarray(matrix, dtype=float)
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    keep = s > tol * (s[0] if s.size else 0.0)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vt.T * inv) @ u.T


def _rank_and_pinv(matrix: np.ndarray, tol: float) -> tuple[np.ndarray, int]:
    u, s, vt = np.linalg.svd(matrix, full_matrices=False)
    keep = s > tol * (s[0] if s.size else 0.0)
    inv = np.zeros_like(s)
    inv[keep] = 1.0 / s[keep]
    return (vt.T * inv) @ u.T, int(keep.sum())


@dataclass(frozen=True)
class EmpiricalMoments:
    """Gram/cross-Gram matrices and instrument-weighted outcomes of a sample."""

    n: int
    level: int
    basis: Basis
    phi_ww: np.ndarray
    phi_wx: np.ndarray
    c: np.ndarray
    ww_inverse: np.ndarray
    ww_rank: int

    @property
    def dim(self) -> int:
        return 2**self.level

    def fingerprint(self) -> str:
        """Short content hash used in result provenance."""
        h = hashlib.sha256()
        h.update(np.asarray([self.n, self.level], dtype=np.int64).tobytes())
        for a in (self.phi_ww, self.phi_wx, self.c):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()[:16]


def empirical_moments(
    s: Sample, basis: Basis, level: int, *, pinv_tol: float = DEFAULT_PINV_TOL
) -> EmpiricalMoments:
    """Exact sample averages of the instrument moments at resolution ``level``.

    Rank deficiency of the instrument Gram matrix is recorded, not fatal:
    the cached inverse falls back to the spectral generalized inverse.
    """
    bw = eval_matrix(basis, level, s.w)
    bx = eval_matrix(basis, level, s.x)
    n = s.n
    phi_ww = bw.T @ bw / n
    phi_ww = (phi_ww + phi_ww.T) / 2.0
    phi_wx = bw.T @ bx / n
    c = bw.T @ s.y / n
    ww_inverse, ww_rank = _rank_and_pinv(phi_ww, pinv_tol)
    return EmpiricalMoments(
        n=n, level=level, basis=basis,
        phi_ww=phi_ww, phi_wx=phi_wx, c=c,
        ww_inverse=ww_inverse, ww_rank=ww_rank,
    )


def _coeff_array(em: EmpiricalMoments, b) -> np.ndarray:
    if isinstance(b, SieveCoefficients):
        if b.level != em.level:
            raise DimensionError(f"coefficient level {b.level} != moments level {em.level}")
        return b.coeffs
    b = np.asarray(b, dtype=float)
    if b.shape != (em.dim,):
        raise DimensionError(f"expected coefficient vector of length {em.dim}, got shape {b.shape}")
    return b


def mhat(em: EmpiricalMoments, b, w):
    """Series estimate of the conditional moment function at w for coefficients b.

    Computes ``phi^J(w)' Phi_ww^- (c - Phi_wx b)``; w may be scalar or array.
    """
    bvec = _coeff_array(em, b)
    resid = em.c - em.phi_wx @ bvec
    phi = eval_matrix(em.basis, em.level, w)
    values = phi @ (em.ww_inverse @ resid)
    return float(values[0]) if np.isscalar(w) or np.ndim(w) == 0 else values


def quasi_loglik(em: EmpiricalMoments, b) -> float:
    """Quasi-log-likelihood of b, up to a coefficient-free constant.

    Always <= 0, with equality iff the instrument-projected residual
    vanishes.
    """
    bvec = _coeff_array(em, b)
    resid = em.c - em.phi_wx @ bvec
    return float(-(em.n / 2.0) * resid @ em.ww_inverse @ resid)


def quasi_loglik_grad(em: EmpiricalMoments, b) -> np.ndarray:
    """Gradient of :func:`quasi_loglik`: ``n * Phi_wx' Phi_ww^- (c - Phi_wx b)``."""
    bvec = _coeff_array(em, b)
    resid = em.c - em.phi_wx @ bvec
    return em.n * em.phi_wx.T @ (em.ww_inverse @ resid)


def tau_hat(em: EmpiricalMoments) -> float:
    """Empirical ill-posedness measure: smallest singular value of the cross-Gram."""
    return float(np.linalg.svd(em.phi_wx, compute_uv=False)[-1])
