"""Orthonormal function systems on [0, 1] with dyadic truncation.

Two families are provided: the cosine system ``phi_1 = 1``,
``phi_l(x) = sqrt(2) cos(pi (l-1) x)`` for ``l >= 2``, and the standard
Haar system indexed so that the first ``2**J`` functions span the dyadic
step functions at level ``J``.  Indices are 1-based in documentation
(``phi_1`` is the constant function); storage is 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DimensionError, DomainError, ValidationError

__all__ = [
    "Basis",
    "SieveCoefficients",
    "eval_vector",
    "eval_matrix",
    "gram",
    "project",
    "synthesize",
    "quadrature_nodes",
]

_KINDS = ("cosine", "haar")
_RULES = ("legendre", "midpoint")


@dataclass(frozen=True)
class Basis:
    """Immutable basis description: family plus quadrature settings.

    Parameters
    ----------
    kind : str
        "cosine" or "haar".
    n_nodes : int
        Baseline quadrature node count; raised automatically when a level
        requires more nodes.
    rule : str or None
        "legendre" (Gauss-Legendre) or "midpoint" (composite midpoint on a
        dyadic grid, exact for Haar integrands).  ``None`` picks the natural
        rule for the family: Gauss-Legendre for cosine, midpoint for Haar.
    """

    kind: str = "cosine"
    n_nodes: int = 4096
    rule: str | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValidationError(f"unknown basis kind {self.kind!r}; expected one of {_KINDS}")
        if self.rule is not None and self.rule not in _RULES:
            raise ValidationError(f"unknown quadrature rule {self.rule!r}; expected one of {_RULES}")
        if self.n_nodes < 2:
            raise ValidationError("n_nodes must be at least 2")

    @property
    def resolved_rule(self) -> str:
        if self.rule is not None:
            return self.rule
        return "midpoint" if self.kind == "haar" else "legendre"


@dataclass
class SieveCoefficients:
    """A resolution level J and a coefficient vector of length ``2**J``."""

    level: int
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(1))

    def __post_init__(self):
        if self.level < 0:
            raise ValidationError("level must be nonnegative")
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        if self.coeffs.ndim != 1 or self.coeffs.size != 2**self.level:
            raise DimensionError(
                f"coefficient vector must have length 2**{self.level} = {2**self.level}, "
                f"got shape {self.coeffs.shape}"
            )
        if not np.all(np.isfinite(self.coeffs)):
            raise ValidationError("coefficients must be finite")

    @property
    def dim(self) -> int:
        return 2**self.level

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))


def _check_level(level: int) -> int:
    if not isinstance(level, (int, np.integer)) or level < 0:
        raise ValidationError(f"level must be a nonnegative integer, got {level!r}")
    return int(level)


def _check_unit_interval(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x)):
        raise DomainError("evaluation points must lie in [0, 1]")
    return x


def eval_matrix(basis: Basis, level: int, x) -> np.ndarray:
    """Evaluate the first ``2**level`` basis functions at each point of ``x``.

    Returns an array of shape ``(len(x), 2**level)`` whose row i is
    ``phi^J(x_i)``.
    """
    level = _check_level(level)
    x = _check_unit_interval(np.atleast_1d(x))
    n, dim = x.size, 2**level
    out = np.empty((n, dim))
    out[:, 0] = 1.0
    if basis.kind == "cosine":
        if dim > 1:
            freqs = np.arange(1, dim)
            out[:, 1:] = np.sqrt(2.0) * np.cos(np.pi * np.outer(x, freqs))
    else:
        out[:, 1:] = 0.0
        for j in range(level):
            scale = 2.0**(j / 2.0)
            t = 2.0**j * x
            k = np.minimum(np.floor(t).astype(int), 2**j - 1)
            sign = np.where(t - k < 0.5, scale, -scale)
            out[np.arange(n), 2**j + k] = sign
    return out


def eval_vector(basis: Basis, level: int, x: float) -> np.ndarray:
    """Evaluate ``phi^J(x)`` at a single point, returning a length-``2**J`` vector."""
    return eval_matrix(basis, level, x)[0]


_PANEL = 64  # Gauss-Legendre points per panel of the composite rule


@lru_cache(maxsize=32)
def _legendre_composite(n_panels: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.legendre.leggauss(_PANEL)
    t = (t + 1.0) / 2.0
    w = w / 2.0
    offsets = np.arange(n_panels)[:, None]
    x = ((offsets + t[None, :]) / n_panels).ravel()
    return x, np.tile(w / n_panels, n_panels)


def quadrature_nodes(basis: Basis, level: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights integrating over [0, 1] at accuracy suited to ``level``.

    The Legendre rule is a composite Gauss-Legendre scheme with 64-point
    panels.  The midpoint rule uses a dyadic grid with at least
    ``2**(level+4)`` nodes (a multiple of ``2**level``), which integrates
    products of Haar functions up to that level exactly.
    """
    level = _check_level(level)
    n = max(basis.n_nodes, 2**(level + 4))
    if basis.resolved_rule == "legendre":
        return _legendre_composite((n + _PANEL - 1) // _PANEL)
    block = 2**level
    n = ((n + block - 1) // block) * block
    x = (np.arange(n) + 0.5) / n
    return x, np.full(n, 1.0 / n)


def gram(basis: Basis, level: int) -> np.ndarray:
    """Quadrature approximation of the Gram matrix ``(<phi_l, phi_m>)``."""
    x, w = quadrature_nodes(basis, level)
    phi = eval_matrix(basis, level, x)
    return phi.T @ (phi * w[:, None])


def project(basis: Basis, level: int, f) -> SieveCoefficients:
    """Project a function onto the span of the first ``2**level`` basis functions.

    ``f`` must be vectorized-evaluable (or plain callable) on quadrature
    nodes in [0, 1]; coefficients are ``<phi_l, f>`` by quadrature.
    """
    x, w = quadrature_nodes(basis, level)
    fx = np.asarray(f(x), dtype=float)
    if fx.shape != x.shape:
        fx = np.array([f(xi) for xi in x], dtype=float)
    if not np.all(np.isfinite(fx)):
        raise ValidationError("function values on quadrature nodes must be finite")
    phi = eval_matrix(basis, level, x)
    return SieveCoefficients(level, phi.T @ (w * fx))


def synthesize(b: SieveCoefficients, basis: Basis, x):
    """Evaluate ``g(x) = sum_l b_l phi_l(x)``; scalar in, scalar out."""
    phi = eval_matrix(basis, b.level, x)
    values = phi @ b.coeffs
    return float(values[0]) if np.isscalar(x) or np.ndim(x) == 0 else values
