"""Generating priors on sieve coefficient space.

Product families place i.i.d. coordinates (Gaussian, uniform, Laplace);
the isotropic family has density proportional to ``exp(-lambda * ||b||)``.
Only log-density differences are ever consumed downstream, so normalizing
constants are dropped throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import SieveCoefficients
from .errors import ConfigurationError, DimensionError, PriorSupportError, ValidationError

__all__ = [
    "Prior",
    "GaussianProductPrior",
    "UniformProductPrior",
    "LaplaceProductPrior",
    "IsotropicExponentialPrior",
    "log_density",
    "sample_prior",
    "flatness_ratio",
    "small_ball_logprob",
    "prior_to_config",
    "prior_from_config",
]


@dataclass(frozen=True)
class Prior:
    """Base class; concrete families implement log_density and sample."""

    level: int

    family = "abstract"

    def __post_init__(self):
        if self.level < 0:
            raise ValidationError("level must be nonnegative")

    @property
    def dim(self) -> int:
        return 2**self.level

    def _vec(self, b) -> np.ndarray:
        if isinstance(b, SieveCoefficients):
            if b.level != self.level:
                raise DimensionError(f"coefficient level {b.level} != prior level {self.level}")
            return b.coeffs
        b = np.asarray(b, dtype=float)
        if b.shape != (self.dim,):
            raise DimensionError(f"expected vector of length {self.dim}, got shape {b.shape}")
        return b

    def log_density(self, b) -> float:
        raise NotImplementedError

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_n(rng, 1)[0]

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        raise NotImplementedError

    def marginal_variance(self) -> float:
        """Exact per-coordinate prior variance (used to scale MCMC proposals)."""
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianProductPrior(Prior):
    """Independent N(0, sigma^2) coordinates."""

    sigma: float = 1.0

    family = "gaussian_product"

    def __post_init__(self):
        super().__post_init__()
        if self.sigma <= 0:
            raise ConfigurationError("sigma must be positive")

    def log_density(self, b) -> float:
        v = self._vec(b)
        return float(-0.5 * (v @ v) / self.sigma**2)

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.normal(0.0, self.sigma, (n, self.dim))

    def marginal_variance(self) -> float:
        return self.sigma**2


@dataclass(frozen=True)
class UniformProductPrior(Prior):
    """Independent uniform coordinates on [-half_width, half_width]."""

    half_width: float = 1.0

    family = "uniform_product"

    def __post_init__(self):
        super().__post_init__()
        if self.half_width <= 0:
            raise ConfigurationError("half_width must be positive")

    def log_density(self, b) -> float:
        v = self._vec(b)
        if np.any(np.abs(v) > self.half_width):
            return -np.inf
        return 0.0

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(-self.half_width, self.half_width, (n, self.dim))

    def marginal_variance(self) -> float:
        return self.half_width**2 / 3.0


@dataclass(frozen=True)
class LaplaceProductPrior(Prior):
    """Independent Laplace coordinates with rate lambda (scale 1/lambda)."""

    rate: float = 1.0

    family = "laplace_product"

    def __post_init__(self):
        super().__post_init__()
        if self.rate <= 0:
            raise ConfigurationError("rate must be positive")

    def log_density(self, b) -> float:
        v = self._vec(b)
        return float(-self.rate * np.sum(np.abs(v)))

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.laplace(0.0, 1.0 / self.rate, (n, self.dim))

    def marginal_variance(self) -> float:
        return 2.0 / self.rate**2


@dataclass(frozen=True)
class IsotropicExponentialPrior(Prior):
    """Density proportional to exp(-lambda * ||b||) on R^d.

    The radial law is Gamma(shape=d, rate=lambda); the direction is uniform
    on the sphere.
    """

    rate: float = 1.0

    family = "isotropic_exponential"

    def __post_init__(self):
        super().__post_init__()
        if self.rate <= 0:
            raise ConfigurationError("rate must be positive")

    def log_density(self, b) -> float:
        v = self._vec(b)
        return float(-self.rate * np.linalg.norm(v))

    def sample_n(self, rng: np.random.Generator, n: int) -> np.ndarray:
        radius = rng.gamma(self.dim, 1.0 / self.rate, n)
        direction = rng.standard_normal((n, self.dim))
        direction /= np.linalg.norm(direction, axis=1, keepdims=True)
        return radius[:, None] * direction

    def marginal_variance(self) -> float:
        # E[r^2]/d with r ~ Gamma(d, rate): d(d+1)/rate^2 / d
        return (self.dim + 1) / self.rate**2


def log_density(prior: Prior, b) -> float:
    """Log prior density up to an additive constant; -inf outside support."""
    return prior.log_density(b)


def sample_prior(prior: Prior, seed: int) -> SieveCoefficients:
    """One exact draw from the prior."""
    rng = np.random.default_rng(seed)
    return SieveCoefficients(prior.level, prior.sample(rng))


def _uniform_in_ball(rng: np.random.Generator, dim: int, radius: float, n: int) -> np.ndarray:
    z = rng.standard_normal((n, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / dim)
    return z * r[:, None]


def flatness_ratio(
    prior: Prior,
    center: SieveCoefficients,
    radius: float,
    probes: int = 2048,
    seed: int = 0,
) -> float:
    """Monte Carlo estimate of the local flatness of the prior density.

    Estimates ``sup |pi(center + b) / pi(center + b~) - 1|`` over pairs with
    ``||b||, ||b~|| <= radius`` by taking the max over probe pairs; a lower
    bound of the true supremum.  Raises PriorSupportError when the density
    vanishes on the probed ball.
    """
    if radius <= 0:
        raise ValidationError("radius must be positive")
    c = prior._vec(center)
    rng = np.random.default_rng(seed)
    a = _uniform_in_ball(rng, prior.dim, radius, probes)
    b = _uniform_in_ball(rng, prior.dim, radius, probes)
    worst = 0.0
    for da, db in zip(a, b):
        la = prior.log_density(c + da)
        lb = prior.log_density(c + db)
        if not np.isfinite(la) or not np.isfinite(lb):
            raise PriorSupportError(
                "prior density vanishes inside the probed ball: flatness condition violated"
            )
        worst = max(worst, abs(np.expm1(la - lb)))
    return worst


def small_ball_logprob(
    prior: Prior,
    center: SieveCoefficients,
    eps: float,
    draws: int = 100_000,
    seed: int = 0,
) -> float:
    """Log Monte Carlo frequency of ``||draw - center|| <= eps``; -inf on no hits."""
    if eps <= 0:
        raise ValidationError("eps must be positive")
    c = prior._vec(center)
    rng = np.random.default_rng(seed)
    hits = 0
    block = 8192
    done = 0
    while done < draws:
        k = min(block, draws - done)
        pts = prior.sample_n(rng, k)
        hits += int(np.sum(np.linalg.norm(pts - c, axis=1) <= eps))
        done += k
    if hits == 0:
        return -np.inf
    return float(np.log(hits / draws))


_FAMILIES = {
    "gaussian_product": (GaussianProductPrior, "sigma", "sigma"),
    "uniform_product": (UniformProductPrior, "A", "half_width"),
    "laplace_product": (LaplaceProductPrior, "lambda", "rate"),
    "isotropic_exponential": (IsotropicExponentialPrior, "lambda", "rate"),
}


def prior_to_config(prior: Prior) -> dict:
    """JSON-ready dict with keys family plus sigma | A | lambda."""
    _, key, attr = _FAMILIES[prior.family]
    return {"family": prior.family, key: getattr(prior, attr)}


def prior_from_config(cfg: dict, level: int) -> Prior:
    """Build a prior at the given level from its config dict."""
    family = cfg.get("family")
    if family not in _FAMILIES:
        raise ConfigurationError(
            f"unknown prior family {family!r}; expected one of {sorted(_FAMILIES)}"
        )
    cls, key, attr = _FAMILIES[family]
    if key not in cfg:
        raise ConfigurationError(f"prior family {family!r} requires key {key!r}")
    return cls(level=level, **{attr: float(cfg[key])})


def make_prior(family: str, scale: float, level: int) -> Prior:
    """Build a prior from its family name and single scale parameter."""
    if family not in _FAMILIES:
        raise ConfigurationError(
            f"unknown prior family {family!r}; expected one of {sorted(_FAMILIES)}"
        )
    cls, _, attr = _FAMILIES[family]
    return cls(level=level, **{attr: float(scale)})
