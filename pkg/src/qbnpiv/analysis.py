"""Error norms, contraction diagnostics, and Gibbs-posterior optimality checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .basis import Basis, SieveCoefficients
from .design import Design, sample, tail_norm_sq, true_coeffs, true_tau
from .errors import ValidationError
from .moments import empirical_moments, tau_hat
from .posterior import PosteriorResult
from .seeding import derive_seed

__all__ = [
    "l2_error",
    "contraction_mass",
    "info_complexity",
    "gibbs_weights",
    "fit_loglog_slope",
    "RatePoint",
    "RateReport",
    "IllposednessRow",
    "IllposednessReport",
    "illposedness_profile",
]


def l2_error(b_est: SieveCoefficients, design: Design) -> float:
    """Exact L2 distance between the synthesized estimate and the true function.

    By orthonormality this is ``sqrt(||b_est - b0^J||^2 + tail)`` where the
    tail collects the squared true coefficients beyond the sieve.
    """
    b0 = true_coeffs(design, b_est.level)
    head = float(np.sum((b_est.coeffs - b0.coeffs) ** 2))
    return float(np.sqrt(head + tail_norm_sq(design, b_est.level)))


def contraction_mass(
    pr: PosteriorResult,
    center,
    radius: float,
    n_draws: int = 100_000,
    seed: int = 0,
) -> float:
    """Posterior mass OUTSIDE the ball of given radius around the center.

    Exact-Gaussian results are integrated by Monte Carlo (noncentral radius
    probabilities have no convenient closed form under a general
    covariance); MCMC results use the empirical draw frequency.
    """
    if radius < 0:
        raise ValidationError("radius must be nonnegative")
    c = center.coeffs if isinstance(center, SieveCoefficients) else np.asarray(center, dtype=float)
    if pr.gaussian is not None:
        rng = np.random.default_rng(seed)
        pts = pr.gaussian.sample(n_draws, rng)
    else:
        pts = pr.draws
    dist = np.linalg.norm(pts - c, axis=1)
    return float(np.mean(dist > radius))


def _check_simplex(w: np.ndarray, name: str) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    if np.any(w < -1e-12) or abs(w.sum() - 1.0) > 1e-8:
        raise ValidationError(f"{name} must be a probability vector (nonnegative, summing to 1)")
    return np.clip(w, 0.0, None)


def info_complexity(losses, prior_weights, candidate_weights, eta: float) -> float:
    """Expected loss plus scaled KL-to-prior of a candidate distribution.

    ``sum_k cand_k loss_k + (1/eta) sum_k cand_k log(cand_k / prior_k)``
    with the 0 log 0 = 0 convention.  The candidate must vanish wherever
    the prior does.
    """
    losses = np.asarray(losses, dtype=float)
    prior = _check_simplex(prior_weights, "prior_weights")
    cand = _check_simplex(candidate_weights, "candidate_weights")
    if eta <= 0:
        raise ValidationError("eta must be positive")
    support = cand > 0
    if np.any(support & (prior == 0)):
        raise ValidationError("candidate puts mass on an atom with zero prior weight")
    kl = float(np.sum(cand[support] * np.log(cand[support] / prior[support])))
    return float(cand @ losses + kl / eta)


def gibbs_weights(losses, prior_weights, eta: float) -> np.ndarray:
    """The exponentially tilted weights ``prior_k * exp(-eta * loss_k)``, normalized.

    Computed through log-sum-exp, so finite losses can never underflow to an
    all-zero vector.  This is the exact minimizer of :func:`info_complexity`
    over the simplex.
    """
    losses = np.asarray(losses, dtype=float)
    prior = _check_simplex(prior_weights, "prior_weights")
    if eta < 0:
        raise ValidationError("eta must be nonnegative")
    with np.errstate(divide="ignore"):
        logw = np.where(prior > 0, np.log(prior, where=prior > 0) - eta * losses, -np.inf)
    logw -= np.max(logw)
    w = np.exp(logw)
    return w / w.sum()


def fit_loglog_slope(ns, values) -> tuple[float, float]:
    """OLS slope and standard error of log(values) on log(ns)."""
    lx = np.log(np.asarray(ns, dtype=float))
    ly = np.log(np.asarray(values, dtype=float))
    m = lx.size
    if m < 2:
        raise ValidationError("need at least two grid points to fit a slope")
    sxx = float(np.sum((lx - lx.mean()) ** 2))
    slope = float(np.sum((lx - lx.mean()) * (ly - ly.mean())) / sxx)
    intercept = ly.mean() - slope * lx.mean()
    resid = ly - intercept - slope * lx
    se = float("nan")
    if m > 2:
        se = float(np.sqrt(resid @ resid / (m - 2) / sxx))
    return slope, se


@dataclass
class RatePoint:
    n: int
    level: int
    median_error: float
    iqr_error: float
    median_outside_mass: float
    tau_margin_flagged: bool


@dataclass
class RateReport:
    """Monte Carlo convergence-rate study: grid rows plus the fitted slope."""

    points: list[RatePoint] = field(default_factory=list)
    slope: float = float("nan")
    slope_se: float = float("nan")
    theoretical_exponent: float = float("nan")
    dropped_n: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "points": [vars(p) for p in self.points],
            "slope": self.slope,
            "slope_se": self.slope_se,
            "theoretical_exponent": self.theoretical_exponent,
            "dropped_n": self.dropped_n,
        }

    def csv_rows(self) -> tuple[list[str], list[list]]:
        header = ["n", "level", "median_error", "iqr_error", "median_outside_mass", "tau_margin_flagged"]
        return header, [[p.n, p.level, p.median_error, p.iqr_error, p.median_outside_mass,
                         int(p.tau_margin_flagged)] for p in self.points]


@dataclass
class IllposednessRow:
    n: int
    level: int
    tau: float
    tau_hat_median: float
    tau_hat_iqr: float
    margin_failure_rate: float
    flagged: bool


@dataclass
class IllposednessReport:
    rows: list[IllposednessRow] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"rows": [vars(r) for r in self.rows]}

    def csv_rows(self) -> tuple[list[str], list[list]]:
        header = ["n", "level", "tau", "tau_hat_median", "tau_hat_iqr", "margin_failure_rate", "flagged"]
        return header, [[r.n, r.level, r.tau, r.tau_hat_median, r.tau_hat_iqr,
                         r.margin_failure_rate, int(r.flagged)] for r in self.rows]


def illposedness_profile(
    design: Design,
    sample_sizes,
    levels,
    replications: int,
    seed: int,
    basis: Basis | None = None,
) -> IllposednessReport:
    """Empirical vs true ill-posedness over an (n, J) grid.

    For each cell, fresh samples give the smallest singular value of the
    empirical cross-Gram; a cell is flagged when the concentration margin
    ``tau_hat >= tau / 2`` fails in more than 20% of replications.
    """
    basis = basis or Basis("cosine")
    report = IllposednessReport()
    for i_n, n in enumerate(sample_sizes):
        for i_j, level in enumerate(levels):
            tau = true_tau(design, level)
            hats = np.empty(replications)
            for rep in range(replications):
                s = sample(design, n, derive_seed(seed, i_n, i_j, rep))
                hats[rep] = tau_hat(empirical_moments(s, basis, level))
            failures = float(np.mean(hats < tau / 2.0))
            q25, q50, q75 = np.percentile(hats, [25, 50, 75])
            report.rows.append(IllposednessRow(
                n=int(n), level=int(level), tau=tau,
                tau_hat_median=float(q50), tau_hat_iqr=float(q75 - q25),
                margin_failure_rate=failures, flagged=failures > 0.2,
            ))
    return report
