"""Scikit-learn style front end for the quasi-Bayes pipeline.

``QuasiBayesNPIV`` fits the structural function g in ``E[Y | W] =
E[g(X) | W]`` from columns ``(x, w)`` and predicts ``g`` at new x values.
It composes with the usual scikit-learn machinery (``get_params``,
``clone``, pipelines) and validates inputs through the standard helpers.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .basis import Basis, synthesize
from .design import Sample
from .errors import DomainError
from .harness import _fit_posterior  # shared sampler dispatch
from .moments import empirical_moments, tau_hat
from .posterior import bvm_approx, mde, quasi_bayes
from .priors import make_prior

__all__ = ["QuasiBayesNPIV"]


class QuasiBayesNPIV(RegressorMixin, BaseEstimator):
    """Quasi-Bayes estimator of a structural function under instrument moments.

    Parameters
    ----------
    level : int
        Sieve resolution J; the model uses the first ``2**level`` basis
        functions.  There is no automatic rule without knowing the problem's
        smoothness and ill-posedness, so the level is explicit here.
    basis : str
        "cosine" or "haar".
    prior : str
        Prior family: "gaussian_product", "uniform_product",
        "laplace_product", or "isotropic_exponential".
    prior_scale : float
        The family's scale parameter (sigma, half-width, or rate).
    temperature : float
        Temperature of the quasi-posterior; 1/2 is the benchmark under which
        the exponent equals the quasi-log-likelihood.
    sampler : str
        "auto" (conjugate when available, else random walk), "conjugate",
        or "rwm".
    n_draws, burn_in : int
        Random-walk Metropolis chain lengths (ignored on the conjugate path).
    random_state : int
        Seed for all stochastic steps.

    Attributes
    ----------
    coef_ : posterior-mean sieve coefficients.
    mde_coef_ : maximum quasi-likelihood coefficients.
    posterior_ : the fitted PosteriorResult.
    bvm_ : plug-in normal approximation of the posterior.
    tau_hat_ : empirical ill-posedness measure.
    """

    def __init__(
        self,
        level: int = 3,
        basis: str = "cosine",
        prior: str = "gaussian_product",
        prior_scale: float = 1.0,
        temperature: float = 0.5,
        sampler: str = "auto",
        n_draws: int = 20_000,
        burn_in: int = 2_000,
        random_state: int = 0,
    ):
        self.level = level
        self.basis = basis
        self.prior = prior
        self.prior_scale = prior_scale
        self.temperature = temperature
        self.sampler = sampler
        self.n_draws = n_draws
        self.burn_in = burn_in
        self.random_state = random_state

    def fit(self, X, y):
        """Fit from ``X`` with columns ``(x, w)`` and outcomes ``y``."""
        X, y = check_X_y(X, y, ensure_min_features=2)
        if X.shape[1] != 2:
            raise ValueError(f"X must have exactly two columns (x, w), got {X.shape[1]}")
        x, w = X[:, 0], X[:, 1]
        if np.any((x < 0) | (x > 1)) or np.any((w < 0) | (w > 1)):
            raise DomainError("x and w columns must lie in [0, 1]")
        data = Sample(y=y, x=x, w=w)
        self.basis_ = Basis(self.basis)
        em = empirical_moments(data, self.basis_, int(self.level))
        prior = make_prior(self.prior, self.prior_scale, int(self.level))
        cfg = _EstimatorShim(self.sampler, self.n_draws, self.burn_in, self.temperature)
        self.posterior_ = _fit_posterior(cfg, em, prior, int(self.random_state))
        self.coef_ = quasi_bayes(self.posterior_).coeffs
        self.mde_coef_ = mde(em).coeffs
        self.bvm_ = bvm_approx(em)
        self.tau_hat_ = tau_hat(em)
        self.level_ = int(self.level)
        self.n_features_in_ = 2
        return self

    def predict(self, X):
        """Evaluate the fitted structural function at x values.

        Accepts a 1-D array of x values, an ``(n, 1)`` column, or an
        ``(n, 2)`` array whose first column is x (the fit-time layout).
        """
        check_is_fitted(self, "coef_")
        X = check_array(X, ensure_2d=False)
        x = X if X.ndim == 1 else X[:, 0]
        if np.any((x < 0) | (x > 1)):
            raise DomainError("x values must lie in [0, 1]")
        from .basis import SieveCoefficients

        b = SieveCoefficients(self.level_, self.coef_)
        return synthesize(b, self.basis_, x)


class _EstimatorShim:
    """Minimal config view handing the estimator's knobs to the sampler dispatch."""

    def __init__(self, method, n_draws, burn_in, temperature):
        self.sampler = {"method": method, "n_draws": n_draws, "burn_in": burn_in}
        self.temperature = temperature
