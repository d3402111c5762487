"""Quasi-Bayesian estimation of nonparametric instrumental-variables models.

The model is ``E[Y | W] = E[g(X) | W]`` with endogenous regressor X and
instrument W on [0, 1].  A series estimate of the conditional moment
function induces a quasi-likelihood over sieve coefficients; combining it
with a prior yields a quasi-posterior whose mean is the quasi-Bayes
estimator.  The package also ships synthetic designs with known operator
spectrum and a simulation harness checking contraction, normal
approximation, and convergence-rate behavior.
"""

from .basis import Basis, SieveCoefficients, eval_vector, gram, project, synthesize
from .design import (
    Design,
    Sample,
    build_design,
    density,
    load_csv,
    sample,
    save_csv,
    structural_function,
    true_tau,
    validate_assumptions,
)
from .errors import (
    ConfigurationError,
    DataFormatError,
    DimensionError,
    DomainError,
    IllConditionedError,
    NumericalError,
    StuckChainError,
    ValidationError,
)
from .estimator import QuasiBayesNPIV
from .harness import ExperimentConfig, choose_level, run_bvm_study, run_fit, run_rate_study
from .moments import EmpiricalMoments, empirical_moments, mhat, pinv, quasi_loglik, tau_hat
from .posterior import (
    GaussianLaw,
    PosteriorResult,
    RWMConfig,
    bvm_approx,
    conjugate_posterior,
    gaussian_kl,
    mde,
    quasi_bayes,
    rwm_sample,
)
from .priors import (
    GaussianProductPrior,
    IsotropicExponentialPrior,
    LaplaceProductPrior,
    UniformProductPrior,
    flatness_ratio,
    make_prior,
    sample_prior,
    small_ball_logprob,
)
from .analysis import (
    contraction_mass,
    gibbs_weights,
    illposedness_profile,
    info_complexity,
    l2_error,
)

__version__ = "0.1.0"
