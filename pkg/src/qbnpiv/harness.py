"""Experiment orchestration: fitting, simulation studies, report persistence.

Every study is a pure function of (config, master seed); replication seeds
follow the counter scheme in :mod:`qbnpiv.seeding`.  Reports serialize to a
JSON/CSV pair with sorted keys and round-trip float formatting, so reruns
with identical inputs produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .analysis import (
    IllposednessReport,
    RatePoint,
    RateReport,
    contraction_mass,
    fit_loglog_slope,
    illposedness_profile,
    l2_error,
)
from .basis import Basis
from .design import (
    Design,
    Sample,
    design_from_config,
    load_csv,
    sample,
    save_csv,
    true_coeffs,
    true_tau,
)
from .errors import ConfigurationError, ValidationError
from .moments import empirical_moments, tau_hat
from .posterior import (
    PosteriorResult,
    RWMConfig,
    bvm_approx,
    conjugate_posterior,
    gaussian_kl,
    mde,
    pinsker_tv_bound,
    quasi_bayes,
    rwm_sample,
)
from .priors import GaussianProductPrior, prior_from_config
from .seeding import derive_seed

__all__ = [
    "ExperimentConfig",
    "FitReport",
    "BvMRow",
    "BvMReport",
    "choose_level",
    "run_fit",
    "run_rate_study",
    "run_bvm_study",
    "run_illposedness",
    "load_csv",
    "save_report",
]

DEFAULT_J_CAP = 6


@dataclass
class ExperimentConfig:
    """Declarative description of one experiment.

    Exactly one of ``design`` (synthetic) or ``data`` (CSV path) drives the
    fit; rate and normal-approximation studies require a design because they
    need ground truth.
    """

    design: dict | None = None
    data: str | None = None
    basis: str = "cosine"
    level: int | None = None
    j_cap: int = DEFAULT_J_CAP
    prior: dict = field(default_factory=lambda: {"family": "gaussian_product", "sigma": 1.0})
    sampler: dict = field(default_factory=dict)
    temperature: float = 0.5
    n: int | None = None
    study: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.design is None and self.data is None:
            raise ConfigurationError("config needs a 'design' block or a 'data' path")
        grid = self.study.get("n_grid")
        if grid is not None:
            if any(int(a) <= 0 for a in grid) or any(
                int(a) >= int(b) for a, b in zip(grid, grid[1:])
            ):
                raise ConfigurationError("study n_grid must be positive and strictly increasing")
        if int(self.study.get("replications", 1)) < 1:
            raise ConfigurationError("study replications must be >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            try:
                d = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
        return cls.from_dict(d)

    def make_design(self) -> Design:
        if self.design is None:
            raise ConfigurationError("this operation requires a synthetic design")
        return design_from_config(self.design)

    def make_basis(self) -> Basis:
        return Basis(self.basis)


def choose_level(
    n: int,
    kind: str,
    *,
    r: float | None = None,
    c: float | None = None,
    s: float,
    j_cap: int = DEFAULT_J_CAP,
    c_prime: float | None = None,
) -> int:
    """Resolution-level rule: nearest integer on the log2 scale, clamped.

    Mild case: ``2^J ~ n^(1/(2r+2s+1))``.  Severe case: ``2^J ~ c' log n``
    with ``c' = 1/(4c)`` by default, strictly inside the admissible range
    ``c' < 1/(2c)``.
    """
    if n < 2:
        raise ValidationError("need n >= 2 to choose a level")
    if kind == "mild":
        if r is None or r <= 0:
            raise ConfigurationError("mild level rule requires r > 0")
        target = float(n) ** (1.0 / (2.0 * r + 2.0 * s + 1.0))
    elif kind == "severe":
        if c is None or c <= 0:
            raise ConfigurationError("severe level rule requires c > 0")
        cp = c_prime if c_prime is not None else 1.0 / (4.0 * c)
        if not cp < 1.0 / (2.0 * c):
            raise ConfigurationError("c_prime must satisfy c_prime < 1/(2c)")
        target = cp * math.log(n)
    else:
        raise ConfigurationError(f"unknown kind {kind!r}")
    if target < 1.0:
        return 0
    return int(min(max(int(np.rint(np.log2(target))), 0), j_cap))


def _auto_level(config: ExperimentConfig, n: int) -> int:
    if config.level is not None:
        return int(config.level)
    if config.design is None:
        raise ConfigurationError(
            "automatic level selection needs design parameters (r or c, s); "
            "real-data mode requires an explicit 'level'"
        )
    d = config.design
    return choose_level(
        n, d["kind"],
        r=d.get("r"), c=d.get("c"), s=float(d["s"]),
        j_cap=config.j_cap,
    )


def _fit_posterior(config: ExperimentConfig, em, prior, seed: int) -> PosteriorResult:
    method = config.sampler.get("method", "auto")
    if method == "auto":
        method = "conjugate" if isinstance(prior, GaussianProductPrior) else "rwm"
    if method == "conjugate":
        law = conjugate_posterior(em, prior, temperature=config.temperature)
        return PosteriorResult(level=em.level, gaussian=law,
                               provenance={"moments": em.fingerprint(), "seed": seed})
    if method != "rwm":
        raise ConfigurationError(f"unknown sampler method {method!r}")
    rwm_cfg = RWMConfig(
        n_draws=int(config.sampler.get("n_draws", 20_000)),
        burn_in=int(config.sampler.get("burn_in", 2_000)),
        target_accept=float(config.sampler.get("target_accept", 0.234)),
        seed=seed,
    )
    return rwm_sample(em, prior, rwm_cfg, temperature=config.temperature)


@dataclass
class FitReport:
    """Quasi-Bayes and minimum-distance estimates with diagnostics."""

    n: int
    level: int
    basis: str
    qb: list
    mde: list
    bvm_mean: list
    bvm_covariance: list
    tau_hat: float
    posterior_form: str
    acceptance_rate: float | None
    diagnostics: dict

    def as_dict(self) -> dict:
        return dict(vars(self))

    def csv_rows(self) -> tuple[list[str], list[list]]:
        header = ["index", "qb", "mde", "bvm_sd"]
        sds = np.sqrt(np.diag(np.asarray(self.bvm_covariance)))
        return header, [[l, self.qb[l], self.mde[l], float(sds[l])] for l in range(len(self.qb))]


def run_fit(config: ExperimentConfig, data: Sample, seed: int | None = None) -> FitReport:
    """Full pipeline on one sample: moments, posterior, estimators, diagnostics."""
    master = config.seed if seed is None else seed
    level = _auto_level(config, data.n)
    basis = config.make_basis()
    em = empirical_moments(data, basis, level)
    prior = prior_from_config(config.prior, level)
    result = _fit_posterior(config, em, prior, derive_seed(master, 0))
    qb = quasi_bayes(result)
    point = mde(em)
    law = bvm_approx(em)
    return FitReport(
        n=data.n,
        level=level,
        basis=config.basis,
        qb=qb.coeffs.tolist(),
        mde=point.coeffs.tolist(),
        bvm_mean=law.mean.tolist(),
        bvm_covariance=law.covariance.tolist(),
        tau_hat=tau_hat(em),
        posterior_form=result.form,
        acceptance_rate=result.acceptance_rate,
        diagnostics={
            "ww_rank": em.ww_rank,
            "dim": em.dim,
            "seed": master,
            "prior": config.prior,
            "temperature": config.temperature,
        },
    )


def _study_grid(config: ExperimentConfig) -> tuple[list[int], int]:
    grid = config.study.get("n_grid")
    if not grid:
        raise ConfigurationError("study requires an 'n_grid' list")
    return [int(a) for a in grid], int(config.study.get("replications", 1))


def run_rate_study(config: ExperimentConfig) -> RateReport:
    """Convergence-rate study of the quasi-Bayes estimator on a synthetic design.

    For each grid n and replication: fresh sample, level rule, fit, exact L2
    error, and the posterior mass outside the theoretical contraction ball.
    The log-log slope of median error against n is fitted by least squares;
    the smallest n is dropped from the regression (and recorded) when its
    empirical ill-posedness margin fails in more than 20% of replications.
    """
    design = config.make_design()
    basis = config.make_basis()
    grid, reps = _study_grid(config)
    mult = float(config.study.get("contraction_multiplier", 5.0))
    report = RateReport()
    for i_n, n in enumerate(grid):
        level = _auto_level(config, n)
        prior = prior_from_config(config.prior, level)
        tau = true_tau(design, level)
        b0 = true_coeffs(design, level)
        radius = mult * (
            2.0 ** (-level * design.smoothness) + np.sqrt(2.0**level / n) / tau
        )
        errors = np.empty(reps)
        outside = np.empty(reps)
        margin_fail = np.empty(reps, dtype=bool)
        for rep in range(reps):
            s = sample(design, n, derive_seed(config.seed, i_n, rep))
            em = empirical_moments(s, basis, level)
            result = _fit_posterior(config, em, prior, derive_seed(config.seed, i_n, rep, 1))
            errors[rep] = l2_error(quasi_bayes(result), design)
            outside[rep] = contraction_mass(
                result, b0, radius, seed=derive_seed(config.seed, i_n, rep, 2)
            )
            margin_fail[rep] = tau_hat(em) < tau / 2.0
        q25, q50, q75 = np.percentile(errors, [25, 50, 75])
        report.points.append(RatePoint(
            n=n, level=level,
            median_error=float(q50), iqr_error=float(q75 - q25),
            median_outside_mass=float(np.median(outside)),
            tau_margin_flagged=bool(np.mean(margin_fail) > 0.2),
        ))
    kept = list(report.points)
    if len(kept) > 2 and kept[0].tau_margin_flagged:
        report.dropped_n.append(kept[0].n)
        kept = kept[1:]
    report.slope, report.slope_se = fit_loglog_slope(
        [p.n for p in kept], [p.median_error for p in kept]
    )
    if design.kind == "mild":
        report.theoretical_exponent = -design.smoothness / (
            2.0 * design.decay + 2.0 * design.smoothness + 1.0
        )
    return report


@dataclass
class BvMRow:
    n: int
    level: int
    metric: str
    median: float
    iqr: float
    median_tv_bound: float


@dataclass
class BvMReport:
    """Distance between the quasi-posterior and its normal approximation, per n."""

    rows: list[BvMRow] = field(default_factory=list)
    nonincreasing: bool = False

    def as_dict(self) -> dict:
        return {"rows": [vars(r) for r in self.rows], "nonincreasing": self.nonincreasing}

    def csv_rows(self) -> tuple[list[str], list[list]]:
        header = ["n", "level", "metric", "median", "iqr", "median_tv_bound"]
        return header, [[r.n, r.level, r.metric, r.median, r.iqr, r.median_tv_bound]
                        for r in self.rows]


def _max_marginal_ks(draws: np.ndarray, law) -> float:
    sds = law.marginal_sd()
    return max(
        float(stats.kstest(draws[:, l], "norm", args=(law.mean[l], sds[l])).statistic)
        for l in range(draws.shape[1])
    )


def run_bvm_study(config: ExperimentConfig) -> BvMReport:
    """Normal-approximation study across the n grid.

    Gaussian priors compare the exact conjugate posterior to the plug-in
    normal law by KL divergence (with the Pinsker total-variation bound);
    other priors compare MCMC draws to the normal marginals by the worst
    per-coordinate Kolmogorov-Smirnov statistic.
    """
    design = config.make_design()
    basis = config.make_basis()
    grid, reps = _study_grid(config)
    gaussian_route = prior_from_config(config.prior, 0).family == "gaussian_product"
    report = BvMReport()
    for i_n, n in enumerate(grid):
        level = _auto_level(config, n)
        prior = prior_from_config(config.prior, level)
        values = np.empty(reps)
        for rep in range(reps):
            s = sample(design, n, derive_seed(config.seed, i_n, rep))
            em = empirical_moments(s, basis, level)
            law = bvm_approx(em)
            if gaussian_route:
                post = conjugate_posterior(em, prior, temperature=config.temperature)
                values[rep] = gaussian_kl(post, law)
            else:
                result = _fit_posterior(config, em, prior, derive_seed(config.seed, i_n, rep, 1))
                values[rep] = _max_marginal_ks(result.draws, law)
        q25, q50, q75 = np.percentile(values, [25, 50, 75])
        report.rows.append(BvMRow(
            n=n, level=level,
            metric="gaussian_kl" if gaussian_route else "max_marginal_ks",
            median=float(q50), iqr=float(q75 - q25),
            median_tv_bound=pinsker_tv_bound(float(q50)) if gaussian_route else float(q50),
        ))
    medians = [r.median for r in report.rows]
    report.nonincreasing = all(b <= a * (1 + 1e-12) for a, b in zip(medians, medians[1:]))
    return report


def run_illposedness(config: ExperimentConfig) -> IllposednessReport:
    """Ill-posedness profile over the configured (n, J) grid."""
    design = config.make_design()
    grid, reps = _study_grid(config)
    levels = [int(j) for j in config.study.get("levels", [1, 2, 3, 4])]
    return illposedness_profile(
        design, grid, levels, reps, config.seed, basis=config.make_basis()
    )


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------

def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def save_report(report, out_dir, name: str) -> tuple[str, str]:
    """Write ``name.json`` and ``name.csv`` under ``out_dir``; returns the paths.

    JSON uses sorted keys and no trailing whitespace; CSV floats use the
    shortest round-trip representation.  Output is a pure function of the
    report contents.
    """
    os.makedirs(out_dir, exist_ok=True)
    json_path = os.path.join(out_dir, f"{name}.json")
    csv_path = os.path.join(out_dir, f"{name}.csv")
    payload = _sanitize(report.as_dict())
    with open(json_path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    header, rows = report.csv_rows()
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])
    return json_path, csv_path


def simulate_to_csv(config: ExperimentConfig, out_dir, seed: int | None = None) -> str:
    """Draw a sample from the configured design and write it as CSV."""
    design = config.make_design()
    n = config.n
    if n is None:
        raise ConfigurationError("simulate requires 'n' in the config")
    master = config.seed if seed is None else seed
    s = sample(design, int(n), derive_seed(master, 0))
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "sample.csv")
    save_csv(s, path)
    return path
