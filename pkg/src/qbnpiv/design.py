"""Synthetic data-generating processes for the instrumented regression model.

Each design carries a joint density on the unit square,

    f(x, w) = 1 + sum_l rho_l * phi_{l+1}(x) * phi_{l+1}(w),

built on the cosine system, so that the conditional-expectation operator
``(Kg)(w) = int g(x) f(x, w) dx`` is diagonal with known eigenvalues:
``K phi_1 = phi_1`` and ``K phi_{l+1} = rho_l phi_{l+1}``.  Both marginals
are uniform, the structural function has known cosine coefficients, and the
regression error is conditionally mean-zero given the instrument while
remaining correlated with the regressor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .basis import SieveCoefficients
from .errors import ConfigurationError, DataFormatError, DomainError, ValidationError

__all__ = [
    "Design",
    "Sample",
    "AssumptionCheck",
    "AssumptionReport",
    "build_design",
    "density",
    "sample",
    "rejection_sample",
    "structural_function",
    "true_coeffs",
    "tail_norm_sq",
    "true_tau",
    "population_cross_gram",
    "validate_assumptions",
    "design_to_config",
    "design_from_config",
    "save_csv",
    "load_csv",
]

_POSITIVITY_BUDGET = 0.9  # bound on 2 * sum(rho); keeps the density >= 0.1


@dataclass(frozen=True)
class Design:
    """A diagonal-operator data-generating process.

    Fields
    ------
    kind : "mild" or "severe" (polynomial vs exponential spectrum decay).
    decay : the decay parameter (r for mild, c for severe).
    scale : multiplicative constant of the spectrum.
    smoothness : s, the declared decay of the structural coefficients.
    spectrum : operator eigenvalues rho_1 >= rho_2 >= ... > 0 on cosine
        modes 2, 3, ... (the constant mode has eigenvalue 1).
    coeffs0 : cosine coefficients of the structural function, length L + 1.
    rho_u : weight of the endogenous error component.
    sigma_e : scale of the exogenous Gaussian error component.
    error_modes : cosine mode indices entering the endogenous error.
    """

    kind: str
    decay: float
    scale: float
    smoothness: float
    spectrum: np.ndarray
    coeffs0: np.ndarray
    rho_u: float = 0.5
    sigma_e: float = 0.5
    error_modes: tuple[int, ...] = (1, 2)

    @property
    def n_modes(self) -> int:
        return int(self.spectrum.size)

    @property
    def density_bound(self) -> float:
        """Supremum of the joint density, attained at x = w = 0."""
        return 1.0 + 2.0 * float(np.sum(self.spectrum))


@dataclass
class Sample:
    """Observations (y, x, w) with x, w in [0, 1]."""

    y: np.ndarray
    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=float)
        self.x = np.asarray(self.x, dtype=float)
        self.w = np.asarray(self.w, dtype=float)
        if not (self.y.shape == self.x.shape == self.w.shape) or self.y.ndim != 1:
            raise ValidationError("y, x, w must be one-dimensional arrays of equal length")
        if self.y.size < 1:
            raise ValidationError("a sample needs at least one observation")
        if not (np.all(np.isfinite(self.y)) and np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.w))):
            raise ValidationError("sample values must be finite")
        if np.any(self.x < 0) or np.any(self.x > 1) or np.any(self.w < 0) or np.any(self.w > 1):
            raise DomainError("x and w must lie in [0, 1]")

    @property
    def n(self) -> int:
        return int(self.y.size)


def build_design(
    kind: str,
    *,
    s: float,
    L: int,
    scale: float,
    r: float | None = None,
    c: float | None = None,
    rho_u: float = 0.5,
    sigma_e: float = 0.5,
    error_modes: tuple[int, ...] = (1, 2),
) -> Design:
    """Construct a mild (rho_l = a l^-r) or severe (rho_l = a e^{-c l}) design.

    The structural coefficients are b0_1 = 1 and b0_{l+1} = l^{-(s+1/2)} for
    l = 1..L.  Raises ConfigurationError when the spectrum violates the
    density positivity budget ``2 * sum(rho) <= 0.9``.
    """
    if s <= 0.5:
        raise ConfigurationError(f"smoothness must exceed 1/2, got {s}")
    if L < 1:
        raise ConfigurationError("the spectrum needs at least one mode")
    if scale <= 0:
        raise ConfigurationError("scale must be positive")
    ls = np.arange(1, L + 1, dtype=float)
    if kind == "mild":
        if r is None or r <= 0:
            raise ConfigurationError("mild designs require r > 0")
        spectrum = scale * ls ** (-r)
        decay = float(r)
    elif kind == "severe":
        if c is None or c <= 0:
            raise ConfigurationError("severe designs require c > 0")
        spectrum = scale * np.exp(-c * ls)
        decay = float(c)
    else:
        raise ConfigurationError(f"unknown design kind {kind!r}; expected 'mild' or 'severe'")
    budget = 2.0 * float(np.sum(spectrum))
    if budget > _POSITIVITY_BUDGET:
        raise ConfigurationError(
            f"spectrum violates density positivity: 2*sum(rho) = {budget:.6f} > {_POSITIVITY_BUDGET}; "
            "reduce the scale or increase the decay"
        )
    if sigma_e < 0:
        raise ConfigurationError("sigma_e must be nonnegative")
    if error_modes and max(error_modes) > L:
        raise ConfigurationError("error_modes must reference modes within the spectrum")
    coeffs0 = np.concatenate(([1.0], ls ** (-(s + 0.5))))
    return Design(
        kind=kind,
        decay=decay,
        scale=float(scale),
        smoothness=float(s),
        spectrum=spectrum,
        coeffs0=coeffs0,
        rho_u=float(rho_u),
        sigma_e=float(sigma_e),
        error_modes=tuple(error_modes),
    )


def _cosine_modes(points: np.ndarray, n_modes: int) -> np.ndarray:
    """Matrix of phi_{l+1}(points) = sqrt(2) cos(pi l points), l = 1..n_modes."""
    ls = np.arange(1, n_modes + 1)
    return np.sqrt(2.0) * np.cos(np.pi * np.outer(points, ls))


def density(design: Design, x, w):
    """Joint density f(x, w); scalar in, scalar out."""
    scalar = np.isscalar(x) and np.isscalar(w)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = np.atleast_1d(np.asarray(w, dtype=float))
    if np.any(x < 0) or np.any(x > 1) or np.any(w < 0) or np.any(w > 1):
        raise DomainError("density is defined on the unit square")
    cx = _cosine_modes(x, design.n_modes)
    cw = _cosine_modes(w, design.n_modes)
    values = 1.0 + (cx * cw) @ design.spectrum
    return float(values[0]) if scalar else values


def structural_function(design: Design, x):
    """Evaluate the true structural function g0 at x."""
    scalar = np.isscalar(x)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    values = design.coeffs0[0] + _cosine_modes(x, design.n_modes) @ design.coeffs0[1:]
    return float(values[0]) if scalar else values


def rejection_sample(
    design: Design, n: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray, int, int]:
    """Draw n pairs (x, w) from the joint density by rejection from uniforms.

    Returns ``(x, w, n_proposals, n_accepted)`` where the counters cover the
    whole proposal stream (the last chunk may accept more than needed).
    Deterministic given the generator state.
    """
    bound = design.density_bound
    xs, ws = [], []
    accepted = 0
    proposals = 0
    while accepted < n:
        chunk = min(max(int(1.5 * bound * (n - accepted)), 1024), 1 << 16)
        x = rng.random(chunk)
        w = rng.random(chunk)
        u = rng.random(chunk)
        keep = u * bound <= density(design, x, w)
        proposals += chunk
        xs.append(x[keep])
        ws.append(w[keep])
        accepted += int(keep.sum())
    x = np.concatenate(xs)[:n]
    w = np.concatenate(ws)[:n]
    return x, w, proposals, accepted


def sample(design: Design, n: int, seed: int) -> Sample:
    """Draw an i.i.d. sample of size n; bit-reproducible for a fixed seed.

    The regression error is ``u = rho_u * sum_{l in S} (phi_{l+1}(x) -
    rho_l phi_{l+1}(w)) + sigma_e * eps`` with eps standard normal, which
    has conditional mean zero given w because ``E[phi_{l+1}(X) | W] =
    rho_l phi_{l+1}(W)`` under the diagonal construction.
    """
    if n < 1:
        raise ValidationError("sample size must be at least 1")
    rng = np.random.default_rng(seed)
    x, w, _ = rejection_sample(design, n, rng)
    eps = rng.standard_normal(n)
    u = design.sigma_e * eps
    if design.rho_u != 0.0 and design.error_modes:
        for l in design.error_modes:
            phix = np.sqrt(2.0) * np.cos(np.pi * l * x)
            phiw = np.sqrt(2.0) * np.cos(np.pi * l * w)
            u = u + design.rho_u * (phix - design.spectrum[l - 1] * phiw)
    y = structural_function(design, x) + u
    return Sample(y=y, x=x, w=w)


def true_coeffs(design: Design, level: int) -> SieveCoefficients:
    """First ``2**level`` structural coefficients (zero-padded past L + 1)."""
    dim = 2**level
    out = np.zeros(dim)
    m = min(dim, design.coeffs0.size)
    out[:m] = design.coeffs0[:m]
    return SieveCoefficients(level, out)


def tail_norm_sq(design: Design, level: int) -> float:
    """Squared L2 norm of the structural coefficients beyond index ``2**level``."""
    dim = 2**level
    if dim >= design.coeffs0.size:
        return 0.0
    return float(np.sum(design.coeffs0[dim:] ** 2))


def true_tau(design: Design, level: int) -> float:
    """Smallest singular value of the level-J cross-Gram matrix ``(<phi_l, K phi_m>)``.

    For the diagonal construction the matrix is diag(1, rho_1, ...,
    rho_{2^J - 1}); requires ``2**level <= L + 1``.
    """
    dim = 2**level
    if dim > design.n_modes + 1:
        raise ConfigurationError(
            f"spectrum exhausted: cross-Gram at level {level} needs {dim - 1} modes, "
            f"design has {design.n_modes}"
        )
    if dim == 1:
        return 1.0
    return float(min(1.0, np.min(design.spectrum[: dim - 1])))


def population_cross_gram(design: Design, level: int) -> np.ndarray:
    """Population matrix ``E[phi^J(W) phi^J(X)^T]`` = diag(1, rho_1, ...)."""
    dim = 2**level
    if dim > design.n_modes + 1:
        raise ConfigurationError("spectrum exhausted for the requested level")
    return np.diag(np.concatenate(([1.0], design.spectrum[: dim - 1])))


# ---------------------------------------------------------------------------
# assumption validation
# ---------------------------------------------------------------------------

@dataclass
class AssumptionCheck:
    name: str
    passed: bool
    detail: str


@dataclass
class AssumptionReport:
    checks: list[AssumptionCheck] = field(default_factory=list)

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def as_dict(self) -> dict:
        return {c.name: {"passed": c.passed, "detail": c.detail} for c in self.checks}


def _loglog_slope(xs: np.ndarray, ys: np.ndarray) -> float:
    lx, ly = np.log(xs), np.log(ys)
    return float(np.polyfit(lx, ly, 1)[0])


def validate_assumptions(design: Design, j_max: int) -> AssumptionReport:
    """Check the regularity conditions the estimation theory relies on.

    Density boundedness and positivity, uniform instrument marginal,
    injectivity on the truncated span, declared smoothness of the structural
    coefficients, and spectrum decay consistent with the declared kind.  The
    bias-stability condition holds with equality here because the basis
    diagonalizes the operator.
    """
    report = AssumptionReport()
    sum2rho = 2.0 * float(np.sum(design.spectrum))
    report.checks.append(AssumptionCheck(
        "density_bounds",
        0.0 < 1.0 - sum2rho and design.density_bound < 2.0,
        f"density in [{1.0 - sum2rho:.4f}, {design.density_bound:.4f}]",
    ))
    t, qw = np.polynomial.legendre.leggauss(256)
    xq = (t + 1.0) / 2.0
    wgrid = np.linspace(0.0, 1.0, 17)
    worst = max(
        abs(float(np.sum(qw / 2.0 * density(design, xq, np.full_like(xq, wv)))) - 1.0)
        for wv in wgrid
    )
    report.checks.append(AssumptionCheck(
        "instrument_marginal_uniform", worst < 1e-10,
        f"max |f_W(w) - 1| over grid = {worst:.2e}",
    ))
    positive = bool(np.all(design.spectrum > 0))
    report.checks.append(AssumptionCheck(
        "injectivity_on_span", positive,
        "all eigenvalues positive" if positive else "zero eigenvalue found: operator not injective on the span",
    ))
    ls = np.arange(1, design.n_modes + 1, dtype=float)
    slope_b = _loglog_slope(ls, np.abs(design.coeffs0[1:]))
    ok_b = abs(slope_b + design.smoothness + 0.5) < 0.05
    report.checks.append(AssumptionCheck(
        "coefficient_smoothness", ok_b,
        f"coefficient log-log slope {slope_b:.3f} vs declared {-(design.smoothness + 0.5):.3f}",
    ))
    dims = 2 ** np.arange(1, j_max + 1)
    dims = dims[dims <= design.n_modes + 1]
    taus = np.array([true_tau(design, j) for j in range(1, len(dims) + 1)])
    if design.kind == "mild":
        slope_t = _loglog_slope(dims - 1.0, taus)
        ok_t = abs(slope_t + design.decay) < 0.05 + 0.05 * design.decay
        detail = f"tau decay exponent {slope_t:.3f} vs declared -r = {-design.decay:.3f}"
    else:
        slope_t = float(np.polyfit(dims - 1.0, np.log(taus), 1)[0])
        ok_t = abs(slope_t + design.decay) < 0.05 + 0.05 * design.decay
        detail = f"log-tau slope in 2^J: {slope_t:.3f} vs declared -c = {-design.decay:.3f}"
    report.checks.append(AssumptionCheck("illposedness_decay", ok_t, detail))
    report.checks.append(AssumptionCheck(
        "bias_stability", True,
        "basis diagonalizes the operator: projection bias is orthogonal to the instrument span",
    ))
    return report


# ---------------------------------------------------------------------------
# serialization
# ---------------------------------------------------------------------------

def design_to_config(design: Design) -> dict:
    """JSON-ready dict with keys kind, r|c, scale, L, s, rho_U, sigma_e."""
    cfg = {
        "kind": design.kind,
        "scale": design.scale,
        "L": design.n_modes,
        "s": design.smoothness,
        "rho_U": design.rho_u,
        "sigma_e": design.sigma_e,
    }
    cfg["r" if design.kind == "mild" else "c"] = design.decay
    return cfg


def design_from_config(cfg: dict) -> Design:
    """Inverse of :func:`design_to_config`; ignores an optional "seed" key."""
    try:
        kind = cfg["kind"]
        return build_design(
            kind,
            s=float(cfg["s"]),
            L=int(cfg["L"]),
            scale=float(cfg["scale"]),
            r=float(cfg["r"]) if "r" in cfg else None,
            c=float(cfg["c"]) if "c" in cfg else None,
            rho_u=float(cfg.get("rho_U", 0.5)),
            sigma_e=float(cfg.get("sigma_e", 0.5)),
        )
    except KeyError as exc:
        raise ConfigurationError(f"design config missing key {exc}") from exc


def save_csv(s: Sample, path) -> None:
    """Write a sample as CSV with header ``y,x,w``; floats use shortest round-trip repr."""
    with open(path, "w") as fh:
        fh.write("y,x,w\n")
        for yi, xi, wi in zip(s.y, s.x, s.w):
            fh.write(f"{yi!r},{xi!r},{wi!r}\n")


def load_csv(path) -> Sample:
    """Read a ``y,x,w`` CSV, rejecting malformed or out-of-range rows by number."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        err = DataFormatError(f"{path}: empty file")
        err.code = "empty-file"
        raise err
    if lines[0].strip() != "y,x,w":
        err = DataFormatError(f"{path}: expected header 'y,x,w', got {lines[0]!r}")
        err.code = "bad-header"
        raise err
    ys, xs, ws, bad, oob = [], [], [], [], []
    for i, line in enumerate(lines[1:], start=1):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 3:
            bad.append(i)
            continue
        try:
            yi, xi, wi = (float(p) for p in parts)
        except ValueError:
            bad.append(i)
            continue
        if not (math.isfinite(yi) and math.isfinite(xi) and math.isfinite(wi)):
            bad.append(i)
            continue
        if not (0.0 <= xi <= 1.0 and 0.0 <= wi <= 1.0):
            oob.append(i)
            continue
        ys.append(yi)
        xs.append(xi)
        ws.append(wi)
    if bad:
        err = DataFormatError(f"{path}: malformed rows {bad}")
        err.code = "bad-row"
        raise err
    if oob:
        err = DataFormatError(f"{path}: x or w outside [0, 1] in rows {oob}")
        err.code = "out-of-range"
        raise err
    if not ys:
        err = DataFormatError(f"{path}: no data rows")
        err.code = "empty-file"
        raise err
    return Sample(y=np.array(ys), x=np.array(xs), w=np.array(ws))
