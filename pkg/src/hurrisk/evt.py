"""Generalized extreme value modeling, stationary and covariate-dependent.

The distribution convention throughout is

    G(x) = exp{ -[1 + k (x - mu) / sigma]^(-1/k) },    1 + k (x - mu)/sigma > 0,

with the Gumbel limit exp{-exp(-(x - mu)/sigma)} taken for |k| < 1e-6.
Negative central-pressure minima are the modeled variable; the
covariate-dependent location/scale structure differs between landfalling
and nonlandfalling events:

* landfalling:     mu = mu0 + mu1*log(T) + mu2*phi,   sigma = sigma0 + sigma1*t_yr
* nonlandfalling:  mu = mu0 + mu1*log(T) + mu2*log(t_yr),  sigma = sigma0 + sigma1*phi

with the shape k constant in both.  The time-constant baseline variants
drop the t_yr term (sigma1 = 0 landfalling, mu2 = 0 nonlandfalling) and
serve as likelihood-ratio nulls and as the per-window model for the trend
analysis.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from scipy import optimize, stats

from .errors import FitError

logger = logging.getLogger(__name__)

GUMBEL_SHAPE_EPS = 1e-6
KINDS = ("landfalling", "nonlandfalling")


@dataclass(frozen=True, slots=True)
class GevParams:
    mu: float
    sigma: float
    k: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")

    @property
    def asymptotic_normal(self) -> bool:
        return self.k > -0.5


@dataclass(frozen=True, slots=True)
class Covariates:
    """Per-event covariates: lifetime, latitude of the pressure minimum, year index."""

    T: int
    phi_pmin: float
    t_yr: int

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.t_yr < 0:
            raise ValueError("t_yr must be >= 0")

    @property
    def log_T(self) -> float:
        return math.log(self.T)

    @property
    def log_t_yr(self) -> float:
        # clamped so the first year of a record span stays usable
        return math.log(max(self.t_yr, 1))


def gumbel_cdf(z):
    return np.exp(-np.exp(-np.asarray(z, dtype=float)))


def gev_cdf(x, p: GevParams):
    """CDF of the GEV; outside the support returns the appropriate tail value."""
    x = np.asarray(x, dtype=float)
    z = (x - p.mu) / p.sigma
    if abs(p.k) < GUMBEL_SHAPE_EPS:
        return np.exp(-np.exp(-z))
    w = 1.0 + p.k * z
    out = np.where(w > 0, np.exp(-np.power(np.maximum(w, 1e-300), -1.0 / p.k)), 0.0)
    if p.k < 0:
        out = np.where(w > 0, out, 1.0)
    return out if out.ndim else float(out)


def gev_logpdf(x, p: GevParams):
    """Log density; -inf outside the support."""
    x = np.asarray(x, dtype=float)
    z = (x - p.mu) / p.sigma
    if abs(p.k) < GUMBEL_SHAPE_EPS:
        val = -math.log(p.sigma) - z - np.exp(-z)
        return val if val.ndim else float(val)
    w = 1.0 + p.k * z
    with np.errstate(divide="ignore", invalid="ignore"):
        logw = np.log(np.maximum(w, 1e-300))
        val = -math.log(p.sigma) - (1.0 + 1.0 / p.k) * logw - np.exp(-logw / p.k)
    val = np.where(w > 0, val, -np.inf)
    return val if val.ndim else float(val)


def gev_quantile(u, p: GevParams):
    """Inverse CDF; u in (0, 1)."""
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0) or np.any(u >= 1):
        raise ValueError("quantile level must lie strictly inside (0, 1)")
    if abs(p.k) < GUMBEL_SHAPE_EPS:
        val = p.mu - p.sigma * np.log(-np.log(u))
    else:
        val = p.mu + p.sigma * (np.power(-np.log(u), -p.k) - 1.0) / p.k
    return val if val.ndim else float(val)


def sample_gev(p: GevParams, rng: np.random.Generator, size=None):
    """Inverse-CDF sampling; deterministic under the generator's state."""
    u = rng.uniform(size=size)
    return gev_quantile(u, p)


def _nll_vector(data, mu, sigma, k) -> float:
    """Negative log likelihood with per-datum parameters; +inf on violations."""
    if np.any(sigma <= 0):
        return math.inf
    z = (data - mu) / sigma
    k = np.broadcast_to(np.asarray(k, dtype=float), z.shape)
    gumbel = np.abs(k) < GUMBEL_SHAPE_EPS
    total = 0.0
    if np.any(gumbel):
        zg = z[gumbel]
        total += float(np.sum(np.log(sigma[gumbel]) + zg + np.exp(-zg)))
    if np.any(~gumbel):
        zk = z[~gumbel]
        kk = k[~gumbel]
        w = 1.0 + kk * zk
        if np.any(w <= 0):
            return math.inf
        logw = np.log(w)
        total += float(
            np.sum(np.log(sigma[~gumbel]) + (1.0 + 1.0 / kk) * logw + np.exp(-logw / kk))
        )
    if not math.isfinite(total):
        return math.inf
    return total


def gev_neg_log_likelihood(data, params) -> float:
    """Sum of negative log densities; `params` is one GevParams or a sequence
    of per-datum GevParams."""
    data = np.asarray(data, dtype=float)
    if isinstance(params, GevParams):
        mu = np.full_like(data, params.mu)
        sigma = np.full_like(data, params.sigma)
        k = np.full_like(data, params.k)
    else:
        mu = np.array([p.mu for p in params], dtype=float)
        sigma = np.array([p.sigma for p in params], dtype=float)
        k = np.array([p.k for p in params], dtype=float)
    return _nll_vector(data, mu, sigma, k)


# ---------------------------------------------------------------------------
# probability-weighted-moment starting values

def pwm_gev_estimate(data) -> GevParams:
    """Probability-weighted-moment estimate, used to seed the optimizer."""
    x = np.sort(np.asarray(data, dtype=float))
    n = x.size
    if n < 3:
        raise FitError("need at least 3 points for a PWM estimate")
    i = np.arange(1, n + 1)
    b0 = x.mean()
    b1 = np.sum((i - 1) / (n - 1) * x) / n
    b2 = np.sum((i - 1) * (i - 2) / ((n - 1) * (n - 2)) * x) / n
    if 3 * b2 - b0 == 0:
        raise FitError("degenerate PWM moments")
    c = (2 * b1 - b0) / (3 * b2 - b0) - math.log(2) / math.log(3)
    kh = 7.8590 * c + 2.9554 * c * c  # Hosking's shape (opposite sign convention)
    if abs(kh) < 1e-8:
        sigma = (2 * b1 - b0) / math.log(2)
        mu = b0 - 0.5772156649 * sigma
        return GevParams(mu=mu, sigma=max(sigma, 1e-8), k=0.0)
    g = math.gamma(1 + kh)
    sigma = (2 * b1 - b0) * kh / (g * (1 - 2.0 ** (-kh)))
    mu = b0 + sigma * (g - 1) / kh
    return GevParams(mu=mu, sigma=max(sigma, 1e-8), k=-kh)


# ---------------------------------------------------------------------------
# generic regression-structured GEV fit

def _nelder_mead(
    nll: Callable[[np.ndarray], float],
    starts: Sequence[np.ndarray],
    xatol: float = 1e-8,
    fatol: float = 1e-10,
) -> tuple[np.ndarray, float, bool]:
    options = dict(maxiter=20000, maxfev=20000, xatol=xatol, fatol=fatol, adaptive=True)
    best_x = None
    best_f = math.inf
    any_success = False
    for x0 in starts:
        if not math.isfinite(nll(np.asarray(x0, dtype=float))):
            continue
        res = optimize.minimize(nll, x0, method="Nelder-Mead", options=options)
        if res.fun < best_f:
            best_f = res.fun
            best_x = res.x
            any_success = bool(res.success)
    if best_x is None:
        raise FitError("no feasible starting point for the GEV fit")
    # restarting the simplex from the winner guards against premature collapse
    res = optimize.minimize(nll, best_x, method="Nelder-Mead", options=options)
    if res.fun < best_f:
        best_x, best_f = res.x, res.fun
        any_success = any_success or bool(res.success)
    return np.asarray(best_x, dtype=float), float(best_f), bool(any_success)


def numerical_hessian(f: Callable[[np.ndarray], float], x: np.ndarray, step_scale: float = 1e-4):
    """Central-difference Hessian with per-coordinate step 1e-4 * max(|x_i|, 1)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    h = step_scale * np.maximum(np.abs(x), 1.0)
    hess = np.empty((n, n))
    f0 = f(x)
    for i in range(n):
        ei = np.zeros(n)
        ei[i] = h[i]
        hess[i, i] = (f(x + ei) - 2 * f0 + f(x - ei)) / (h[i] ** 2)
        for j in range(i + 1, n):
            ej = np.zeros(n)
            ej[j] = h[j]
            hess[i, j] = hess[j, i] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4 * h[i] * h[j])
    return hess


def _se_from_hessian(nll, theta) -> np.ndarray:
    try:
        hess = numerical_hessian(nll, theta)
        cov = np.linalg.inv(hess)
        diag = np.diag(cov)
        se = np.sqrt(np.where(diag > 0, diag, np.nan))
    except np.linalg.LinAlgError:
        se = np.full(theta.size, np.nan)
    if np.any(~np.isfinite(se)):
        logger.warning("information matrix not positive definite; some se are NaN")
    return se


def _fit_design(
    data: np.ndarray,
    mu_X: np.ndarray,
    sigma_X: np.ndarray,
    rng: np.random.Generator,
    restarts: int = 5,
    extra_starts: Sequence[np.ndarray] = (),
    xatol: float = 1e-8,
    fatol: float = 1e-10,
    compute_se: bool = True,
):
    """MLE for a GEV whose mu and sigma are linear in the given designs.

    Parameter vector layout: [mu coefficients..., sigma coefficients..., k].
    Returns (theta, se, loglik, converged).
    """
    p_mu = mu_X.shape[1]
    p_sigma = sigma_X.shape[1]

    def nll(theta: np.ndarray) -> float:
        mu = mu_X @ theta[:p_mu]
        sigma = sigma_X @ theta[p_mu : p_mu + p_sigma]
        return _nll_vector(data, mu, sigma, theta[-1])

    base = pwm_gev_estimate(data)
    theta0 = np.zeros(p_mu + p_sigma + 1)
    theta0[0] = base.mu
    theta0[p_mu] = base.sigma
    theta0[-1] = base.k

    # a least-squares start helps the location slopes travel
    beta, *_ = np.linalg.lstsq(mu_X, data, rcond=None)
    resid = data - mu_X @ beta
    theta_ols = theta0.copy()
    theta_ols[:p_mu] = beta
    theta_ols[p_mu] = max(np.std(resid) * 0.78, 1e-3)  # Gumbel sd ~ 1.283 sigma

    starts = [*extra_starts, theta_ols, theta0]
    scale = np.maximum(np.abs(theta0), [max(abs(base.mu) * 0.1, 1.0)] * p_mu
                       + [max(base.sigma * 0.5, 0.5)] * p_sigma + [0.1])
    for _ in range(restarts):
        starts.append(theta_ols + rng.normal(size=theta0.size) * 0.2 * scale)

    theta, fval, converged = _nelder_mead(nll, starts, xatol=xatol, fatol=fatol)
    if not converged:
        raise FitError("GEV optimizer failed to converge after restarts")
    se = _se_from_hessian(nll, theta) if compute_se else np.full(theta.size, math.nan)
    if theta[-1] <= -0.5:
        logger.warning("fitted shape k=%.3f <= -0.5; asymptotic normality unavailable", theta[-1])
    return theta, se, -fval, converged


# ---------------------------------------------------------------------------
# stationary fit

@dataclass(frozen=True, slots=True)
class StationaryGevFit:
    params: GevParams
    se: GevParams
    loglik: float
    converged: bool


def fit_stationary_gev(
    data, rng: np.random.Generator | None = None, min_points: int = 10
) -> StationaryGevFit:
    """Three-parameter MLE with information-matrix standard errors."""
    data = np.asarray(data, dtype=float)
    if data.size < min_points:
        raise FitError(f"need at least {min_points} points, got {data.size}")
    if np.ptp(data) == 0:
        raise FitError("degenerate data: all values equal")
    rng = rng if rng is not None else np.random.default_rng(0)
    ones = np.ones((data.size, 1))
    theta, se, loglik, converged = _fit_design(data, ones, ones, rng)
    se_params = GevParams.__new__(GevParams)  # bypass sigma>0 check for the se record
    object.__setattr__(se_params, "mu", float(se[0]))
    object.__setattr__(se_params, "sigma", float(se[1]))
    object.__setattr__(se_params, "k", float(se[2]))
    return StationaryGevFit(
        params=GevParams(mu=float(theta[0]), sigma=float(theta[1]), k=float(theta[2])),
        se=se_params,
        loglik=loglik,
        converged=converged,
    )


# ---------------------------------------------------------------------------
# covariate-dependent model

_COEF_NAMES = ("mu0", "mu1", "mu2", "sigma0", "sigma1", "k0")


@dataclass(frozen=True, slots=True)
class NsGevModel:
    """Six-coefficient GEV regression (time-constant variants store a zero
    with NaN standard error in the frozen slot)."""

    kind: str
    mu0: float
    mu1: float
    mu2: float
    sigma0: float
    sigma1: float
    k0: float
    se: dict = field(default_factory=dict)
    loglik: float = math.nan
    converged: bool = True
    time_varying: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}")

    def coefficients(self) -> dict:
        return {name: getattr(self, name) for name in _COEF_NAMES}

    def realized(self, cov: Covariates) -> GevParams:
        mu, sigma = self.realized_arrays([cov])
        return GevParams(mu=float(mu[0]), sigma=float(sigma[0]), k=self.k0)

    def realized_arrays(self, covs: Sequence[Covariates]):
        mu_X, sigma_X = design_matrices(self.kind, covs)
        mu = mu_X @ np.array([self.mu0, self.mu1, self.mu2])
        sigma = sigma_X @ np.array([self.sigma0, self.sigma1])
        return mu, sigma


def design_matrices(kind: str, covs: Sequence[Covariates]):
    """Full (mu, sigma) design matrices: 3 location and 2 scale columns."""
    if kind == "landfalling":
        mu_X = np.array([[1.0, c.log_T, c.phi_pmin] for c in covs])
        sigma_X = np.array([[1.0, float(c.t_yr)] for c in covs])
    elif kind == "nonlandfalling":
        mu_X = np.array([[1.0, c.log_T, c.log_t_yr] for c in covs])
        sigma_X = np.array([[1.0, c.phi_pmin] for c in covs])
    else:
        raise ValueError(f"unknown kind {kind!r}")
    return mu_X, sigma_X


def _time_column(kind: str) -> tuple[str, int]:
    """Which design column carries the yearly-index dependence."""
    return ("sigma", 1) if kind == "landfalling" else ("mu", 2)


def fit_nonstationary_gev(
    data,
    covs: Sequence[Covariates],
    kind: str,
    rng: np.random.Generator | None = None,
    time_varying: bool = True,
    restarts: int = 5,
    extra_starts: Sequence[np.ndarray] = (),
    xatol: float = 1e-8,
    fatol: float = 1e-10,
    compute_se: bool = True,
) -> NsGevModel:
    """MLE of the covariate-dependent GEV for negative pressure minima.

    With ``time_varying=False`` the yearly-index coefficient is dropped,
    giving the time-constant baseline (the likelihood-ratio null and the
    sliding-window model).  The realized scale is positive at every training
    covariate by construction: violations carry infinite likelihood.
    """
    data = np.asarray(data, dtype=float)
    if data.size != len(covs):
        raise ValueError("data and covariates must have equal length")
    if data.size < 10:
        raise FitError(f"need at least 10 events, got {data.size}")
    rng = rng if rng is not None else np.random.default_rng(0)
    mu_X, sigma_X = design_matrices(kind, covs)
    block, col = _time_column(kind)
    if not time_varying:
        if block == "sigma":
            sigma_X = sigma_X[:, :col]
        else:
            mu_X = np.delete(mu_X, col, axis=1)

    theta, se, loglik, converged = _fit_design(
        data,
        mu_X,
        sigma_X,
        rng,
        restarts=restarts,
        extra_starts=extra_starts,
        xatol=xatol,
        fatol=fatol,
        compute_se=compute_se,
    )

    p_mu = mu_X.shape[1]
    mu_c = list(theta[:p_mu])
    sigma_c = list(theta[p_mu:-1])
    mu_se = list(se[:p_mu])
    sigma_se = list(se[p_mu:-1])
    if not time_varying:
        if block == "sigma":
            sigma_c.append(0.0)
            sigma_se.append(math.nan)
        else:
            mu_c.insert(col, 0.0)
            mu_se.insert(col, math.nan)
    values = mu_c + sigma_c + [float(theta[-1])]
    ses = mu_se + sigma_se + [float(se[-1])]
    return NsGevModel(
        kind=kind,
        **dict(zip(_COEF_NAMES, (float(v) for v in values))),
        se=dict(zip(_COEF_NAMES, (float(s) for s in ses))),
        loglik=loglik,
        converged=converged,
        time_varying=time_varying,
    )


def fit_events(
    events,
    kind: str,
    rng: np.random.Generator | None = None,
    time_varying: bool = True,
    base_year: int = 1851,
    **kwargs,
) -> NsGevModel:
    """Convenience wrapper taking HurricaneEvent records directly."""
    data = np.array([e.neg_pmin for e in events])
    covs = [event_covariates(e, base_year) for e in events]
    return fit_nonstationary_gev(data, covs, kind, rng, time_varying, **kwargs)


def event_covariates(event, base_year: int = 1851) -> Covariates:
    return Covariates(T=event.T, phi_pmin=event.phi_pmin, t_yr=max(event.year - base_year, 0))


# ---------------------------------------------------------------------------
# likelihood ratio test

@dataclass(frozen=True, slots=True)
class LrtResult:
    statistic: float
    dof: int
    threshold: float
    significant: bool
    p_value: float


def likelihood_ratio_test(
    null_loglik: float, alt_loglik: float, dof: int = 1, alpha: float = 0.05
) -> LrtResult:
    """Chi-square LRT for nested models; statistic 2*(alt - null)."""
    if dof < 1:
        raise ValueError("dof must be >= 1")
    slack = 1e-6 * max(1.0, abs(null_loglik))
    if alt_loglik < null_loglik - slack:
        raise ValueError(
            f"alternative log-likelihood {alt_loglik} below null {null_loglik}: "
            "model nesting violated"
        )
    statistic = max(2.0 * (alt_loglik - null_loglik), 0.0)
    threshold = float(stats.chi2.ppf(1 - alpha, dof))
    return LrtResult(
        statistic=statistic,
        dof=dof,
        threshold=threshold,
        significant=statistic > threshold,
        p_value=float(stats.chi2.sf(statistic, dof)),
    )


# ---------------------------------------------------------------------------
# standardization (probability-integral transform to standard Gumbel)

def standardize(neg_pmin: float, cov: Covariates, model: NsGevModel) -> float:
    """Map an observation to its standard-Gumbel scale under the model."""
    p = model.realized(cov)
    z = (neg_pmin - p.mu) / p.sigma
    if abs(p.k) < GUMBEL_SHAPE_EPS:
        return float(z)
    w = 1.0 + p.k * z
    if w <= 0:
        raise ValueError(
            f"observation {neg_pmin} outside the support of the realized GEV"
        )
    return float(math.log(w) / p.k)


def inverse_standardize(z: float, cov: Covariates, model: NsGevModel) -> float:
    p = model.realized(cov)
    if abs(p.k) < GUMBEL_SHAPE_EPS:
        return float(p.mu + p.sigma * z)
    return float(p.mu + p.sigma * (math.exp(p.k * z) - 1.0) / p.k)


# ---------------------------------------------------------------------------
# structured-text serialization

def model_to_text(model: NsGevModel) -> str:
    lines = [f"kind = {model.kind}"]
    for name in _COEF_NAMES:
        lines.append(f"{name} = {getattr(model, name)!r}")
    for name in _COEF_NAMES:
        lines.append(f"se.{name} = {model.se.get(name, math.nan)!r}")
    lines.append(f"loglik = {model.loglik!r}")
    lines.append(f"convergence = {'converged' if model.converged else 'failed'}")
    lines.append(f"time_varying = {model.time_varying}")
    return "\n".join(lines) + "\n"


def model_from_text(text: str) -> NsGevModel:
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        key, _, value = raw.partition("=")
        fields[key.strip()] = value.strip()
    try:
        return NsGevModel(
            kind=fields["kind"],
            **{name: float(fields[name]) for name in _COEF_NAMES},
            se={name: float(fields[f"se.{name}"]) for name in _COEF_NAMES},
            loglik=float(fields["loglik"]),
            converged=fields["convergence"] == "converged",
            time_varying=fields.get("time_varying", "True") == "True",
        )
    except KeyError as exc:
        raise ValueError(f"model document missing field {exc}") from None


def perturbed_model(model: NsGevModel, rng: np.random.Generator) -> NsGevModel:
    """Draw each coefficient from N(estimate, se); NaN se leaves it fixed."""
    updates = {}
    for name in _COEF_NAMES:
        s = model.se.get(name, math.nan)
        value = getattr(model, name)
        if math.isfinite(s) and s > 0:
            value = float(rng.normal(value, s))
        updates[name] = value
    return replace(model, **updates)
