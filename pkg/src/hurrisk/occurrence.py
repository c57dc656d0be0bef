"""Poisson occurrence modeling of yearly hurricane counts.

Yearly event counts feed two estimators: a trailing sliding-window rate
series lambda_hat = events/window (with Poisson standard errors), and an
exponential rate model lambda(t_yr) = a * exp(b * t_yr) fitted by Poisson
likelihood on the raw yearly counts.  One pooled model covers landfalling
and nonlandfalling events alike.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy import optimize

from .errors import FitError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class RateSeries:
    window_end_years: np.ndarray
    lambda_hat: np.ndarray
    se: np.ndarray
    zero_windows: np.ndarray  # bool flags for windows with no events

    def __post_init__(self):
        n = len(self.window_end_years)
        if not (len(self.lambda_hat) == len(self.se) == len(self.zero_windows) == n):
            raise ValueError("rate series arrays must have equal length")


@dataclass(frozen=True, slots=True)
class RateModel:
    a: float
    b: float
    ci_a: tuple[float, float]
    ci_b: tuple[float, float]
    se_log_a: float
    se_b: float
    loglik: float
    base_year: int = 1851

    def rate(self, t_yr) -> np.ndarray | float:
        return self.a * np.exp(self.b * np.asarray(t_yr, dtype=float))


def sliding_rate(counts: Mapping[int, int], window_years: int = 20) -> RateSeries:
    """Trailing-window Poisson MLE rate series over a contiguous count map."""
    if window_years < 2:
        raise ValueError("window_years must be >= 2")
    years = sorted(counts)
    if not years:
        raise ValueError("empty counts")
    if years != list(range(years[0], years[-1] + 1)):
        raise ValueError("counts must cover a contiguous year range")
    values = np.array([counts[y] for y in years], dtype=float)
    if len(years) < window_years:
        raise ValueError("span shorter than one window")
    csum = np.concatenate([[0.0], np.cumsum(values)])
    totals = csum[window_years:] - csum[:-window_years]
    end_years = np.array(years[window_years - 1 :])
    lam = totals / window_years
    se = np.sqrt(totals) / window_years
    zero = totals == 0
    if np.any(zero):
        logger.warning("%d windows contain no events; their rate is 0", int(zero.sum()))
    return RateSeries(window_end_years=end_years, lambda_hat=lam, se=se, zero_windows=zero)


def fit_exponential_rate(counts: Mapping[int, int], base_year: int = 1851) -> RateModel:
    """Poisson MLE of lambda(t_yr) = a*exp(b*t_yr) on raw yearly counts.

    Confidence intervals are 95% Wald intervals from the observed
    information, with `a` handled on the log scale.
    """
    years = sorted(counts)
    values = np.array([counts[y] for y in years], dtype=float)
    if np.count_nonzero(values) < 2:
        raise FitError("need nonzero counts in at least 2 years")
    t = np.array(years, dtype=float) - base_year

    def nll(theta):
        log_a, b = theta
        with np.errstate(over="ignore"):
            lam = np.exp(log_a + b * t)
        if not np.all(np.isfinite(lam)):
            return math.inf
        return float(np.sum(lam - values * (log_a + b * t)))

    b0 = 0.0
    with np.errstate(divide="ignore"):
        pos = values > 0
        if pos.sum() >= 2:
            slope, intercept = np.polyfit(t[pos], np.log(values[pos]), 1)
            b0, log_a0 = float(slope), float(intercept)
        else:
            log_a0 = math.log(values.mean() + 1e-9)
    res = optimize.minimize(
        nll,
        np.array([log_a0, b0]),
        method="Nelder-Mead",
        options=dict(xatol=1e-10, fatol=1e-12, maxiter=10000, maxfev=10000),
    )
    if not res.success:
        raise FitError(f"rate fit failed: {res.message}")
    log_a, b = res.x

    # observed information via central differences
    h = 1e-5 * np.maximum(np.abs(res.x), 1.0)
    hess = np.empty((2, 2))
    for i in range(2):
        ei = np.zeros(2)
        ei[i] = h[i]
        hess[i, i] = (nll(res.x + ei) - 2 * res.fun + nll(res.x - ei)) / h[i] ** 2
        for j in range(i + 1, 2):
            ej = np.zeros(2)
            ej[j] = h[j]
            hess[i, j] = hess[j, i] = (
                nll(res.x + ei + ej)
                - nll(res.x + ei - ej)
                - nll(res.x - ei + ej)
                + nll(res.x - ei - ej)
            ) / (4 * h[i] * h[j])
    try:
        cov = np.linalg.inv(hess)
        se_log_a, se_b = np.sqrt(np.maximum(np.diag(cov), 0.0))
    except np.linalg.LinAlgError:
        raise FitError("singular information matrix in rate fit") from None

    z = 1.959963984540054
    a = math.exp(log_a)
    return RateModel(
        a=a,
        b=float(b),
        ci_a=(math.exp(log_a - z * se_log_a), math.exp(log_a + z * se_log_a)),
        ci_b=(float(b - z * se_b), float(b + z * se_b)),
        se_log_a=float(se_log_a),
        se_b=float(se_b),
        loglik=-float(res.fun),
        base_year=base_year,
    )


def sample_event_count(t_yr: int, model: RateModel, rng: np.random.Generator) -> int:
    """Poisson draw of the yearly event count."""
    if t_yr < 0:
        raise ValueError("t_yr must be >= 0")
    return int(rng.poisson(model.rate(t_yr)))


def mean_rate_over(series: RateSeries, first_year: int, last_year: int) -> float:
    """Average of the sliding-window estimates labeled within [first, last]."""
    mask = (series.window_end_years >= first_year) & (series.window_end_years <= last_year)
    if not np.any(mask):
        raise ValueError("no windows labeled inside the requested span")
    return float(series.lambda_hat[mask].mean())


def model_to_text(model: RateModel) -> str:
    return (
        f"a = {model.a!r}\n"
        f"b = {model.b!r}\n"
        f"ci_a = {model.ci_a[0]!r} {model.ci_a[1]!r}\n"
        f"ci_b = {model.ci_b[0]!r} {model.ci_b[1]!r}\n"
        f"se_log_a = {model.se_log_a!r}\n"
        f"se_b = {model.se_b!r}\n"
        f"loglik = {model.loglik!r}\n"
        f"base_year = {model.base_year}\n"
    )


def model_from_text(text: str) -> RateModel:
    fields: dict[str, str] = {}
    for raw in text.splitlines():
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        key, _, value = raw.partition("=")
        fields[key.strip()] = value.strip()
    ci_a = tuple(float(v) for v in fields["ci_a"].split())
    ci_b = tuple(float(v) for v in fields["ci_b"].split())
    return RateModel(
        a=float(fields["a"]),
        b=float(fields["b"]),
        ci_a=ci_a,  # type: ignore[arg-type]
        ci_b=ci_b,  # type: ignore[arg-type]
        se_log_a=float(fields["se_log_a"]),
        se_b=float(fields["se_b"]),
        loglik=float(fields["loglik"]),
        base_year=int(fields["base_year"]),
    )
