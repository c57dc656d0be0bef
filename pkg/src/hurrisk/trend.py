"""Sliding-window parameter time series and trend/variance/mean tests.

Windows are trailing: the record labeled with end year y covers the
window_years calendar years ending at y.  Each window refits the
time-constant GEV variant for its kind; realized location/scale series are
then reconstructed at historical covariate samples and screened with the
Mann-Kendall test.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from . import evt
from .errors import FitError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class WindowFit:
    end_year: int
    model: evt.NsGevModel
    n_events: int
    reliable: bool


@dataclass(frozen=True, slots=True)
class ParamSeries:
    window_end_years: np.ndarray
    values: np.ndarray
    label: str

    def __post_init__(self):
        if len(self.window_end_years) != len(self.values):
            raise ValueError("years and values must have equal length")


@dataclass(frozen=True, slots=True)
class MkResult:
    tau_b: float
    p_value: float
    trend: str  # increasing | decreasing | none
    s: int


def sliding_window_fit(
    events,
    kind: str,
    window_years: int = 40,
    step_years: int = 1,
    min_events: int = 15,
    rng: np.random.Generator | None = None,
    base_year: int = 1851,
) -> list[WindowFit]:
    """Fit the time-constant model on trailing windows over the event years.

    Windows with fewer than `min_events` events are flagged unreliable but
    still fitted (or, when a fit is impossible, carry the previous window's
    coefficients forward).
    """
    if window_years < 10:
        raise ValueError("window_years must be >= 10")
    rng = rng if rng is not None else np.random.default_rng(0)
    selected = [e for e in events if e.is_landfalling == (kind == "landfalling")]
    if not selected:
        logger.warning("no %s events; empty window series", kind)
        return []
    years = [e.year for e in selected]
    first, last = min(years), max(years)
    if last - first + 1 < window_years:
        logger.warning("event span shorter than one window; fitting a single window")
        ends = [last]
    else:
        ends = list(range(first + window_years - 1, last + 1, step_years))

    fits: list[WindowFit] = []
    prev_theta = None
    n_params = 5
    for end in ends:
        window = [e for e in selected if end - window_years + 1 <= e.year <= end]
        n = len(window)
        reliable = n >= min_events
        model = None
        if n >= n_params + 2:
            extra = [prev_theta] if prev_theta is not None else []
            try:
                model = evt.fit_events(
                    window,
                    kind,
                    rng=rng,
                    time_varying=False,
                    base_year=base_year,
                    restarts=0 if prev_theta is not None else 3,
                    extra_starts=extra,
                    xatol=1e-6,
                    fatol=1e-8,
                    compute_se=False,
                )
            except FitError as exc:
                logger.warning("window ending %d failed to fit: %s", end, exc)
        if model is None:
            if not fits:
                continue
            model = fits[-1].model
            reliable = False
        else:
            c = model.coefficients()
            if kind == "landfalling":
                prev_theta = np.array([c["mu0"], c["mu1"], c["mu2"], c["sigma0"], c["k0"]])
            else:
                prev_theta = np.array([c["mu0"], c["mu1"], c["sigma0"], c["sigma1"], c["k0"]])
        fits.append(WindowFit(end_year=end, model=model, n_events=n, reliable=reliable))
    if not any(f.reliable for f in fits):
        logger.warning("no window reached min_events=%d; all flagged unreliable", min_events)
    return fits


def realize_param_series(
    fits: Sequence[WindowFit],
    kind: str,
    which: str,
    T: int | None = None,
    phi: float | None = None,
) -> ParamSeries:
    """Reconstruct a realized location or scale series at one covariate sample.

    Landfalling location needs (T, phi); landfalling scale needs nothing;
    nonlandfalling location needs T; nonlandfalling scale needs phi.
    """
    if not fits:
        raise ValueError("empty window-fit series")
    if which not in ("location", "scale"):
        raise ValueError("which must be 'location' or 'scale'")
    years = np.array([f.end_year for f in fits])
    values = np.empty(len(fits))
    for i, f in enumerate(fits):
        c = f.model.coefficients()
        if which == "location":
            if T is None:
                raise ValueError("location series needs a sampled lifetime T")
            value = c["mu0"] + c["mu1"] * math.log(T)
            if kind == "landfalling":
                if phi is None:
                    raise ValueError("landfalling location series needs a sampled phi")
                value += c["mu2"] * phi
        else:
            value = c["sigma0"]
            if kind == "nonlandfalling":
                if phi is None:
                    raise ValueError("nonlandfalling scale series needs a sampled phi")
                value += c["sigma1"] * phi
        values[i] = value
    label = f"{kind}:{which}:T={T}:phi={phi}"
    return ParamSeries(window_end_years=years, values=values, label=label)


def all_param_series(fits: Sequence[WindowFit], events, kind: str) -> dict[str, list[ParamSeries]]:
    """Realize every location/scale series driven by the historical covariates.

    Landfalling: one location series per event's (T, phi) and a single scale
    series.  Nonlandfalling: one location series per T and one scale series
    per phi.
    """
    selected = [e for e in events if e.is_landfalling == (kind == "landfalling")]
    out: dict[str, list[ParamSeries]] = {"location": [], "scale": []}
    for e in selected:
        if kind == "landfalling":
            out["location"].append(
                realize_param_series(fits, kind, "location", T=e.T, phi=e.phi_pmin)
            )
        else:
            out["location"].append(realize_param_series(fits, kind, "location", T=e.T))
            out["scale"].append(realize_param_series(fits, kind, "scale", phi=e.phi_pmin))
    if kind == "landfalling":
        out["scale"].append(realize_param_series(fits, kind, "scale"))
    return out


# ---------------------------------------------------------------------------
# Mann-Kendall machinery

def _s_statistic(x: np.ndarray) -> int:
    diff = np.sign(x[None, :] - x[:, None])
    return int(np.sum(np.triu(diff, k=1)))


def kendall_tau_b(series) -> float:
    """Tie-corrected Kendall correlation of a series against time order."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 values")
    if np.ptp(x) == 0:
        raise ValueError("all values tied; tau-b undefined")
    s = _s_statistic(x)
    n0 = n * (n - 1) / 2
    _, counts = np.unique(x, return_counts=True)
    n1 = float(np.sum(counts * (counts - 1) / 2))
    return s / math.sqrt((n0 - n1) * n0)  # time index carries no ties


def _exact_s_pvalue(n: int, s_obs: int) -> float:
    """P(|S| >= |s_obs|) under the permutation null, via the inversion-count
    distribution (valid for untied values)."""
    # number of permutations of 1..n with m inversions: product of uniform polys
    counts = np.array([1.0])
    for j in range(2, n + 1):
        counts = np.convolve(counts, np.ones(j))
    total = counts.sum()
    n0 = n * (n - 1) // 2
    inv = np.arange(counts.size)
    s_values = n0 - 2 * inv
    return float(counts[np.abs(s_values) >= abs(s_obs)].sum() / total)


def mann_kendall_test(series, alpha: float = 0.05) -> MkResult:
    """Two-sided Mann-Kendall trend test.

    Uses the exact permutation distribution of S for short untied series
    (n <= 10); otherwise the tie-corrected normal approximation with
    continuity correction.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    if n < 4:
        raise ValueError("need at least 4 values")
    if np.ptp(x) == 0:
        raise ValueError("constant series; trend test undefined")
    s = _s_statistic(x)
    tau = kendall_tau_b(x)
    _, counts = np.unique(x, return_counts=True)
    has_ties = np.any(counts > 1)
    if n <= 10 and not has_ties:
        p = _exact_s_pvalue(n, s)
    else:
        var_s = (n * (n - 1) * (2 * n + 5) - np.sum(counts * (counts - 1) * (2 * counts + 5))) / 18.0
        if var_s <= 0:
            raise ValueError("degenerate tie structure")
        if s > 0:
            z = (s - 1) / math.sqrt(var_s)
        elif s < 0:
            z = (s + 1) / math.sqrt(var_s)
        else:
            z = 0.0
        p = float(2.0 * stats.norm.sf(abs(z)))
    if p < alpha:
        trend = "increasing" if s > 0 else "decreasing"
    else:
        trend = "none"
    return MkResult(tau_b=float(tau), p_value=min(p, 1.0), trend=trend, s=s)


# ---------------------------------------------------------------------------
# variance / mean change tests

def f_test_equal_variance(a, b) -> float:
    """Two-sided variance-ratio F test p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("need at least 2 values per sample")
    va = a.var(ddof=1)
    vb = b.var(ddof=1)
    if va == 0 or vb == 0:
        raise ValueError("zero variance sample")
    f = va / vb
    cdf = stats.f.cdf(f, a.size - 1, b.size - 1)
    return float(min(2.0 * min(cdf, 1.0 - cdf), 1.0))


def t_test_equal_means(a, b) -> float:
    """Two-sided Welch t-test p-value."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("need at least 2 values per sample")
    va = a.var(ddof=1) / a.size
    vb = b.var(ddof=1) / b.size
    if va + vb == 0:
        return 1.0
    t = (a.mean() - b.mean()) / math.sqrt(va + vb)
    dof = (va + vb) ** 2 / (va**2 / (a.size - 1) + vb**2 / (b.size - 1))
    return float(min(2.0 * stats.t.sf(abs(t), dof), 1.0))


def split_last_years(events, years: int = 40):
    """Split p_min values into (recent, earlier) halves at max_year - years + 1."""
    if not events:
        raise ValueError("no events to split")
    cutoff = max(e.year for e in events) - years + 1
    recent = np.array([e.p_min for e in events if e.year >= cutoff])
    earlier = np.array([e.p_min for e in events if e.year < cutoff])
    return recent, earlier
