"""Synthetic HURDAT2-format snapshot generator.

The NOAA best-track file cannot be redistributed with the package and is
not always reachable, so the test suite and the examples run against a
bundled synthetic snapshot produced here.  Storm counts, lifetimes,
landfall behavior, pressure minima, and track kinematics are drawn from
published climatological models (the same parametric families the fitting
pipeline estimates), so a correct pipeline recovers the generating
coefficients from this file.  The bundled file is fixed by
``DEFAULT_SEED``; regenerate or rescale it with ``scripts/make_snapshot.py``.

Layout guarantees of the generated file:

* 642 storms reach the T >= 25 lifetime filter with valid pressure
  (300 landfalling, 342 nonlandfalling), years 1851-2019;
* short-lived storms, occasional missing pressures (denser before 1900),
  two long storms with no pressure at all, and off-synoptic landfall lines
  exercise every ingest path;
* landfalling storms carry exactly one ``L`` record at (or just before)
  the synoptic landfall step; nonlandfalling tracks never cross the coast
  polyline.
"""

from __future__ import annotations

import gzip
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from importlib import resources

import numpy as np

from . import evt, hurdat2, simulate
from .seeding import substream

DEFAULT_SEED = 20210523
BUNDLED_SNAPSHOT = "synthetic_hurdat2_1851_2019.txt.gz"

# coefficient sets used to synthesize the snapshot (and therefore the
# ground truth its fits should recover)
GEN_GEV_LANDFALLING = evt.NsGevModel(
    kind="landfalling",
    mu0=-1078.97, mu1=32.87, mu2=-0.52, sigma0=12.00, sigma1=0.083, k0=-0.13,
    se={"mu0": 14.48, "mu1": 3.60, "mu2": 0.16, "sigma0": 1.86, "sigma1": 0.02, "k0": 0.04},
)
GEN_GEV_NONLANDFALLING = evt.NsGevModel(
    kind="nonlandfalling",
    mu0=-1027.13, mu1=27.40, mu2=-9.20, sigma0=20.48, sigma1=-0.16, k0=-0.13,
    se={"mu0": 13.65, "mu1": 2.76, "mu2": 1.84, "sigma0": 2.04, "sigma1": 0.06, "k0": 0.04},
)

REGION_TARGET_WEIGHTS = {
    "S-Texas": 6, "N-Texas": 7, "W-Louisiana": 6, "E-Louisiana": 6,
    "Mississippi": 3, "Alabama-Florida": 7, "Florida": 25, "Florida-Georgia": 5,
    "South Carolina": 7, "North Carolina": 10, "Virginia": 5,
    "Maryland-New Jersey": 5, "Connecticut-Massachusetts-New Hampshire": 6,
}

_NAMES = (
    "ABLE", "BAKER", "CHARLIE", "DOG", "EASY", "FOX", "GEORGE", "HOW",
    "ITEM", "JIG", "KING", "LOVE", "MIKE", "NAN", "OBOE", "PETER",
)


@dataclass(frozen=True)
class SnapshotSpec:
    seed: int = DEFAULT_SEED
    # optional per-component seeds (default to `seed`); the storm layout
    # (yearly counts, kind assignment, filler storms) follows counts_seed
    counts_seed: int | None = None
    land_seed: int | None = None
    nonland_seed: int | None = None
    first_year: int = 1851
    last_year: int = 2019
    n_events: int = 642
    n_landfalling: int = 300
    rate_a: float = 1.00
    rate_b: float = 0.0135
    # Nonlandfalling lifetimes follow one law; the landfalling law gains a
    # growing long-tracked component in the modern era, which widens the
    # marginal pressure variance without touching conditional fits
    lifetime_mean_nonland: float = 11.0
    lifetime_cap_nonland: int = 60
    lifetime_mean_land_short: float = 7.0
    lifetime_long_base: int = 60
    lifetime_long_mean: float = 14.0
    lifetime_long_share_end: float = 0.5
    lifetime_long_onset_t: int = 125
    lifetime_cap: int = 85
    min_at_landfall_prob: float = 0.35
    ratio_beta: tuple[float, float] = (5.0, 1.8)
    speed_base: float = 4.2  # m/s at 10 deg latitude
    speed_linear: float = 0.10  # per degree
    speed_quad: float = 0.058  # per degree^2 above the knee
    speed_knee: float = 27.0
    speed_noise: float = 0.9
    track_jitter_deg: float = 0.12
    n_short_storms: int = 220
    n_pressureless: int = 2
    missing_pressure_before_1900: float = 0.35
    missing_pressure_after_1900: float = 0.03
    range_floor: float = 2.0
    range_landfalling: tuple[float, float, float] = (872.33, -0.87, 11.77)
    range_nonlandfalling: tuple[float, float, float] = (829.50, -0.82, 7.47)


DEG_PER_MS = 21600.0 / 111120.0  # m/s -> degrees per 6-h step


def _speed_ms(phi: float, spec: SnapshotSpec, rng: np.random.Generator) -> float:
    base = (
        spec.speed_base
        + spec.speed_linear * (phi - 10.0)
        + spec.speed_quad * max(0.0, phi - spec.speed_knee) ** 2
    )
    return float(np.clip(base + rng.normal(0.0, spec.speed_noise), 1.5, 26.0))


def _step_vector(bearing_deg: float, speed_ms: float) -> np.ndarray:
    # motion bearing clockwise from north; returns (dlat, dlon) in degrees
    rad = math.radians(bearing_deg)
    d = speed_ms * DEG_PER_MS
    return np.array([d * math.cos(rad), d * math.sin(rad)])


def _rotate_toward(bearing: float, target: float, rate: float) -> float:
    delta = (target - bearing + 180.0) % 360.0 - 180.0
    return bearing + np.clip(delta, -rate, rate)


def _coast_target(grid: simulate.CoastGrid, rng: np.random.Generator) -> tuple[np.ndarray, str]:
    regions = list(REGION_TARGET_WEIGHTS)
    weights = np.array([REGION_TARGET_WEIGHTS[r] for r in regions], dtype=float)
    region = regions[int(rng.choice(len(regions), p=weights / weights.sum()))]
    seg_regions = grid.segment_regions()
    seg_ids = [i for i, r in enumerate(seg_regions) if r == region]
    seg = seg_ids[int(rng.integers(len(seg_ids)))]
    t = rng.uniform()
    lonlat = grid.vertices[seg] + t * (grid.vertices[seg + 1] - grid.vertices[seg])
    return np.array([lonlat[1], lonlat[0]]), region  # (lat, lon)


def _incoming_bearing(lat: float, lon: float, rng: np.random.Generator) -> float:
    if lon < -82.0:  # Gulf coast: motion roughly northward
        return float(rng.normal(355.0, 18.0))
    if lat < 32.0:  # Florida / Georgia Atlantic side: from the southeast
        return float(rng.normal(320.0, 15.0))
    if lat < 36.0:  # Carolinas
        return float(rng.normal(340.0, 14.0))
    return float(rng.normal(358.0, 10.0))  # mid-Atlantic / New England


def _landfalling_track(
    spec: SnapshotSpec, grid: simulate.CoastGrid, T: int, rng: np.random.Generator
) -> tuple[np.ndarray, int] | None:
    target, _ = _coast_target(grid, rng)
    t_lf = int(round(T * rng.uniform(0.55, 0.88)))
    t_lf = min(max(t_lf, 6), T - 2)
    bearing_lf = _incoming_bearing(target[0], target[1], rng)

    pts = np.empty((T, 2))
    pts[t_lf] = target + 0.35 * _step_vector(bearing_lf, _speed_ms(target[0], spec, rng))
    bearing = bearing_lf
    for j in range(t_lf, 0, -1):
        u = _speed_ms(pts[j][0], spec, rng)
        back = pts[j] - _step_vector(bearing, u)
        back += rng.normal(0.0, spec.track_jitter_deg, size=2)
        pts[j - 1] = back
        # walking backward in time the motion relaxes to the trade-wind WNW drift
        rate = rng.uniform(2.0, 6.0)
        bearing = _rotate_toward(bearing, 285.0, rate) + rng.normal(0.0, 4.0)
    bearing = bearing_lf
    for j in range(t_lf, T - 1):
        u = _speed_ms(pts[j][0], spec, rng)
        bearing = _rotate_toward(bearing, 45.0, 2.0) + rng.normal(0.0, 4.0)
        pts[j + 1] = pts[j] + _step_vector(bearing, u) + rng.normal(0.0, spec.track_jitter_deg, size=2)
    pts[:, 0] = np.clip(pts[:, 0], 5.0, 55.0)
    pts[:, 1] = np.clip(pts[:, 1], -105.0, -15.0)

    # landfall must be the first polyline crossing
    for j in range(t_lf - 1):
        if grid.crosses(pts[j][::-1], pts[j + 1][::-1]):
            return None
    if not grid.crosses(pts[t_lf - 1][::-1], pts[t_lf][::-1]):
        return None
    return pts, t_lf


def _nonlandfalling_track(
    spec: SnapshotSpec, grid: simulate.CoastGrid, T: int, rng: np.random.Generator
) -> np.ndarray | None:
    lat = float(np.clip(rng.normal(13.5, 2.5), 8.0, 20.0))
    lon = float(rng.uniform(-50.0, -22.0))
    near_coast = rng.uniform() < 0.35
    barrier = rng.uniform(-74.5, -70.0) if near_coast else rng.uniform(-72.0, -45.0)
    pts = np.empty((T, 2))
    pts[0] = (lat, lon)
    bearing = float(rng.normal(285.0, 10.0))
    for j in range(T - 1):
        phi = pts[j][0]
        if phi < 20.0:
            target = 285.0
        elif phi < 27.0:
            target = 285.0 + (phi - 20.0) / 7.0 * 55.0
        elif phi < 33.0:
            target = 340.0 + (phi - 27.0) / 6.0 * 40.0
        else:
            target = 20.0 + min((phi - 33.0) / 6.0, 1.0) * 30.0
        if pts[j][1] < barrier + 3.0:
            target = 30.0  # force the recurve before the barrier
        bearing = _rotate_toward(bearing, target, rng.uniform(3.0, 8.0)) + rng.normal(0.0, 5.0)
        u = _speed_ms(phi, spec, rng)
        pts[j + 1] = pts[j] + _step_vector(bearing, u) + rng.normal(0.0, spec.track_jitter_deg, size=2)
    pts[:, 0] = np.clip(pts[:, 0], 5.0, 58.0)
    pts[:, 1] = np.clip(pts[:, 1], -105.0, -15.0)
    for j in range(T - 1):
        if grid.crosses(pts[j][::-1], pts[j + 1][::-1]):
            return None
    return pts


def _pressure_profile(
    T: int,
    t_pmin: int,
    p_min: float,
    p_range: float,
    t_lf: int | None,
    rng: np.random.Generator,
) -> np.ndarray:
    p_max = p_min + p_range
    t = np.arange(T, dtype=float)
    w_left = 0.38 * max(t_pmin, 1) + 2.0
    w_right = 0.30 * max(T - 1 - t_pmin, 1) + 2.0
    w = np.where(t <= t_pmin, w_left, w_right)
    profile = p_max - (p_max - p_min) * np.exp(-0.5 * ((t - t_pmin) / w) ** 2)
    profile += rng.normal(0.0, 1.2, size=T)
    if t_lf is not None and t_lf < T - 1:
        alpha = rng.uniform(0.06, 0.16)
        steps = np.arange(T - t_lf - 1, dtype=float) + 1.0
        anchor = profile[t_lf] if t_lf != t_pmin else p_min
        profile[t_lf + 1 :] = 1013.0 - (1013.0 - anchor) * np.exp(-alpha * steps)
    profile[t_pmin] = p_min
    before = slice(0, t_pmin)
    after = slice(t_pmin + 1, T)
    profile[before] = np.maximum(profile[before], p_min + 1.2)
    profile[after] = np.maximum(profile[after], p_min + 1.2)
    return np.minimum(profile, 1012.0)


def _wind_from_pressure(p: float, rng: np.random.Generator) -> int:
    v = 6.3 * max(1013.0 - p, 1.0) ** 0.644 + rng.normal(0.0, 4.0)
    return int(np.clip(5 * round(v / 5.0), 10, 165))


def _status(wind_kt: int, lat: float) -> str:
    if lat > 42.0:
        return "EX"
    if wind_kt >= 64:
        return "HU"
    if wind_kt >= 34:
        return "TS"
    return "TD"


def _draw_counts(spec: SnapshotSpec, rng: np.random.Generator) -> np.ndarray:
    n_years = spec.last_year - spec.first_year + 1
    t = np.arange(n_years)
    lam = spec.rate_a * np.exp(spec.rate_b * t)
    for _ in range(20000):
        counts = rng.poisson(lam)
        if counts.sum() == spec.n_events:
            return counts
    raise RuntimeError("could not hit the target event total; adjust rate_a/rate_b")


@dataclass
class _StormDraft:
    year: int
    start: datetime
    seq: int = 0
    landfalling: bool = False
    points: list[hurdat2.TrackPoint] = field(default_factory=list)


def _event_storm(
    year: int,
    landfalling: bool,
    spec: SnapshotSpec,
    grid: simulate.CoastGrid,
    rng: np.random.Generator,
) -> _StormDraft:
    t_idx = year - spec.first_year
    span = spec.last_year - spec.first_year
    if landfalling:
        ramp = max(t_idx - spec.lifetime_long_onset_t, 0) / max(
            span - spec.lifetime_long_onset_t, 1
        )
        if rng.uniform() < ramp * spec.lifetime_long_share_end:
            T = spec.lifetime_long_base + int(
                min(rng.exponential(spec.lifetime_long_mean), spec.lifetime_cap - spec.lifetime_long_base)
            )
        else:
            T = 25 + int(min(rng.exponential(spec.lifetime_mean_land_short), spec.lifetime_cap - 25))
    else:
        T = 25 + int(min(rng.exponential(spec.lifetime_mean_nonland), spec.lifetime_cap_nonland - 25))
    track = None
    t_lf = None
    while track is None:
        if landfalling:
            built = _landfalling_track(spec, grid, T, rng)
            if built is not None:
                track, t_lf = built
        else:
            track = _nonlandfalling_track(spec, grid, T, rng)
    track = np.round(track, 1)

    if landfalling:
        if rng.uniform() < spec.min_at_landfall_prob:
            t_pmin = t_lf
        else:
            ratio = rng.beta(*spec.ratio_beta)
            t_pmin = int(np.clip(round(ratio * t_lf), 1, t_lf))
    else:
        t_pmin = int(round(rng.uniform(0.35, 0.75) * (T - 1)))

    t_yr = year - spec.first_year
    cov = evt.Covariates(T=T, phi_pmin=float(track[t_pmin, 0]), t_yr=t_yr)
    gen = GEN_GEV_LANDFALLING if landfalling else GEN_GEV_NONLANDFALLING
    p_min = math.inf
    while not 856.0 < p_min < 1008.0:
        p_min = -evt.sample_gev(gen.realized(cov), rng)
    a, b, c = spec.range_landfalling if landfalling else spec.range_nonlandfalling
    p_range = -math.inf
    while p_range <= spec.range_floor:
        p_range = rng.normal(a + b * p_min, c)
    profile = _pressure_profile(T, t_pmin, p_min, p_range, t_lf, rng)
    profile = np.round(profile)

    missing_rate = (
        spec.missing_pressure_before_1900
        if year < 1900
        else spec.missing_pressure_after_1900
    )
    day_offset = int(np.clip(round(rng.normal(75, 30)), 0, 170))
    start = datetime(year, 6, 1) + timedelta(days=day_offset, hours=6 * int(rng.integers(4)))

    draft = _StormDraft(year=year, start=start, landfalling=landfalling)
    l_on_synoptic = rng.uniform() < 0.8
    for i in range(T):
        stamp = start + timedelta(hours=6 * i)
        pressure = float(profile[i])
        if i != t_pmin and rng.uniform() < missing_rate:
            p_out = None
        else:
            p_out = pressure
        wind = _wind_from_pressure(pressure, rng)
        record_id = "L" if (landfalling and l_on_synoptic and i == t_lf) else ""
        draft.points.append(
            hurdat2.TrackPoint(
                timestamp=stamp,
                record_id=record_id,
                status=_status(wind, float(track[i, 0])),
                lat_deg=float(track[i, 0]),
                lon_deg=float(track[i, 1]),
                max_wind_kt=float(wind),
                central_pressure_hpa=p_out,
            )
        )
        if landfalling and not l_on_synoptic and i == t_lf:
            # off-synoptic landfall line strictly nearer to step t_lf
            frac = rng.choice([4, 5]) / 6.0
            mid_stamp = start + timedelta(hours=6 * (i - 1) + round(6 * frac))
            mid = track[i - 1] + frac * (track[i] - track[i - 1])
            mid_p = float(max(round(profile[i - 1] + frac * (profile[i] - profile[i - 1])), p_min + 1))
            draft.points.insert(
                len(draft.points) - 1,
                hurdat2.TrackPoint(
                    timestamp=mid_stamp,
                    record_id="L",
                    status=_status(wind, float(mid[0])),
                    lat_deg=round(float(mid[0]), 1),
                    lon_deg=round(float(mid[1]), 1),
                    max_wind_kt=float(wind),
                    central_pressure_hpa=mid_p,
                ),
            )
    return draft


def _short_storm(year: int, spec: SnapshotSpec, rng: np.random.Generator, pressureless: bool = False) -> _StormDraft:
    T = int(rng.integers(28, 36)) if pressureless else int(rng.integers(4, 25))
    lat = float(rng.uniform(10.0, 33.0))
    lon = float(rng.uniform(-70.0, -30.0))
    bearing = float(rng.normal(300.0, 25.0))
    day_offset = int(np.clip(round(rng.normal(75, 35)), 0, 170))
    start = datetime(year, 6, 1) + timedelta(days=day_offset, hours=6 * int(rng.integers(4)))
    draft = _StormDraft(year=year, start=start)
    base_p = rng.uniform(995.0, 1007.0)
    for i in range(T):
        lat = float(np.clip(lat, 5.0, 50.0))
        lon = float(np.clip(lon, -98.0, -16.0))
        pressure = None
        if not pressureless and rng.uniform() > 0.3:
            pressure = float(round(base_p + rng.normal(0.0, 2.0)))
        wind = _wind_from_pressure(base_p, rng)
        draft.points.append(
            hurdat2.TrackPoint(
                timestamp=start + timedelta(hours=6 * i),
                record_id="",
                status=_status(wind, lat),
                lat_deg=round(lat, 1),
                lon_deg=round(lon, 1),
                max_wind_kt=float(wind),
                central_pressure_hpa=pressure,
            )
        )
        step = _step_vector(bearing, _speed_ms(lat, spec, rng))
        lat += step[0] + rng.normal(0.0, spec.track_jitter_deg)
        lon += step[1] + rng.normal(0.0, spec.track_jitter_deg)
        bearing = _rotate_toward(bearing, 330.0, 3.0) + rng.normal(0.0, 6.0)
    return draft


def make_snapshot(spec: SnapshotSpec = SnapshotSpec()) -> str:
    """Generate the full HURDAT2-format snapshot text.

    Each storm owns a derived RNG substream, so regenerating with one
    component's parameters changed leaves unrelated storms byte-identical.
    """
    grid = simulate.bundled_coast_grid()
    counts_seed = spec.counts_seed if spec.counts_seed is not None else spec.seed
    land_seed = spec.land_seed if spec.land_seed is not None else spec.seed
    nonland_seed = spec.nonland_seed if spec.nonland_seed is not None else spec.seed
    counts = _draw_counts(spec, substream(counts_seed, "counts"))
    years = []
    for offset, n in enumerate(counts):
        years.extend([spec.first_year + offset] * int(n))
    landfall_slots = set(
        substream(counts_seed, "kinds")
        .choice(spec.n_events, size=spec.n_landfalling, replace=False)
        .tolist()
    )

    drafts: list[_StormDraft] = []
    for slot, year in enumerate(years):
        landfalling = slot in landfall_slots
        rng = substream(land_seed if landfalling else nonland_seed, "event", slot)
        drafts.append(_event_storm(year, landfalling, spec, grid, rng))

    n_years = spec.last_year - spec.first_year + 1
    lam = spec.rate_a * np.exp(spec.rate_b * np.arange(n_years))
    year_probs = lam / lam.sum()
    for j in range(spec.n_short_storms):
        rng = substream(counts_seed, "short", j)
        year = spec.first_year + int(rng.choice(n_years, p=year_probs))
        drafts.append(_short_storm(year, spec, rng))
    for j in range(spec.n_pressureless):
        rng = substream(counts_seed, "pressureless", j)
        year = int(rng.integers(1855, 1885))
        drafts.append(_short_storm(year, spec, rng, pressureless=True))

    drafts.sort(key=lambda d: (d.year, d.start))
    name_rng = substream(counts_seed, "names")
    seq_by_year: dict[int, int] = {}
    storms = []
    for draft in drafts:
        seq_by_year[draft.year] = seq_by_year.get(draft.year, 0) + 1
        storm_id = f"AL{seq_by_year[draft.year]:02d}{draft.year}"
        name = _NAMES[int(name_rng.integers(len(_NAMES)))] if draft.year >= 1950 else "UNNAMED"
        storms.append(
            hurdat2.RawStorm(storm_id=storm_id, name=name, points=tuple(draft.points))
        )
    return hurdat2.format_hurdat2(storms)


def load_bundled_snapshot() -> str:
    """Decompress and return the committed snapshot text."""
    raw = resources.files("hurrisk.data").joinpath(BUNDLED_SNAPSHOT).read_bytes()
    return gzip.decompress(raw).decode("ascii")
