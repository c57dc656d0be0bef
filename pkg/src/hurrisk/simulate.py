"""Monte Carlo hurricane generator and coastal-region classification.

One simulated year draws an event count from the occurrence model, then for
each event: resample a historical track with per-step Gaussian noise,
resample and time-scale a nonlandfalling pressure profile, place the
pressure minimum (Bernoulli at-landfall rule with a historical-ratio
fallback), draw the minimum from the covariate-dependent GEV and the range
from the conditional-normal range model, relax the post-landfall pressure
toward ambient, draw a radius-to-maximum-winds quantile rank, and evaluate
the wind field along the track.  Steps whose storm center lies within the
coastal buffer contribute 6-hourly windspeed samples to their nearest
region's pool.

Landfalling status is inherited from the donor storm; the landfall step is
re-evaluated as the noisy track's first entry into the coastal buffer (a
landfalling donor whose noisy track never reaches the buffer is demoted to
nonlandfalling).

Trials own deterministically derived RNG substreams keyed (seed, trial), so
serial and parallel execution produce bit-identical pools.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import stats

from . import evt, occurrence, windfield
from .errors import DataError, SimulationError
from .seeding import substream

logger = logging.getLogger(__name__)

NMI_TO_DEG = 1.0 / 60.0

REGION_NAMES = (
    "S-Texas",
    "N-Texas",
    "W-Louisiana",
    "E-Louisiana",
    "Mississippi",
    "Alabama-Florida",
    "Florida",
    "Florida-Georgia",
    "South Carolina",
    "North Carolina",
    "Virginia",
    "Maryland-New Jersey",
    "Connecticut-Massachusetts-New Hampshire",
)

SPEED_BUCKET_EDGES = np.arange(10.0, 51.0)  # 1-degree latitude buckets


@dataclass(frozen=True, slots=True)
class SimulationConfig:
    seed: int
    start_year: int = 2020
    years: int = 20
    trials: int = 1000
    track_noise_nmi: float = 100.0
    landfall_min_prob: float | None = None  # estimated from data when None
    coastal_buffer_deg: float = 2.0
    range_floor_hpa: float = 2.0
    filling_alpha_coastal: float = 0.06
    filling_alpha_inland: float = 0.14
    base_year: int = 1851
    ratio_bins: int = 20
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1 or self.years < 1:
            raise ValueError("trials and years must be >= 1")
        if self.coastal_buffer_deg <= 0:
            raise ValueError("coastal buffer must be positive")


# ---------------------------------------------------------------------------
# coastal grid

@dataclass(frozen=True)
class CoastGrid:
    vertices: np.ndarray  # (n, 2) columns (lon, lat), ordered along the coast
    vertex_regions: tuple[str, ...]

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise DataError("coast grid needs at least two (lon, lat) vertices")
        if len(self.vertex_regions) != v.shape[0]:
            raise DataError("one region label per vertex required")
        runs = []
        for name in self.vertex_regions:
            if not runs or runs[-1] != name:
                runs.append(name)
        if len(runs) != len(set(runs)):
            raise DataError("regions must be contiguous along the polyline")
        if set(runs) != set(REGION_NAMES) or len(runs) != 13:
            missing = set(REGION_NAMES) - set(runs)
            raise DataError(f"coast grid must define exactly the 13 regions; missing {missing}")
        object.__setattr__(self, "vertices", v)

    @property
    def region_order(self) -> list[str]:
        order = []
        for name in self.vertex_regions:
            if not order or order[-1] != name:
                order.append(name)
        return order

    def segment_regions(self) -> list[str]:
        # a segment inherits the region of its first vertex
        return list(self.vertex_regions[:-1])

    def distance_to(self, points: np.ndarray):
        """Min distance (degrees) from each (lon, lat) point to the polyline.

        Returns (distances, nearest segment index).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        a = self.vertices[:-1]  # (s, 2)
        b = self.vertices[1:]
        ab = b - a
        denom = np.sum(ab**2, axis=1)  # (s,)
        ap = pts[:, None, :] - a[None, :, :]  # (m, s, 2)
        t = np.sum(ap * ab[None, :, :], axis=2) / denom[None, :]
        t = np.clip(t, 0.0, 1.0)
        closest = a[None, :, :] + t[:, :, None] * ab[None, :, :]
        d = np.hypot(pts[:, None, 0] - closest[:, :, 0], pts[:, None, 1] - closest[:, :, 1])
        seg = np.argmin(d, axis=1)
        return d[np.arange(d.shape[0]), seg], seg

    def crosses(self, p0: np.ndarray, p1: np.ndarray) -> bool:
        """Whether the segment p0->p1 (lon, lat) properly intersects the polyline."""
        a = self.vertices[:-1]
        b = self.vertices[1:]
        o1 = (a[:, 0] - p0[0]) * (p1[1] - p0[1]) - (a[:, 1] - p0[1]) * (p1[0] - p0[0])
        o2 = (b[:, 0] - p0[0]) * (p1[1] - p0[1]) - (b[:, 1] - p0[1]) * (p1[0] - p0[0])
        o3 = (p0[0] - a[:, 0]) * (b[:, 1] - a[:, 1]) - (p0[1] - a[:, 1]) * (b[:, 0] - a[:, 0])
        o4 = (p1[0] - a[:, 0]) * (b[:, 1] - a[:, 1]) - (p1[1] - a[:, 1]) * (b[:, 0] - a[:, 0])
        return bool(np.any((o1 * o2 < 0) & (o3 * o4 < 0)))

    @classmethod
    def from_csv_text(cls, text: str) -> "CoastGrid":
        vertices = []
        regions = []
        for line_no, raw in enumerate(text.splitlines(), start=1):
            raw = raw.strip()
            if not raw or raw.startswith("#") or raw.lower().startswith("lon"):
                continue
            parts = [p.strip() for p in raw.split(",")]
            if len(parts) != 3:
                raise DataError(f"coast grid line {line_no}: expected lon,lat,region")
            vertices.append((float(parts[0]), float(parts[1])))
            regions.append(parts[2])
        return cls(vertices=np.array(vertices), vertex_regions=tuple(regions))

    @classmethod
    def from_csv(cls, path: str | Path) -> "CoastGrid":
        return cls.from_csv_text(Path(path).read_text())


def bundled_coast_grid() -> CoastGrid:
    text = resources.files("hurrisk.data").joinpath("coast_grid.csv").read_text()
    return CoastGrid.from_csv_text(text)


def bundled_rmax_table() -> windfield.RmaxQuantileTable:
    text = resources.files("hurrisk.data").joinpath("rmax_quantiles.csv").read_text()
    return windfield.RmaxQuantileTable.from_csv_text(text)


# ---------------------------------------------------------------------------
# empirical inputs estimated from the historical record

@dataclass(frozen=True)
class RatioDensity:
    """Histogram of t_pmin/t_lf over landfalling storms whose minimum
    precedes landfall."""

    bin_edges: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=float)
        masses = np.asarray(self.masses, dtype=float)
        if edges.size != masses.size + 1:
            raise ValueError("need one more edge than mass")
        if not math.isclose(float(masses.sum()), 1.0, rel_tol=1e-9):
            raise ValueError("bin masses must sum to 1")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "masses", masses)

    def sample(self, rng: np.random.Generator) -> float:
        idx = rng.choice(self.masses.size, p=self.masses)
        return float(rng.uniform(self.bin_edges[idx], self.bin_edges[idx + 1]))


def estimate_ratio_density(events, bins: int = 20) -> RatioDensity:
    ratios = [
        e.t_pmin / e.t_lf
        for e in events
        if e.is_landfalling and e.t_lf and 0 < e.t_pmin < e.t_lf
    ]
    if not ratios:
        raise DataError("no landfalling events with the minimum before landfall")
    hist, edges = np.histogram(ratios, bins=bins, range=(0.0, 1.0))
    return RatioDensity(bin_edges=edges, masses=hist / hist.sum())


def estimate_landfall_min_prob(events) -> float:
    land = [e for e in events if e.is_landfalling and e.t_lf is not None]
    if not land:
        raise DataError("no landfalling events")
    return sum(1 for e in land if e.t_pmin == e.t_lf) / len(land)


@dataclass(frozen=True, slots=True)
class PressureRangeModel:
    """p_range | p_min ~ Normal(a + b*p_min, c), truncated below."""

    a: float
    b: float
    c: float
    se_a: float = 0.0
    se_b: float = 0.0
    se_c: float = 0.0

    def __post_init__(self):
        if not self.c >= 0:
            raise ValueError("c must be nonnegative")

    def mean(self, p_min: float) -> float:
        return self.a + self.b * p_min


DEFAULT_RANGE_LANDFALLING = PressureRangeModel(
    a=872.33, b=-0.87, c=11.77, se_a=25.48, se_b=0.03, se_c=0.32
)
DEFAULT_RANGE_NONLANDFALLING = PressureRangeModel(
    a=829.50, b=-0.82, c=7.47, se_a=19.77, se_b=0.02, se_c=0.19
)


# ---------------------------------------------------------------------------
# per-event samplers

def sample_track(tracks: Sequence[np.ndarray], cfg: SimulationConfig, rng: np.random.Generator) -> np.ndarray:
    """Uniformly choose a historical track and add i.i.d. per-step noise."""
    donor = tracks[int(rng.integers(len(tracks)))]
    return apply_track_noise(donor, cfg, rng)


def apply_track_noise(donor: np.ndarray, cfg: SimulationConfig, rng: np.random.Generator) -> np.ndarray:
    sigma = cfg.track_noise_nmi * NMI_TO_DEG
    return donor + rng.normal(0.0, sigma, size=donor.shape)


def sample_pressure_series(
    donors: Sequence[tuple[np.ndarray, np.ndarray]],
    T: int,
    rng: np.random.Generator,
    max_redraws: int = 20,
) -> np.ndarray:
    """Resample a nonlandfalling pressure profile to lifetime T.

    Donors are (normalized positions in [0, 1], pressures); profiles with
    fewer than two valid pressures are skipped and redrawn.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if not donors:
        raise SimulationError("no pressure donors available")
    for _ in range(max_redraws):
        pos, values = donors[int(rng.integers(len(donors)))]
        if values.size >= 2:
            grid = np.linspace(0.0, 1.0, T) if T > 1 else np.array([0.0])
            return np.interp(grid, pos, values)
    raise SimulationError("could not draw a usable pressure donor")


def place_pressure_minimum(
    T: int,
    is_landfalling: bool,
    t_lf: int | None,
    donor_argmin: int,
    min_at_landfall_prob: float,
    ratio: RatioDensity,
    rng: np.random.Generator,
) -> int:
    """Index of the pressure minimum for a simulated storm."""
    if not is_landfalling:
        return donor_argmin
    if t_lf is None:
        raise SimulationError("landfalling storm without a landfall step")
    if rng.uniform() < min_at_landfall_prob:
        return t_lf
    t = int(round(ratio.sample(rng) * t_lf))
    return min(max(t, 0), T - 1)


def shape_pressure_series(series, t_pmin: int, p_min: float, p_range: float) -> np.ndarray:
    """Shift the profile minimum to t_pmin and affinely map to the drawn
    minimum and range."""
    s = np.asarray(series, dtype=float)
    if s.size < 2:
        raise ValueError("series must have length >= 2")
    if p_range <= 0:
        raise ValueError("p_range must be positive")
    lo, hi = float(s.min()), float(s.max())
    if hi == lo:
        raise SimulationError("degenerate (constant) donor pressure profile")
    if not 0 <= t_pmin < s.size:
        raise ValueError("t_pmin outside the series")
    s = np.roll(s, t_pmin - int(np.argmin(s)))
    scale = p_range / (hi - lo)
    return p_min + (s - lo) * scale


def sample_pressure_range(
    p_min: float,
    model: PressureRangeModel,
    rng: np.random.Generator,
    floor: float = 2.0,
) -> float:
    """Truncated-normal draw of the profile range given the minimum."""
    if floor <= 0:
        raise ValueError("range floor must be positive")
    mean = model.mean(p_min)
    if model.c < 1e-12:
        return max(mean, floor)
    a = (floor - mean) / model.c
    return float(stats.truncnorm.rvs(a, np.inf, loc=mean, scale=model.c, random_state=rng))


def apply_landfall_filling(series, t_lf: int, alpha: float, ambient: float = 1013.0) -> np.ndarray:
    """Relax post-landfall pressure toward ambient at rate alpha per step."""
    s = np.asarray(series, dtype=float).copy()
    if not 0 <= t_lf < s.size:
        raise ValueError("t_lf outside the series")
    steps = np.arange(s.size - t_lf - 1, dtype=float) + 1.0
    s[t_lf + 1 :] = ambient - (ambient - s[t_lf]) * np.exp(-alpha * steps)
    return s


def coastal_classify(
    track_latlon: np.ndarray,
    windspeeds: np.ndarray,
    grid: CoastGrid,
    buffer_deg: float = 2.0,
) -> dict[str, float]:
    """Per-region maximum windspeed over steps within the coastal buffer."""
    pts = np.column_stack([track_latlon[:, 1], track_latlon[:, 0]])  # (lon, lat)
    dist, seg = grid.distance_to(pts)
    seg_regions = grid.segment_regions()
    hits: dict[str, float] = {}
    for i in np.flatnonzero(dist <= buffer_deg):
        region = seg_regions[seg[i]]
        v = float(windspeeds[i])
        if region not in hits or v > hits[region]:
            hits[region] = v
    return hits


# ---------------------------------------------------------------------------
# full recipe

@dataclass(frozen=True)
class SimulationModels:
    gev_landfalling: evt.NsGevModel
    gev_nonlandfalling: evt.NsGevModel
    rate: occurrence.RateModel
    range_landfalling: PressureRangeModel = DEFAULT_RANGE_LANDFALLING
    range_nonlandfalling: PressureRangeModel = DEFAULT_RANGE_NONLANDFALLING
    ratio: RatioDensity | None = None
    landfall_min_prob: float | None = None

    def perturbed(self, rng: np.random.Generator) -> "SimulationModels":
        """Independent normal draws around every coefficient with a standard error."""
        def perturb_range(m: PressureRangeModel) -> PressureRangeModel:
            c = m.c + (rng.normal(0.0, m.se_c) if m.se_c > 0 else 0.0)
            return PressureRangeModel(
                a=m.a + (rng.normal(0.0, m.se_a) if m.se_a > 0 else 0.0),
                b=m.b + (rng.normal(0.0, m.se_b) if m.se_b > 0 else 0.0),
                c=max(c, 1e-3),
                se_a=m.se_a,
                se_b=m.se_b,
                se_c=m.se_c,
            )

        rate = self.rate
        log_a = math.log(rate.a) + (rng.normal(0.0, rate.se_log_a) if rate.se_log_a > 0 else 0.0)
        b = rate.b + (rng.normal(0.0, rate.se_b) if rate.se_b > 0 else 0.0)
        return replace(
            self,
            gev_landfalling=evt.perturbed_model(self.gev_landfalling, rng),
            gev_nonlandfalling=evt.perturbed_model(self.gev_nonlandfalling, rng),
            rate=replace(rate, a=math.exp(log_a), b=b),
            range_landfalling=perturb_range(self.range_landfalling),
            range_nonlandfalling=perturb_range(self.range_nonlandfalling),
        )


@dataclass
class DonorSet:
    """Historical material the generator resamples from."""

    tracks: list[np.ndarray]  # (T, 2) columns (lat, lon)
    is_landfalling: np.ndarray  # bool per donor
    pressure_donors: list[tuple[np.ndarray, np.ndarray]]  # nonlandfalling profiles

    @classmethod
    def from_events(cls, events) -> "DonorSet":
        tracks = []
        kinds = []
        donors = []
        for e in events:
            tracks.append(np.array([[p.lat_deg, p.lon_deg] for p in e.track]))
            kinds.append(e.is_landfalling)
            if not e.is_landfalling:
                idx = [
                    i for i, p in enumerate(e.track) if p.central_pressure_hpa is not None
                ]
                if len(idx) >= 2:
                    pos = np.array(idx, dtype=float) / (e.T - 1 if e.T > 1 else 1)
                    vals = np.array(
                        [e.track[i].central_pressure_hpa for i in idx], dtype=float
                    )
                    donors.append((pos, vals))
        if not tracks:
            raise DataError("no historical tracks to resample")
        if not donors:
            raise DataError("no nonlandfalling pressure donors")
        return cls(
            tracks=tracks,
            is_landfalling=np.array(kinds, dtype=bool),
            pressure_donors=donors,
        )


@dataclass
class SimulationResult:
    pools: dict[str, dict[int, np.ndarray]] = field(default_factory=dict)
    events_by_year: dict[int, int] = field(default_factory=dict)
    speed_sums: np.ndarray = field(
        default_factory=lambda: np.zeros(SPEED_BUCKET_EDGES.size - 1)
    )
    speed_counts: np.ndarray = field(
        default_factory=lambda: np.zeros(SPEED_BUCKET_EDGES.size - 1)
    )
    landfall_lats: np.ndarray = field(default_factory=lambda: np.empty(0))
    floored_steps: int = 0
    skipped_events: int = 0
    simulated_events: int = 0

    def bucket_mean_speeds(self) -> tuple[np.ndarray, np.ndarray]:
        """(bucket center latitudes, mean translational speed) where populated."""
        mask = self.speed_counts > 0
        centers = (SPEED_BUCKET_EDGES[:-1] + SPEED_BUCKET_EDGES[1:]) / 2.0
        means = np.divide(self.speed_sums, self.speed_counts, where=mask)
        return centers[mask], means[mask]

    def region_year_pool(self, region: str) -> dict[int, np.ndarray]:
        return self.pools.get(region, {})


def _simulate_event(
    year: int,
    cfg: SimulationConfig,
    models: SimulationModels,
    donors: DonorSet,
    grid: CoastGrid,
    wind_cfg: windfield.WindfieldConfig,
    rmax_table: windfield.RmaxQuantileTable,
    rng: np.random.Generator,
):
    donor_idx = int(rng.integers(len(donors.tracks)))
    track = apply_track_noise(donors.tracks[donor_idx], cfg, rng)
    T = track.shape[0]

    dist, seg = grid.distance_to(np.column_stack([track[:, 1], track[:, 0]]))
    on_coast = dist <= cfg.coastal_buffer_deg
    is_landfalling = bool(donors.is_landfalling[donor_idx]) and bool(np.any(on_coast))
    t_lf = int(np.argmax(on_coast)) if is_landfalling else None

    profile = sample_pressure_series(donors.pressure_donors, T, rng)
    t_pmin = place_pressure_minimum(
        T,
        is_landfalling,
        t_lf,
        int(np.argmin(profile)),
        models.landfall_min_prob if models.landfall_min_prob is not None else 0.0,
        models.ratio,
        rng,
    )

    gev = models.gev_landfalling if is_landfalling else models.gev_nonlandfalling
    cov = evt.Covariates(
        T=T, phi_pmin=float(np.clip(track[t_pmin, 0], 0.0, 90.0)),
        t_yr=max(year - cfg.base_year, 0),
    )
    params = gev.realized(cov)  # raises if realized sigma <= 0
    p_min = -evt.sample_gev(params, rng)

    range_model = models.range_landfalling if is_landfalling else models.range_nonlandfalling
    p_range = sample_pressure_range(p_min, range_model, rng, cfg.range_floor_hpa)
    pressure = shape_pressure_series(profile, t_pmin, p_min, p_range)

    if is_landfalling and t_lf is not None and t_lf < T - 1:
        inland = any(
            grid.crosses(
                np.array([track[i, 1], track[i, 0]]),
                np.array([track[i + 1, 1], track[i + 1, 0]]),
            )
            for i in range(t_lf, T - 1)
        )
        alpha = cfg.filling_alpha_inland if inland else cfg.filling_alpha_coastal
        pressure = apply_landfall_filling(
            pressure, t_lf, alpha, wind_cfg.ambient_pressure
        )

    # one quantile rank per storm, evaluated at the position-dependent table rows
    rank = float(rng.uniform())
    r_max = rmax_table.values_along(track[:, 1], rank)
    speeds = windfield.translational_speeds(track, wind_cfg)
    lat = np.clip(track[:, 0], 0.0, 90.0)
    v_raw = windfield.max_windspeed_series(r_max, lat, pressure, speeds, wind_cfg, floor=False)
    floored = int(np.sum(v_raw < 0))
    v = np.maximum(v_raw, 0.0)

    return SimulatedHurricane(
        track=track,
        pressure=pressure,
        windspeed=v,
        is_landfalling=is_landfalling,
        t_lf=t_lf,
        t_pmin=t_pmin,
        p_min=p_min,
        on_coast=on_coast,
        coast_segment=seg,
        floored_steps=floored,
        translational=speeds,
    )


@dataclass
class SimulatedHurricane:
    track: np.ndarray
    pressure: np.ndarray
    windspeed: np.ndarray
    is_landfalling: bool
    t_lf: int | None
    t_pmin: int
    p_min: float
    on_coast: np.ndarray
    coast_segment: np.ndarray
    floored_steps: int
    translational: np.ndarray

    def region_hits(self, grid: CoastGrid) -> dict[str, float]:
        seg_regions = grid.segment_regions()
        hits: dict[str, float] = {}
        for i in np.flatnonzero(self.on_coast):
            region = seg_regions[self.coast_segment[i]]
            v = float(self.windspeed[i])
            if region not in hits or v > hits[region]:
                hits[region] = v
        return hits


def _run_trial(
    trial: int,
    cfg: SimulationConfig,
    models: SimulationModels,
    donors: DonorSet,
    grid: CoastGrid,
    wind_cfg: windfield.WindfieldConfig,
    rmax_table: windfield.RmaxQuantileTable,
) -> SimulationResult:
    rng = substream(cfg.seed, "simulate", trial)
    out = SimulationResult()
    pools: dict[str, dict[int, list]] = {}
    lf_lats: list[float] = []
    seg_regions = grid.segment_regions()
    for offset in range(cfg.years):
        year = cfg.start_year + offset
        t_yr = max(year - cfg.base_year, 0)
        n_events = occurrence.sample_event_count(t_yr, models.rate, rng)
        out.events_by_year[year] = out.events_by_year.get(year, 0) + n_events
        for _ in range(n_events):
            try:
                storm = _simulate_event(
                    year, cfg, models, donors, grid, wind_cfg, rmax_table, rng
                )
            except (SimulationError, ValueError) as exc:
                out.skipped_events += 1
                logger.debug("trial %d year %d: event skipped (%s)", trial, year, exc)
                continue
            out.simulated_events += 1
            out.floored_steps += storm.floored_steps
            lat = storm.track[:, 0]
            ok = (lat >= SPEED_BUCKET_EDGES[0]) & (lat < SPEED_BUCKET_EDGES[-1])
            if np.any(ok):
                idx = np.digitize(lat[ok], SPEED_BUCKET_EDGES) - 1
                np.add.at(out.speed_sums, idx, storm.translational[ok])
                np.add.at(out.speed_counts, idx, 1.0)
            if storm.is_landfalling and storm.t_lf is not None:
                lf_lats.append(float(storm.track[storm.t_lf, 0]))
            for i in np.flatnonzero(storm.on_coast):
                region = seg_regions[storm.coast_segment[i]]
                pools.setdefault(region, {}).setdefault(year, []).append(
                    float(storm.windspeed[i])
                )
    out.pools = {
        region: {year: np.array(vals) for year, vals in sorted(by_year.items())}
        for region, by_year in pools.items()
    }
    out.landfall_lats = np.array(lf_lats)
    return out


def _worker(args) -> tuple[int, SimulationResult]:
    trial, cfg, models, donors, grid, wind_cfg, table = args
    return trial, _run_trial(trial, cfg, models, donors, grid, wind_cfg, table)


def _merge(results: list[SimulationResult]) -> SimulationResult:
    merged = SimulationResult()
    pool_lists: dict[str, dict[int, list]] = {}
    lats = []
    for r in results:
        for region, by_year in r.pools.items():
            for year, vals in by_year.items():
                pool_lists.setdefault(region, {}).setdefault(year, []).append(vals)
        for year, n in r.events_by_year.items():
            merged.events_by_year[year] = merged.events_by_year.get(year, 0) + n
        merged.speed_sums += r.speed_sums
        merged.speed_counts += r.speed_counts
        merged.floored_steps += r.floored_steps
        merged.skipped_events += r.skipped_events
        merged.simulated_events += r.simulated_events
        lats.append(r.landfall_lats)
    merged.pools = {
        region: {
            year: np.concatenate(chunks) for year, chunks in sorted(by_year.items())
        }
        for region, by_year in pool_lists.items()
    }
    merged.landfall_lats = np.concatenate(lats) if lats else np.empty(0)
    return merged


def prepare_models(
    events,
    gev_landfalling: evt.NsGevModel,
    gev_nonlandfalling: evt.NsGevModel,
    rate: occurrence.RateModel,
    cfg: SimulationConfig,
) -> SimulationModels:
    """Fill the data-estimated pieces (ratio density, landfall-min probability)."""
    return SimulationModels(
        gev_landfalling=gev_landfalling,
        gev_nonlandfalling=gev_nonlandfalling,
        rate=rate,
        ratio=estimate_ratio_density(events, bins=cfg.ratio_bins),
        landfall_min_prob=(
            cfg.landfall_min_prob
            if cfg.landfall_min_prob is not None
            else estimate_landfall_min_prob(events)
        ),
    )


def simulate_years(
    cfg: SimulationConfig,
    models: SimulationModels,
    donors: DonorSet,
    grid: CoastGrid,
    wind_cfg: windfield.WindfieldConfig,
    rmax_table: windfield.RmaxQuantileTable,
) -> SimulationResult:
    """Run the full recipe for cfg.trials x cfg.years and pool on-coast samples.

    Event-level failures are skipped and logged; the run never aborts on a
    single storm.
    """
    if models.ratio is None or models.landfall_min_prob is None:
        raise SimulationError("models must carry a ratio density and landfall-min probability")
    if cfg.workers > 1:
        args = [
            (t, cfg, models, donors, grid, wind_cfg, rmax_table)
            for t in range(cfg.trials)
        ]
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            unordered = list(pool.map(_worker, args))
        results = [r for _, r in sorted(unordered, key=lambda pair: pair[0])]
    else:
        results = [
            _run_trial(t, cfg, models, donors, grid, wind_cfg, rmax_table)
            for t in range(cfg.trials)
        ]
    merged = _merge(results)
    if merged.skipped_events:
        logger.warning(
            "simulation skipped %d of %d events",
            merged.skipped_events,
            merged.skipped_events + merged.simulated_events,
        )
    return merged
