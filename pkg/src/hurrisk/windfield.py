"""Scalar wind field model and its physical inputs.

Maximum windspeed at a track step is

    V = 0.865 * (K * sqrt(dp) - R_max * f / 2) + 0.5 * u,   floored at 0,

with dp = deficit_factor * (ambient - p) the pressure deficit in hPa,
f = omega * sin(phi) the Coriolis parameter, R_max the radius to maximum
winds in meters (sampled from a coastal-position-indexed quantile table),
and u the translational speed in m/s.  K has no universally agreed value
and must be supplied by configuration.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataError

logger = logging.getLogger(__name__)

SECONDS_PER_STEP = 21600.0  # 6-hourly cadence


@dataclass(frozen=True, slots=True)
class WindfieldConfig:
    K: float  # m / (s hPa^(1/2)); required, no defensible default
    omega: float = 7.2982e-4  # s^-1
    ambient_pressure: float = 1013.0  # hPa
    deficit_factor: float = 0.75
    degree_to_meter: float = 111120.0
    great_circle: bool = False

    def __post_init__(self):
        for name in ("K", "omega", "ambient_pressure", "deficit_factor", "degree_to_meter"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"windfield.{name} must be positive")


def coriolis(phi_deg: float, cfg: WindfieldConfig) -> float:
    """f = omega * sin(phi)."""
    if not 0.0 <= phi_deg <= 90.0:
        raise ValueError("latitude must lie in [0, 90]")
    return cfg.omega * math.sin(math.radians(phi_deg))


def pressure_deficit(p_hpa: float, cfg: WindfieldConfig) -> float:
    """deficit_factor * (ambient - p), clamped at 0 for super-ambient pressure."""
    if p_hpa > cfg.ambient_pressure:
        logger.warning(
            "pressure %.1f above ambient %.1f; deficit clamped to 0", p_hpa, cfg.ambient_pressure
        )
        return 0.0
    return cfg.deficit_factor * (cfg.ambient_pressure - p_hpa)


def _step_distance_deg(lat0, lon0, lat1, lon1, cfg: WindfieldConfig) -> float:
    if cfg.great_circle:
        rlat0, rlon0, rlat1, rlon1 = map(math.radians, (lat0, lon0, lat1, lon1))
        h = (
            math.sin((rlat1 - rlat0) / 2) ** 2
            + math.cos(rlat0) * math.cos(rlat1) * math.sin((rlon1 - rlon0) / 2) ** 2
        )
        return math.degrees(2 * math.asin(min(1.0, math.sqrt(h))))
    return math.hypot(lat1 - lat0, lon1 - lon0)


def translational_velocity(track, t: int, cfg: WindfieldConfig) -> float:
    """Speed (m/s) between steps t-1 and t of a (lat, lon) degree track."""
    if t < 1:
        raise IndexError("translational velocity needs t >= 1; reuse u_1 for the first step")
    lat0, lon0 = track[t - 1][0], track[t - 1][1]
    lat1, lon1 = track[t][0], track[t][1]
    dist = _step_distance_deg(lat0, lon0, lat1, lon1, cfg)
    return dist * cfg.degree_to_meter / SECONDS_PER_STEP


def translational_speeds(track, cfg: WindfieldConfig) -> np.ndarray:
    """Per-step speeds with the first step copying the second (u_0 := u_1)."""
    pts = np.asarray(track, dtype=float)
    if pts.shape[0] < 2:
        return np.zeros(pts.shape[0])
    if cfg.great_circle:
        speeds = np.array(
            [translational_velocity(pts, t, cfg) for t in range(1, pts.shape[0])]
        )
    else:
        deltas = np.hypot(np.diff(pts[:, 0]), np.diff(pts[:, 1]))
        speeds = deltas * cfg.degree_to_meter / SECONDS_PER_STEP
    return np.concatenate([[speeds[0]], speeds])


def max_windspeed(r_max: float, phi_deg: float, p_hpa: float, u_ms: float, cfg: WindfieldConfig) -> float:
    """Scalar maximum windspeed, floored at 0."""
    if r_max < 0:
        raise ValueError("r_max must be nonnegative")
    dp = pressure_deficit(p_hpa, cfg) if p_hpa <= cfg.ambient_pressure else 0.0
    v = 0.865 * (cfg.K * math.sqrt(dp) - r_max * coriolis(phi_deg, cfg) / 2.0) + 0.5 * u_ms
    return max(v, 0.0)


def max_windspeed_series(r_max, phi_deg, p_hpa, u_ms, cfg: WindfieldConfig, floor: bool = True) -> np.ndarray:
    """Vectorized windspeed along a track; clamps super-ambient pressures to
    zero deficit.  `floor=False` returns the raw (possibly negative) values so
    callers can count clamped steps."""
    r_max = np.asarray(r_max, dtype=float)
    phi = np.radians(np.asarray(phi_deg, dtype=float))
    p = np.asarray(p_hpa, dtype=float)
    u = np.asarray(u_ms, dtype=float)
    dp = np.maximum(cfg.deficit_factor * (cfg.ambient_pressure - p), 0.0)
    f = cfg.omega * np.sin(phi)
    v = 0.865 * (cfg.K * np.sqrt(dp) - r_max * f / 2.0) + 0.5 * u
    return np.maximum(v, 0.0) if floor else v


# ---------------------------------------------------------------------------
# radius-to-maximum-winds quantile table

@dataclass(frozen=True)
class RmaxQuantileTable:
    """Quantiles of R_max (meters) indexed by coastal longitude keys."""

    keys_deg: np.ndarray  # sorted coastal-position keys (longitude, degrees)
    levels: np.ndarray  # sorted quantile levels in (0, 1)
    values_m: np.ndarray  # shape (len(keys), len(levels)), meters

    def __post_init__(self):
        keys = np.asarray(self.keys_deg, dtype=float)
        levels = np.asarray(self.levels, dtype=float)
        values = np.asarray(self.values_m, dtype=float)
        if values.shape != (keys.size, levels.size):
            raise DataError("R_max table shape mismatch")
        if np.any(np.diff(keys) <= 0) or np.any(np.diff(levels) <= 0):
            raise DataError("R_max table keys and levels must be strictly increasing")
        if np.any(values <= 0):
            raise DataError("R_max values must be positive")
        if np.any(np.diff(values, axis=1) < 0):
            raise DataError("R_max values must be nondecreasing in the quantile level")
        object.__setattr__(self, "keys_deg", keys)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "values_m", values)

    def nearest_key(self, psi_deg: float) -> tuple[int, bool]:
        idx = int(np.argmin(np.abs(self.keys_deg - psi_deg)))
        outside = psi_deg < self.keys_deg[0] or psi_deg > self.keys_deg[-1]
        return idx, outside

    def value_at(self, psi_deg: float, level: float) -> float:
        idx, outside = self.nearest_key(psi_deg)
        if outside:
            logger.debug("position %.2f outside R_max table range; nearest key used", psi_deg)
        return float(np.interp(level, self.levels, self.values_m[idx]))

    def values_along(self, psi_deg, level: float) -> np.ndarray:
        psi = np.asarray(psi_deg, dtype=float)
        idx = np.argmin(np.abs(self.keys_deg[None, :] - psi[:, None]), axis=1)
        row_values = np.array(
            [np.interp(level, self.levels, self.values_m[i]) for i in range(self.keys_deg.size)]
        )
        return row_values[idx]

    @classmethod
    def from_csv(cls, path: str | Path) -> "RmaxQuantileTable":
        return cls.from_csv_text(Path(path).read_text())

    @classmethod
    def from_csv_text(cls, text: str) -> "RmaxQuantileTable":
        rows = []
        for line_no, raw in enumerate(text.splitlines(), start=1):
            raw = raw.strip()
            if not raw or raw.startswith("#") or raw.lower().startswith("position"):
                continue
            parts = raw.split(",")
            if len(parts) != 3:
                raise DataError(f"R_max table line {line_no}: expected 3 fields")
            rows.append(tuple(float(p) for p in parts))
        if not rows:
            raise DataError("empty R_max table")
        keys = sorted({r[0] for r in rows})
        levels = sorted({r[1] for r in rows})
        values = np.full((len(keys), len(levels)), np.nan)
        ki = {k: i for i, k in enumerate(keys)}
        li = {l: i for i, l in enumerate(levels)}
        for k, l, v in rows:
            values[ki[k], li[l]] = v
        if np.any(np.isnan(values)):
            raise DataError("R_max table must be a complete key x level grid")
        return cls(keys_deg=np.array(keys), levels=np.array(levels), values_m=values)

    def to_csv(self) -> str:
        lines = ["position_deg_lon,quantile_level,value_m"]
        for i, k in enumerate(self.keys_deg):
            for j, l in enumerate(self.levels):
                lines.append(f"{k},{l},{self.values_m[i, j]}")
        return "\n".join(lines) + "\n"


def rmax_sample(psi_deg: float, table: RmaxQuantileTable, rng: np.random.Generator) -> float:
    """Draw a uniform quantile level and read R_max at the nearest position key."""
    return table.value_at(psi_deg, float(rng.uniform()))
