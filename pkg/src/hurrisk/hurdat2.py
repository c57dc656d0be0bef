"""HURDAT2 best-track ingest.

Parses NOAA's comma-delimited HURDAT2 layout (header line per storm, then
the declared number of data lines), derives per-storm events with lifetime,
central-pressure minimum, and landfall metadata, and aggregates yearly
event counts.

Conventions:

* The lifetime ``T`` counts retained 6-hourly synoptic points (00/06/12/18
  UTC).  Off-synoptic lines (e.g. landfall markers at odd hours) are used
  only to set ``is_landfalling``/``t_lf`` and are not counted in ``T``.
* Missing-value sentinels (-99, -999) map to ``None``; pressures outside
  the physical window (850, 1050) hPa are likewise treated as absent.
* Longitude is stored west-negative exactly as in the raw file.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Mapping, Sequence

from .errors import Hurdat2ParseError

logger = logging.getLogger(__name__)

SYNOPTIC_HOURS = (0, 6, 12, 18)
PRESSURE_MIN_HPA = 850.0
PRESSURE_MAX_HPA = 1050.0
_SENTINELS = {"-99", "-999"}


@dataclass(frozen=True, slots=True)
class TrackPoint:
    timestamp: datetime
    record_id: str
    status: str
    lat_deg: float
    lon_deg: float
    max_wind_kt: float | None
    central_pressure_hpa: float | None

    @property
    def is_synoptic(self) -> bool:
        return self.timestamp.minute == 0 and self.timestamp.hour in SYNOPTIC_HOURS


@dataclass(frozen=True, slots=True)
class RawStorm:
    storm_id: str
    name: str
    points: tuple[TrackPoint, ...]


@dataclass(frozen=True, slots=True)
class HurricaneEvent:
    """One storm reduced to the quantities the risk pipeline consumes."""

    storm_id: str
    year: int
    track: tuple[TrackPoint, ...]
    T: int
    p_min: float
    t_pmin: int
    phi_pmin: float
    is_landfalling: bool
    t_lf: int | None

    @property
    def neg_pmin(self) -> float:
        return -self.p_min


def _parse_latitude(field: str, line_no: int) -> float:
    field = field.strip()
    if not field or field[-1] not in "NS":
        raise Hurdat2ParseError(f"bad latitude field {field!r}", line_no)
    try:
        value = float(field[:-1])
    except ValueError:
        raise Hurdat2ParseError(f"non-numeric latitude {field!r}", line_no) from None
    if field[-1] == "S":
        value = -value
    if not 0.0 <= value <= 90.0:
        raise Hurdat2ParseError(f"latitude {value} outside [0, 90]", line_no)
    return value


def _parse_longitude(field: str, line_no: int) -> float:
    field = field.strip()
    if not field or field[-1] not in "EW":
        raise Hurdat2ParseError(f"bad longitude field {field!r}", line_no)
    try:
        value = float(field[:-1])
    except ValueError:
        raise Hurdat2ParseError(f"non-numeric longitude {field!r}", line_no) from None
    if field[-1] == "W":
        value = -value
    if not -180.0 <= value <= 180.0:
        raise Hurdat2ParseError(f"longitude {value} outside [-180, 180]", line_no)
    return value


def _parse_numeric(field: str) -> float | None:
    field = field.strip()
    if not field or field in _SENTINELS:
        return None
    return float(field)


def _parse_data_line(line: str, line_no: int) -> TrackPoint:
    fields = [f.strip() for f in line.split(",")]
    if len(fields) < 8:
        raise Hurdat2ParseError(
            f"data line has {len(fields)} fields, expected at least 8", line_no
        )
    try:
        stamp = datetime.strptime(fields[0] + fields[1].zfill(4), "%Y%m%d%H%M")
    except ValueError:
        raise Hurdat2ParseError(
            f"bad date/time fields {fields[0]!r} {fields[1]!r}", line_no
        ) from None
    lat = _parse_latitude(fields[4], line_no)
    lon = _parse_longitude(fields[5], line_no)
    try:
        wind = _parse_numeric(fields[6])
        pressure = _parse_numeric(fields[7])
    except ValueError:
        raise Hurdat2ParseError("non-numeric wind/pressure field", line_no) from None
    if pressure is not None and not PRESSURE_MIN_HPA < pressure < PRESSURE_MAX_HPA:
        logger.debug(
            "line %d: pressure %.0f outside (%.0f, %.0f), treating as missing",
            line_no,
            pressure,
            PRESSURE_MIN_HPA,
            PRESSURE_MAX_HPA,
        )
        pressure = None
    return TrackPoint(
        timestamp=stamp,
        record_id=fields[2],
        status=fields[3],
        lat_deg=lat,
        lon_deg=lon,
        max_wind_kt=wind,
        central_pressure_hpa=pressure,
    )


def _looks_like_header(fields: Sequence[str]) -> bool:
    head = fields[0].strip()
    return (
        len(head) == 8
        and head[:2].isalpha()
        and head[2:].isdigit()
        and len([f for f in fields if f.strip()]) <= 3
    )


def parse_hurdat2(text: str | Iterable[str]) -> list[RawStorm]:
    """Parse HURDAT2 text into raw storm records.

    Accepts the full file as a string or an iterable of lines.  Raises
    :class:`Hurdat2ParseError` with a line number on malformed headers,
    data-line count mismatches, or unparseable fields.
    """
    if isinstance(text, str):
        lines = text.splitlines()
    else:
        lines = [ln.rstrip("\n") for ln in text]

    storms: list[RawStorm] = []
    i = 0
    n = len(lines)
    while i < n:
        line = lines[i]
        line_no = i + 1
        if not line.strip():
            i += 1
            continue
        fields = line.split(",")
        if not _looks_like_header(fields):
            raise Hurdat2ParseError("expected a storm header line", line_no)
        meaningful = [f.strip() for f in fields if f.strip()]
        if len(meaningful) != 3:
            raise Hurdat2ParseError(
                f"header has {len(meaningful)} fields, expected 3 (id, name, count)",
                line_no,
            )
        storm_id, name, count_field = meaningful
        try:
            declared = int(count_field)
        except ValueError:
            raise Hurdat2ParseError(
                f"non-numeric data-line count {count_field!r}", line_no
            ) from None
        if declared < 0:
            raise Hurdat2ParseError(f"negative data-line count {declared}", line_no)
        points = []
        for j in range(declared):
            k = i + 1 + j
            if k >= n or _looks_like_header(lines[k].split(",")) or not lines[k].strip():
                raise Hurdat2ParseError(
                    f"storm {storm_id} declares {declared} data lines, found {j}",
                    line_no,
                )
            points.append(_parse_data_line(lines[k], k + 1))
        storms.append(RawStorm(storm_id=storm_id, name=name, points=tuple(points)))
        i += 1 + declared
    return storms


def format_hurdat2(storms: Sequence[RawStorm]) -> str:
    """Serialize raw storms back to the NOAA fixed-width comma layout."""
    out: list[str] = []
    for storm in storms:
        out.append(f"{storm.storm_id:>8},{storm.name:>19},{len(storm.points):>7},")
        for p in storm.points:
            lat = f"{abs(p.lat_deg):.1f}{'N' if p.lat_deg >= 0 else 'S'}"
            lon = f"{abs(p.lon_deg):.1f}{'W' if p.lon_deg < 0 else 'E'}"
            wind = "-99" if p.max_wind_kt is None else f"{p.max_wind_kt:.0f}"
            pres = "-999" if p.central_pressure_hpa is None else f"{p.central_pressure_hpa:.0f}"
            radii = ", -999" * 12
            out.append(
                f"{p.timestamp:%Y%m%d}, {p.timestamp:%H%M},{p.record_id:>2},"
                f"{p.status:>3},{lat:>6},{lon:>7},{wind:>4},{pres:>5}{radii},"
            )
    return "\n".join(out) + ("\n" if out else "")


def _nearest_synoptic_index(stamp: datetime, synoptic: Sequence[TrackPoint]) -> int:
    best_idx = 0
    best_gap = None
    for idx, point in enumerate(synoptic):
        gap = abs((point.timestamp - stamp).total_seconds())
        if best_gap is None or gap < best_gap:
            best_gap = gap
            best_idx = idx
    return best_idx


def to_events(storms: Sequence[RawStorm], min_lifetime: int = 25) -> list[HurricaneEvent]:
    """Derive filtered events from raw storms.

    Keeps storms with at least `min_lifetime` synoptic points and at least
    one valid central pressure; everything else is skipped and reported via
    structured log lines.
    """
    if min_lifetime < 1:
        raise ValueError("min_lifetime must be >= 1")
    events: list[HurricaneEvent] = []
    skipped_no_pressure = 0
    skipped_short = 0
    for storm in storms:
        synoptic = tuple(p for p in storm.points if p.is_synoptic)
        T = len(synoptic)
        if T < min_lifetime:
            skipped_short += 1
            continue
        pressures = [
            (idx, p.central_pressure_hpa)
            for idx, p in enumerate(synoptic)
            if p.central_pressure_hpa is not None
        ]
        if not pressures:
            skipped_no_pressure += 1
            logger.info("skip storm_id=%s reason=no_valid_pressure T=%d", storm.storm_id, T)
            continue
        p_min = min(v for _, v in pressures)
        t_pmin = next(idx for idx, v in pressures if v == p_min)
        landfalls = [p for p in storm.points if p.record_id == "L"]
        is_landfalling = bool(landfalls)
        t_lf = (
            _nearest_synoptic_index(landfalls[0].timestamp, synoptic)
            if is_landfalling
            else None
        )
        events.append(
            HurricaneEvent(
                storm_id=storm.storm_id,
                year=synoptic[0].timestamp.year,
                track=synoptic,
                T=T,
                p_min=p_min,
                t_pmin=t_pmin,
                phi_pmin=synoptic[t_pmin].lat_deg,
                is_landfalling=is_landfalling,
                t_lf=t_lf,
            )
        )
    logger.info(
        "ingest summary events=%d skipped_short_lifetime=%d skipped_no_pressure=%d",
        len(events),
        skipped_short,
        skipped_no_pressure,
    )
    return events


def yearly_counts(
    events: Sequence[HurricaneEvent],
    min_lifetime: int = 25,
    span: tuple[int, int] | None = None,
) -> dict[int, int]:
    """Zero-filled contiguous map year -> event count at the given lifetime floor.

    `span` widens (or narrows) the year range; by default it is the range
    observed in `events`.
    """
    kept = [e for e in events if e.T >= min_lifetime]
    if span is None:
        if not kept:
            return {}
        span = (min(e.year for e in kept), max(e.year for e in kept))
    first, last = span
    if last < first:
        raise ValueError("span must be (first, last) with first <= last")
    counts = {year: 0 for year in range(first, last + 1)}
    for e in kept:
        if first <= e.year <= last:
            counts[e.year] += 1
    return counts


def split_by_kind(
    events: Sequence[HurricaneEvent],
) -> tuple[list[HurricaneEvent], list[HurricaneEvent]]:
    """Return (landfalling, nonlandfalling) partitions."""
    land = [e for e in events if e.is_landfalling]
    nonland = [e for e in events if not e.is_landfalling]
    return land, nonland


def counts_as_arrays(counts: Mapping[int, int]) -> tuple[list[int], list[int]]:
    years = sorted(counts)
    return years, [counts[y] for y in years]
