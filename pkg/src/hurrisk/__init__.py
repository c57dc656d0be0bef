"""Hurricane windspeed risk modeling: HURDAT2 ingest, nonstationary
extreme-value and Poisson occurrence fits, Monte Carlo coastal simulation,
and n-year return levels."""

__version__ = "0.1.0"

from . import evt, hurdat2, occurrence, risk, simulate, trend, windfield  # noqa: F401
