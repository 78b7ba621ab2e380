"""Bilateral re-dispatch capacity market toolkit.

A variable-generation producer facing two-settlement imbalance penalties can
buy re-dispatch cover from dispatchable units before real time. This package
prices that cover (closed-form expected revenues, marginal-value curves,
critical-fractile optima), runs the hourly market lifecycle (offers,
matching, validation, execution claims, zero-sum settlement), and compares
the cash-flow risk the arrangement adds on the selling side.
"""

from . import cli, dataio, forecast, market, provider, simulation, vg

__version__ = "0.1.0"

__all__ = [
    "cli",
    "dataio",
    "forecast",
    "market",
    "provider",
    "simulation",
    "vg",
    "__version__",
]
