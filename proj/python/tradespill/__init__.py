"""Trade relatedness and extended gravity regressions (C++ core)."""

from ._core import (
    DataError,
    TradeTensor,
    classify_exporter,
    fit_gravity,
    fit_ols,
    load_trade,
    proximity,
    rca,
    relatedness,
    synth,
    trend_test,
)

__all__ = [
    "DataError",
    "TradeTensor",
    "classify_exporter",
    "fit_gravity",
    "fit_ols",
    "load_trade",
    "proximity",
    "rca",
    "relatedness",
    "synth",
    "trend_test",
]
