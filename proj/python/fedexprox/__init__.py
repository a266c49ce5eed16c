"""Inexact FedExProx simulator: Python bindings over the C++ core."""

from ._core import (  # noqa: F401
    ConfigError,
    Error,
    InadmissibleInexactness,
    Problem,
    Spectrum,
    generate_problem,
    rates,
    run,
    table1,
    verify_trace_file,
)

__all__ = [
    "ConfigError",
    "Error",
    "InadmissibleInexactness",
    "Problem",
    "Spectrum",
    "generate_problem",
    "rates",
    "run",
    "table1",
    "verify_trace_file",
]
