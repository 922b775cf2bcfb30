"""Gaussian copula mixture models.

Thin wrapper over the compiled core. Models travel as JSON strings, so a
fit in one process can be sampled or scored in another without pickling.
"""

from ._core import (
    DataError,
    NumericError,
    aic,
    default_benchmark_spec,
    fit,
    fit_gmm,
    ks_two_sample,
    log_density,
    make_ground_truth,
    run_benchmark,
    sample,
    select_k,
    set_num_threads,
)

__all__ = [
    "DataError",
    "NumericError",
    "aic",
    "default_benchmark_spec",
    "fit",
    "fit_gmm",
    "ks_two_sample",
    "log_density",
    "make_ground_truth",
    "run_benchmark",
    "sample",
    "select_k",
    "set_num_threads",
]
