"""Lead-lag testing and Gaussian quadratic-form diagnostics for high-frequency data."""

from ._accel import backend
from .errors import (ConfigurationError, DataError, LLGaussError, NotPSDError,
                     ParameterError)
from .experiments import ExperimentConfig, RejectionTable, emit_plotdata, run_table1
from .leadlag import (BootstrapConfig, LagGrid, TestReport, bootstrap_quantile,
                      bootstrap_statistics, contrast, contrast_naive, lead_lag_test,
                      p_value, test_statistic)
from .qform import (QuadFormSpec, diagnostics, mc_max_kolmogorov, qf_covariance,
                    qf_fourth_cumulant, qf_variance)
from .rng import Seed
from .spotvol import BandResult, SpotVolConfig, spot_estimate, uniform_band
from .stochastics import (LeadLagModel, PathPair, PiecewiseConstant, SamplingScheme,
                          make_scheme, read_path_csv, simulate_leadlag, write_path_csv)

__version__ = "0.1.0"

__all__ = [
    "backend", "ConfigurationError", "DataError", "LLGaussError", "NotPSDError",
    "ParameterError", "ExperimentConfig", "RejectionTable", "emit_plotdata", "run_table1",
    "BootstrapConfig", "LagGrid", "TestReport", "bootstrap_quantile", "bootstrap_statistics",
    "contrast", "contrast_naive", "lead_lag_test", "p_value", "test_statistic",
    "QuadFormSpec", "diagnostics", "mc_max_kolmogorov", "qf_covariance",
    "qf_fourth_cumulant", "qf_variance", "Seed", "BandResult", "SpotVolConfig",
    "spot_estimate", "uniform_band", "LeadLagModel", "PathPair", "PiecewiseConstant",
    "SamplingScheme", "make_scheme", "read_path_csv", "simulate_leadlag", "write_path_csv",
]
