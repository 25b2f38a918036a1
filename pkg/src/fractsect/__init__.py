"""EEMD-detrended overlapping-window MFDFA for financial time series."""

from .emd import EemdConfig, eemd, emd, select_imfs
from .mfdfa import (AnalysisParams, Eemd, EemdGlobal, Poly, Regime, analyze,
                    fluctuation_function, hurst_exponents, scale_grid)
from .series import Kind, Series, load_series, log_returns, profile
from .spectrum import (Persistence, classify, mass_exponent, report_for,
                       singularity_spectrum, spectrum_stats)
from .synth import CascadeSpec, FgnSpec, binomial_cascade, cascade_hq_oracle, fgn, shuffle

__version__ = "0.1.0"
