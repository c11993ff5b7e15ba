"""Critical energy levels and local potential data from semiclassical spectra."""

__version__ = "0.1.0"

from .errors import (ConfigError, CritspecError, DimensionError, DomainError, FitError,  # noqa: E402
                     IndefiniteGermError, PipelineError, ResolutionError, SingularTimeError)
from .potential import Potential, find_critical_points, from_config, spherical_mean  # noqa: E402
from .quantum1d import SolverParams, compute_spectrum  # noqa: E402
from .testfn import TestFunction, make_test_function  # noqa: E402
from .specdist import e_scan, h_sweep, upsilon  # noqa: E402
from .detector import classify_level, fit_power_log, invert_level  # noqa: E402
