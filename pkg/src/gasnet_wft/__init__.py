"""Wave-front tracking for the isentropic Euler equations on a star network
of pipes with feedback boundary control."""

from .eos import GasState, PressureLaw, Region, mirror
from .exceptions import (
    ConfigError,
    DomainError,
    GasNetError,
    InteractionCapExceeded,
    JunctionEntropyError,
    OutOfDomainError,
    SolverError,
)
from .front_tracking import SimConfig, Simulation, SimulationTrace, WaveFront, run, run_line
from .functionals import FunctionalParams, verify_decay
from .network import NetworkConfig
from .calibration import CalibratedConstants, calibrate_constants
from .scenario import Scenario, load_scenario, parse_scenario, random_scenario
from .stability import CompareReport, compare_runs

__version__ = "0.1.0"

__all__ = [
    "GasState",
    "PressureLaw",
    "Region",
    "mirror",
    "NetworkConfig",
    "SimConfig",
    "Simulation",
    "SimulationTrace",
    "WaveFront",
    "run",
    "run_line",
    "FunctionalParams",
    "verify_decay",
    "CalibratedConstants",
    "calibrate_constants",
    "Scenario",
    "load_scenario",
    "parse_scenario",
    "random_scenario",
    "CompareReport",
    "compare_runs",
    "GasNetError",
    "DomainError",
    "OutOfDomainError",
    "SolverError",
    "JunctionEntropyError",
    "InteractionCapExceeded",
    "ConfigError",
]
