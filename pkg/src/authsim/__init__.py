"""Physical-layer authentication of sensor packets with Kalman-tracked features."""

__version__ = "0.1.0"

from .authengine import Method, MethodConfig, ThresholdPair  # noqa: E402
from .errors import AuthSimError, ConfigError, NumericalError  # noqa: E402
from .sim import ScenarioConfig, run, summarize, sweep  # noqa: E402
from .statespace import StateSpaceModel  # noqa: E402

__all__ = [
    "AuthSimError",
    "ConfigError",
    "Method",
    "MethodConfig",
    "NumericalError",
    "ScenarioConfig",
    "StateSpaceModel",
    "ThresholdPair",
    "run",
    "summarize",
    "sweep",
]
