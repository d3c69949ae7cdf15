"""Low-complexity resource allocation for the MISO-OFDMA broadcast channel."""

from .config import SimConfig, load_config, reference_config
from .errors import ConfigError, SearchSpaceError
from .sim import TraceLog, rate_region, run, sweep

__all__ = ["SimConfig", "load_config", "reference_config", "ConfigError", "SearchSpaceError",
           "TraceLog", "run", "sweep", "rate_region"]
