"""Caucus: leader election from hash chains and a PVSS-initialized beacon."""

from .config import SimConfig, parse_config
from .groups import STRONG, TOY, get_group, keygen
from .simulator import run_simulation

__all__ = ["SimConfig", "parse_config", "STRONG", "TOY", "get_group", "keygen", "run_simulation"]
__version__ = "0.1.0"
