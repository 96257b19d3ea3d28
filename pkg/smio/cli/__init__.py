from __future__ import annotations

from smio.cli.application import SMIO, main
from smio.cli.config import ExperimentConfig, load_config
from smio.cli.env import SMIOEnv

__all__ = ("SMIO", "ExperimentConfig", "SMIOEnv", "load_config", "main")
