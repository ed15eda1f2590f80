"""
LoRa synchronization toolkit.

This package models the LoRa chirp spread spectrum physical layer at baseband
and implements a two-pass receiver that estimates and compensates carrier
frequency offset (CFO), sampling time offset (STO) and sampling frequency
offset (SFO), together with a Monte Carlo harness to measure estimator RMSE
and symbol error rate.
"""

__version__ = "0.1.0"
__author__ = "LibertyQuinzel"
__email__ = "your-email@example.com"

from .models import ModemParams, PreambleSpec, SyncConfig, ExperimentConfig
from .synchronizer import synchronize
from .simulator import MonteCarloSimulator

__all__ = [
    "ModemParams",
    "PreambleSpec",
    "SyncConfig",
    "ExperimentConfig",
    "synchronize",
    "MonteCarloSimulator",
]
