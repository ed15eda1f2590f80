"""
Validation utilities for the LoRa synchronization toolkit.

This module checks experiment configurations for settings that run but
give misleading results, and prepares output locations and config files.
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Union

import yaml

from ..models import ExperimentConfig, SfoMode, ValidationResult
from ..synchronizer import max_budget_before_error


def validate_experiment(config: ExperimentConfig) -> ValidationResult:
    """
    Validate an experiment configuration.

    Args:
        config: Experiment to validate

    Returns:
        ValidationResult with any errors, warnings, or suggestions
    """
    errors = []
    warnings = []
    suggestions = []
    params = config.params

    cfo = abs(config.channel_gamma) * params.fc
    if cfo > params.bw / 4:
        warnings.append(
            f"CFO of {cfo:.0f} Hz exceeds B/4 = {params.bw / 4:.0f} Hz; "
            "the integer CFO estimate is ambiguous"
        )

    if len(set(config.snr_grid)) != len(config.snr_grid):
        warnings.append("SNR grid contains duplicate points")

    if config.n_frames < 100:
        warnings.append(
            f"{config.n_frames} frames per point gives coarse RMSE and SER estimates"
        )

    budget = max_budget_before_error(config.channel_gamma, params.sf)
    if config.sfo_mode == SfoMode.NONE and budget is not None and config.payload_len > budget:
        warnings.append(
            f"Payload of {config.payload_len} symbols exceeds the {budget}-symbol "
            "drift budget; expect an error floor without SFO compensation"
        )

    if params.osr > 1 and params.sf >= 11:
        suggestions.append("Oversampled SF11/12 sweeps are slow; consider --workers")

    if config.passes_max == 1 and config.sfo_mode == SfoMode.FULL:
        suggestions.append("Full SFO mode with one pass never pre-compensates the preamble")

    return ValidationResult(
        is_valid=len(errors) == 0,
        errors=errors,
        warnings=warnings,
        suggestions=suggestions,
    )


def validate_output_path(output_path: Union[str, Path]) -> bool:
    """
    Validate that a result file can be written at ``output_path``.

    Returns:
        True if valid

    Raises:
        ValueError: If path is invalid
    """
    output_path = Path(output_path)

    try:
        resolved_path = output_path.resolve()
    except Exception as e:
        raise ValueError(f"Cannot resolve output path: {e}")

    if resolved_path.exists() and resolved_path.is_dir():
        raise ValueError(f"Output path is a directory: {resolved_path}")

    parent = resolved_path.parent
    if not parent.exists():
        try:
            parent.mkdir(parents=True, exist_ok=True)
        except PermissionError:
            raise ValueError(f"No permission to create directory: {parent}")
        except Exception as e:
            raise ValueError(f"Cannot create parent directory: {e}")

    return True


def load_config_file(config_path: Path) -> List[Dict[str, Any]]:
    """
    Load experiment mappings from a YAML or JSON file.

    The file holds either one experiment mapping or a list of them.

    Raises:
        ValueError: If the file is missing or does not hold mappings
    """
    if not config_path.exists():
        raise ValueError(f"Configuration file not found: {config_path}")

    try:
        text = config_path.read_text(encoding="utf-8")
        if config_path.suffix.lower() == ".json":
            data = json.loads(text)
        else:
            data = yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ValueError(f"Invalid configuration file: {e}")

    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not all(isinstance(entry, dict) for entry in data):
        raise ValueError("Configuration file must contain a mapping or a list of mappings")
    return data
