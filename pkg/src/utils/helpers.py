"""
Configuration access, argument checks and terminal formatting shared across the lab.
"""

from functools import lru_cache
from numbers import Real
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from colorama import Fore, Style

PROJECT_ROOT = Path(__file__).resolve().parents[2]
CONFIG_PATH = PROJECT_ROOT / 'config.yaml'


@lru_cache(maxsize=1)
def load_config() -> dict:
    """Parse config.yaml once; every later call shares the same dict, so treat it as read-only."""
    if not CONFIG_PATH.is_file():
        raise FileNotFoundError(f"Configuration file not found at {CONFIG_PATH}")
    try:
        config = yaml.safe_load(CONFIG_PATH.read_text())
    except yaml.YAMLError as e:
        raise ValueError(f"Error parsing configuration file: {e}") from e
    if not isinstance(config, dict):
        raise ValueError(f"{CONFIG_PATH.name} must hold a mapping of sections")
    return config


def resolve_config(custom_config: Optional[Dict[str, Any]] = None) -> dict:
    """Return the injected configuration, or the repository defaults."""
    return custom_config if custom_config else load_config()


def format_estimate(mean: float, se: float, decimal_places: int = 4) -> str:
    """Format a mean with its standard error, e.g. '0.1530 ± 0.0012'."""
    return f"{mean:.{decimal_places}f} ± {se:.{decimal_places}f}"


def _require_real(value: Any, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, Real):
        raise TypeError(f"{name} must be a number")
    return float(value)


def validate_positive_number(value: Real, name: str) -> bool:
    """Horizons, run counts, worker counts and rates must be > 0."""
    if _require_real(value, name) <= 0:
        raise ValueError(f"{name} must be positive")
    return True


def validate_unit_interval(value: Real, name: str) -> bool:
    """Costs and mesh steps live in [0, 1]."""
    x = _require_real(value, name)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"{name} must lie in [0, 1], got {value}")
    return True


def color_text(text: str, color: str = 'green') -> str:
    """Wrap text in an ANSI color; unknown color names fall back to white."""
    return f"{getattr(Fore, color.upper(), Fore.WHITE)}{text}{Style.RESET_ALL}"


def verdict_text(passed: bool) -> str:
    return color_text('PASS', 'green') if passed else color_text('FAIL', 'red')


def get_output_dir(path: Optional[str] = None) -> Path:
    """
    Resolve and create an artifact directory.

    Relative paths are taken from the project root, not the working directory.
    Defaults to experiments.output_dir from config.yaml.
    """
    if path is None:
        path = load_config()['experiments']['output_dir']
    output_dir = Path(path)
    if not output_dir.is_absolute():
        output_dir = PROJECT_ROOT / output_dir
    output_dir.mkdir(parents=True, exist_ok=True)
    return output_dir
