"""
Experiment configuration.

An experiment file is a single JSON document (YAML is accepted too) merged over the
`experiments` section of config.yaml:

    {
      "environment": {"market": "uniform"},
      "algorithms": [{"kind": "zooming"}, {"kind": "ucb1_constant"}, {"kind": "thompson"}],
      "deltas": [0.02, 0.08, 0.2],
      "horizon": 5000,
      "runs": 50,
      "base_seed": 20140601
    }
"""

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import yaml

from src.algorithms.baselines import POLICIES
from src.envs.markets import MARKET_KINDS
from src.utils.helpers import resolve_config, validate_positive_number
from src.utils.logger import get_logger

logger = get_logger(__name__)

ALGORITHM_KINDS = ('zooming',) + POLICIES
DEFAULT_ALGORITHMS = [{'kind': 'zooming'}, {'kind': 'ucb1_constant'}, {'kind': 'thompson'}]
# Keys of an algorithm entry that are not ZoomConfig overrides
ALGORITHM_META_KEYS = ('kind', 'label')


@dataclass
class ExperimentConfig:
    """Everything one experiment command needs, after defaults are merged in."""

    environment: Dict[str, Any] = field(default_factory=lambda: {'market': 'uniform'})
    algorithms: List[Dict[str, Any]] = field(default_factory=lambda: list(DEFAULT_ALGORITHMS))
    deltas: List[float] = field(default_factory=lambda: [0.02, 0.08, 0.2])
    horizon: int = 5000
    runs: int = 50
    base_seed: int = 20140601
    output_dir: str = 'results'
    debug_asserts: bool = False
    workers: int = 1
    per_round_logs: bool = False
    window_fraction: float = 0.1
    limit_horizon: int = 50000
    checkpoint_bases: List[int] = field(default_factory=lambda: [1, 2])
    checkpoint_start: int = 10
    candidates: str = 'uniform_mesh'

    def validate(self) -> None:
        """
        Raises:
            ValueError: on an empty or out-of-range field
        """
        validate_positive_number(self.runs, 'runs')
        validate_positive_number(self.horizon, 'horizon')
        validate_positive_number(self.limit_horizon, 'limit_horizon')
        validate_positive_number(self.workers, 'workers')
        if not self.deltas:
            raise ValueError("At least one delta is required")
        for delta in self.deltas:
            if not 0 < delta <= 1:
                raise ValueError(f"delta must lie in (0, 1], got {delta}")
        if not 0 < self.window_fraction <= 1:
            raise ValueError(f"window_fraction must lie in (0, 1], got {self.window_fraction}")
        if not self.algorithms:
            raise ValueError("At least one algorithm is required")
        for entry in self.algorithms:
            if entry.get('kind') not in ALGORITHM_KINDS:
                raise ValueError(f"Unknown algorithm '{entry.get('kind')}'; "
                                 f"expected one of {', '.join(ALGORITHM_KINDS)}")
        if self.candidates not in ('uniform_mesh', 'full_space'):
            raise ValueError(f"Unknown candidate set '{self.candidates}'")
        market = self.environment.get('market')
        if market is not None and market not in MARKET_KINDS:
            raise ValueError(f"Unknown market '{market}'")

    def algorithm_label(self, entry: Dict[str, Any]) -> str:
        return entry.get('label') or entry['kind']

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @property
    def digest(self) -> str:
        """sha256 of the canonical JSON form, used to tie outputs to their config."""
        canonical = json.dumps(self.to_dict(), sort_keys=True, default=str)
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def zoom_overrides(entry: Dict[str, Any]) -> Dict[str, Any]:
    """ZoomConfig overrides carried by an algorithm entry."""
    return {k: v for k, v in entry.items() if k not in ALGORITHM_META_KEYS}


def load_experiment_config(source: Union[str, Path, Dict[str, Any], None] = None,
                           custom_config: Optional[Dict[str, Any]] = None,
                           **overrides) -> ExperimentConfig:
    """
    Build an ExperimentConfig from a file path, a dict, or nothing (defaults only).

    Keyword overrides (e.g. runs=10 from the command line) win over the file; None
    values are ignored.

    Raises:
        FileNotFoundError: if the path does not exist
        ValueError: on unknown keys or invalid values
    """
    defaults = dict(resolve_config(custom_config)['experiments'])

    if source is None:
        document: Dict[str, Any] = {}
    elif isinstance(source, dict):
        document = dict(source)
    else:
        path = Path(source)
        if not path.exists():
            raise FileNotFoundError(f"Experiment config not found at {path}")
        with open(path, 'r') as file:
            document = yaml.safe_load(file) or {}
        logger.info(f"Loaded experiment config {path}")

    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(document) - known
    if unknown:
        raise ValueError(f"Unknown experiment config keys: {', '.join(sorted(unknown))}")

    merged = {k: v for k, v in defaults.items() if k in known}
    merged.update(document)
    merged.update({k: v for k, v in overrides.items() if v is not None})

    config = ExperimentConfig(**merged)
    config.deltas = [float(d) for d in config.deltas]
    config.algorithms = [dict(a) for a in config.algorithms]
    config.validate()
    return config
