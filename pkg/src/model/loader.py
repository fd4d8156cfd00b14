"""
JSON documents describing outcome spaces and weighted worker types.

Document shape:
    {"values": [0, 0.3, 1],
     "types": [{"weight": 0.5, "costs": [...], "production": [[...], ...], "tiebreak": [...]}]}
"""

import json
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import yaml

from src.model.contracts import OutcomeSpace
from src.model.worker import WorkerType
from src.utils.logger import get_logger

logger = get_logger(__name__)

WeightedTypes = List[Tuple[float, WorkerType]]


def parse_model(document: Dict[str, Any]) -> Tuple[OutcomeSpace, WeightedTypes]:
    """
    Build the outcome space and weighted types from a parsed document.

    Raises:
        ValueError: if a key is missing or a type does not match the outcome space
    """
    if 'values' not in document or 'types' not in document:
        raise ValueError("Model document needs 'values' and 'types'")

    outcomes = OutcomeSpace(tuple(document['values']))
    types: WeightedTypes = []
    for i, entry in enumerate(document['types']):
        try:
            worker = WorkerType(
                costs=entry['costs'],
                production=entry['production'],
                tiebreak_order=tuple(entry['tiebreak']) if entry.get('tiebreak') else None,
                name=entry.get('name', f"type{i}"),
            )
        except KeyError as e:
            raise ValueError(f"Type {i} is missing {e}") from e
        if worker.m != outcomes.m:
            raise ValueError(
                f"Type {i} has {worker.m} non-null outcomes, values list has {outcomes.m}"
            )
        types.append((float(entry.get('weight', 1.0)), worker))

    return outcomes, types


def load_model(path: Union[str, Path]) -> Tuple[OutcomeSpace, WeightedTypes]:
    """Read a model document from disk (JSON, or YAML since JSON is a subset)."""
    path = Path(path)
    with open(path, 'r') as f:
        document = yaml.safe_load(f)
    logger.info(f"Loaded model document {path}")
    return parse_model(document)


def dump_model(outcomes: OutcomeSpace, types: WeightedTypes) -> str:
    """Serialize an outcome space and weighted types back to a JSON document."""
    document = {
        'values': list(outcomes.values),
        'types': [
            {
                'weight': weight,
                'name': worker.name,
                'costs': worker.costs.tolist(),
                'production': worker.production.tolist(),
                'tiebreak': list(worker.tiebreak_order),
            }
            for weight, worker in types
        ],
    }
    return json.dumps(document, indent=2)


def load_model_document(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read and validate a model file, returning its canonical document.

    The result is plain JSON data and can serve directly as an experiment environment.
    """
    outcomes, types = load_model(path)
    return json.loads(dump_model(outcomes, types))
