"""
CSV/Excel/JSON export of experiment outputs.
"""

import json
import subprocess
from pathlib import Path
from typing import Any, Dict, Optional

import pandas as pd

from src.utils.logger import get_logger

logger = get_logger(__name__)


def git_revision(repo_dir: Optional[Path] = None) -> str:
    """Current git commit, or 'unknown' outside a repository."""
    repo_dir = repo_dir or Path(__file__).parent.parent.parent
    try:
        result = subprocess.run(['git', 'rev-parse', 'HEAD'], cwd=repo_dir,
                                capture_output=True, text=True, check=True, timeout=10)
        return result.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        return 'unknown'


def export_frame(frame: pd.DataFrame, filepath) -> Path:
    """Write a frame as CSV without the index."""
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(filepath, index=False)
    logger.info(f"Wrote {len(frame)} rows to {filepath}")
    return filepath


def write_metadata(metadata: Dict[str, Any], filepath) -> Path:
    """Metadata JSON next to a CSV output."""
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, 'w') as file:
        json.dump(metadata, file, indent=2, sort_keys=True, default=str)
    logger.info(f"Wrote metadata to {filepath}")
    return filepath


def export_to_excel(frames: Dict[str, pd.DataFrame], filepath,
                    metadata: Optional[Dict[str, Any]] = None) -> Path:
    """
    Workbook with one sheet per frame, plus a flattened metadata sheet.

    Args:
        frames: sheet name -> frame
        filepath: output path
        metadata: nested metadata, flattened to key/value rows
    """
    filepath = Path(filepath)
    logger.info(f"Exporting results to Excel: {filepath}")
    with pd.ExcelWriter(filepath, engine='openpyxl') as writer:
        for name, frame in frames.items():
            # Excel caps sheet names at 31 characters
            frame.to_excel(writer, sheet_name=name[:31], index=False)
        if metadata:
            flat = pd.json_normalize(metadata, sep='.').T.reset_index()
            flat.columns = ['Key', 'Value']
            flat['Value'] = flat['Value'].map(
                lambda v: json.dumps(v, default=str) if isinstance(v, (list, dict)) else v)
            flat.to_excel(writer, sheet_name='Metadata', index=False)
    return filepath
