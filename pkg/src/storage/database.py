"""
SQLite run registry for the contract lab.

Every CLI command invocation is recorded with its config digest, outputs and verdict.
"""

import json
import sqlite3
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from src.utils.logger import get_logger

logger = get_logger(__name__)

DB_DIR = "data"
DB_NAME = "contract_lab.db"


class RunRegistry:
    """Manages the SQLite history of command invocations."""

    def __init__(self, db_dir: str = DB_DIR, db_name: str = DB_NAME):
        """
        Initialize database connection.

        Args:
            db_dir: Directory to store database file
            db_name: Name of the database file
        """
        db_path = Path(db_dir)
        db_path.mkdir(parents=True, exist_ok=True)
        self.db_path = db_path / db_name

        self._init_db()

    def _get_connection(self) -> sqlite3.Connection:
        return sqlite3.connect(self.db_path)

    def _init_db(self) -> None:
        """Initialize database schema."""
        try:
            with self._get_connection() as conn:
                conn.execute("""
                    CREATE TABLE IF NOT EXISTS command_history (
                        id INTEGER PRIMARY KEY AUTOINCREMENT,
                        timestamp TEXT NOT NULL,
                        command TEXT NOT NULL,
                        config_digest TEXT,
                        verdict TEXT,
                        outputs JSON,
                        details JSON
                    )
                """)
                conn.commit()
                logger.debug("Run registry initialized")
        except sqlite3.Error as e:
            logger.error(f"Failed to initialize run registry: {e}")
            raise

    def record(self, command: str, config_digest: Optional[str] = None,
               outputs: Sequence[Any] = (), verdict: Optional[str] = None,
               details: Optional[Dict[str, Any]] = None) -> int:
        """
        Record one command invocation.

        Returns:
            int: ID of the inserted row, or -1 if the write failed
        """
        try:
            with self._get_connection() as conn:
                cursor = conn.execute("""
                    INSERT INTO command_history
                    (timestamp, command, config_digest, verdict, outputs, details)
                    VALUES (?, ?, ?, ?, ?, ?)
                """, (datetime.now().isoformat(), command, config_digest, verdict,
                      json.dumps([str(o) for o in outputs]),
                      json.dumps(details or {}, default=str)))
                row_id = cursor.lastrowid
                conn.commit()
            logger.info(f"Recorded '{command}' in the run registry with ID {row_id}")
            return row_id
        except sqlite3.Error as e:
            logger.error(f"Failed to record '{command}': {e}")
            return -1

    def get_history(self, limit: int = 50, command: Optional[str] = None) -> List[Dict[str, Any]]:
        """
        Latest invocations first, optionally filtered by command.
        """
        query = ("SELECT id, timestamp, command, config_digest, verdict FROM command_history"
                 + (" WHERE command = ?" if command else "")
                 + " ORDER BY id DESC LIMIT ?")
        params = (command, limit) if command else (limit,)
        try:
            with self._get_connection() as conn:
                conn.row_factory = sqlite3.Row
                rows = conn.execute(query, params).fetchall()
            return [dict(row) for row in rows]
        except sqlite3.Error as e:
            logger.error(f"Failed to retrieve history: {e}")
            return []

    def get_entry(self, entry_id: int) -> Optional[Dict[str, Any]]:
        """Full record by ID, outputs and details decoded."""
        try:
            with self._get_connection() as conn:
                conn.row_factory = sqlite3.Row
                row = conn.execute("SELECT * FROM command_history WHERE id = ?",
                                   (entry_id,)).fetchone()
            if row is None:
                return None
            entry = dict(row)
            entry['outputs'] = json.loads(entry['outputs'])
            entry['details'] = json.loads(entry['details'])
            return entry
        except sqlite3.Error as e:
            logger.error(f"Failed to retrieve registry entry {entry_id}: {e}")
            return None
