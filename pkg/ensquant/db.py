"""
ensquant.db
-----------
SQLite store for a run bundle (`<out_dir>/bundle.db`): one row per run,
metric rows per (repetition, scheme, level), crowd-wisdom RI values,
crossing counts and recorded failures. `ensquant report` rebuilds the
tables from it.
"""

from __future__ import annotations

import pathlib
import sqlite3
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

BUNDLE_DB = "bundle.db"

_SCHEMA = """
CREATE TABLE IF NOT EXISTS runs (
    id TEXT PRIMARY KEY,
    experiment TEXT,
    spec TEXT,            -- ExperimentSpec as JSON
    status TEXT,          -- 'running', 'completed', 'partial'
    started TEXT,         -- ISO timestamp
    completed TEXT,
    wall_time_s REAL
);
CREATE TABLE IF NOT EXISTS metrics (
    run_id TEXT,
    repetition INTEGER,
    scheme TEXT,
    level REAL,
    cp REAL,
    aw REAL,
    ais REAL,
    crossed INTEGER,
    PRIMARY KEY (run_id, repetition, scheme, level)
);
CREATE TABLE IF NOT EXISTS outcomes (
    run_id TEXT,
    repetition INTEGER,
    scheme TEXT,
    crossings INTEGER,
    k0 INTEGER,
    PRIMARY KEY (run_id, repetition, scheme)
);
CREATE TABLE IF NOT EXISTS wisdom (
    run_id TEXT,
    scheme TEXT,
    level REAL,
    sister INTEGER,
    ri REAL,
    PRIMARY KEY (run_id, scheme, level, sister)
);
CREATE TABLE IF NOT EXISTS failures (
    run_id TEXT,
    repetition INTEGER,
    scheme TEXT,
    stage TEXT,
    message TEXT
);
"""


def _conn(path: pathlib.Path) -> sqlite3.Connection:
    return sqlite3.connect(path, check_same_thread=False, timeout=10)


def init(path: pathlib.Path) -> pathlib.Path:
    path = pathlib.Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with _conn(path) as con:
        con.executescript(_SCHEMA)
    return path


def insert_run(path: pathlib.Path, rec: Dict[str, Any]) -> None:
    with _conn(path) as con:
        con.execute(
            """
            INSERT OR REPLACE INTO runs (id, experiment, spec, status, started)
            VALUES (:id, :experiment, :spec, 'running', :started)
            """,
            rec,
        )


def update_run(path: pathlib.Path, run_id: str, **fields: Any) -> None:
    if not fields:
        return
    cols = ", ".join(f"{k}=:{k}" for k in fields)
    with _conn(path) as con:
        con.execute(f"UPDATE runs SET {cols} WHERE id=:id", {**fields, "id": run_id})


def insert_metrics(
    path: pathlib.Path,
    run_id: str,
    repetition: int,
    scheme: str,
    rows: Iterable[Tuple[float, float, float, float, int]],
    crossings: int,
    k0: Optional[int] = None,
) -> None:
    """`rows` are (level, cp, aw, ais, crossed)."""
    with _conn(path) as con:
        con.executemany(
            "INSERT OR REPLACE INTO metrics VALUES (?, ?, ?, ?, ?, ?, ?, ?)",
            [(run_id, repetition, scheme, *r) for r in rows],
        )
        con.execute(
            "INSERT OR REPLACE INTO outcomes VALUES (?, ?, ?, ?, ?)", (run_id, repetition, scheme, crossings, k0)
        )


def insert_wisdom(path: pathlib.Path, run_id: str, scheme: str, level: float, ri_values: Sequence[float]) -> None:
    with _conn(path) as con:
        con.executemany(
            "INSERT OR REPLACE INTO wisdom VALUES (?, ?, ?, ?, ?)",
            [(run_id, scheme, level, k, float(v)) for k, v in enumerate(ri_values)],
        )


def insert_failure(path: pathlib.Path, run_id: str, repetition: int, scheme: str, stage: str, message: str) -> None:
    with _conn(path) as con:
        con.execute("INSERT INTO failures VALUES (?, ?, ?, ?, ?)", (run_id, repetition, scheme, stage, message))


def _rows(path: pathlib.Path, query: str, params: Tuple[Any, ...] = ()) -> List[Dict[str, Any]]:
    with _conn(path) as con:
        con.row_factory = sqlite3.Row
        return [dict(r) for r in con.execute(query, params).fetchall()]


def list_runs(path: pathlib.Path) -> List[Dict[str, Any]]:
    return _rows(path, "SELECT * FROM runs ORDER BY started, id")


def get_run(path: pathlib.Path, run_id: str) -> Optional[Dict[str, Any]]:
    rows = _rows(path, "SELECT * FROM runs WHERE id=?", (run_id,))
    return rows[0] if rows else None


def run_rows(path: pathlib.Path, run_id: str) -> Dict[str, List[Dict[str, Any]]]:
    """Every metric, outcome, wisdom and failure row of one run."""
    return {
        "metrics": _rows(path, "SELECT * FROM metrics WHERE run_id=? ORDER BY repetition, scheme, level", (run_id,)),
        "outcomes": _rows(path, "SELECT * FROM outcomes WHERE run_id=? ORDER BY repetition, scheme", (run_id,)),
        "wisdom": _rows(path, "SELECT * FROM wisdom WHERE run_id=? ORDER BY scheme, level, sister", (run_id,)),
        "failures": _rows(path, "SELECT * FROM failures WHERE run_id=? ORDER BY repetition, scheme", (run_id,)),
    }
