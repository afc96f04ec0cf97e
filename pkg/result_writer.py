"""
Result writer for the complex-action lab
Serializes scenario results to results.json and RFC 4180 CSV tables
"""

import csv
import json
import logging
import math
import os
from typing import Any, Dict, List, Sequence

import numpy as np

from config import ARTIFACT_VERSION, SCHEMA_VERSION, ScenarioConfig, config_hash
from scenario_runner import ScenarioResult, Table

logger = logging.getLogger(__name__)

RESULTS_FILE = "results.json"


def format_csv_value(value: Any) -> str:
    """
    Text of one CSV cell.

    Floats use repr (the shortest string that reads back to the same
    float), booleans are lowercase and None is an empty cell.
    """
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (complex, np.complexfloating)):
        raise TypeError("complex values must be split into real and imaginary columns")
    return str(value)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars, tuples and non-finite floats into plain JSON values."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [to_jsonable(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else str(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": to_jsonable(value.real), "im": to_jsonable(value.imag)}
    return value


def write_csv(path: str, columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> str:
    """Write a header row and one line per row dict, CRLF line endings."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\r\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_csv_value(row.get(c)) for c in columns])
    return path


class ResultWriter:
    """Writes result files into one output directory."""

    def __init__(self, output_directory: str):
        self.output_directory = output_directory
        os.makedirs(output_directory, exist_ok=True)

    def write_table(self, table: Table) -> str:
        path = os.path.join(self.output_directory, table.name)
        write_csv(path, table.columns, table.rows)
        logger.debug("Wrote %d rows to %s", len(table.rows), path)
        return path

    def results_payload(self, cfg: ScenarioConfig, result: ScenarioResult) -> Dict[str, Any]:
        """
        Content of results.json.

        Only inputs that determine the numbers appear in the header, so
        re-running a config gives the same file at any worker count.
        """
        return {
            "schema_version": SCHEMA_VERSION,
            "artifact_version": ARTIFACT_VERSION,
            "scenario": cfg.kind,
            "config_hash": config_hash(cfg),
            "seed": cfg.seed,
            "params": to_jsonable(cfg.merged_params()),
            "passed": result.passed,
            "summary": to_jsonable(result.summary),
            "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in result.checks],
            "tables": [{"name": t.name, "columns": list(t.columns), "rows": len(t.rows)} for t in result.tables],
        }

    def write_json(self, name: str, payload: Dict[str, Any]) -> str:
        path = os.path.join(self.output_directory, name)
        with open(path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2)
            f.write("\n")
        return path

    def write_results(self, cfg: ScenarioConfig, result: ScenarioResult) -> List[str]:
        """
        Write results.json plus every table of the result.

        Returns:
            Paths of the written files, results.json first
        """
        paths = [self.write_json(RESULTS_FILE, self.results_payload(cfg, result))]
        for table in result.tables:
            paths.append(self.write_table(table))
        logger.info("Wrote %d result files to %s", len(paths), self.output_directory)
        return paths
