"""
Sweep processor for the complex-action lab
Runs one scenario over a list of values of a sweepable parameter
"""

import json
import logging
import os
from dataclasses import replace
from typing import Any, Dict, List, Sequence

from config import ARTIFACT_VERSION, SCHEMA_VERSION, Config, ScenarioConfig, config_hash, validate_scenario_config
from errors import ConfigurationError, LabError
from parallel import ordered_map
from result_writer import ResultWriter, to_jsonable, write_csv
from scenario_runner import ScenarioRunner, get_scenario

logger = logging.getLogger(__name__)

SWEEP_SUMMARY_FILE = "sweep.json"


def parse_sweep_values(raw_values: Sequence[str]) -> List[Any]:
    """Read every command-line value as JSON, keeping bare words as strings."""
    values = []
    for raw in raw_values:
        try:
            values.append(json.loads(raw))
        except json.JSONDecodeError:
            values.append(raw)
    return values


class SweepProcessor:
    """Evaluates a scenario at every value of one parameter."""

    def __init__(self, settings: Config):
        self.settings = settings

    def point_configs(self, cfg: ScenarioConfig, parameter: str, values: Sequence[Any]) -> List[ScenarioConfig]:
        """
        One validated config per value, in input order.

        Raises:
            ConfigurationError: If the parameter is not sweepable, the value
                list is empty, or any value is out of range
        """
        spec = get_scenario(cfg.kind)
        if parameter not in spec.sweepable:
            raise ConfigurationError(
                f"{parameter!r} is not sweepable for {cfg.kind}, expected one of {spec.sweepable}", field="param"
            )
        if len(values) == 0:
            raise ConfigurationError("at least one value is required", field="values")

        configs = []
        for value in values:
            point = cfg.with_param(parameter, value)
            validate_scenario_config(point, self.settings)
            configs.append(point)
        return configs

    def run(
        self, cfg: ScenarioConfig, parameter: str, values: Sequence[Any], continue_on_error: bool = False
    ) -> Dict[str, Any]:
        """
        Run the sweep.

        Points are dispatched to the worker pool and collected in input
        order; each point then runs its own internals on a single worker.

        Returns:
            Dictionary with total, successful, failed, errors, rows and checks
        """
        configs = self.point_configs(cfg, parameter, values)
        spec = get_scenario(cfg.kind)
        runner = ScenarioRunner(replace(self.settings, workers=1))

        def run_point(point: ScenarioConfig):
            try:
                return runner.run(point)
            except LabError as e:
                return e

        outcomes = ordered_map(run_point, configs, self.settings.workers)

        results: Dict[str, Any] = {
            "total": len(configs),
            "successful": 0,
            "failed": 0,
            "errors": [],
            "rows": [],
            "checks": [],
        }
        for index, (value, outcome) in enumerate(zip(values, outcomes)):
            if isinstance(outcome, LabError):
                if not continue_on_error:
                    raise outcome
                logger.warning("Sweep point %s=%r failed: %s", parameter, value, outcome)
                results["failed"] += 1
                results["errors"].append({"index": index, "value": value, "error": str(outcome)})
                continue

            results["successful"] += 1
            row: Dict[str, Any] = {"parameter": parameter, "value": value}
            row.update({c: outcome.summary.get(c) for c in spec.sweep_columns})
            row["passed"] = outcome.passed
            results["rows"].append(row)
            results["checks"].append(
                {
                    "value": value,
                    "checks": [{"name": c.name, "passed": c.passed, "detail": c.detail} for c in outcome.checks],
                }
            )
        return results

    def write(self, cfg: ScenarioConfig, parameter: str, results: Dict[str, Any], writer: ResultWriter) -> List[str]:
        """Write the combined CSV and the sweep summary JSON."""
        spec = get_scenario(cfg.kind)
        columns = ["parameter", "value"] + list(spec.sweep_columns) + ["passed"]
        csv_name = f"sweep_{parameter}.csv"
        csv_path = write_csv(os.path.join(writer.output_directory, csv_name), columns, results["rows"])
        payload = {
            "schema_version": SCHEMA_VERSION,
            "artifact_version": ARTIFACT_VERSION,
            "scenario": cfg.kind,
            "config_hash": config_hash(cfg),
            "seed": cfg.seed,
            "parameter": parameter,
            "total": results["total"],
            "successful": results["successful"],
            "failed": results["failed"],
            "errors": to_jsonable(results["errors"]),
            "points": to_jsonable(results["checks"]),
            "tables": [{"name": csv_name, "columns": columns, "rows": len(results["rows"])}],
        }
        json_path = writer.write_json(SWEEP_SUMMARY_FILE, payload)
        return [json_path, csv_path]
