"""Run an experiment into a result bundle and write its report files."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from ..errors import FixtureError
from .config import ExperimentConfig, validate
from .experiments import RUNNERS


@dataclass
class ResultBundle:
    experiment: str
    config: dict
    config_hash: str
    payload: dict
    checks: list[dict]
    tables: dict[str, str] = field(default_factory=dict)
    meta: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c["passed"] for c in self.checks)

    def scientific(self) -> dict:
        """Everything except wall-clock metadata."""
        return {
            "experiment": self.experiment,
            "config": self.config,
            "config_hash": self.config_hash,
            "payload": self.payload,
            "checks": self.checks,
            "tables": self.tables,
        }

    def scientific_json(self) -> str:
        return json.dumps(self.scientific(), sort_keys=True, indent=2)

    def to_json(self) -> str:
        return json.dumps({**self.scientific(), "meta": self.meta}, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "ResultBundle":
        d = json.loads(text)
        return cls(d["experiment"], d["config"], d["config_hash"], d["payload"], d["checks"],
                   d.get("tables", {}), d.get("meta", {}))


def run(config: ExperimentConfig, out_dir=None) -> ResultBundle:
    """Validate, dispatch and (if an output directory is known) write the bundle and report."""
    problems = validate(config)
    if problems:
        raise FixtureError("; ".join(problems))
    started = datetime.now(timezone.utc).isoformat()
    t0 = time.perf_counter()
    payload, checks, tables = RUNNERS[config.experiment](config)
    elapsed = time.perf_counter() - t0
    bundle = ResultBundle(
        experiment=config.experiment,
        config=config.raw,
        config_hash=config.config_hash(),
        payload=payload,
        checks=[c.to_dict() for c in checks],
        tables=tables,
        meta={"started": started, "wall_clock_s": elapsed},
    )
    out = out_dir or config.output
    if out is not None:
        out = Path(out)
        if not out.is_absolute() and out_dir is None:
            out = config.base_dir / out
        emit_report(bundle, out)
    return bundle


def summary(bundle: ResultBundle) -> str:
    lines = [f"experiment: {bundle.experiment}", f"config hash: {bundle.config_hash}"]
    lines += [c["line"] for c in bundle.checks]
    if not bundle.checks:
        lines.append("no acceptance checks declared")
    return "\n".join(lines) + "\n"


def emit_report(bundle: ResultBundle, out_dir) -> str:
    """Write ``bundle.json``, ``summary.txt`` and the experiment tables; return the summary."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    text = summary(bundle)
    (out / "bundle.json").write_text(bundle.to_json() + "\n")
    (out / "summary.txt").write_text(text)
    for name, content in bundle.tables.items():
        (out / name).write_text(content)
    return text
