"""Experiment configuration: loading, fixture construction and validation."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from ..born import fixture_povm
from ..channel import ChannelSpace, ReversibleDynamics, equal_blocks, make_dynamics, parse_permutation_table
from ..errors import ConfigurationError, FixtureError, MinobsError
from ..measurement import ReactionMap
from ..povm import Povm, PovmTriple

EXPERIMENTS = ("born", "commute", "counterfactual", "moore", "decohere", "bell-overlap")


class ConfigIOError(MinobsError, OSError):
    """A configuration or fixture file could not be read."""


@dataclass
class ExperimentConfig:
    """One self-contained experiment description.

    ``raw`` is the JSON document as given (after command-line overrides);
    ``base_dir`` resolves relative fixture paths.
    """

    raw: dict
    base_dir: Path = field(default_factory=Path.cwd)

    @property
    def experiment(self) -> str:
        return self.raw.get("experiment", "")

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def output(self) -> str | None:
        return self.raw.get("output")

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def require(self, key):
        if key not in self.raw:
            raise ConfigurationError(f"config key {key!r} is required for experiment {self.experiment!r}")
        return self.raw[key]

    def config_hash(self) -> str:
        canonical = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode()).hexdigest()

    def with_overrides(self, seed: int | None = None, exhaustive: bool = False) -> "ExperimentConfig":
        raw = copy.deepcopy(self.raw)
        if seed is not None:
            raw["seed"] = int(seed)
        if exhaustive:
            raw["exhaustive"] = True
        return ExperimentConfig(raw, self.base_dir)

    # -- fixture builders

    def _read(self, ref: str) -> str:
        path = Path(ref)
        if not path.is_absolute():
            path = self.base_dir / path
        try:
            return path.read_text()
        except OSError as exc:
            raise ConfigIOError(f"cannot read fixture {str(path)!r}: {exc.strerror or exc}") from None

    def space(self) -> ChannelSpace:
        ch = self.raw.get("channel", {})
        if "size" not in ch:
            raise ConfigurationError("channel.size is required")
        return ChannelSpace(int(ch["size"]))

    def dynamics(self) -> ReversibleDynamics:
        spec = self.raw.get("dynamics")
        if spec is None:
            raise ConfigurationError("dynamics is required")
        seed = int(spec.get("seed", self.seed))
        if "table" in spec:
            d = parse_permutation_table(self._read(spec["table"]), seed=seed)
            if d.size != self.space().size:
                raise ConfigurationError(f"permutation table has {d.size} states, channel has {self.space().size}")
            return d
        space = self.space()
        blocks = spec.get("blocks")
        if isinstance(blocks, dict):
            blocks = equal_blocks(space.size, int(blocks["size"]))
        elif blocks is not None:
            # each block is an explicit state list or {"lo": a, "hi": b}
            blocks = [range(int(b["lo"]), int(b["hi"])) if isinstance(b, dict) else b for b in blocks]
        return make_dynamics(spec.get("kind", "generated"), seed, space, blocks,
                             designated=int(spec.get("designated", 0)))

    def povm(self, ref) -> Povm:
        """A POVM by name from ``povms``, an inline document, or a file path."""
        if isinstance(ref, dict):
            if "counts" in ref:
                return fixture_povm(ref["counts"], values=ref.get("values"), size=ref.get("size"),
                                    epsilon=ref.get("epsilon", 0.5))
            return Povm.from_dict(ref)
        table = self.raw.get("povms", {})
        if ref in table:
            entry = table[ref]
            if isinstance(entry, str):
                return Povm.from_json(self._read(entry), name=ref)
            p = self.povm(entry)
            p.name = ref
            return p
        raise ConfigurationError(f"unknown POVM reference {ref!r}")

    def triples(self) -> list[PovmTriple]:
        out = []
        for i, t in enumerate(self.require("triples"), 1):
            try:
                out.append(PovmTriple(
                    system_id=int(t.get("system", i)),
                    identify=self.povm(t["identify"]),
                    select=self.povm(t["select"]),
                    observables=tuple(self.povm(a) for a in t["observables"]),
                    accept_set=frozenset(t["accept"]) if t.get("accept") is not None else None,
                ))
            except KeyError as exc:
                raise ConfigurationError(f"triple {i} missing key {exc}") from None
        return out

    def reaction(self) -> ReactionMap:
        spec = dict(self.raw.get("reaction", {"mode": "canonical"}))
        spec.setdefault("seed", self.seed)
        return ReactionMap.from_dict(spec)


def load_config(source, *, base_dir=None) -> ExperimentConfig:
    """Load from a path, a JSON string or a dict."""
    if isinstance(source, dict):
        return ExperimentConfig(copy.deepcopy(source), Path(base_dir) if base_dir else Path.cwd())
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigIOError(f"cannot read config {str(path)!r}: {exc.strerror or exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"config {str(path)!r} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    return ExperimentConfig(raw, Path(base_dir) if base_dir else path.parent)


# -- validation -------------------------------------------------------------

_POVM_KEYS = {
    "born": ("povm",),
    "commute": ("povm_a", "povm_b"),
    "counterfactual": ("povm_a", "povm_b"),
    "bell-overlap": ("povm_a", "povm_b"),
}


def _collect(diags: list[str], fn, *args):
    try:
        return fn(*args)
    except ConfigIOError as exc:
        diags.append(f"I/O: {exc}")
    except (MinobsError, ValueError, TypeError, KeyError) as exc:
        diags.append(f"config: {exc}")
    return None


def validate(config: ExperimentConfig) -> list[str]:
    """Every invariant violation the experiment would hit, without running it."""
    diags: list[str] = []
    raw = config.raw
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        diags.append(f"config: unknown experiment {exp!r} (expected one of {', '.join(EXPERIMENTS)})")
        return diags
    if "seed" not in raw:
        diags.append("config: seed is required (no implicit default)")
    elif not isinstance(raw["seed"], int) or isinstance(raw["seed"], bool):
        diags.append(f"config: seed must be an integer, got {raw['seed']!r}")
    if "seed" not in raw:
        return diags

    size = None
    if exp in ("commute", "counterfactual", "moore", "bell-overlap"):
        space = _collect(diags, config.space)
        size = space.size if space else None
        _collect(diags, config.dynamics)
    if exp in ("commute", "counterfactual", "moore"):
        _collect(diags, config.reaction)

    for key in _POVM_KEYS.get(exp, ()):
        if key not in raw:
            diags.append(f"config: {key!r} is required for experiment {exp!r}")
            continue
        p = _collect(diags, config.povm, raw[key])
        if p is None:
            continue
        diags += p.diagnostics()
        if size is not None and p.size != size:
            diags.append(f"config: POVM {key} acts on {p.size} states, channel has {size}")
        if exp == "born":
            empty = [k for k in range(1, len(p)) if not p.inverse_image(k).states]
            if empty:
                diags.append(f"{p.name or key}: component {empty[0]} has an empty inverse image")

    if exp in ("counterfactual", "bell-overlap"):
        for key in ("component_a", "component_b"):
            if key not in raw:
                diags.append(f"config: {key!r} is required for experiment {exp!r}")

    if exp == "moore":
        triples = _collect(diags, config.triples)
        if triples:
            for t in triples:
                diags += t.diagnostics()
                if size is not None and t.identify.size != size:
                    diags.append(f"config: triple {t.system_id} acts on {t.identify.size} states, channel has {size}")
        sched = raw.get("schedule")
        if not isinstance(sched, list) or any((not isinstance(x, int)) or x < 0 for x in sched):
            diags.append("config: schedule must be a list of non-negative integers")
        if "initial_state" not in raw:
            diags.append("config: initial_state is required for experiment 'moore'")
        elif size is not None and not (isinstance(raw["initial_state"], int) and 0 <= raw["initial_state"] < size):
            diags.append(f"config: initial_state {raw['initial_state']!r} outside [0, {size})")

    if exp == "born":
        trials = raw.get("trials")
        if not isinstance(trials, int) or trials < 1:
            diags.append("config: trials must be a positive integer")

    if exp == "decohere":
        from ..decoherence import RCChannel

        _collect(diags, RCChannel.from_config, raw.get("channel", {}))

    # de-duplicate, keep order
    seen = set()
    return [d for d in diags if not (d in seen or seen.add(d))]


def require_valid(config: ExperimentConfig) -> None:
    problems = validate(config)
    if problems:
        raise FixtureError("; ".join(problems))
