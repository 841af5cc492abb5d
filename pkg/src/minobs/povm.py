"""Coarse observables over a finite channel.

A :class:`Povm` is an ordered list of components.  Component 0 is the NULL
component (value ``None``); every other component carries a finite real
value.  Each component assigns a weight in ``[0, 1]`` to every fine state,
the weights at each state sum to one, and a state is *detected* by a
component when its weight reaches the threshold ``epsilon``.  The set of
detected states is the component's inverse image.
"""

from __future__ import annotations

import json
import math
from collections.abc import Callable, Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigurationError, DomainError, FixtureError, OrthogonalityError

NULL = None
COMPLETENESS_TOL = 1e-12


# -- weight sources ---------------------------------------------------------


@dataclass(frozen=True)
class Support:
    """Weight ``level`` on the listed states, zero elsewhere."""

    states: tuple[int, ...]
    level: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "states", tuple(sorted({int(s) for s in self.states})))

    def table(self, size: int) -> np.ndarray:
        w = np.zeros(size)
        if self.states:
            idx = np.asarray(self.states)
            if idx.min() < 0 or idx.max() >= size:
                raise ConfigurationError(f"support state outside [0, {size})")
            w[idx] = self.level
        return w

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"support": list(self.states)}
        if self.level != 1.0:
            d["level"] = self.level
        return d


@dataclass(frozen=True)
class Table:
    """Explicit per-state weights."""

    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def table(self, size: int) -> np.ndarray:
        if len(self.weights) != size:
            raise ConfigurationError(f"weight table has {len(self.weights)} entries, channel has {size}")
        return np.array(self.weights, dtype=float)

    def to_dict(self) -> dict:
        return {"weights": list(self.weights)}


def _pred_range(size: int, lo: int, hi: int, level: float = 1.0) -> np.ndarray:
    w = np.zeros(size)
    w[max(lo, 0):min(hi, size)] = level
    return w


def _pred_mod(size: int, modulus: int, residue: int, level: float = 1.0) -> np.ndarray:
    w = np.zeros(size)
    w[np.arange(size) % modulus == residue] = level
    return w


PREDICATES: dict[str, Callable[..., np.ndarray]] = {
    "range": _pred_range,
    "mod": _pred_mod,
}


@dataclass(frozen=True)
class Predicate:
    """A named, parameterised weight rule from :data:`PREDICATES`.

    The special name ``"complement"`` means one minus the sum of every other
    component, which is the usual way to write a NULL component.
    """

    name: str
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.name != "complement" and self.name not in PREDICATES:
            raise ConfigurationError(f"unknown weight predicate {self.name!r}")
        object.__setattr__(self, "params", dict(self.params))

    def table(self, size: int) -> np.ndarray:
        if self.name == "complement":
            raise ConfigurationError("complement weights are resolved by the owning Povm")
        try:
            return PREDICATES[self.name](size, **self.params)
        except TypeError as exc:
            raise ConfigurationError(f"bad parameters for predicate {self.name!r}: {exc}") from None

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"predicate": self.name}
        if self.params:
            d["params"] = dict(self.params)
        return d


@dataclass(frozen=True)
class Function:
    """Arbitrary ``state -> weight`` callable; not serialisable."""

    fn: Callable[[int], float]

    def table(self, size: int) -> np.ndarray:
        return np.array([float(self.fn(s)) for s in range(size)])

    def to_dict(self) -> dict:
        raise ConfigurationError("function-backed weights cannot be serialised")


COMPLEMENT = Predicate("complement")


@dataclass(frozen=True)
class PovmComponent:
    value: float | None
    weight: Support | Table | Predicate | Function

    def to_dict(self) -> dict:
        return {"value": self.value, **self.weight.to_dict()}

    @classmethod
    def from_dict(cls, d: Mapping) -> "PovmComponent":
        keys = {"support", "weights", "predicate"} & set(d)
        if len(keys) != 1:
            raise ConfigurationError(f"component needs exactly one of support/weights/predicate, got {sorted(d)}")
        if "support" in d:
            w = Support(tuple(d["support"]), float(d.get("level", 1.0)))
        elif "weights" in d:
            w = Table(tuple(d["weights"]))
        else:
            w = Predicate(d["predicate"], d.get("params", {}))
        return cls(d.get("value"), w)


# -- POVM -------------------------------------------------------------------


@dataclass(frozen=True)
class InverseImage:
    povm: "Povm" = field(repr=False, compare=False)
    component: int
    states: frozenset[int]

    def __len__(self):
        return len(self.states)

    def __contains__(self, s):
        return s in self.states


class Povm:
    """A finite POVM with a NULL component and a detection threshold.

    Parameters
    ----------
    components : sequence of PovmComponent
        Component 0 is the NULL component and must have value ``None``.
    epsilon : float
        Detection threshold in ``(0, 1]``.
    size : int
        Number of fine states of the channel the POVM acts on.
    name : str, optional
        Label used in diagnostics.

    Construction only rejects structural problems.  Completeness,
    orthogonality and value collisions are reported by :meth:`diagnostics`
    so a harness can list every problem at once.
    """

    def __init__(self, components: Sequence[PovmComponent], epsilon: float, size: int, name: str = ""):
        self.components = tuple(components)
        self.epsilon = float(epsilon)
        self.size = int(size)
        self.name = name
        if self.size < 2:
            raise ConfigurationError("POVM size must be >= 2")
        if not 0 < self.epsilon <= 1 or not math.isfinite(self.epsilon):
            raise ConfigurationError(f"epsilon must lie in (0, 1], got {epsilon!r}")
        if len(self.components) < 2:
            raise ConfigurationError("POVM needs a NULL component and at least one valued component")
        if self.components[0].value is not None:
            raise ConfigurationError("component 0 is reserved for NULL and must have value None")
        for k, c in enumerate(self.components[1:], 1):
            if c.value is None or isinstance(c.value, bool) or not math.isfinite(float(c.value)):
                raise ConfigurationError(f"component {k} value must be a finite real, got {c.value!r}")
        complements = [k for k, c in enumerate(self.components) if c.weight == COMPLEMENT]
        if len(complements) > 1:
            raise ConfigurationError("at most one component may use complement weights")

        rows = []
        for c in self.components:
            rows.append(None if c.weight == COMPLEMENT else np.asarray(c.weight.table(self.size), dtype=float))
        if complements:
            others = sum(r for r in rows if r is not None)
            rows[complements[0]] = 1.0 - others
        w = np.vstack(rows)
        w.flags.writeable = False
        self.weights = w

        detected = w[1:] >= self.epsilon
        hits = detected.sum(axis=0)
        labels = np.where(hits == 1, detected.argmax(axis=0) + 1, 0)
        labels[hits > 1] = -1
        labels.flags.writeable = False
        self._labels = labels
        self._null_detected = w[0] >= self.epsilon

    # -- basic accessors

    def __len__(self):
        return len(self.components)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"<Povm{label} K={len(self)} N={self.size} eps={self.epsilon}>"

    @property
    def values(self) -> tuple:
        return tuple(c.value for c in self.components)

    @property
    def labels(self) -> np.ndarray:
        """Per-state detected component index; 0 for NULL, -1 where components overlap."""
        return self._labels

    def _check_state(self, s) -> int:
        i = int(s)
        if i != s or not 0 <= i < self.size:
            raise DomainError(f"fine state {s!r} outside [0, {self.size})")
        return i

    def _check_index(self, k) -> int:
        if int(k) != k or not 0 <= k < len(self):
            raise DomainError(f"component index {k!r} outside [0, {len(self)})")
        return int(k)

    # -- operations

    def inverse_image(self, k: int) -> InverseImage:
        k = self._check_index(k)
        states = np.flatnonzero(self.weights[k] >= self.epsilon)
        return InverseImage(self, k, frozenset(states.tolist()))

    def image(self) -> frozenset[int]:
        """Union of the non-NULL inverse images."""
        return frozenset(np.flatnonzero((self.weights[1:] >= self.epsilon).any(axis=0)).tolist())

    def outcome_index(self, s: int) -> int:
        """Index of the detected non-NULL component at ``s``, or 0 for NULL."""
        k = int(self._labels[self._check_state(s)])
        if k < 0:
            hot = [j for j in range(1, len(self)) if self.weights[j, s] >= self.epsilon]
            raise OrthogonalityError(f"state {s} detected by components {hot} of {self!r}")
        return k

    def apply(self, s: int):
        """Recorded value at ``s``: the value of the detected component, or NULL."""
        return self.components[self.outcome_index(s)].value

    def index_of(self, value) -> int:
        for k, c in enumerate(self.components[1:], 1):
            if c.value == value:
                return k
        raise DomainError(f"value {value!r} is not an outcome of {self!r}")

    # -- checks

    def completeness_violations(self, tol: float = COMPLETENESS_TOL) -> np.ndarray:
        return np.flatnonzero(np.abs(self.weights.sum(axis=0) - 1.0) > tol)

    def check_completeness(self, tol: float = COMPLETENESS_TOL) -> bool:
        return self.completeness_violations(tol).size == 0

    def check_orthogonality(self) -> bool:
        if (self._labels < 0).any():
            return False
        return not (self._null_detected & (self._labels > 0)).any()

    def diagnostics(self) -> list[str]:
        """Every invariant violation, one readable line each."""
        tag = self.name or "povm"
        out = []
        w = self.weights
        bad = np.argwhere((w < 0) | (w > 1))
        if bad.size:
            k, s = bad[0]
            out.append(f"{tag}: weight out of [0,1] ({w[k, s]!r}) at component {k}, state {s}"
                       f" ({len(bad)} entries total)")
        viol = self.completeness_violations()
        if viol.size:
            s = int(viol[0])
            out.append(f"{tag}: completeness: sum of weights = {w[:, s].sum():.12g} at state {s}"
                       f" ({viol.size} states total)")
        overlap = np.flatnonzero(self._labels < 0)
        if overlap.size:
            out.append(f"{tag}: orthogonality: state {int(overlap[0])} detected by two non-NULL components"
                       f" ({overlap.size} states total)")
        null_clash = np.flatnonzero(self._null_detected & (self._labels != 0))
        if null_clash.size:
            out.append(f"{tag}: orthogonality: state {int(null_clash[0])} detected by NULL and a valued component")
        seen: dict = {}
        for k, v in enumerate(self.values[1:], 1):
            if v in seen:
                out.append(f"{tag}: value collision: components {seen[v]} and {k} both record {v!r}")
            seen.setdefault(v, k)
        return out

    # -- construction helpers and serialisation

    @classmethod
    def from_images(cls, size: int, images: Mapping[float, Iterable[int]] | Sequence[tuple[float, Iterable[int]]],
                    epsilon: float = 0.5, name: str = "") -> "Povm":
        """Indicator POVM: each value owns its listed states, NULL owns the rest."""
        pairs = images.items() if isinstance(images, Mapping) else images
        comps = [PovmComponent(None, COMPLEMENT)]
        comps += [PovmComponent(v, Support(tuple(states))) for v, states in pairs]
        return cls(comps, epsilon, size, name)

    def to_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "size": self.size,
            "components": [c.to_dict() for c in self.components],
        }

    @classmethod
    def from_dict(cls, d: Mapping, name: str = "") -> "Povm":
        try:
            comps = [PovmComponent.from_dict(c) for c in d["components"]]
            return cls(comps, d["epsilon"], d["size"], name or d.get("name", ""))
        except KeyError as exc:
            raise ConfigurationError(f"POVM document missing key {exc}") from None

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_json(cls, text: str, name: str = "") -> "Povm":
        return cls.from_dict(json.loads(text), name)

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path, name: str = "") -> "Povm":
        return cls.from_json(Path(path).read_text(), name or Path(path).stem)


def inverse_image(p: Povm, k: int) -> InverseImage:
    return p.inverse_image(k)


def apply(p: Povm, s: int):
    return p.apply(s)


def check_orthogonality(p: Povm) -> bool:
    return p.check_orthogonality()


# -- triples ----------------------------------------------------------------


@dataclass(frozen=True)
class PovmTriple:
    """Identify / select / measure POVMs for one identifiable system.

    ``select`` has one valued component per observable slot: the detected
    component ``j`` means the selector points at ``observables[j - 1]``.
    ``accept_set`` lists the identify values that mark the system as ready;
    ``None`` accepts any detected identify value.
    """

    system_id: int
    identify: Povm
    select: Povm
    observables: tuple[Povm, ...]
    accept_set: frozenset | None = None

    def __post_init__(self):
        object.__setattr__(self, "observables", tuple(self.observables))
        if self.accept_set is not None:
            object.__setattr__(self, "accept_set", frozenset(self.accept_set))

    def povms(self) -> list[Povm]:
        return [self.identify, self.select, *self.observables]

    def accepts(self, s: int) -> bool:
        v = self.identify.apply(s)
        if v is NULL:
            return False
        return self.accept_set is None or v in self.accept_set

    def selected_slot(self, s: int) -> int:
        """1-based observable slot the selector points at, or 0 if none."""
        return self.select.outcome_index(s)

    def diagnostics(self) -> list[str]:
        tag = f"triple {self.system_id}"
        out = []
        sizes = {p.size for p in self.povms()}
        if len(sizes) != 1:
            return [f"{tag}: POVMs act on channels of different sizes {sorted(sizes)}"]
        n = sizes.pop()
        for p in self.povms():
            out += p.diagnostics()
        if len(self.select) - 1 != len(self.observables):
            out.append(f"{tag}: selector has {len(self.select) - 1} slots for {len(self.observables)} observables")
        s_img = self.identify.image()
        if not s_img:
            out.append(f"{tag}: containment: identify image is empty")
        elif len(s_img) == n:
            out.append(f"{tag}: containment: identify image is the whole channel (must be proper)")
        for label, p in [("select", self.select)] + [(f"observable {j}", a) for j, a in enumerate(self.observables, 1)]:
            img = p.image()
            if not img:
                out.append(f"{tag}: containment: {label} image is empty")
            elif not img <= s_img:
                stray = min(img - s_img)
                out.append(f"{tag}: containment: {label} image not inside identify image (state {stray})")
            elif img == s_img:
                out.append(f"{tag}: containment: {label} image equals identify image (must be proper)")
        if self.accept_set is not None:
            unknown = set(self.accept_set) - set(self.identify.values[1:])
            if unknown:
                out.append(f"{tag}: accept set names unknown identify values {sorted(unknown)}")
        return out

    def check(self) -> bool:
        return not self.diagnostics()


def check_triple(t: PovmTriple) -> bool:
    """True iff images are non-empty and selector/observable images sit properly inside the identify image."""
    n = t.identify.size
    if any(p.size != n for p in t.povms()):
        return False
    s_img = t.identify.image()
    if not s_img or len(s_img) == n:
        return False
    for p in (t.select, *t.observables):
        img = p.image()
        if not img or not img < s_img:
            return False
    return True


def validate_triple(t: PovmTriple) -> None:
    problems = t.diagnostics()
    if problems:
        raise FixtureError("; ".join(problems))
