"""Fine-grained channel states and reversible, deterministic dynamics.

A channel is a finite set of fine states ``0 .. N-1``.  Its dynamics is a
permutation of that set, so every step can be undone exactly.  Nothing in
this module knows about observables or observers: a step consumes the fine
state and nothing else.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigurationError, DomainError

#: Fine states are plain integer indices into a :class:`ChannelSpace`.
FineState = int

DEFAULT_SIZE = 2**10
EXHAUSTIVE_LIMIT = 2**16


@dataclass(frozen=True)
class ChannelSpace:
    """The set of fine states ``[0, size)``."""

    size: int

    def __post_init__(self):
        if int(self.size) != self.size or self.size < 2:
            raise ConfigurationError(f"channel size must be an integer >= 2, got {self.size!r}")

    def check(self, s) -> int:
        """Return ``s`` as an int, raising DomainError if it is not a state of this space."""
        try:
            i = int(s)
        except (TypeError, ValueError):
            raise DomainError(f"fine state must be an integer, got {s!r}") from None
        if i != s or not 0 <= i < self.size:
            raise DomainError(f"fine state {s!r} outside [0, {self.size})")
        return i

    def states(self) -> range:
        return range(self.size)


class DynamicsKind(str, enum.Enum):
    GENERATED = "generated"
    BLOCK_DIAGONAL = "block-diagonal"
    COUPLED = "coupled"
    IDENTITY = "identity"


@dataclass(frozen=True, eq=False)
class ReversibleDynamics:
    """A bijection on the fine states of a channel.

    ``forward[s]`` is the successor of ``s``.  The array is frozen after
    construction and the inverse table is derived once, so instances can be
    shared between threads.
    """

    forward: np.ndarray
    seed: int | None = None
    kind: DynamicsKind = DynamicsKind.GENERATED
    blocks: tuple[tuple[int, ...], ...] | None = None
    inverse: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        fwd = np.array(self.forward, dtype=np.int64, copy=True).reshape(-1)
        n = fwd.size
        if n < 2:
            raise ConfigurationError("dynamics needs at least 2 states")
        if fwd.min() < 0 or fwd.max() >= n or np.unique(fwd).size != n:
            raise ConfigurationError("forward map is not a permutation of [0, N)")
        inv = np.empty_like(fwd)
        inv[fwd] = np.arange(n, dtype=np.int64)
        fwd.flags.writeable = False
        inv.flags.writeable = False
        object.__setattr__(self, "forward", fwd)
        object.__setattr__(self, "inverse", inv)
        object.__setattr__(self, "kind", DynamicsKind(self.kind))

    @property
    def space(self) -> ChannelSpace:
        return ChannelSpace(self.size)

    @property
    def size(self) -> int:
        return int(self.forward.size)

    def _check(self, s) -> int:
        return self.space.check(s)

    def step(self, s: FineState, *, partition: Mapping | None = None) -> FineState:
        """Advance one tick.

        ``partition`` is observer-side labelling that callers may attach; the
        dynamics never reads it (decompositional equivalence).
        """
        return int(self.forward[self._check(s)])

    def step_inverse(self, s: FineState) -> FineState:
        return int(self.inverse[self._check(s)])

    def power(self, n: int) -> np.ndarray:
        """Return the table of ``forward`` composed with itself ``n`` times (``n`` may be negative)."""
        base = self.forward if n >= 0 else self.inverse
        n = abs(int(n))
        result = np.arange(self.size, dtype=np.int64)
        while n:
            if n & 1:
                result = base[result]
            base = base[base]
            n >>= 1
        return result

    def iterate(self, s: FineState, n: int) -> FineState:
        s = self._check(s)
        if n == 0:
            return s
        if abs(n) <= 64:
            table = self.forward if n > 0 else self.inverse
            for _ in range(abs(n)):
                s = int(table[s])
            return s
        return int(self.power(n)[s])

    def trajectory(self, s: FineState, horizon: int) -> list[int]:
        """States visited from ``s`` over ``horizon`` steps, ``s`` included."""
        s = self._check(s)
        out = [s]
        for _ in range(horizon):
            s = int(self.forward[s])
            out.append(s)
        return out

    def dump(self, path) -> None:
        """Write the permutation table as ``s forward(s)`` lines."""
        Path(path).write_text(permutation_table(self))

    @classmethod
    def load(cls, path, *, seed: int | None = None) -> "ReversibleDynamics":
        return parse_permutation_table(Path(path).read_text(), seed=seed)

    def __eq__(self, other):
        if not isinstance(other, ReversibleDynamics):
            return NotImplemented
        return np.array_equal(self.forward, other.forward)

    __hash__ = None


def step(s: FineState, d: ReversibleDynamics) -> FineState:
    return d.step(s)


def step_inverse(s: FineState, d: ReversibleDynamics) -> FineState:
    return d.step_inverse(s)


def permutation_table(d: ReversibleDynamics) -> str:
    return "".join(f"{s} {f}\n" for s, f in enumerate(d.forward.tolist()))


def parse_permutation_table(text: str, *, seed: int | None = None) -> ReversibleDynamics:
    pairs = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ConfigurationError(f"line {lineno}: expected 's forward(s)', got {line!r}")
        s, f = (int(p) for p in parts)
        if s in pairs:
            raise ConfigurationError(f"line {lineno}: state {s} listed twice")
        pairs[s] = f
    n = len(pairs)
    if sorted(pairs) != list(range(n)):
        raise ConfigurationError("permutation table does not cover [0, N)")
    return ReversibleDynamics(np.array([pairs[s] for s in range(n)]), seed=seed, kind=DynamicsKind.GENERATED)


def _normalize_blocks(blocks, size: int) -> tuple[tuple[int, ...], ...]:
    if blocks is None:
        raise ConfigurationError("this dynamics kind requires a block partition")
    out = tuple(tuple(int(s) for s in b) for b in blocks)
    seen = [s for b in out for s in b]
    if any(len(b) == 0 for b in out):
        raise ConfigurationError("blocks must be non-empty")
    if len(seen) != size or sorted(seen) != list(range(size)):
        raise ConfigurationError(f"blocks do not partition [0, {size})")
    return out


def equal_blocks(size: int, block_size: int) -> list[range]:
    """Split ``[0, size)`` into consecutive ranges of ``block_size`` states."""
    if block_size < 1 or size % block_size:
        raise ConfigurationError(f"block size {block_size} does not divide {size}")
    return [range(lo, lo + block_size) for lo in range(0, size, block_size)]


def make_dynamics(
    kind: str | DynamicsKind,
    seed: int,
    space: ChannelSpace | int,
    blocks: Iterable[Sequence[int]] | None = None,
    *,
    designated: int = 0,
) -> ReversibleDynamics:
    """Construct a reversible dynamics.

    generated
        uniform pseudorandom permutation of the whole space.
    block-diagonal
        independent pseudorandom permutation inside each block.
    coupled
        pseudorandom permutation of the whole space that maps at least one
        state of ``blocks[designated]`` outside that block.
    identity
        ``forward(s) = s``.
    """
    kind = DynamicsKind(kind)
    if not isinstance(space, ChannelSpace):
        space = ChannelSpace(space)
    n = space.size
    rng = np.random.default_rng(seed)

    if kind is DynamicsKind.IDENTITY:
        part = _normalize_blocks(blocks, n) if blocks is not None else None
        return ReversibleDynamics(np.arange(n), seed=seed, kind=kind, blocks=part)

    if kind is DynamicsKind.GENERATED:
        return ReversibleDynamics(rng.permutation(n), seed=seed, kind=kind)

    part = _normalize_blocks(blocks, n)
    if kind is DynamicsKind.BLOCK_DIAGONAL:
        fwd = np.empty(n, dtype=np.int64)
        for b in part:
            idx = np.array(b, dtype=np.int64)
            fwd[idx] = rng.permutation(idx)
        return ReversibleDynamics(fwd, seed=seed, kind=kind, blocks=part)

    # coupled
    if not 0 <= designated < len(part):
        raise ConfigurationError(f"designated block {designated} out of range")
    target = np.array(part[designated], dtype=np.int64)
    if target.size == n:
        raise ConfigurationError("designated block covers the whole space; nothing to couple to")
    fwd = rng.permutation(n)
    inside = np.zeros(n, dtype=bool)
    inside[target] = True
    if inside[fwd[target]].all():
        # swap successors with a state outside the block so one edge leaves it
        outside = np.flatnonzero(~inside)
        a = int(target[0])
        b = int(outside[rng.integers(outside.size)])
        fwd[a], fwd[b] = fwd[b], fwd[a]
    return ReversibleDynamics(fwd, seed=seed, kind=kind, blocks=part)


def relabel(partition: Mapping[int, object] | Sequence, rng: np.random.Generator) -> dict[int, object]:
    """Randomly permute the labels of a state->label partition."""
    items = dict(partition) if isinstance(partition, Mapping) else dict(enumerate(partition))
    keys = list(items)
    values = [items[k] for k in keys]
    order = rng.permutation(len(values))
    return {k: values[i] for k, i in zip(keys, order)}


def check_decompositional_equivalence(
    d,
    trajectories_from: Iterable[FineState],
    horizon: int,
    *,
    partition: Mapping[int, object] | Sequence | None = None,
    relabelings: int = 3,
    seed: int = 0,
) -> bool:
    """True iff no trajectory changes when observer partition labels are attached.

    Each trajectory is computed once bare and then again with ``partition``
    (and ``relabelings`` random permutations of its labels) passed to
    ``d.step``.  ``d`` only needs a ``step(s, *, partition=None)`` method, so
    test doubles that do read the labels can be checked too.
    """
    starts = [int(s) for s in trajectories_from]
    rng = np.random.default_rng(seed)
    if partition is None:
        # arbitrary coarse labelling: parity of the state
        partition = {s: s % 2 for s in range(d.size)}
    labelings = [dict(partition) if isinstance(partition, Mapping) else dict(enumerate(partition))]
    labelings += [relabel(labelings[0], rng) for _ in range(relabelings)]

    for s0 in starts:
        bare = [s0]
        s = s0
        for _ in range(horizon):
            s = d.step(s)
            bare.append(s)
        for labels in labelings:
            s = s0
            for t in range(horizon):
                s = d.step(s, partition=labels)
                if s != bare[t + 1]:
                    return False
    return True
