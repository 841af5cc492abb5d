"""Measurement back-action, order dependence and dynamical overlap of images."""

from __future__ import annotations

import json
from collections import Counter
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .channel import ReversibleDynamics
from .errors import ConfigurationError, DomainError, InvariantViolation
from .povm import NULL, InverseImage, Povm

CANONICAL = "canonical"
RESEED = "reseed"
CUSTOM = "custom"

EXHAUSTIVE_COMMUTE = 2**14


@dataclass(frozen=True)
class ReactionMap:
    """How a measurement disturbs the channel state it reads.

    canonical
        move to the smallest state of the measured inverse image.
    reseed
        move to a pseudorandom member of the measured image, drawn from a
        generator seeded by ``(seed, tick, component)``.
    custom
        call ``transform(s, povm, k, tick)``.

    Every mode must leave the state inside the measured image; :meth:`react`
    enforces that.
    """

    mode: str = RESEED
    seed: int = 0
    transform: Callable[[int, Povm, int, int], int] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.mode not in (CANONICAL, RESEED, CUSTOM):
            raise ConfigurationError(f"unknown reaction mode {self.mode!r}")
        if self.mode == CUSTOM and self.transform is None:
            raise ConfigurationError("custom reaction needs a transform")

    def react(self, s: int, p: Povm, k: int, tick: int = 0) -> int:
        image = _sorted_image(p, k)
        if self.mode == CANONICAL:
            new = int(image[0])
        elif self.mode == RESEED:
            rng = np.random.default_rng([self.seed, tick, k])
            new = int(image[rng.integers(image.size)])
        else:
            new = int(self.transform(s, p, k, tick))
        if not (0 <= new < p.size and p.weights[k, new] >= p.epsilon):
            raise InvariantViolation(f"reaction moved state {s} to {new}, outside the image of component {k}")
        return new

    def to_dict(self) -> dict:
        if self.mode == CUSTOM:
            raise ConfigurationError("custom reactions cannot be serialised")
        return {"mode": self.mode, "seed": self.seed}

    @classmethod
    def from_dict(cls, d) -> "ReactionMap":
        return cls(d.get("mode", RESEED), int(d.get("seed", 0)))


def _sorted_image(p: Povm, k: int) -> np.ndarray:
    return np.flatnonzero(p.weights[k] >= p.epsilon)


def measure(s: int, p: Povm, r: ReactionMap, tick: int = 0):
    """Read ``p`` at ``s`` and apply the back-action.

    Returns ``(value, new_state)``.  A NULL outcome leaves the state alone.
    """
    k = p.outcome_index(s)
    if k == 0:
        return NULL, int(s)
    return p.components[k].value, r.react(int(s), p, k, tick)


# -- order dependence -------------------------------------------------------


@dataclass
class OrderStats:
    """Outcome-pair frequencies for A-then-B and B-then-A, keyed by ``(a, b)``."""

    counts_ab: Counter
    counts_ba: Counter
    trials: int

    @property
    def pairs(self) -> list:
        keys = set(self.counts_ab) | set(self.counts_ba)
        return sorted(keys, key=lambda ab: tuple((x is None, x if x is not None else 0) for x in ab))

    @property
    def p_ab(self) -> dict:
        return {k: Fraction(self.counts_ab.get(k, 0), self.trials) for k in self.pairs}

    @property
    def p_ba(self) -> dict:
        return {k: Fraction(self.counts_ba.get(k, 0), self.trials) for k in self.pairs}

    @property
    def tv_exact(self) -> Fraction:
        diff = sum(abs(self.counts_ab.get(k, 0) - self.counts_ba.get(k, 0)) for k in self.pairs)
        return Fraction(diff, 2 * self.trials)

    @property
    def tv_distance(self) -> float:
        return float(self.tv_exact)

    def noise_threshold(self) -> float:
        """3-sigma multinomial noise level on the TV distance, for sampled runs."""
        ps = [float((self.p_ab[k] + self.p_ba[k]) / 2) for k in self.pairs]
        # each |p_ab - p_ba| has std ~ sqrt(2 p (1-p) / n)
        return 1.5 * sum(np.sqrt(2 * p * (1 - p) / self.trials) for p in ps)

    def to_dict(self) -> dict:
        return {
            "pairs": [
                {"a": a, "b": b, "p_ab": float(self.p_ab[(a, b)]), "p_ba": float(self.p_ba[(a, b)])}
                for a, b in self.pairs
            ],
            "tv_distance": self.tv_distance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def commutator_test(
    pA: Povm,
    pB: Povm,
    d: ReversibleDynamics,
    r: ReactionMap,
    states: Iterable[int] | int | None = None,
    *,
    steps: int = 1,
    seed: int = 0,
) -> OrderStats:
    """Compare outcome pairs for A-then-B against B-then-A.

    For each initial state: measure A, advance ``steps`` ticks, measure B;
    then, from the same initial state, the reverse order.  ``states`` is an
    explicit iterable, an integer sample size drawn uniformly with ``seed``,
    or ``None`` for every state (channels up to ``EXHAUSTIVE_COMMUTE`` states).
    """
    if pA.size != d.size or pB.size != d.size:
        raise DomainError("POVMs and dynamics act on different channel sizes")
    if states is None:
        if d.size > EXHAUSTIVE_COMMUTE:
            raise DomainError(f"{d.size} states is too many for an exhaustive run; pass a sample size")
        states = range(d.size)
    elif isinstance(states, int) and not isinstance(states, bool):
        states = np.random.default_rng(seed).integers(0, d.size, size=states).tolist()
    table = d.power(steps)
    ab: Counter = Counter()
    ba: Counter = Counter()
    n = 0
    for s in states:
        a, s1 = measure(s, pA, r, tick=0)
        b, _ = measure(int(table[s1]), pB, r, tick=1)
        ab[(a, b)] += 1
        b2, s1 = measure(s, pB, r, tick=0)
        a2, _ = measure(int(table[s1]), pA, r, tick=1)
        ba[(a2, b2)] += 1
        n += 1
    if n == 0:
        raise DomainError("commutator test needs at least one initial state")
    return OrderStats(ab, ba, n)


# -- counterfactual conditionals -------------------------------------------


@dataclass(frozen=True)
class CounterfactualReport:
    in_intersection_before: bool
    in_intersection_after_free: bool
    in_intersection_after_measured: bool

    def as_tuple(self) -> tuple[bool, bool, bool]:
        return (self.in_intersection_before, self.in_intersection_after_free, self.in_intersection_after_measured)


def counterfactual_check(
    s: int,
    pA: Povm,
    kA: int,
    pB: Povm,
    kB: int,
    d: ReversibleDynamics,
    r: ReactionMap,
    *,
    tick: int = 0,
) -> CounterfactualReport:
    """Where does a state in ``Im(a_kA) & Im(b_kB)`` go with and without a measurement?

    ``before`` is membership of the predecessor ``step_inverse(s)``,
    ``after_free`` of ``step(s)``, ``after_measured`` of
    ``step(measure(s, pA))``.
    """
    inter = pA.inverse_image(kA).states & pB.inverse_image(kB).states
    s = d.space.check(s)
    if s not in inter:
        raise DomainError(f"state {s} is not in the intersection of the two inverse images")
    _, after = measure(s, pA, r, tick)
    return CounterfactualReport(
        in_intersection_before=d.step_inverse(s) in inter,
        in_intersection_after_free=d.step(s) in inter,
        in_intersection_after_measured=d.step(after) in inter,
    )


# -- dynamical overlap ------------------------------------------------------


def separability_overlap(img1: InverseImage, img2: InverseImage, d: ReversibleDynamics, delta: int) -> frozenset[int]:
    """States of ``img1`` that land in ``img2`` after ``delta`` steps."""
    if delta < 0:
        raise DomainError("delta must be >= 0")
    if not img1.states:
        return frozenset()
    src = np.array(sorted(img1.states), dtype=np.int64)
    dst = d.power(delta)[src]
    mask = np.zeros(d.size, dtype=bool)
    mask[list(img2.states)] = True
    return frozenset(src[mask[dst]].tolist())


def is_separable(pA: Povm, pB: Povm, d: ReversibleDynamics, deltas: Iterable[int]) -> bool:
    """True iff every valued A image and B image have empty overlap, both directions, at every delta."""
    imgs_a = [pA.inverse_image(k) for k in range(1, len(pA))]
    imgs_b = [pB.inverse_image(k) for k in range(1, len(pB))]
    for delta in deltas:
        for ia in imgs_a:
            for ib in imgs_b:
                if separability_overlap(ia, ib, d, delta) or separability_overlap(ib, ia, d, delta):
                    return False
    return True


__all__ = [
    "CANONICAL",
    "RESEED",
    "CUSTOM",
    "EXHAUSTIVE_COMMUTE",
    "ReactionMap",
    "measure",
    "OrderStats",
    "commutator_test",
    "CounterfactualReport",
    "counterfactual_check",
    "separability_overlap",
    "is_separable",
]
