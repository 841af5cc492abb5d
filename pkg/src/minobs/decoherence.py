"""RC-circuit model of channel memory.

The channel keeps a complex accumulator.  Each transmission adds
``amplitude * exp(i * phase)``; between transmissions the accumulator decays
as ``exp(-dt / RC)``.  With ``C = 0`` nothing is retained.
"""

from __future__ import annotations

import cmath
import csv
import io
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .born import CountTable, amplitudes_from_counts
from .errors import ConfigurationError, DomainError

TWO_PI = 2 * math.pi


@dataclass
class RCChannel:
    R: float = 1.0
    C: float = 1.0
    accumulator: complex = 0j
    now: float = 0.0

    def __post_init__(self):
        if not (self.R > 0 and math.isfinite(self.R)):
            raise ConfigurationError(f"R must be a positive real, got {self.R!r}")
        if not (self.C >= 0 and math.isfinite(self.C)):
            raise ConfigurationError(f"C must be a non-negative real, got {self.C!r}")
        self.accumulator = complex(self.accumulator)

    @classmethod
    def from_rc(cls, rc: float) -> "RCChannel":
        """Channel with ``R = 1`` and the given time constant."""
        return cls(R=1.0, C=float(rc))

    @classmethod
    def from_config(cls, cfg) -> "RCChannel":
        if "RC" in cfg:
            if "R" in cfg or "C" in cfg:
                raise ConfigurationError("give either RC or R and C, not both")
            return cls.from_rc(cfg["RC"])
        try:
            return cls(R=float(cfg["R"]), C=float(cfg["C"]))
        except KeyError:
            raise ConfigurationError("channel config needs RC or both R and C") from None

    @property
    def rc(self) -> float:
        return self.R * self.C

    @property
    def classical(self) -> bool:
        return self.C == 0

    def impulse(self, amplitude: float, phase: float = 0.0) -> "RCChannel":
        self.accumulator += amplitude * cmath.exp(1j * phase)
        return self

    def evolve(self, dt: float) -> "RCChannel":
        if not dt > 0:
            raise DomainError(f"dt must be positive, got {dt!r}")
        if self.classical:
            self.accumulator = 0j
        else:
            self.accumulator *= math.exp(-dt / self.rc)
        self.now += dt
        return self

    def magnitude(self) -> float:
        return abs(self.accumulator)


def impulse(ch: RCChannel, amplitude: float, phase: float = 0.0) -> RCChannel:
    return ch.impulse(amplitude, phase)


def evolve(ch: RCChannel, dt: float) -> RCChannel:
    return ch.evolve(dt)


# -- phase sources ----------------------------------------------------------


class FixedPhase:
    def __init__(self, phase: float = 0.0):
        self.phase = float(phase)

    def __call__(self) -> float:
        return self.phase


class UniformPhase:
    """Independent uniform phases on ``[0, 2*pi)`` from a seeded generator."""

    def __init__(self, seed: int):
        self.seed = seed
        self._rng = np.random.default_rng(seed)

    def __call__(self) -> float:
        return float(self._rng.uniform(0.0, TWO_PI))


@dataclass(frozen=True)
class Event:
    time: float
    amplitude: float = 1.0
    phase: object = 0.0      # float or zero-argument callable


@dataclass
class Trace:
    """Accumulator samples: one per event (after its impulse) plus any requested sample times."""

    times: list[float] = field(default_factory=list)
    values: list[complex] = field(default_factory=list)

    @property
    def magnitudes(self) -> np.ndarray:
        return np.abs(np.array(self.values, dtype=complex))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("time", "re", "im", "magnitude"))
        for t, z in zip(self.times, self.values):
            w.writerow((repr(float(t)), repr(z.real), repr(z.imag), repr(abs(z))))
        return buf.getvalue()


def run_sequence(ch: RCChannel, events: Sequence[Event], sample_times: Iterable[float] = ()) -> Trace:
    """Interleave decay and impulses, sampling after every event and at ``sample_times``."""
    events = [e if isinstance(e, Event) else Event(*e) for e in events]
    for a, b in zip(events, events[1:]):
        if b.time < a.time:
            raise DomainError("events must be time-ordered")
    if events and events[0].time < ch.now:
        raise DomainError("first event precedes the channel clock")
    timeline = [(e.time, 0, e) for e in events] + [(float(t), 1, None) for t in sample_times]
    timeline.sort(key=lambda x: (x[0], x[1]))
    trace = Trace()
    for t, kind, e in timeline:
        if t > ch.now:
            ch.evolve(t - ch.now)
        elif t < ch.now:
            raise DomainError(f"sample time {t} precedes the channel clock {ch.now}")
        if kind == 0:
            phase = e.phase() if callable(e.phase) else float(e.phase)
            ch.impulse(e.amplitude, phase)
        trace.times.append(t)
        trace.values.append(ch.accumulator)
    return trace


def impulse_train(k: int, spacing: float, amplitude: float = 1.0, phase=0.0, start: float = 0.0) -> list[Event]:
    return [Event(start + i * spacing, amplitude, phase) for i in range(k)]


def time_averaged_signal(rc: float, k: int, spacing: float, seed: int, amplitude: float = 1.0) -> float:
    """Time-averaged accumulator of ``k`` random-phase impulses, relative to the coherent case.

    The average is taken over the post-impulse samples and divided by the
    average of the same train with every phase zero, so a value of 1 means
    no cancellation.  The result is scaled by ``amplitude`` to read in the
    units of a single impulse.
    """
    phases = np.random.default_rng(seed).uniform(0.0, TWO_PI, size=k)
    noisy = uniform_train_response(rc, spacing, amplitude * np.exp(1j * phases))
    coherent = uniform_train_response(rc, spacing, np.full(k, amplitude, dtype=complex))
    return float(amplitude * abs(noisy.mean()) / abs(coherent.mean()))


def uniform_train_response(rc: float, spacing: float, impulses: np.ndarray) -> np.ndarray:
    """Post-impulse accumulator values for equally spaced complex impulses.

    Same recursion as :func:`run_sequence` (``acc = acc * decay + z``),
    evaluated with a first-order IIR filter.
    """
    z = np.asarray(impulses, dtype=complex)
    if rc == 0:
        return z.copy()
    decay = math.exp(-spacing / rc)
    return signal.lfilter([1.0], [1.0, -decay], z)


def fit_decay_constant(trace: Trace, t0: float = 0.0) -> float:
    """Least-squares fit of ``log|acc| = a - (t - t0) / RC``; returns the fitted RC."""
    t = np.array(trace.times, dtype=float) - t0
    m = trace.magnitudes
    keep = m > 0
    if keep.sum() < 2:
        raise DomainError("need at least two non-zero samples to fit a decay")
    slope, _ = np.polyfit(t[keep], np.log(m[keep]), 1)
    if slope >= 0:
        raise DomainError("trace does not decay")
    return float(-1.0 / slope)


# -- coarse state vector ----------------------------------------------------


@dataclass(frozen=True)
class CoarseStateVector:
    amplitudes: tuple[float, ...]
    phases: tuple[float, ...]

    def __post_init__(self):
        if len(self.amplitudes) != len(self.phases):
            raise DomainError("amplitudes and phases differ in length")
        norm = sum(a * a for a in self.amplitudes)
        if abs(norm - 1) > 1e-12:
            raise DomainError(f"squared amplitudes sum to {norm!r}, not 1")

    def as_complex(self) -> np.ndarray:
        """Components ``alpha_k * exp(-i phi_k)``."""
        return np.array(self.amplitudes) * np.exp(-1j * np.array(self.phases))


def coarse_vector(c: CountTable, phases: Sequence[float] | int | None = None) -> CoarseStateVector:
    """Amplitudes from state counts; ``phases`` is an explicit list or a seed for uniform phases."""
    amps = amplitudes_from_counts(c)
    if phases is None:
        ph = np.zeros(amps.size)
    elif isinstance(phases, (int, np.integer)) and not isinstance(phases, bool):
        ph = np.random.default_rng(int(phases)).uniform(0.0, TWO_PI, size=amps.size)
    else:
        ph = np.mod(np.asarray(phases, dtype=float), TWO_PI)
        if ph.size != amps.size:
            raise DomainError(f"{ph.size} phases for {amps.size} components")
    return CoarseStateVector(tuple(amps.tolist()), tuple(ph.tolist()))
