"""The minimal observer: a control loop over POVM triples with an append-only memory."""

from __future__ import annotations

import csv
import io
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import NamedTuple

from .channel import ReversibleDynamics
from .errors import ConfigurationError, DomainError, FixtureError
from .measurement import ReactionMap
from .povm import NULL, PovmTriple

CSV_HEADER = ("tick", "system", "observable", "value")


@dataclass(frozen=True)
class ObservationRecord:
    tick: int
    system: int
    observable: int
    value: float

    def __post_init__(self):
        if self.value is None or not math.isfinite(self.value):
            raise DomainError(f"record value must be a finite real, got {self.value!r}")
        if self.value == 0:
            raise DomainError("only non-zero values are recorded")


class ReactionRequest(NamedTuple):
    """Which component the observer just read: system ``i``, observable ``j``, component ``k``."""

    system: int
    observable: int
    component: int


class MinimalObserver:
    """Identify, select, measure, record.

    Triples are tried in list order; the first one whose identify POVM
    reads an accepted value handles the cycle.  Each successful recording
    allocates one memory block and advances ``tick`` by one.
    """

    def __init__(self, triples: Iterable[PovmTriple], *, check: bool = True):
        self.triples = tuple(triples)
        if check:
            problems = [msg for t in self.triples for msg in t.diagnostics()]
            if problems:
                raise FixtureError("; ".join(problems))
        self._memory: list[ObservationRecord] = []

    @property
    def tick(self) -> int:
        return len(self._memory)

    def run_control_cycle(self, s: int) -> tuple[ObservationRecord | None, ReactionRequest | None]:
        for t in self.triples:
            if not t.accepts(s):
                continue
            j = t.selected_slot(s)
            if j == 0:
                return None, None
            a = t.observables[j - 1]
            k = a.outcome_index(s)
            value = a.components[k].value
            if value is NULL or value == 0:
                return None, None
            rec = ObservationRecord(self.tick + 1, t.system_id, j, value)
            self._memory.append(rec)
            return rec, ReactionRequest(t.system_id, j, k)
        return None, None

    def memory_dump(self) -> list[ObservationRecord]:
        return list(self._memory)

    def observable(self, req: ReactionRequest):
        """The POVM a reaction request refers to."""
        for t in self.triples:
            if t.system_id == req.system:
                return t.observables[req.observable - 1]
        raise DomainError(f"no triple with system id {req.system}")


def memory_dump(o: MinimalObserver) -> list[ObservationRecord]:
    return o.memory_dump()


def run_observer(
    s0: int,
    d: ReversibleDynamics,
    triples: Sequence[PovmTriple],
    schedule: Sequence[int],
    reaction: ReactionMap | None,
    observer: MinimalObserver | None = None,
) -> tuple[list[ObservationRecord], int]:
    """Evolve ``s0`` and run one control cycle after each schedule entry.

    ``schedule[c]`` is the number of dynamics steps taken before cycle ``c``.
    When a cycle records, ``reaction`` (if given) moves the channel state
    inside the measured image before the next steps.  Returns the memory
    dump and the final fine state.
    """
    o = observer if observer is not None else MinimalObserver(triples)
    s = d.space.check(s0)
    for steps in schedule:
        if steps < 0:
            raise DomainError("schedule entries must be >= 0")
        s = d.iterate(s, steps)
        rec, req = o.run_control_cycle(s)
        if req is not None and reaction is not None:
            s = reaction.react(s, o.observable(req), req.component, tick=rec.tick)
    return o.memory_dump(), s


def consistent_states(
    records: Sequence[ObservationRecord],
    d: ReversibleDynamics,
    triples: Sequence[PovmTriple],
    schedule: Sequence[int],
    reaction: ReactionMap | None = None,
) -> frozenset[int]:
    """Initial states whose replay reproduces ``records``.

    Every fine state is replayed through ``schedule`` (reactions included)
    and kept if its memory starts with ``records`` verbatim.  Records the
    candidate writes after that are not constrained.
    """
    target = list(records)
    if not target:
        return frozenset(range(d.size))
    MinimalObserver(triples)  # validate once
    out = []
    for s0 in range(d.size):
        o = MinimalObserver(triples, check=False)
        dump, _ = run_observer(s0, d, triples, schedule, reaction, observer=o)
        if dump[: len(target)] == target:
            out.append(s0)
    return frozenset(out)


def record_bits(records: Sequence[ObservationRecord], triples: Sequence[PovmTriple]) -> float:
    """Upper bound on the information in ``records``: log2 of the outcome count of each observable read."""
    by_id = {t.system_id: t for t in triples}
    total = 0.0
    for r in records:
        t = by_id.get(r.system)
        if t is None:
            raise DomainError(f"record names unknown system {r.system}")
        total += math.log2(len(t.observables[r.observable - 1]) - 1)
    return total


# -- CSV --------------------------------------------------------------------


def dump_csv(records: Iterable[ObservationRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in records:
        w.writerow((r.tick, r.system, r.observable, repr(float(r.value))))
    return buf.getvalue()


def load_csv(text: str) -> list[ObservationRecord]:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ConfigurationError(f"memory CSV must start with header {','.join(CSV_HEADER)}")
    return [ObservationRecord(int(t), int(i), int(j), float(v)) for t, i, j, v in rows[1:]]
