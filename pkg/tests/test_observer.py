import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minobs.channel import make_dynamics
from minobs.errors import ConfigurationError, DomainError, FixtureError
from minobs.fixtures import moore_fixture
from minobs.measurement import ReactionMap
from minobs.observer import (
    MinimalObserver,
    ObservationRecord,
    ReactionRequest,
    consistent_states,
    dump_csv,
    load_csv,
    memory_dump,
    record_bits,
    run_observer,
)
from minobs.povm import Povm, PovmTriple

N = 64


def make_triple(system_id, s_img, slots, observables, accept=None, n=N):
    """slots: one image per selector slot; observables: list of {value: image} dicts."""
    return PovmTriple(
        system_id,
        Povm.from_images(n, {float(system_id): s_img}),
        Povm.from_images(n, [(float(j), img) for j, img in enumerate(slots, 1)]),
        tuple(Povm.from_images(n, obs) for obs in observables),
        accept,
    )


@pytest.fixture
def one_triple():
    # identify 0..39, selector slot 1 on 0..29, observable values 3.0 on 0..9 and 4.5 on 10..19
    return make_triple(1, range(40), [range(30)], [{3.0: range(10), 4.5: range(10, 20)}])


def test_no_identification(one_triple):
    o = MinimalObserver([one_triple])
    assert o.run_control_cycle(50) == (None, None)
    assert memory_dump(o) == []
    assert o.tick == 0


def test_single_record(one_triple):
    o = MinimalObserver([one_triple])
    rec, req = o.run_control_cycle(12)
    assert rec == ObservationRecord(1, 1, 1, 4.5)
    assert req == ReactionRequest(1, 1, 2)
    assert o.tick == 1


def test_selector_not_set(one_triple):
    o = MinimalObserver([one_triple])
    assert o.run_control_cycle(35) == (None, None)
    assert o.tick == 0


def test_null_observable_outcome(one_triple):
    o = MinimalObserver([one_triple])
    assert o.run_control_cycle(25) == (None, None)


def test_zero_value_not_recorded():
    t = make_triple(1, range(40), [range(30)], [{0.0: range(10), 2.0: range(10, 20)}])
    o = MinimalObserver([t])
    assert o.run_control_cycle(3) == (None, None)
    assert o.run_control_cycle(13)[0].value == 2.0


def test_second_selector_slot():
    t = make_triple(1, range(40), [range(0, 15), range(15, 30)],
                    [{1.0: range(0, 15)}, {7.0: range(15, 30)}])
    o = MinimalObserver([t])
    rec, _ = o.run_control_cycle(20)
    assert (rec.observable, rec.value) == (2, 7.0)


def test_precedence_lower_index_wins():
    t1 = make_triple(1, range(0, 40), [range(0, 30)], [{1.0: range(0, 30)}])
    t2 = make_triple(2, range(20, 60), [range(20, 50)], [{2.0: range(20, 50)}])
    o = MinimalObserver([t1, t2])
    rec, _ = o.run_control_cycle(25)         # both identify 25
    assert (rec.system, rec.value) == (1, 1.0)
    rec, _ = o.run_control_cycle(45)         # only t2
    assert (rec.system, rec.value, rec.tick) == (2, 2.0, 2)
    o2 = MinimalObserver([t2, t1])
    assert o2.run_control_cycle(25)[0].system == 2


def test_first_accepting_triple_owns_the_cycle():
    # t1 accepts at 35 but its selector is off there; t2 is not consulted
    t1 = make_triple(1, range(0, 40), [range(0, 30)], [{1.0: range(0, 30)}])
    t2 = make_triple(2, range(20, 60), [range(20, 50)], [{2.0: range(20, 50)}])
    assert MinimalObserver([t1, t2]).run_control_cycle(35) == (None, None)


def test_accept_set_filters():
    t = PovmTriple(
        1,
        Povm.from_images(N, [(1.0, range(0, 20)), (2.0, range(20, 40))]),
        Povm.from_images(N, {1.0: range(0, 30)}),
        (Povm.from_images(N, {5.0: range(0, 30)}),),
        frozenset({2.0}),
    )
    o = MinimalObserver([t])
    assert o.run_control_cycle(5) == (None, None)
    assert o.run_control_cycle(25)[0].value == 5.0


def test_malformed_triple_rejected():
    bad = make_triple(1, range(40), [range(30)], [{1.0: range(35, 45)}])
    with pytest.raises(FixtureError):
        MinimalObserver([bad])


def test_record_value_invariants():
    with pytest.raises(DomainError):
        ObservationRecord(1, 1, 1, 0.0)
    with pytest.raises(DomainError):
        ObservationRecord(1, 1, 1, float("inf"))


def test_ticks_and_append_only(one_triple):
    o = MinimalObserver([one_triple])
    for s in (1, 50, 12, 3):
        o.run_control_cycle(s)
    dump = memory_dump(o)
    assert [r.tick for r in dump] == [1, 2, 3]
    dump.clear()
    assert len(memory_dump(o)) == 3


def test_replay_identical_dump():
    triples, d, r = moore_fixture()
    a, _ = run_observer(17, d, triples, [1] * 20, r)
    b, _ = run_observer(17, d, triples, [1] * 20, ReactionMap("reseed", r.seed))
    assert a == b and len(a) > 0


def test_mandatory_recording():
    """Every cycle where identify accepts, the selector fires and the outcome is non-zero appends a record."""
    triples, d, r = moore_fixture()
    t = triples[0]
    o = MinimalObserver(triples)
    s = 3
    for _ in range(200):
        s = d.step(s)
        before = o.tick
        rec, req = o.run_control_cycle(s)
        should = t.accepts(s) and t.selected_slot(s) and t.observables[0].apply(s) not in (None, 0)
        assert (o.tick == before + 1) == bool(should)
        if req:
            s = r.react(s, o.observable(req), req.component, rec.tick)


def test_csv_roundtrip():
    recs = [ObservationRecord(1, 1, 2, 0.1), ObservationRecord(2, 3, 1, -7.0)]
    text = dump_csv(recs)
    assert text.splitlines()[0] == "tick,system,observable,value"
    assert load_csv(text) == recs
    with pytest.raises(ConfigurationError):
        load_csv("a,b\n")


# -- consistent states


def brute_force_consistent(records, d, triples, schedule, reaction):
    """Independent replay: re-implements the control loop inline."""
    out = set()
    for s0 in range(d.size):
        s, mem = s0, []
        for steps in schedule:
            for _ in range(steps):
                s = int(d.forward[s])
            for t in triples:
                if t.identify.apply(s) is None or (t.accept_set is not None and t.identify.apply(s) not in t.accept_set):
                    continue
                j = t.select.outcome_index(s)
                if j:
                    a = t.observables[j - 1]
                    k = a.outcome_index(s)
                    v = a.components[k].value
                    if v is not None and v != 0:
                        mem.append((len(mem) + 1, t.system_id, j, v))
                        if reaction is not None:
                            s = reaction.react(s, a, k, len(mem))
                break
        if mem[: len(records)] == [(r.tick, r.system, r.observable, r.value) for r in records]:
            out.add(s0)
    return out


def test_consistent_empty_records():
    triples, d, r = moore_fixture()
    assert consistent_states([], d, triples, [1] * 5, r) == frozenset(range(256))


def test_consistent_singleton_image_is_preimage():
    n = 32
    d = make_dynamics("generated", 3, n)
    t = PovmTriple(
        1,
        Povm.from_images(n, {1.0: range(0, 16)}),
        Povm.from_images(n, {1.0: range(0, 8)}),
        (Povm.from_images(n, [(2.0, [5]), (3.0, [6])]),),
    )
    rec = [ObservationRecord(1, 1, 1, 2.0)]
    got = consistent_states(rec, d, [t], [3], None)
    assert got == {d.iterate(5, -3)}
    assert got == brute_force_consistent(rec, d, [t], [3], None)


def test_consistent_binary_record_n256():
    triples, d, r = moore_fixture()
    s0 = next(s for s in range(256) if d.step(s) < 200)
    records, _ = run_observer(s0, d, triples, [1], r)
    assert len(records) == 1
    got = consistent_states(records, d, triples, [1], r)
    assert s0 in got
    assert len(got) >= 2
    assert got == brute_force_consistent(records, d, triples, [1], r)


@pytest.mark.parametrize("s0", [0, 99, 150, 239, 255])
def test_consistent_matches_brute_force(s0):
    triples, d, r = moore_fixture()
    sched = [1, 2, 0, 3, 1, 1]
    records, _ = run_observer(s0, d, triples, sched, r)
    for n in range(len(records) + 1):
        assert consistent_states(records[:n], d, triples, sched, r) == brute_force_consistent(records[:n], d, triples, sched, r)


def test_consistent_monotone_and_contains_truth():
    triples, d, r = moore_fixture()
    sched = [1] * 12
    records, _ = run_observer(7, d, triples, sched, r)
    sizes = []
    for n in range(len(records) + 1):
        cs = consistent_states(records[:n], d, triples, sched, r)
        assert 7 in cs
        sizes.append(len(cs))
    assert sizes == sorted(sizes, reverse=True)


def test_record_bits():
    triples, d, r = moore_fixture()
    records, _ = run_observer(7, d, triples, [1] * 4, r)
    assert record_bits(records, triples) == len(records) * 1.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10**6), s0=st.integers(0, 127), cycles=st.integers(1, 6),
       n_values=st.integers(2, 4))
def test_moore_bound(seed, s0, cycles, n_values):
    """Records carrying fewer than log2(N) bits never pin down the initial state."""
    n = 128
    rng = np.random.default_rng(seed)
    s_hi = int(rng.integers(n // 2, n - 1))
    p_hi = int(rng.integers(2 * n_values, s_hi))
    cuts = np.sort(rng.choice(np.arange(1, p_hi), size=n_values - 1, replace=False))
    bounds = [0, *cuts.tolist(), p_hi]
    images = [(float(v + 1), range(bounds[v], bounds[v + 1])) for v in range(n_values)]
    t = PovmTriple(
        1,
        Povm.from_images(n, {1.0: range(s_hi)}),
        Povm.from_images(n, {1.0: range(p_hi)}),
        (Povm.from_images(n, images),),
    )
    d = make_dynamics("generated", seed, n)
    r = ReactionMap("reseed", seed)
    sched = [int(x) for x in rng.integers(0, 3, size=cycles)]
    records, _ = run_observer(s0, d, [t], sched, r)
    if record_bits(records, [t]) < math.log2(n):
        cs = consistent_states(records, d, [t], sched, r)
        assert s0 in cs
        assert len(cs) >= 2
