import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from minobs.born import CountTable
from minobs.decoherence import (
    CoarseStateVector,
    Event,
    FixedPhase,
    RCChannel,
    UniformPhase,
    coarse_vector,
    evolve,
    fit_decay_constant,
    impulse,
    impulse_train,
    run_sequence,
    time_averaged_signal,
    uniform_train_response,
)
from minobs.errors import ConfigurationError, DomainError


def test_impulse_zero_amplitude():
    ch = RCChannel(accumulator=0.3 + 0.2j)
    assert impulse(ch, 0.0, 1.0).accumulator == 0.3 + 0.2j


def test_fresh_unit_impulse():
    assert impulse(RCChannel(), 1.0, 0.0).accumulator == 1 + 0j


def test_destructive_pair():
    ch = impulse(impulse(RCChannel(), 1.0, 0.0), 1.0, math.pi)
    assert abs(ch.accumulator) < 1e-15


def test_e_minus_one():
    ch = evolve(impulse(RCChannel.from_rc(2.0), 1.0), 2.0)
    assert ch.magnitude() == pytest.approx(math.exp(-1), rel=1e-15)
    assert ch.now == 2.0


def test_classical_limit_zeroes():
    ch = evolve(impulse(RCChannel(R=3.0, C=0.0), 5.0, 0.4), 1e-9)
    assert ch.accumulator == 0j


def test_classical_history_has_no_memory():
    rng = np.random.default_rng(0)
    events = [Event(float(t), float(a), float(p)) for t, a, p in
              zip(np.arange(1000) * 0.5, rng.uniform(0.1, 3, 1000), rng.uniform(0, 6.28, 1000))]
    a = RCChannel(C=0.0)
    run_sequence(a, events)
    b = RCChannel(C=0.0)
    b.impulse(events[-1].amplitude, events[-1].phase)
    assert a.evolve(0.25).accumulator == b.evolve(0.25).accumulator == 0j


@settings(max_examples=50, deadline=None)
@given(rc=st.floats(0.01, 100), dt1=st.floats(1e-3, 50), dt2=st.floats(1e-3, 50))
def test_semigroup(rc, dt1, dt2):
    a = evolve(evolve(RCChannel.from_rc(rc).impulse(1.0, 0.3), dt1), dt2)
    b = evolve(RCChannel.from_rc(rc).impulse(1.0, 0.3), dt1 + dt2)
    if b.magnitude() > 1e-300:
        assert abs(a.accumulator - b.accumulator) <= 1e-12 * abs(b.accumulator)


def test_impulse_law_relative_error():
    rc = 1.7
    ts = np.linspace(0, 10 * rc, 501)[1:]
    tr = run_sequence(RCChannel.from_rc(rc), [Event(0.0, 1.0, 0.0)], ts)
    got = tr.magnitudes[1:]
    expected = np.exp(-ts / rc)
    assert np.max(np.abs(got - expected) / expected) <= 1e-9


def test_fit_decay_constant():
    rc = 3.25
    ts = np.linspace(0.1, 10 * rc, 200)
    tr = run_sequence(RCChannel.from_rc(rc), [Event(0.0, 1.0, 0.0)], ts)
    assert fit_decay_constant(tr) == pytest.approx(rc, rel=1e-3)


def test_linearity():
    rng = np.random.default_rng(5)
    ts = np.sort(rng.uniform(0, 10, 20))
    e1 = [Event(float(t), float(a), float(p)) for t, a, p in zip(ts, rng.uniform(0, 1, 20), rng.uniform(0, 6, 20))]
    e2 = [Event(float(t), float(a), float(p)) for t, a, p in zip(ts, rng.uniform(0, 1, 20), rng.uniform(0, 6, 20))]
    samples = np.linspace(0.5, 12, 17)
    t1 = run_sequence(RCChannel.from_rc(2.0), e1, samples)
    t2 = run_sequence(RCChannel.from_rc(2.0), e2, samples)
    # superpose each pair as a single impulse carrying the complex sum
    sums = [x.amplitude * np.exp(1j * x.phase) + y.amplitude * np.exp(1j * y.phase) for x, y in zip(e1, e2)]
    both = [Event(x.time, float(abs(z)), float(np.angle(z))) for x, z in zip(e1, sums)]
    t12 = run_sequence(RCChannel.from_rc(2.0), both, samples)
    v1, v2, v12 = (np.array(t.values) for t in (t1, t2, t12))
    assert np.max(np.abs(v1 + v2 - v12)) <= 1e-12


def test_decay_monotone():
    ch = RCChannel.from_rc(0.7).impulse(2.0, 1.0)
    last = ch.magnitude()
    for dt in np.random.default_rng(1).uniform(1e-3, 1.0, 200):
        ch.evolve(float(dt))
        assert ch.magnitude() <= last
        last = ch.magnitude()


def test_coherent_train_increases():
    rc = 1.0
    tr = run_sequence(RCChannel.from_rc(rc), impulse_train(10, rc / 10))
    m = tr.magnitudes
    assert all(b > a for a, b in zip(m, m[1:]))
    # recursion m_{n+1} = m_n e^{-0.1} + 1
    x = 0.0
    for got in m:
        x = x * math.exp(-0.1) + 1 if x else 1.0
        assert got == pytest.approx(x, rel=1e-12)


def test_no_events_flat_zero():
    tr = run_sequence(RCChannel(), [], [1.0, 2.0, 3.0])
    assert tr.magnitudes.tolist() == [0.0, 0.0, 0.0]


def test_lfilter_matches_run_sequence():
    rng = np.random.default_rng(2)
    ph = rng.uniform(0, 2 * math.pi, 50)
    tr = run_sequence(RCChannel.from_rc(0.8), [Event(i * 0.05, 1.0, p) for i, p in enumerate(ph)])
    fast = uniform_train_response(0.8, 0.05, np.exp(1j * ph))
    assert np.max(np.abs(np.array(tr.values) - fast)) <= 1e-12


def test_random_phase_cancellation():
    k = 10**4
    ok = sum(time_averaged_signal(1.0, k, 0.01, seed) <= 3 / math.sqrt(k) for seed in range(100))
    assert ok >= 95


def test_phase_sources():
    assert FixedPhase(0.5)() == 0.5
    a, b = UniformPhase(3), UniformPhase(3)
    draws = [a() for _ in range(100)]
    assert draws == [b() for _ in range(100)]
    assert all(0 <= x < 2 * math.pi for x in draws)


def test_dt_must_be_positive():
    for dt in (0.0, -1.0):
        with pytest.raises(DomainError):
            RCChannel().evolve(dt)


def test_unordered_events():
    with pytest.raises(DomainError):
        run_sequence(RCChannel(), [Event(1.0, 1.0, 0.0), Event(0.5, 1.0, 0.0)])


def test_config_forms():
    assert RCChannel.from_config({"RC": 2.5}).rc == 2.5
    assert RCChannel.from_config({"R": 2.0, "C": 0.5}).rc == 1.0
    for bad in ({}, {"R": 1.0}, {"RC": 1.0, "C": 1.0}):
        with pytest.raises(ConfigurationError):
            RCChannel.from_config(bad)
    with pytest.raises(ConfigurationError):
        RCChannel(R=0.0)


def test_trace_csv():
    tr = run_sequence(RCChannel(), [Event(0.0, 1.0, 0.0)], [1.0])
    lines = tr.to_csv().splitlines()
    assert lines[0] == "time,re,im,magnitude"
    assert len(lines) == 3


def test_coarse_vector_examples():
    v = coarse_vector(CountTable((1, 1)), [0.0, 0.0])
    assert v.amplitudes == pytest.approx((math.sqrt(0.5),) * 2, abs=1e-15)
    v = coarse_vector(CountTable((3, 1)))
    assert v.amplitudes == pytest.approx((math.sqrt(0.75), 0.5), abs=1e-15)
    assert np.allclose(v.as_complex(), [math.sqrt(0.75), 0.5])


@pytest.mark.parametrize("seed", range(100))
def test_coarse_vector_normalised(seed):
    rng = np.random.default_rng(seed)
    c = CountTable(tuple(rng.integers(1, 10**6, size=int(rng.integers(1, 9)))))
    v = coarse_vector(c, seed)
    assert abs(sum(a * a for a in v.amplitudes) - 1) <= 1e-12
    assert all(0 <= p < 2 * math.pi for p in v.phases)


def test_coarse_vector_rejects_bad_input():
    with pytest.raises(DomainError):
        CoarseStateVector((1.0, 1.0), (0.0, 0.0))
    with pytest.raises(DomainError):
        coarse_vector(CountTable((1, 1)), [0.0])
