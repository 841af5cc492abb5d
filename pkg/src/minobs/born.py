"""Outcome probabilities from counting fine states in inverse images."""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from .errors import DomainError, FixtureError
from .povm import Povm

CHUNK = 10_000


@dataclass(frozen=True)
class CountTable:
    """Number of fine states ``m_k`` in each valued inverse image, in component order."""

    counts: tuple[int, ...]
    values: tuple | None = None

    def __post_init__(self):
        counts = tuple(int(m) for m in self.counts)
        if any(m < 0 for m in counts):
            raise DomainError("state counts must be non-negative")
        object.__setattr__(self, "counts", counts)
        if self.values is not None:
            if len(self.values) != len(counts):
                raise DomainError("values and counts differ in length")
            object.__setattr__(self, "values", tuple(self.values))

    @property
    def total(self) -> int:
        return sum(self.counts)

    M = total


def state_counts(p: Povm) -> CountTable:
    if not p.check_orthogonality():
        raise DomainError(f"{p!r} is not orthogonal")
    counts = []
    for k in range(1, len(p)):
        m = len(p.inverse_image(k))
        if m == 0:
            raise FixtureError(f"component {k} of {p!r} has an empty inverse image")
        counts.append(m)
    return CountTable(tuple(counts), p.values[1:])


def born_probabilities(c: CountTable) -> list[Fraction]:
    """``m_k / M`` as exact fractions."""
    M = c.total
    if M <= 0:
        raise DomainError("total state count M must be positive")
    return [Fraction(m, M) for m in c.counts]


def amplitudes_from_counts(c: CountTable) -> np.ndarray:
    """Real amplitudes ``sqrt(m_k / M)``."""
    M = c.total
    if M <= 0:
        raise DomainError("total state count M must be positive")
    return np.sqrt(np.array(c.counts, dtype=float) / M)


@dataclass
class FrequencyReport:
    values: tuple
    counts: tuple[int, ...]          # m_k
    tallies: np.ndarray              # observed outcome counts
    trials: int
    theory: list[Fraction]

    @property
    def frequencies(self) -> np.ndarray:
        return self.tallies / self.trials

    @property
    def chi_square(self) -> float:
        expected = np.array([float(p) for p in self.theory]) * self.trials
        return float(((self.tallies - expected) ** 2 / expected).sum())

    @property
    def dof(self) -> int:
        return len(self.counts) - 1

    def chi_square_quantile(self, q: float = 0.99) -> float:
        return float(stats.chi2.ppf(q, self.dof)) if self.dof else 0.0

    def sigma_bounds(self, n_sigma: float = 3.0) -> np.ndarray:
        """Per-component ``n_sigma`` multinomial half-widths around the theory values."""
        p = np.array([float(x) for x in self.theory])
        return n_sigma * np.sqrt(p * (1 - p) / self.trials)

    @property
    def abs_errors(self) -> np.ndarray:
        return np.abs(self.frequencies - np.array([float(x) for x in self.theory]))

    def within_bounds(self, n_sigma: float = 3.0) -> bool:
        return bool((self.abs_errors <= self.sigma_bounds(n_sigma)).all())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(("component", "value", "m_k", "p_theory", "p_empirical", "abs_error"))
        for k, (v, m, pt, pe, err) in enumerate(
            zip(self.values, self.counts, self.theory, self.frequencies, self.abs_errors), 1
        ):
            w.writerow((k, v, m, repr(float(pt)), repr(float(pe)), repr(float(err))))
        return buf.getvalue()


def _tally_chunk(domain: np.ndarray, labels: np.ndarray, n_components: int, n: int, seed) -> np.ndarray:
    rng = np.random.default_rng(seed)
    picks = domain[rng.integers(0, domain.size, size=n)]
    return np.bincount(labels[picks], minlength=n_components)[1:]


def empirical_frequencies(p: Povm, trials: int, seed: int, workers: int = 1) -> FrequencyReport:
    """Sample initial states uniformly from the union of valued images and tally outcomes.

    Trials are split into fixed chunks of ``CHUNK`` draws, each with its own
    child seed, so the tallies do not depend on ``workers``.
    """
    if trials < 1:
        raise DomainError("trials must be >= 1")
    counts = state_counts(p)
    domain = np.array(sorted(p.image()), dtype=np.int64)
    if domain.size == 0:
        raise DomainError("POVM has no valued inverse image to sample from")
    labels = np.asarray(p.labels, dtype=np.int64)
    sizes = [CHUNK] * (trials // CHUNK) + ([trials % CHUNK] if trials % CHUNK else [])
    seeds = np.random.SeedSequence(seed).spawn(len(sizes))
    jobs = [(domain, labels, len(p), n, sq) for n, sq in zip(sizes, seeds)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(lambda a: _tally_chunk(*a), jobs))
    else:
        parts = [_tally_chunk(*a) for a in jobs]
    tallies = np.sum(parts, axis=0)
    return FrequencyReport(counts.values, counts.counts, tallies, trials, born_probabilities(counts))


def convergence_slope(p: Povm, trial_counts=(10**3, 10**4, 10**5), seeds=range(20)) -> float:
    """Log-log slope of mean max-abs frequency error against trial count."""
    errs = []
    for n in trial_counts:
        errs.append(np.mean([empirical_frequencies(p, n, s).abs_errors.max() for s in seeds]))
    slope, _ = np.polyfit(np.log10(trial_counts), np.log10(errs), 1)
    return float(slope)


def fixture_povm(counts, *, values=None, size: int | None = None, epsilon: float = 0.5) -> Povm:
    """Indicator POVM whose valued images are consecutive runs of ``counts`` states.

    Any states beyond ``sum(counts)`` go to NULL; ``size`` defaults to one
    more than the total so the NULL image is never empty.
    """
    counts = [int(m) for m in counts]
    values = list(values) if values is not None else list(range(1, len(counts) + 1))
    total = sum(counts)
    size = size if size is not None else total + 1
    if size < total:
        raise DomainError("channel smaller than the requested images")
    images, lo = [], 0
    for v, m in zip(values, counts):
        images.append((v, range(lo, lo + m)))
        lo += m
    return Povm.from_images(size, images, epsilon)


def multinomial_sigma(p: float, trials: int) -> float:
    return math.sqrt(p * (1 - p) / trials)
