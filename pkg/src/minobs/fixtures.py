"""Shipped scenarios used by the experiment configs and the acceptance suite."""

from __future__ import annotations

import numpy as np

from .channel import ReversibleDynamics, equal_blocks, make_dynamics
from .measurement import ReactionMap
from .povm import Povm, PovmTriple

FIXTURE_SEED = 7

# tv_distance of the coupled commute fixture under FIXTURE_SEED, canonical reaction
COUPLED_TV = 391 / 1024


def commute_fixture(coupled: bool, size: int = 1024, block: int = 256, seed: int = FIXTURE_SEED):
    """Two observables on disjoint blocks, with block-diagonal or coupled dynamics.

    A reads blocks 0 and 1, B reads blocks 2 and 3.  Block-diagonal dynamics
    keeps the images apart forever; coupled dynamics does not.
    """
    blocks = equal_blocks(size, block)
    kind = "coupled" if coupled else "block-diagonal"
    d = make_dynamics(kind, seed, size, blocks)
    a = Povm.from_images(size, [(1.0, blocks[0]), (2.0, blocks[1])], name="A")
    b = Povm.from_images(size, [(1.0, blocks[2]), (2.0, blocks[3])], name="B")
    return a, b, d, ReactionMap("canonical", seed)


def counterfactual_fixture():
    """16 states; A detects 0..7, B detects 4..11; state 5 sits in both.

    The dynamics swaps 5 and 6 (so free evolution stays inside the
    intersection, forwards and backwards) and swaps 0 and 12 (so the
    canonical reaction of A, which moves to state 0, is carried outside).
    """
    fwd = np.arange(16)
    fwd[[5, 6]] = [6, 5]
    fwd[[0, 12]] = [12, 0]
    d = ReversibleDynamics(fwd, seed=None, kind="generated")
    a = Povm.from_images(16, [(1.0, range(0, 8))], name="A")
    b = Povm.from_images(16, [(1.0, range(4, 12))], name="B")
    return dict(s=5, pA=a, kA=1, pB=b, kB=1, d=d, r=ReactionMap("canonical"))


def moore_fixture(size: int = 256, seed: int = FIXTURE_SEED):
    """One system with a single binary observable on a generated permutation.

    identify detects ``[0, 240)``, the selector's only slot and the
    observable both cover ``[0, 200)``; the observable splits that into
    values 1.0 (``[0, 100)``) and 2.0 (``[100, 200)``).
    """
    identify = Povm.from_images(size, [(1.0, range(0, 240))], name="S")
    select = Povm.from_images(size, [(1.0, range(0, 200))], name="P")
    obs = Povm.from_images(size, [(1.0, range(0, 100)), (2.0, range(100, 200))], name="A1")
    triple = PovmTriple(1, identify, select, (obs,), frozenset({1.0}))
    d = make_dynamics("generated", seed, size)
    return [triple], d, ReactionMap("reseed", seed)
