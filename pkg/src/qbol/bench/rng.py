"""Seeded randomness for the harness.

Every run draws from numpy's PCG64 bit generator. A single integer seed is
expanded with ``SeedSequence`` and split into one independent child stream per
named component, so adding a component never perturbs the others' draws.
"""
from __future__ import annotations

import numpy as np

PRNG_NAME = "numpy.random.PCG64 (SeedSequence.spawn per component)"


def component_streams(seed: int, names) -> dict[str, np.random.Generator]:
    """Independent generators keyed by component name, in the order given."""
    names = list(names)
    children = np.random.SeedSequence(int(seed)).spawn(len(names))
    return {n: np.random.Generator(np.random.PCG64(c)) for n, c in zip(names, children)}


def generator(seed: int, component: str = "main", names=None) -> np.random.Generator:
    names = [component] if names is None else list(names)
    return component_streams(seed, names)[component]
