"""Instance generators: the three benchmark families, the two adversarial
constructions, and the binary-uncertainty knapsack used by the exact oracles."""

from __future__ import annotations

import math

import numpy as np

from .instance import (
    BimodalSpec,
    DiscreteColumnsSpec,
    ResourceAllocInstance,
    RewardMixSpec,
)


def _full_mask(m: int, d: int) -> tuple[tuple[bool, ...], ...]:
    return tuple(tuple(True for _ in range(d)) for _ in range(m))


def gen_knapsack(B: float, psi: float, seed: int, T: int = 50, d: int = 10) -> ResourceAllocInstance:
    """Multi-dimensional knapsack: one supply bin, b_k = T*B, unit rewards."""
    if B <= 0:
        raise ValueError("B must be positive")
    dist = BimodalSpec(1, d, psi, _full_mask(1, d))
    return ResourceAllocInstance(
        T, 1, d, np.full(d, T * B), dist, seed=seed, name=f"knapsack(B={B},psi={psi})"
    )


def gen_gap(B: float, psi: float, seed: int, T: int = 50, m: int = 10, d: int = 50) -> ResourceAllocInstance:
    """Generalized assignment: resources partitioned per supply node.

    Supply j consumes only its own block of d/m resources; each block
    capacity is T*B/m.
    """
    if d != 5 * m:
        raise ValueError("resources must partition 5 per supply node (d = 5m)")
    per = d // m
    mask = tuple(
        tuple(k // per == j for k in range(d)) for j in range(m)
    )
    dist = BimodalSpec(m, d, psi, mask)
    return ResourceAllocInstance(
        T, m, d, np.full(d, T * B / m), dist, seed=seed, name=f"gap(B={B},psi={psi})"
    )


def gen_general(B: float, psi: float, seed: int, T: int = 100, m: int = 10) -> ResourceAllocInstance:
    """General allocation: m single-supply resources (b = TB/m), m/2
    two-supply resources (b = 2TB/m), and 5 half-supply resources (b = TB/2)."""
    if m % 2 != 0 or m < 4:
        raise ValueError("m must be even and at least 4 (half-supply group undefined)")
    groups: list[list[int]] = []
    caps: list[float] = []
    for j in range(m):
        groups.append([j])
        caps.append(T * B / m)
    for h in range(m // 2):
        groups.append([2 * h, 2 * h + 1])
        caps.append(2 * T * B / m)
    for h in range(5):
        groups.append([(2 * h + i) % m for i in range(m // 2)])
        caps.append(T * B / 2)
    d = len(groups)
    mask = tuple(
        tuple(j in groups[k] for k in range(d)) for j in range(m)
    )
    dist = BimodalSpec(m, d, psi, mask)
    return ResourceAllocInstance(
        T, m, d, np.asarray(caps), dist, seed=seed, name=f"general(B={B},psi={psi})"
    )


def gen_prop3_instance(T: int, phi: float, seed: int) -> ResourceAllocInstance:
    """Single resource of capacity sqrt(T), unit sizes, reward 1 with
    probability 1/sqrt(T) and phi otherwise. Myopic fills the budget with
    whatever arrives; the sampling policy saves room for the rare
    high-reward items."""
    if not 0 < phi < 1:
        raise ValueError("phi must lie in (0, 1)")
    root = round(math.sqrt(T))
    dist = RewardMixSpec(1, 1, p_high=1.0 / root, high=1.0, low=phi)
    return ResourceAllocInstance(
        T, 1, 1, np.array([float(root)]), dist, seed=seed, name=f"prop3(T={T},phi={phi})"
    )


def gen_prop4_instance(T: int, d: int, seed: int) -> ResourceAllocInstance:
    """d resources of capacity sqrt(T); an item consumes one unit of a single
    resource with probability 1/sqrt(T) each, or one unit of every resource
    otherwise. The mean item consumes strictly less than one unit of each
    resource, which starves mean-based lookahead."""
    if d <= 2:
        raise ValueError("d must exceed 2")
    if T <= d * d:
        raise ValueError("T must exceed d^2")
    root = round(math.sqrt(T))
    probs = [1.0 / root] * d + [1.0 - d / root]
    cols = []
    for k in range(d):
        e = np.zeros((1, d))
        e[0, k] = 1.0
        cols.append(tuple(e.ravel().tolist()))
    cols.append(tuple(np.ones((1, d)).ravel().tolist()))
    dist = DiscreteColumnsSpec(1, d, tuple(probs), tuple(cols))
    return ResourceAllocInstance(
        T, 1, d, np.full(d, float(root)), dist, seed=seed, name=f"prop4(T={T},d={d})"
    )


def gen_binary_knapsack(T: int, B: int, d: int, seed: int) -> ResourceAllocInstance:
    """One supply, d resources of integer capacity B, consumption entries
    i.i.d. 0/1 with probability one half, unit rewards. The discrete support
    (2^d outcomes) is what the dynamic program and the scenario tree need."""
    n_out = 2**d
    probs = tuple(1.0 / n_out for _ in range(n_out))
    cols = []
    for o in range(n_out):
        a = np.array([[(o >> k) & 1 for k in range(d)]], dtype=float)
        cols.append(tuple(a.ravel().tolist()))
    dist = DiscreteColumnsSpec(1, d, probs, tuple(cols))
    return ResourceAllocInstance(
        T, 1, d, np.full(d, float(B)), dist, seed=seed, name=f"binknap(T={T},B={B},d={d})"
    )
