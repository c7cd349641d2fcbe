"""Seeded generators for random edge shifts, weights and points."""

from __future__ import annotations

import random
from fractions import Fraction

from .systems import Edge, EdgeWeights, FiniteSystem, SymbolicPoint


def random_system(rng: random.Random, max_vertices: int = 8, max_edges: int = 20,
                  max_mean_degree: int | None = None) -> FiniteSystem:
    """A total edge shift: every vertex gets one out-edge, then extra random edges.

    ``max_mean_degree`` caps the edge count at that multiple of the vertex count.
    """
    n = rng.randint(1, max_vertices)
    cap = max_edges if max_mean_degree is None else min(max_edges, max_mean_degree * n)
    m = rng.randint(n, max(n, cap))
    vertices = tuple(f"v{i}" for i in range(n))
    ends = [(v, rng.choice(vertices)) for v in vertices]
    ends += [(rng.choice(vertices), rng.choice(vertices)) for _ in range(m - n)]
    rng.shuffle(ends)
    return FiniteSystem(vertices, tuple(Edge(f"e{i}", a, b) for i, (a, b) in enumerate(ends)))


def random_integer_weights(rng: random.Random, system: FiniteSystem, low: int = -10, high: int = 10) -> EdgeWeights:
    return EdgeWeights({e.id: rng.randint(low, high) for e in system.edges})


def random_unit_weights(rng: random.Random, system: FiniteSystem, denominator: int = 100) -> EdgeWeights:
    """Rational weights in ``[0, 1]`` with the given denominator."""
    return EdgeWeights({e.id: Fraction(rng.randint(0, denominator), denominator) for e in system.edges})


def random_point(rng: random.Random, system: FiniteSystem, max_preperiod: int = 3) -> SymbolicPoint:
    """Random walk until a vertex repeats (giving the cycle), then a random path into it."""
    v = rng.choice(system.vertices)
    seen, walk = {v: 0}, []
    while True:
        e = rng.choice(system.out_edges(v))
        walk.append(e.id)
        v = e.target
        if v in seen:
            break
        seen[v] = len(walk)
    cycle = tuple(walk[seen[v]:])
    incoming = {}
    for e in system.edges:
        incoming.setdefault(e.target, []).append(e)
    pre, u = [], system.edge(cycle[0]).source
    for _ in range(rng.randint(0, max_preperiod)):
        if u not in incoming:
            break
        e = rng.choice(incoming[u])
        pre.insert(0, e.id)
        u = e.source
    return SymbolicPoint(tuple(pre), cycle)
