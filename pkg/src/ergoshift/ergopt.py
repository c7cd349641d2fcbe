"""Exact ergodic optimization for locally constant observables on edge shifts.

For an edge-weight observable the minimum of ``int f dmu`` over invariant
probability measures is attained on a periodic-orbit measure, so it equals
the minimum cycle mean of the weighted graph. Everything here runs in exact
rational arithmetic when the weights are rational.

Tie-breaking between several minimizing cycles: the canonical witness is the
simple cycle through the smallest (declaration order) vertex lying on any
minimizing cycle, with the lexicographically smallest sequence of edge
indices.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .systems import (
    EdgeWeights,
    FiniteSystem,
    Number,
    Observable,
    SymbolicPoint,
    SystemSpecError,
    is_exact,
    is_zero,
    nonnegative,
    require_edge_weights,
    TOL,
)

BRUTE_FORCE_MAX_VERTICES = 12


class ConsistencyError(RuntimeError):
    """An internal invariant failed; points at an arithmetic or input bug."""


def _mean(total: Number, n: int) -> Number:
    return total / n if is_exact(total) else float(total) / n


def _fmt(x: Number):
    return float(x)


@dataclass(frozen=True)
class MinMeanResult:
    fbar: Number
    witness_cycle: tuple[str, ...]
    method: str

    def to_dict(self) -> dict:
        d = {"fbar": _fmt(self.fbar), "witness_cycle": list(self.witness_cycle), "method": self.method}
        if isinstance(self.fbar, Fraction):
            d["fbar_exact"] = str(self.fbar)
        return d


@dataclass(frozen=True)
class CycleMeasure:
    """Uniform probability on the edges of a closed walk (a periodic-orbit measure)."""

    system: FiniteSystem
    cycle: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "cycle", tuple(self.cycle))
        self.system.check_closed(self.cycle)

    @property
    def weights(self) -> dict[str, Fraction]:
        w: dict[str, Fraction] = {}
        for e in self.cycle:
            w[e] = w.get(e, Fraction(0)) + Fraction(1, len(self.cycle))
        return w

    def flow_imbalance(self) -> dict[str, Fraction]:
        """Per vertex: mass entering minus mass leaving (all zero for an invariant measure)."""
        out = {v: Fraction(0) for v in self.system.vertices}
        for e, m in self.weights.items():
            edge = self.system.edge(e)
            out[edge.target] += m
            out[edge.source] -= m
        return out


def cycle_integral(mu: CycleMeasure, g: Observable) -> Number:
    """``int g dmu``: the mean of ``g`` over the cycle's edges."""
    g = require_edge_weights(g, mu.system)
    return _mean(sum((g[e] for e in mu.cycle), start=Fraction(0) if g.exact else 0.0), len(mu.cycle))


# ---------------------------------------------------------------------------
# minimum cycle mean
# ---------------------------------------------------------------------------


def karp_min_mean(system: FiniteSystem, f: Observable) -> MinMeanResult:
    """Ergodic minimizing value of ``f`` via Karp's minimum mean cycle recurrence.

    ``D[k][v]`` is the minimal weight of a walk with exactly ``k`` edges ending
    at ``v`` (any start), and the minimum cycle mean is
    ``min_v max_k (D[n][v] - D[k][v]) / (n - k)``.
    """
    f = require_edge_weights(f, system)
    n = len(system.vertices)
    idx = {v: i for i, v in enumerate(system.vertices)}
    zero = Fraction(0) if f.exact else 0.0
    D = [[zero] * n]
    for _ in range(n):
        prev, cur = D[-1], [None] * n
        for e in system.edges:
            a = prev[idx[e.source]]
            if a is None:
                continue
            val = a + f[e.id]
            t = idx[e.target]
            if cur[t] is None or val < cur[t]:
                cur[t] = val
        D.append(cur)
    best = None
    for v in range(n):
        if D[n][v] is None:
            continue
        worst = None
        for k in range(n):
            if D[k][v] is None:
                continue
            r = (D[n][v] - D[k][v]) / (n - k)
            if worst is None or r > worst:
                worst = r
        if best is None or worst < best:
            best = worst
    if best is None:
        raise ConsistencyError("graph without cycles; cannot happen for a total shift")
    crit = critical_subgraph(system, f, best)
    return MinMeanResult(best, canonical_cycle(system, crit.edges), "karp")


def simple_cycles(system: FiniteSystem, edges: set[str] | None = None) -> list[tuple[str, ...]]:
    """Every simple cycle (no repeated vertex), rotated to start at its smallest vertex.

    Parallel edges give distinct cycles. Exponential; for small graphs only.
    """
    order = {v: i for i, v in enumerate(system.vertices)}
    found = []
    for s in system.vertices:
        base = order[s]
        stack = [(s, [], {s})]
        while stack:
            v, path, seen = stack.pop()
            for e in reversed(system.out_edges(v)):
                if edges is not None and e.id not in edges:
                    continue
                if e.target == s:
                    found.append(tuple(path + [e.id]))
                elif order[e.target] > base and e.target not in seen:
                    stack.append((e.target, path + [e.id], seen | {e.target}))
    return found


def brute_force_min_cycle_mean(system: FiniteSystem, f: Observable) -> MinMeanResult:
    """Minimum cycle mean by enumerating all simple cycles (oracle for Karp)."""
    f = require_edge_weights(f, system)
    if len(system.vertices) > BRUTE_FORCE_MAX_VERTICES:
        raise SystemSpecError(
            f"system too large for brute force ({len(system.vertices)} > {BRUTE_FORCE_MAX_VERTICES} vertices)"
        )
    best_key, best = None, None
    for cyc in simple_cycles(system):
        mean = _mean(sum(f[e] for e in cyc), len(cyc))
        key = (
            mean,
            system.vertex_index(system.edge(cyc[0]).source),
            tuple(system.edge_index(e) for e in cyc),
        )
        if best_key is None or key < best_key:
            best_key, best = key, cyc
    return MinMeanResult(best_key[0], best, "brute-force")


def min_mean(system: FiniteSystem, f: Observable, method: str = "karp") -> MinMeanResult:
    if method == "karp":
        return karp_min_mean(system, f)
    if method in ("brute", "brute-force"):
        return brute_force_min_cycle_mean(system, f)
    raise ValueError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# critical subgraph (Mather set)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CriticalSubgraph:
    """Tight edges lying on cycles, with the potentials that certify tightness."""

    fbar: Number
    edges: tuple[str, ...]
    vertices: tuple[str, ...]
    potentials: dict

    def to_dict(self) -> dict:
        d = {
            "fbar": _fmt(self.fbar),
            "edges": list(self.edges),
            "vertices": list(self.vertices),
            "potentials": {v: _fmt(p) for v, p in self.potentials.items()},
        }
        if isinstance(self.fbar, Fraction):
            d["fbar_exact"] = str(self.fbar)
        return d


def _strong_components(vertices, succ) -> dict:
    """Tarjan's algorithm; returns vertex -> component id."""
    index, low, comp = {}, {}, {}
    stack, on_stack = [], set()
    counter = [0]

    def visit(v):
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        for w in succ[v]:
            if w not in index:
                visit(w)
                low[v] = min(low[v], low[w])
            elif w in on_stack:
                low[v] = min(low[v], index[w])
        if low[v] == index[v]:
            while True:
                w = stack.pop()
                on_stack.discard(w)
                comp[w] = v
                if w == v:
                    break

    for v in vertices:
        if v not in index:
            visit(v)
    return comp


def critical_subgraph(system: FiniteSystem, f: Observable, fbar: Number) -> CriticalSubgraph:
    """Union of the supports of all minimizing periodic-orbit measures.

    Potentials are Bellman-Ford distances for the reduced weights ``f - fbar``
    from an auxiliary source joined to every vertex by a 0-weight edge. An edge
    is tight when ``f(e) - fbar + phi(source) - phi(target) = 0``; the critical
    subgraph keeps the tight edges inside strongly connected components of the
    tight graph.
    """
    f = require_edge_weights(f, system)
    exact = f.exact and is_exact(fbar)
    if not exact:
        fbar = float(fbar)
    reduced = {e.id: f[e.id] - fbar for e in system.edges}
    phi = {v: (Fraction(0) if exact else 0.0) for v in system.vertices}

    def relax() -> bool:
        changed = False
        for e in system.edges:
            cand = phi[e.source] + reduced[e.id]
            if cand < phi[e.target] and (exact or phi[e.target] - cand > TOL):
                phi[e.target] = cand
                changed = True
        return changed

    for _ in range(len(system.vertices)):
        if not relax():
            break
    else:
        if relax():
            raise ConsistencyError("fbar is not the minimum: negative cycle in reduced weights")
    tight = [
        e for e in system.edges if is_zero(reduced[e.id] + phi[e.source] - phi[e.target])
    ]
    succ = {v: [] for v in system.vertices}
    for e in tight:
        succ[e.source].append(e.target)
    comp = _strong_components(system.vertices, succ)
    kept = tuple(e.id for e in tight if comp[e.source] == comp[e.target])
    if not kept:
        raise ConsistencyError("fbar is below the minimum: no tight cycle")
    on = {system.edge(e).source for e in kept} | {system.edge(e).target for e in kept}
    verts = tuple(v for v in system.vertices if v in on)
    return CriticalSubgraph(fbar, kept, verts, dict(phi))


def canonical_cycle(system: FiniteSystem, edges) -> tuple[str, ...]:
    """Lexicographically smallest simple cycle through the smallest vertex of ``edges``.

    Every vertex touched by ``edges`` must lie on a cycle inside ``edges``.
    """
    allowed = set(edges)
    touched = {system.edge(e).source for e in allowed}
    start = min(touched, key=system.vertex_index)

    def reaches_start(v, blocked) -> bool:
        seen, todo = {v}, [v]
        while todo:
            x = todo.pop()
            for e in system.out_edges(x):
                if e.id not in allowed:
                    continue
                if e.target == start:
                    return True
                if e.target not in seen and e.target not in blocked:
                    seen.add(e.target)
                    todo.append(e.target)
        return False

    path, visited, cur = [], {start}, start
    while True:
        for e in system.out_edges(cur):
            if e.id not in allowed:
                continue
            if e.target == start:
                return tuple(path + [e.id])
            if e.target not in visited and reaches_start(e.target, visited):
                path.append(e.id)
                visited.add(e.target)
                cur = e.target
                break
        else:
            raise ConsistencyError(f"vertex {start!r} lies on no cycle of the given edges")


# ---------------------------------------------------------------------------
# Morris points and balance
# ---------------------------------------------------------------------------


def morris_point(system: FiniteSystem, f: Observable, result: MinMeanResult | None = None) -> SymbolicPoint:
    """A periodic point whose Birkhoff sums of ``f - fbar`` are all ``<= 0``.

    Takes the minimizing witness cycle and starts it at the phase where the
    prefix sums of the reduced weights are largest; every later partial sum
    then lies below that maximum.
    """
    f = require_edge_weights(f, system)
    result = result or karp_min_mean(system, f)
    cyc, fbar = result.witness_cycle, result.fbar
    q = len(cyc)
    prefix, s = [], 0
    for e in cyc:
        prefix.append(s)
        s += f[e] - fbar
    start = max(range(q), key=lambda j: (prefix[j], -j))
    point = SymbolicPoint.periodic(cyc[start:] + cyc[:start])
    total = 0
    for n in range(3 * q):
        total += f[point.orbit_edge(n)] - fbar
        if not nonnegative(-total):
            raise ConsistencyError(f"Morris point check failed at n={n + 1}: sum {total}")
    return point


@dataclass(frozen=True)
class BalanceReport:
    min_integral: Number
    max_integral: Number
    min_witness: tuple[str, ...]
    max_witness: tuple[str, ...]
    balanced: bool

    @property
    def gap(self) -> Number:
        return self.max_integral - self.min_integral

    def to_dict(self) -> dict:
        return {
            "min_integral": _fmt(self.min_integral),
            "max_integral": _fmt(self.max_integral),
            "gap": _fmt(self.gap),
            "min_witness": list(self.min_witness),
            "max_witness": list(self.max_witness),
            "balanced": self.balanced,
        }


def balance_check(system: FiniteSystem, u: Observable) -> BalanceReport:
    """Whether ``int u dmu`` is the same for every invariant measure.

    The extremes over invariant measures are attained on periodic orbits, so
    two minimum-cycle-mean runs (on ``u`` and on ``-u``) decide it.
    """
    u = require_edge_weights(u, system)
    lo = karp_min_mean(system, u)
    hi = karp_min_mean(system, -u)
    top = -hi.fbar
    return BalanceReport(lo.fbar, top, lo.witness_cycle, hi.witness_cycle, is_zero(top - lo.fbar))
