"""Transfer functions built from Birkhoff sums, and the checks around them.

For ``g = f - fbar`` the transfer function is

    u(omega) = - inf_{n >= 1} sum_{k < n} g(sigma^k omega),

and its positive part ``u+`` satisfies ``f - fbar >= u+ o sigma - u+``
everywhere, with equality along minimizing orbits.

On an eventually periodic point with preperiod ``p`` and period ``q`` the
Birkhoff sums are periodic-affine in ``n``: ``S(n + q) = S(n) + S_cyc`` for
``n >= p``. The infimum is therefore attained within ``p + q`` steps when the
lap sum ``S_cyc`` is nonnegative, and is ``-inf`` when it is negative.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ergopt import CriticalSubgraph
from .systems import (
    FiniteSystem,
    Fourier,
    Number,
    Observable,
    RotationSystem,
    SymbolicPoint,
    closed_walks,
    is_exact,
    is_zero,
    nonnegative,
    require_edge_weights,
    value_sequence,
    TOL,
)


class UnboundedError(ArithmeticError):
    """Birkhoff sums of ``f - fbar`` are unbounded below at this point, so ``u = +inf``."""


def reduced_sequence(point: SymbolicPoint, system: FiniteSystem, f: Observable, fbar: Number):
    pre, cyc = value_sequence(f, system, point)
    return tuple(v - fbar for v in pre), tuple(v - fbar for v in cyc)


def birkhoff_extreme(pre, cyc, horizon: int | None = None, largest: bool = False):
    """Minimum (or maximum) of ``S_n`` over ``1 <= n <= horizon`` and the first ``n`` attaining it.

    ``horizon=None`` means all ``n >= 1``; the result is then ``(-inf, None)``
    (or ``(+inf, None)``) when the sums drift without bound.
    """
    sign = -1 if largest else 1
    pre = [sign * v for v in pre]
    cyc = [sign * v for v in cyc]
    p, q = len(pre), len(cyc)
    lap = sum(cyc)
    sums, s = [], 0
    for v in pre + cyc:
        s += v
        sums.append(s)
    limit = p + q if horizon is None else min(horizon, p + q)
    best, best_n = None, None
    for n in range(1, limit + 1):
        if best is None or sums[n - 1] < best:
            best, best_n = sums[n - 1], n
    if horizon is None:
        if lap < 0 and not is_zero(lap):
            return (sign * -math.inf, None)
    elif horizon > p + q and lap < 0:
        for n0 in range(p + 1, p + q + 1):
            j = (horizon - n0) // q
            val, n = sums[n0 - 1] + j * lap, n0 + j * q
            if val < best or (val == best and n < best_n):
                best, best_n = val, n
    return sign * best, best_n


@dataclass(frozen=True)
class TransferValue:
    value: Number
    attained_n: int | None
    exactness: str
    horizon: int | None = None

    @property
    def unbounded(self) -> bool:
        return self.exactness == "unbounded"


def transfer_value(point: SymbolicPoint, system: FiniteSystem, f: Observable, fbar: Number) -> TransferValue:
    """Exact ``u(omega) = -inf_n S_n(omega)``; ``exactness="unbounded"`` when that is ``+inf``."""
    pre, cyc = reduced_sequence(point, system, f, fbar)
    low, n = birkhoff_extreme(pre, cyc)
    if n is None:
        return TransferValue(math.inf, None, "unbounded")
    return TransferValue(-low, n, "exact" if is_exact(low) else "float")


def truncated_transfer_value(x: float, system: RotationSystem, f: Fourier, fbar: float, horizon: int) -> TransferValue:
    """``u_N(x) = -min_{1 <= n <= N} S_n(x)`` on a rotation; nondecreasing in ``N``."""
    k = np.arange(horizon)
    sums = np.cumsum(f(system.orbit_angle(x, k)) - fbar)
    i = int(np.argmin(sums))
    return TransferValue(float(-sums[i]), i + 1, "truncated", horizon)


def _finite(tv: TransferValue, point) -> Number:
    if tv.unbounded:
        raise UnboundedError(f"Birkhoff sums unbounded below at {point.label()}")
    return tv.value


def u_plus(point: SymbolicPoint, system: FiniteSystem, f: Observable, fbar: Number) -> Number:
    u = _finite(transfer_value(point, system, f, fbar), point)
    return max(u, 0 * u)


@dataclass(frozen=True)
class DefectValue:
    """``f(omega) - fbar - u+(sigma omega) + u+(omega)``, expected ``>= 0``."""

    value: Number
    point: SymbolicPoint
    reduced: Number
    u_plus_point: Number
    u_plus_shifted: Number


def defect(point: SymbolicPoint, system: FiniteSystem, f: Observable, fbar: Number) -> DefectValue:
    pre, cyc = reduced_sequence(point, system, f, fbar)
    g0 = (pre + cyc)[0]
    here = u_plus(point, system, f, fbar)
    there = u_plus(point.shift(), system, f, fbar)
    return DefectValue(g0 - there + here, point, g0, here, there)


@dataclass
class SubcohomologyReport:
    passed: bool
    min_defect: Number | None
    witnesses: list[str]
    unbounded: list[str]
    rows: list[dict] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "pass": self.passed,
            "min_defect": None if self.min_defect is None else float(self.min_defect),
            "witnesses": self.witnesses,
            "unbounded": self.unbounded,
            "n_points": len(self.rows),
        }


def point_row(point_id, point: SymbolicPoint, system, f, fbar) -> dict:
    """One row of the point-sweep table (``point_id, u, u_plus, defect, exactness, attained_n``)."""
    tv = transfer_value(point, system, f, fbar)
    row = {"point_id": point_id, "u": tv.value, "u_plus": None, "defect": None,
           "exactness": tv.exactness, "attained_n": tv.attained_n}
    if not tv.unbounded:
        row["u_plus"] = max(tv.value, 0 * tv.value)
        try:
            row["defect"] = defect(point, system, f, fbar).value
        except UnboundedError:
            row["exactness"] = "unbounded-at-shift"
    return row


def verify_subcohomology(points, system: FiniteSystem, f: Observable, fbar: Number) -> SubcohomologyReport:
    """Check ``f - fbar >= u+ o sigma - u+`` on every sampled point with finite ``u``."""
    rows = [point_row(p.label(), p, system, f, fbar) for p in points]
    finite = [r for r in rows if r["defect"] is not None]
    unbounded = [r["point_id"] for r in rows if r["defect"] is None]
    if not finite:
        return SubcohomologyReport(True, None, [], unbounded, rows)
    low = min(r["defect"] for r in finite)
    bad = [r["point_id"] for r in finite if not nonnegative(r["defect"])]
    witnesses = bad or [r["point_id"] for r in finite if r["defect"] == low][:5]
    return SubcohomologyReport(not bad, low, witnesses, unbounded, rows)


@dataclass(frozen=True)
class BoundEstimate:
    """``C = max(0, max -S_n(omega))`` over a declared sample of points and horizons."""

    C: Number
    n_points: int
    horizon: int | None
    witness: str | None
    unbounded: tuple[str, ...] = ()

    @property
    def finite(self) -> bool:
        return not self.unbounded

    def to_dict(self) -> dict:
        return {"C": float(self.C) if self.finite else None, "n_points": self.n_points,
                "horizon": self.horizon, "witness": self.witness, "unbounded": list(self.unbounded)}


def estimate_C(points, system: FiniteSystem, f: Observable, fbar: Number, horizon: int | None = None) -> BoundEstimate:
    """Smallest ``C >= 0`` with ``S_n(omega) >= -C`` over the sample (all ``n`` when ``horizon`` is None)."""
    C, witness, unbounded = 0, None, []
    for p in points:
        low, n = birkhoff_extreme(*reduced_sequence(p, system, f, fbar), horizon)
        if n is None:
            unbounded.append(p.label())
        elif -low > C:
            C, witness = -low, p.label()
    return BoundEstimate(C, len(points), horizon, witness, tuple(unbounded))


@dataclass
class CorollaryReport:
    passed: bool
    C: Number
    n_points: int
    n_tight_edges: int
    violations: list[dict]

    def to_dict(self) -> dict:
        return {"pass": self.passed, "C": float(self.C), "n_points": self.n_points,
                "n_tight_edges": self.n_tight_edges, "witnesses": self.violations}


def verify_corollary_bounds(
    critical: CriticalSubgraph,
    system: FiniteSystem,
    f: Observable,
    fbar: Number,
    C: Number,
    max_cycle: int = 4,
    horizon: int = 10**4,
) -> CorollaryReport:
    """Check the two-sided bound and minimality inside the critical subgraph.

    Every periodic point whose cycle is a closed walk of length ``<= max_cycle``
    inside ``critical`` must have ``-C <= S_n <= C`` for ``1 <= n <= horizon``,
    and every cycle inside ``critical`` must have mean ``fbar``. The latter is
    certified edge by edge: if each retained edge is tight for the potentials,
    the reduced weights telescope to zero around any cycle. ``C`` should come
    from a sample containing these periodic points (the upper bound at one
    point is the lower bound at a shifted one).
    """
    inside = set(critical.edges)
    violations, n_points = [], 0
    for q in range(1, max_cycle + 1):
        for cyc in closed_walks(system, q, inside):
            n_points += 1
            point = SymbolicPoint.periodic(cyc)
            pre, lap = reduced_sequence(point, system, f, fbar)
            low, n_low = birkhoff_extreme(pre, lap, horizon)
            high, n_high = birkhoff_extreme(pre, lap, horizon, largest=True)
            if not nonnegative(low + C):
                violations.append({"point": point.label(), "n": n_low, "sum": float(low), "kind": "below -C"})
            if not nonnegative(C - high):
                violations.append({"point": point.label(), "n": n_high, "sum": float(high), "kind": "above C"})
    f = require_edge_weights(f, system)
    phi = critical.potentials
    for e in critical.edges:
        edge = system.edge(e)
        slack = f[e] - fbar + phi[edge.source] - phi[edge.target]
        if not is_zero(slack):
            violations.append({"point": e, "n": 1, "sum": float(slack), "kind": "edge not tight"})
    return CorollaryReport(not violations, C, n_points, len(critical.edges), violations)
