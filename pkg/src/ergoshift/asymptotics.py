"""Decomposition of discounted measures into empirical measures, and the
oscillation experiment for non-balanced coboundaries.

With ``A_n`` the empirical measure of the first ``n`` orbit points,

    mu_{eps, omega} = sum_{k=floor(ln n)}^{n-2} (k+1) eps^2 (1-eps)^k A_{k+1}
                      + R_{n, eps, omega},

where the remainder collects the head ``k < floor(ln n)``, the boundary term
``n eps (1-eps)^(n-1) A_n`` and the tail ``(1-eps)^n mu_{eps, sigma^n omega}``,
and has total mass at most ``(eps ln n)^2 + (1 + eps n e) e^(-eps n)``.

The oscillation experiment builds a point out of long blocks of two periodic
words whose lengths grow like iterated exponentials, then evaluates the
discounted transfer function at ``eps_p = ln(N_p) / N_p``. Block boundaries
are exact Python integers; discount weights live in log space so that
``(1 - eps)^k`` neither underflows nor loses the tiny ``eps`` of late blocks.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .discounted import DiscountedEvaluation, discounted_measure_apply
from .ergopt import CycleMeasure, balance_check, cycle_integral
from .systems import (
    Coboundary,
    EdgeWeights,
    FiniteSystem,
    Observable,
    SymbolicPoint,
    SystemSpecError,
    value_sequence,
)

P_MAX = 3
MAX_EXPONENT = 10**6
DIRECT_LIMIT = 10**7


# ---------------------------------------------------------------------------
# empirical averages and the decomposition identity
# ---------------------------------------------------------------------------


def birkhoff_sum(point, system: FiniteSystem, g: Observable, n: int):
    """Exact ``sum_{k < n} g(sigma^k point)`` for symbolic or block points, any ``n``."""
    if isinstance(point, BlockPoint):
        return point.birkhoff_sum(system, g, n)
    pre, cyc = value_sequence(g, system, point)
    p, q = len(pre), len(cyc)
    if n <= p:
        return sum(pre[:n], start=0 * sum(cyc))
    laps, r = divmod(n - p, q)
    return sum(pre) + laps * sum(cyc) + sum(cyc[:r])


def empirical_average(point, system: FiniteSystem, g: Observable, n: int):
    """``A_{n, point}(g) = (1/n) sum_{k < n} g(sigma^k point)``, exact for rational ``g``."""
    if n < 1:
        raise ValueError("empirical average needs n >= 1")
    s = birkhoff_sum(point, system, g, n)
    return s / n if isinstance(s, (Fraction, int)) else float(s) / n


def remainder_bound(eps: float, n: int) -> float:
    return (eps * math.log(n)) ** 2 + (1 + eps * n * math.e) * math.exp(-eps * n)


@dataclass(frozen=True)
class DecompositionReport:
    n: int
    epsilon: float
    alpha: float
    remainder_mass: float
    bound: float
    identity_gap: float
    left: float
    right: float
    weights: tuple | None = None

    def to_dict(self) -> dict:
        return {"n": self.n, "epsilon": self.epsilon, "alpha": self.alpha,
                "remainder_mass": self.remainder_mass, "bound": self.bound,
                "identity_gap": self.identity_gap}


def orbit_values(point, system: FiniteSystem, g: Observable, n: int) -> np.ndarray:
    """``g(sigma^k point)`` for ``k < n`` as floats."""
    if isinstance(point, BlockPoint):
        return point.values(system, g, n)
    pre, cyc = value_sequence(g, system, point)
    reps = -(-max(0, n - len(pre)) // len(cyc))
    return np.asarray([float(v) for v in pre] + [float(v) for v in cyc] * reps)[:n]


def decomposition_report(point: SymbolicPoint, system: FiniteSystem, g: Observable, eps: float, n: int,
                         keep_weights: int = 1000) -> DecompositionReport:
    """Both sides of the decomposition identity applied to ``g``, plus remainder mass and bound."""
    if n < 2:
        raise ValueError("decomposition needs n >= 2")
    if n > DIRECT_LIMIT:
        raise ValueError(f"n={n} exceeds the direct-evaluation limit {DIRECT_LIMIT}")
    L = math.floor(math.log(n))
    lr = math.log1p(-eps)
    k = np.arange(n - 1)
    decay = np.exp(k * lr)
    sums = np.cumsum(orbit_values(point, system, g, n))  # sums[k] = (k+1) A_{k+1}(g)
    mass_k = (k + 1) * eps**2 * decay
    term_k = eps**2 * decay * sums[: n - 1]
    main, head = term_k[L:].sum(), term_k[:L].sum()
    alpha, head_mass = mass_k[L:].sum(), mass_k[:L].sum()
    boundary = eps * math.exp((n - 1) * lr) * sums[n - 1]
    boundary_mass = n * eps * math.exp((n - 1) * lr)
    tail_mass = math.exp(n * lr)
    tail = tail_mass * discounted_measure_apply(point.shift(n), system, g, eps).value
    left = discounted_measure_apply(point, system, g, eps).value
    right = float(main + head + boundary + tail)
    return DecompositionReport(
        n, eps, float(alpha), float(head_mass + boundary_mass + tail_mass), remainder_bound(eps, n),
        abs(left - right), left, right,
        tuple(mass_k[L:].tolist()) if n <= keep_weights else None,
    )


# ---------------------------------------------------------------------------
# log-space discounting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Discount:
    """A discount rate stored as ``ln(eps)``; usable far below the float range."""

    log_eps: float

    @classmethod
    def of(cls, eps: float) -> "Discount":
        return cls(math.log(eps))

    @property
    def eps(self) -> float:
        return math.exp(self.log_eps)

    def _log_rate(self) -> float:
        # ln(-ln(1 - eps)); equals ln(eps) + eps/2 + O(eps^2) for small eps
        eps = self.eps
        if eps > 1e-8:
            return math.log(-math.log1p(-eps))
        return self.log_eps + eps / 2

    def _log_exponent(self, k: int) -> float:
        """``ln(-k ln(1 - eps))``; ``k`` may be an arbitrarily large integer."""
        return math.log(k) + self._log_rate()

    def decay(self, k: int) -> float:
        """``(1 - eps)^k``."""
        if k == 0:
            return 1.0
        t = self._log_exponent(k)
        return 0.0 if t > 709 else math.exp(-math.exp(t))

    def one_minus_decay(self, k: int | None) -> float:
        """``1 - (1 - eps)^k`` without cancellation; ``k=None`` means infinity."""
        if k is None:
            return 1.0
        if k == 0:
            return 0.0
        t = self._log_exponent(k)
        if t > 709:
            return 1.0
        return -math.expm1(-math.exp(t))

    def ratio(self, q: int) -> float:
        """``eps / (1 - (1 - eps)^q)``, which tends to ``1/q`` as ``eps -> 0``."""
        t = self._log_exponent(q)
        if t < -700:
            return math.exp(self.log_eps - t)
        return math.exp(self.log_eps - math.log(-math.expm1(-math.exp(t))))

    def scientific(self) -> str:
        eps = self.eps
        if eps > 0:
            return repr(eps)
        e10 = self.log_eps / math.log(10)
        exp = math.floor(e10)
        return f"{10 ** (e10 - exp):.15g}e{exp}"


# ---------------------------------------------------------------------------
# block points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    start: int
    word: tuple[str, ...]
    reps: int | None  # None: repeats forever

    @property
    def end(self) -> int | None:
        return None if self.reps is None else self.start + self.reps * len(self.word)


@dataclass(frozen=True)
class BlockPoint:
    """An infinite path given as consecutive segments, each a word repeated ``reps`` times."""

    segments: tuple[Segment, ...]

    def __post_init__(self):
        pos = 0
        for s in self.segments[:-1]:
            if s.start != pos or s.reps is None:
                raise SystemSpecError("segments must be contiguous and only the last may be infinite")
            pos = s.end
        if self.segments[-1].start != pos or self.segments[-1].reps is not None:
            raise SystemSpecError("the last segment must start where the previous ends and repeat forever")

    def validate(self, system: FiniteSystem) -> "BlockPoint":
        path = []
        for s in self.segments:
            path.extend(s.word * (1 if s.reps is None else min(s.reps, 2)))
            if s.reps is None:
                path.extend(s.word[:1])
        system.check_path(path)
        return self

    def _segment(self, k: int) -> Segment:
        i = bisect.bisect_right([s.start for s in self.segments], k) - 1
        return self.segments[i]

    def orbit_edge(self, k: int) -> str:
        s = self._segment(k)
        return s.word[(k - s.start) % len(s.word)]

    def prefix(self, n: int) -> list[str]:
        out = []
        for s in self.segments:
            if len(out) >= n:
                break
            need = n - len(out)
            reps = -(-need // len(s.word)) if s.reps is None else min(s.reps, -(-need // len(s.word)))
            out.extend(list(s.word) * reps)
        return out[:n]

    def values(self, system: FiniteSystem, g: Observable, n: int) -> np.ndarray:
        if n > DIRECT_LIMIT:
            raise ValueError(f"n={n} exceeds the direct-evaluation limit {DIRECT_LIMIT}")
        if isinstance(g, Coboundary):
            u = g.u0.bind(system)
            vals = np.asarray([float(u[e]) for e in self.prefix(n + 1)])
            return vals[1:] - vals[:-1]
        g = g.bind(system)
        return np.asarray([float(g[e]) for e in self.prefix(n)])

    def birkhoff_sum(self, system: FiniteSystem, g: Observable, n: int):
        if isinstance(g, Coboundary):
            u = g.u0.bind(system)
            return u[self.orbit_edge(n)] - u[self.orbit_edge(0)]
        g = g.bind(system)
        total = 0
        for s in self.segments:
            if s.start >= n:
                break
            span = n - s.start if s.end is None else min(n, s.end) - s.start
            laps, r = divmod(span, len(s.word))
            total += laps * sum(g[e] for e in s.word) + sum(g[e] for e in s.word[:r])
        return total


def block_measure_apply(point: BlockPoint, system: FiniteSystem, g: EdgeWeights, discount: Discount) -> float:
    """``int g dmu_{eps, point}`` summed segment by segment in closed form."""
    g = g.bind(system)
    total = 0.0
    for s in point.segments:
        q = len(s.word)
        head = sum(discount.decay(i) * float(g[e]) for i, e in enumerate(s.word))
        laps = discount.one_minus_decay(None if s.reps is None else s.reps * q)
        total += discount.decay(s.start) * head * laps * discount.ratio(q)
    return total


def block_mass(point: BlockPoint, discount: Discount) -> float:
    total = 0.0
    for s in point.segments:
        q = len(s.word)
        head = sum(discount.decay(i) for i in range(q))
        laps = discount.one_minus_decay(None if s.reps is None else s.reps * q)
        total += discount.decay(s.start) * head * laps * discount.ratio(q)
    return total


def block_discounted_value(point: BlockPoint, system: FiniteSystem, f: Observable, discount: Discount) -> DiscountedEvaluation:
    """``U_eps[f]`` at a block point.

    For ``f = u0 o sigma - u0`` the series rearranges to
    ``(u0(omega) - int u0 dmu_{eps, omega}) / (1 - eps)``, which stays
    bounded as ``eps -> 0``; plain edge weights give ``-(1/eps) int f dmu``.
    """
    if isinstance(f, Coboundary):
        u = f.u0.bind(system)
        m = block_measure_apply(point, system, u, discount)
        value = (float(u[point.orbit_edge(0)]) - m) / discount.decay(1)
    elif isinstance(f, EdgeWeights):
        if discount.eps == 0.0:
            raise OverflowError("discounted value of a non-coboundary exceeds the float range")
        value = -block_measure_apply(point, system, f, discount) / discount.eps
    else:
        raise SystemSpecError(f"{type(f).__name__} cannot be evaluated on a block point")
    return DiscountedEvaluation(discount.eps, value, 0, 0.0, "closed-form-blocks")


def block_direct_value(point: BlockPoint, system: FiniteSystem, f: Observable, eps: float, terms: int) -> float:
    """Truncated series ``-sum_{k < terms} (1-eps)^k f(sigma^k point)`` (oracle)."""
    vals = point.values(system, f, terms)
    return -float(np.dot(np.exp(np.arange(terms) * math.log1p(-eps)), vals))


# ---------------------------------------------------------------------------
# oscillation schedule and experiment
# ---------------------------------------------------------------------------


def next_scale(n: int) -> int:
    """Smallest integer strictly greater than ``e^n``."""
    if n > MAX_EXPONENT:
        raise ValueError("schedule exceeds representable scale")
    with mpmath.workprec(int(n * 1.4427) + 96):
        return int(mpmath.floor(mpmath.exp(n))) + 1


def connecting_path(system: FiniteSystem, source: str, target: str) -> tuple[str, ...]:
    """Shortest edge path from ``source`` to ``target`` (breadth first, declaration order)."""
    if source == target:
        return ()
    back = {source: None}
    frontier = [source]
    while frontier:
        nxt = []
        for v in frontier:
            for e in system.out_edges(v):
                if e.target in back:
                    continue
                back[e.target] = e
                if e.target == target:
                    path = []
                    while back[target] is not None:
                        path.append(back[target].id)
                        target = back[target].source
                    return tuple(reversed(path))
                nxt.append(e.target)
        frontier = nxt
    raise SystemSpecError(f"inadmissible word concatenation: no path from {source!r} to {target!r}")


@dataclass(frozen=True)
class OscillationSchedule:
    """Block point alternating ``w1, w0, w1, ...`` with boundaries past ``N_1, N_2, ...``.

    ``N[p-1]`` is ``N_p``: ``N_1`` is given and ``N_{p+1}`` is the smallest
    integer above ``e^{B_p}``, where ``B_p >= N_p`` is the snapped boundary of
    block ``p``, so the gap condition holds for the realized point.
    """

    w0: tuple[str, ...]
    w1: tuple[str, ...]
    N: tuple[int, ...]
    boundaries: tuple[int, ...]
    connectors: tuple[tuple[str, ...], ...]
    point: BlockPoint

    @property
    def p_max(self) -> int:
        return len(self.N)

    @property
    def snap_offsets(self) -> tuple[int, ...]:
        return tuple(b - n for b, n in zip(self.boundaries, self.N))

    def word(self, p: int) -> tuple[str, ...]:
        return self.w1 if p % 2 else self.w0

    def log_N(self, p: int) -> float:
        return math.log(self.N[p - 1])

    def discount(self, p: int) -> Discount:
        """``eps_p = ln(N_p) / N_p`` in log space."""
        ln_n = self.log_N(p)
        return Discount(math.log(ln_n) - ln_n)

    def gap_holds(self) -> bool:
        """``B_p < ln(N_{p+1})``, decided in integers: ``N_{p+1} > e^{B_p}``."""
        return all(n >= next_scale(b) for b, n in zip(self.boundaries, self.N[1:]))

    def to_dict(self) -> dict:
        return {
            "w0": list(self.w0),
            "w1": list(self.w1),
            "N": [str(n) for n in self.N],
            "eps": [self.discount(p).scientific() for p in range(1, self.p_max + 1)],
            "snap_offsets": list(self.snap_offsets),
            "boundaries": [str(b) for b in self.boundaries],
            "connectors": [list(c) for c in self.connectors],
        }


def build_oscillation_schedule(system: FiniteSystem, w0, w1, n1: int, p_max: int = 3) -> OscillationSchedule:
    """Blocks ``[B_{p-1}, B_p)`` of the word ``w_{p mod 2}`` repeated, closed by a connecting path.

    ``B_p`` is the least admissible boundary ``>= N_p``: the block must be a
    whole number (at least one) of word repetitions followed by the connector
    into the next word. The final block repeats forever.
    """
    w0, w1 = tuple(w0), tuple(w1)
    if p_max > P_MAX:
        raise ValueError("schedule exceeds representable scale (p_max <= 3)")
    if p_max < 1:
        raise ValueError("p_max must be at least 1")
    if n1 < 3:
        raise ValueError("N_1 must be at least 3")
    system.check_closed(w0)
    system.check_closed(w1)
    words = lambda p: w1 if p % 2 else w0
    start_of = lambda w: system.edge(w[0]).source
    N, bounds, connectors, segments = [n1], [], [], []
    pos = 0
    for p in range(1, p_max):
        w, nxt = words(p), words(p + 1)
        link = connecting_path(system, start_of(w), start_of(nxt))
        reps = max(1, -(-(N[-1] - pos - len(link)) // len(w)))
        segments.append(Segment(pos, w, reps))
        if link:
            segments.append(Segment(pos + reps * len(w), link, 1))
        pos += reps * len(w) + len(link)
        bounds.append(pos)
        connectors.append(link)
        N.append(next_scale(pos))
    segments.append(Segment(pos, words(p_max), None))
    point = BlockPoint(tuple(segments)).validate(system)
    return OscillationSchedule(w0, w1, tuple(N), tuple(bounds), tuple(connectors), point)


class BalancedError(ValueError):
    """A balanced transfer function: no oscillation is expected."""


def tolerance_for(p: int) -> float:
    return 0.15 if p == 1 else 0.05


@dataclass
class OscillationTable:
    rows: list[dict]
    mu0: float
    mu1: float

    @property
    def passed(self) -> bool:
        return all(r["abs_error"] < tolerance_for(r["p"]) for r in self.rows)


def oscillation_experiment(schedule: OscillationSchedule, system: FiniteSystem, u0: EdgeWeights) -> OscillationTable:
    """``U_{eps_p}[u0 o sigma - u0]`` at the schedule's point against ``u0(omega) - mu_{[p]}(u0)``."""
    u0 = u0.bind(system)
    if balance_check(system, u0).balanced:
        raise BalancedError("u0 is balanced: no oscillation expected")
    mu = {0: cycle_integral(CycleMeasure(system, schedule.w0), u0),
          1: cycle_integral(CycleMeasure(system, schedule.w1), u0)}
    if mu[0] == mu[1]:
        raise BalancedError("w0 and w1 give the same integral of u0: no oscillation expected")
    f = Coboundary(u0)
    point = schedule.point
    here = float(u0[point.orbit_edge(0)])
    edges = [0] + list(schedule.boundaries) + [None]
    rows = []
    for p in range(1, schedule.p_max + 1):
        d = schedule.discount(p)
        value = block_discounted_value(point, system, f, d).value
        target = here - float(mu[p % 2])
        # mass of mu_{eps, sigma omega} on indices whose edge lies in block p
        lo, hi = max(edges[p - 1] - 1, 0), None if edges[p] is None else edges[p] - 1
        inside = d.decay(lo) * d.one_minus_decay(None if hi is None else hi - lo)
        rows.append({
            "p": p,
            "eps_p": d.scientific(),
            "U_value": value,
            "target": target,
            "abs_error": abs(value - target),
            "contamination_estimate": 1.0 - inside,
        })
    return OscillationTable(rows, float(mu[0]), float(mu[1]))
