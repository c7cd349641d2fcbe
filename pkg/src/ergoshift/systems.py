"""Phase spaces, points and observables.

Two kinds of dynamical systems are supported:

* ``FiniteSystem``: an edge shift on a finite directed graph. Points of the
  phase space are infinite edge paths and the map is the left shift. Only
  eventually periodic points (``SymbolicPoint``) are represented, which makes
  every orbit quantity computable exactly.
* ``RotationSystem``: the circle rotation ``x -> x + alpha mod 1``.

Observables are either locally constant (one weight per edge), coboundaries
``u0 o shift - u0`` of such a weight function, or truncated Fourier series on
the circle.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from decimal import Decimal
from fractions import Fraction
from numbers import Real
from pathlib import Path
from typing import Iterator, Mapping, NamedTuple, Sequence, Union

import numpy as np

#: absolute tolerance used whenever arithmetic is not exact
TOL = 1e-9

Number = Union[Fraction, float]


class SystemSpecError(ValueError):
    """A system, point or observable description is malformed or inconsistent."""


def as_number(x) -> Number:
    """Convert user input to a ``Fraction`` when it is rational-exact, else ``float``.

    Strings and ``Decimal`` values are parsed as exact decimals, so ``"0.1"``
    becomes ``Fraction(1, 10)``. Python floats stay floats.
    """
    if isinstance(x, bool):
        raise SystemSpecError(f"boolean is not a valid weight: {x!r}")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, (str, Decimal)):
        try:
            return Fraction(x)
        except (ValueError, ZeroDivisionError) as exc:
            raise SystemSpecError(f"cannot parse number {x!r}") from exc
    if isinstance(x, Real):
        if not math.isfinite(float(x)):
            raise SystemSpecError(f"non-finite weight {x!r}")
        return float(x)
    raise SystemSpecError(f"not a number: {x!r}")


def is_exact(x) -> bool:
    return isinstance(x, (Fraction, int))


def nonnegative(x: Number) -> bool:
    """``x >= 0`` exactly for rationals, ``x >= -TOL`` for floats."""
    return x >= 0 if is_exact(x) else x >= -TOL


def is_zero(x: Number) -> bool:
    return x == 0 if is_exact(x) else abs(x) <= TOL


# ---------------------------------------------------------------------------
# finite edge shifts
# ---------------------------------------------------------------------------


class Edge(NamedTuple):
    id: str
    source: str
    target: str


@dataclass(frozen=True)
class FiniteSystem:
    """Edge shift on a finite directed graph with every out-degree >= 1.

    Vertices and edges keep their declaration order, which is used for all
    tie-breaking downstream.
    """

    vertices: tuple[str, ...]
    edges: tuple[Edge, ...]
    _edge: dict = field(init=False, repr=False, compare=False)
    _vertex_index: dict = field(init=False, repr=False, compare=False)
    _edge_index: dict = field(init=False, repr=False, compare=False)
    _out: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        vertex_index: dict[str, int] = {}
        for v in self.vertices:
            if v in vertex_index:
                raise SystemSpecError(f"duplicate id: vertex {v!r}")
            vertex_index[v] = len(vertex_index)
        edge: dict[str, Edge] = {}
        out: dict[str, list[Edge]] = {v: [] for v in self.vertices}
        for e in self.edges:
            if e.id in edge:
                raise SystemSpecError(f"duplicate id: edge {e.id!r}")
            for end in (e.source, e.target):
                if end not in vertex_index:
                    raise SystemSpecError(f"unknown vertex {end!r} in edge {e.id!r}")
            edge[e.id] = e
            out[e.source].append(e)
        sinks = [v for v in self.vertices if not out[v]]
        if sinks:
            raise SystemSpecError(f"not a total shift: vertices without out-edges {sinks}")
        object.__setattr__(self, "_edge", edge)
        object.__setattr__(self, "_vertex_index", vertex_index)
        object.__setattr__(self, "_edge_index", {e.id: i for i, e in enumerate(self.edges)})
        object.__setattr__(self, "_out", {v: tuple(es) for v, es in out.items()})

    def edge(self, edge_id: str) -> Edge:
        try:
            return self._edge[edge_id]
        except KeyError:
            raise SystemSpecError(f"unknown edge {edge_id!r}") from None

    def out_edges(self, vertex: str) -> tuple[Edge, ...]:
        return self._out[vertex]

    def vertex_index(self, vertex: str) -> int:
        return self._vertex_index[vertex]

    def edge_index(self, edge_id: str) -> int:
        return self._edge_index[edge_id]

    def composes(self, first: str, second: str) -> bool:
        return self.edge(first).target == self.edge(second).source

    def check_path(self, path: Sequence[str]) -> None:
        for a, b in zip(path, path[1:]):
            if not self.composes(a, b):
                raise SystemSpecError(f"inadmissible path: {a!r} does not lead into {b!r}")

    def check_closed(self, word: Sequence[str]) -> None:
        """Raise unless ``word`` is a nonempty closed walk."""
        if not word:
            raise SystemSpecError("empty cycle")
        self.check_path(list(word) + [word[0]])


def build_finite_system(spec: Mapping) -> FiniteSystem:
    """Validate a ``finite_shift`` document and build the system.

    Edge weights, if present, are ignored here; see :func:`observable_from_spec`.
    """
    if spec.get("type", "finite_shift") != "finite_shift":
        raise SystemSpecError(f"expected type 'finite_shift', got {spec.get('type')!r}")
    try:
        vertices = tuple(str(v) for v in spec["vertices"])
        edges = tuple(Edge(str(e["id"]), str(e["from"]), str(e["to"])) for e in spec["edges"])
    except (KeyError, TypeError) as exc:
        raise SystemSpecError(f"malformed system spec: {exc}") from exc
    return FiniteSystem(vertices, edges)


def full_shift(n_symbols: int) -> FiniteSystem:
    """Full shift on symbols ``0..n-1`` as an edge shift (edge ``"vw"`` is v -> w)."""
    symbols = [str(i) for i in range(n_symbols)]
    edges = tuple(Edge(v + w, v, w) for v in symbols for w in symbols)
    return FiniteSystem(tuple(symbols), edges)


# ---------------------------------------------------------------------------
# points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SymbolicPoint:
    """Eventually periodic edge path ``preperiod . cycle . cycle ...``."""

    preperiod: tuple[str, ...]
    cycle: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "preperiod", tuple(self.preperiod))
        object.__setattr__(self, "cycle", tuple(self.cycle))
        if not self.cycle:
            raise SystemSpecError("a point needs a nonempty cycle")

    @classmethod
    def periodic(cls, cycle: Sequence[str]) -> "SymbolicPoint":
        return cls((), tuple(cycle))

    def orbit_edge(self, k: int) -> str:
        """The ``k``-th edge of the path (``k >= 0``)."""
        p = len(self.preperiod)
        if k < p:
            return self.preperiod[k]
        return self.cycle[(k - p) % len(self.cycle)]

    def shift(self, steps: int = 1) -> "SymbolicPoint":
        """The point ``sigma^steps(self)``."""
        p, q = len(self.preperiod), len(self.cycle)
        if steps <= p:
            return SymbolicPoint(self.preperiod[steps:], self.cycle)
        r = (steps - p) % q
        return SymbolicPoint((), self.cycle[r:] + self.cycle[:r])

    def prefix(self, n: int) -> list[str]:
        return [self.orbit_edge(k) for k in range(n)]

    def validate(self, system: FiniteSystem) -> "SymbolicPoint":
        system.check_path(self.preperiod + self.cycle + self.cycle[:1])
        return self

    def label(self) -> str:
        pre = ".".join(self.preperiod)
        return f"{pre}({'.'.join(self.cycle)})" if pre else f"({'.'.join(self.cycle)})"

    def to_dict(self) -> dict:
        return {"preperiod": list(self.preperiod), "cycle": list(self.cycle)}


def point_from_spec(spec: Mapping) -> SymbolicPoint:
    try:
        return SymbolicPoint(tuple(spec.get("preperiod", ())), tuple(spec["cycle"]))
    except (KeyError, TypeError) as exc:
        raise SystemSpecError(f"malformed point spec: {exc}") from exc


def closed_walks(system: FiniteSystem, length: int, edges: set[str] | None = None) -> Iterator[tuple[str, ...]]:
    """All closed walks with exactly ``length`` edges, optionally restricted to ``edges``."""
    allowed = (lambda e: True) if edges is None else (lambda e: e.id in edges)

    def extend(start, walk):
        last = system.edge(walk[-1]).target
        if len(walk) == length:
            if last == start:
                yield tuple(walk)
            return
        for e in system.out_edges(last):
            if allowed(e):
                walk.append(e.id)
                yield from extend(start, walk)
                walk.pop()

    for e in system.edges:
        if allowed(e):
            yield from extend(e.source, [e.id])


def paths_into(system: FiniteSystem, vertex: str, length: int) -> Iterator[tuple[str, ...]]:
    """All edge paths of exactly ``length`` edges ending at ``vertex``."""
    if length == 0:
        yield ()
        return
    incoming: dict[str, list[Edge]] = {v: [] for v in system.vertices}
    for e in system.edges:
        incoming[e.target].append(e)

    def grow(v, suffix):
        if len(suffix) == length:
            yield tuple(suffix)
            return
        for e in incoming[v]:
            yield from grow(e.source, [e.id] + suffix)

    yield from grow(vertex, [])


def enumerate_points(system: FiniteSystem, max_preperiod: int, max_cycle: int) -> list[SymbolicPoint]:
    """All points with preperiod length <= ``max_preperiod`` and cycle length <= ``max_cycle``.

    The same infinite path may appear under several representations.
    """
    points = []
    for q in range(1, max_cycle + 1):
        for cyc in closed_walks(system, q):
            start = system.edge(cyc[0]).source
            for p in range(max_preperiod + 1):
                for pre in paths_into(system, start, p):
                    points.append(SymbolicPoint(pre, cyc))
    return points


# ---------------------------------------------------------------------------
# circle rotations
# ---------------------------------------------------------------------------

_SPLIT_BITS = 32


@dataclass(frozen=True)
class RotationSystem:
    """Rotation ``x -> x + alpha (mod 1)`` with ``alpha`` given as a decimal string.

    Orbit angles ``frac(x + k alpha)`` are computed with ``alpha`` split as
    ``A / 2**32 + alpha_lo``: the integer part ``k A mod 2**32`` is exact, and
    the remaining product is tiny, so the reduced angle is accurate to about
    1e-16 for every ``k < 2**31``.
    """

    alpha: str
    grid: int = 1000
    alpha_exact: Fraction = field(init=False, repr=False, compare=False)
    _alpha_hi: int = field(init=False, repr=False, compare=False)
    _alpha_lo: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = as_number(str(self.alpha))
        if not 0 < a < 1:
            raise SystemSpecError(f"rotation number must lie in (0, 1), got {self.alpha}")
        hi = math.floor(a * 2**_SPLIT_BITS)
        object.__setattr__(self, "alpha_exact", a)
        object.__setattr__(self, "_alpha_hi", hi)
        object.__setattr__(self, "_alpha_lo", float(a - Fraction(hi, 2**_SPLIT_BITS)))

    @property
    def alpha_float(self) -> float:
        return float(self.alpha_exact)

    def orbit_angle(self, x: float, k):
        """``frac(x + k alpha)``; ``k`` may be an int or an integer array (``k < 2**31``)."""
        if isinstance(k, (int, np.integer)):
            whole = ((int(k) * self._alpha_hi) % 2**_SPLIT_BITS) / 2**_SPLIT_BITS
            return (x + whole + int(k) * self._alpha_lo) % 1.0
        k = np.asarray(k, dtype=np.int64)
        whole = ((k * self._alpha_hi) % 2**_SPLIT_BITS) / 2**_SPLIT_BITS
        return np.mod(x + whole + k * self._alpha_lo, 1.0)

    def grid_angles(self, n: int | None = None) -> np.ndarray:
        n = self.grid if n is None else n
        return np.arange(n) / n


# ---------------------------------------------------------------------------
# observables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeWeights:
    """Locally constant observable: ``f(omega)`` is the weight of the first edge.

    All weights are kept as ``Fraction`` when every input is rational-exact,
    otherwise every weight is converted to ``float``.
    """

    weights: Mapping[str, Number]

    def __post_init__(self):
        ws = {str(k): as_number(v) for k, v in dict(self.weights).items()}
        if any(not is_exact(v) for v in ws.values()):
            ws = {k: float(v) for k, v in ws.items()}
        object.__setattr__(self, "weights", ws)

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for v in self.weights.values())

    def __getitem__(self, edge_id: str) -> Number:
        try:
            return self.weights[edge_id]
        except KeyError:
            raise SystemSpecError(f"observable has no weight for edge {edge_id!r}") from None

    def sup_norm(self) -> float:
        return max((abs(float(v)) for v in self.weights.values()), default=0.0)

    def bind(self, system: FiniteSystem) -> "EdgeWeights":
        missing = [e.id for e in system.edges if e.id not in self.weights]
        if missing:
            raise SystemSpecError(f"observable/system mismatch: no weight for edges {missing}")
        return self

    def scale(self, a) -> "EdgeWeights":
        return EdgeWeights({k: a * v for k, v in self.weights.items()})

    def __add__(self, other: "EdgeWeights") -> "EdgeWeights":
        return EdgeWeights({k: v + other[k] for k, v in self.weights.items()})

    def __neg__(self) -> "EdgeWeights":
        return self.scale(-1)

    def shift_by(self, c) -> "EdgeWeights":
        return EdgeWeights({k: v - c for k, v in self.weights.items()})


@dataclass(frozen=True)
class Coboundary:
    """The observable ``u0 o sigma - u0`` for an edge-weight function ``u0``.

    Its value at a point depends on the first two edges, so it is not an
    edge-weight observable on the original graph; :func:`higher_block` recodes
    it as one.
    """

    u0: EdgeWeights

    def bind(self, system: FiniteSystem) -> "Coboundary":
        self.u0.bind(system)
        return self

    def sup_norm(self) -> float:
        vals = [float(v) for v in self.u0.weights.values()]
        return (max(vals) - min(vals)) if vals else 0.0

    @property
    def exact(self) -> bool:
        return self.u0.exact


@dataclass(frozen=True)
class Fourier:
    """Truncated Fourier series ``c0 + sum_j a_j cos(2 pi j x) + b_j sin(2 pi j x)``, j >= 1."""

    constant: float = 0.0
    cos: tuple[float, ...] = ()
    sin: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "constant", float(self.constant))
        object.__setattr__(self, "cos", tuple(float(a) for a in self.cos))
        object.__setattr__(self, "sin", tuple(float(b) for b in self.sin))

    def coefficients(self) -> list[tuple[int, float, float]]:
        n = max(len(self.cos), len(self.sin))
        return [
            (j + 1, self.cos[j] if j < len(self.cos) else 0.0, self.sin[j] if j < len(self.sin) else 0.0)
            for j in range(n)
        ]

    def __call__(self, theta):
        theta = np.mod(theta, 1.0)
        out = np.full(np.shape(theta), self.constant, dtype=float)
        for j, a, b in self.coefficients():
            arg = 2 * np.pi * j * theta
            out = out + a * np.cos(arg) + b * np.sin(arg)
        return out if np.ndim(out) else float(out)

    def sup_norm(self) -> float:
        """The l1 norm of the coefficients, an upper bound for ``sup |f|``."""
        return abs(self.constant) + sum(abs(a) + abs(b) for _, a, b in self.coefficients())

    def rotate(self, alpha: float) -> "Fourier":
        """Coefficients of ``x -> f(x + alpha)``."""
        cs, ss = [], []
        for j, a, b in self.coefficients():
            c, s = math.cos(2 * math.pi * j * alpha), math.sin(2 * math.pi * j * alpha)
            cs.append(a * c + b * s)
            ss.append(b * c - a * s)
        return Fourier(self.constant, tuple(cs), tuple(ss))

    def __sub__(self, other: "Fourier") -> "Fourier":
        n = max(len(self.coefficients()), len(other.coefficients()))
        pad = lambda t: list(t) + [0.0] * (n - len(t))
        return Fourier(
            self.constant - other.constant,
            tuple(x - y for x, y in zip(pad(self.cos), pad(other.cos))),
            tuple(x - y for x, y in zip(pad(self.sin), pad(other.sin))),
        )


Observable = Union[EdgeWeights, Coboundary, Fourier]


def coboundary(u0: Observable, system) -> Observable:
    """The observable ``u0 o sigma - u0``."""
    if isinstance(system, RotationSystem):
        if not isinstance(u0, Fourier):
            raise SystemSpecError("rotation coboundaries need a Fourier u0")
        return u0.rotate(system.alpha_float) - u0
    if not isinstance(u0, EdgeWeights):
        raise SystemSpecError("finite-system coboundaries need an edge-weight u0")
    return Coboundary(u0.bind(system))


def require_edge_weights(f: Observable, system: FiniteSystem) -> EdgeWeights:
    if not isinstance(f, EdgeWeights):
        raise SystemSpecError(
            f"expected an edge-weight observable, got {type(f).__name__}; "
            "recode with higher_block() first"
        )
    return f.bind(system)


def value_sequence(f: Observable, system: FiniteSystem, point: SymbolicPoint) -> tuple[tuple, tuple]:
    """Values ``f(sigma^k omega)`` split as (preperiodic part, periodic part).

    The sequence is eventually periodic with the same preperiod length and
    period as the point.
    """
    p, q = len(point.preperiod), len(point.cycle)
    if isinstance(f, EdgeWeights):
        f.bind(system)
        return tuple(f[e] for e in point.preperiod), tuple(f[e] for e in point.cycle)
    if isinstance(f, Coboundary):
        u = f.u0.bind(system)
        vals = [u[point.orbit_edge(k + 1)] - u[point.orbit_edge(k)] for k in range(p + q)]
        return tuple(vals[:p]), tuple(vals[p:])
    raise SystemSpecError(f"{type(f).__name__} cannot be evaluated on a symbolic point")


def evaluate_observable(f: Observable, system, point, k: int = 0):
    """``f(sigma^k(point))`` for a symbolic point or an angle (or angle array) on the circle."""
    if isinstance(system, RotationSystem):
        if not isinstance(f, Fourier):
            raise SystemSpecError("observable/system mismatch: rotation needs a Fourier observable")
        x = np.asarray(point, dtype=float) if np.ndim(point) else float(point)
        return f(system.orbit_angle(x, k))
    if isinstance(f, Fourier):
        raise SystemSpecError("observable/system mismatch: Fourier observable on a finite system")
    if isinstance(f, EdgeWeights):
        return f.bind(system)[point.orbit_edge(k)]
    u = f.u0.bind(system)
    return u[point.orbit_edge(k + 1)] - u[point.orbit_edge(k)]


# ---------------------------------------------------------------------------
# higher-block recoding
# ---------------------------------------------------------------------------

_PAIR = "|"


def higher_block(system: FiniteSystem) -> FiniteSystem:
    """The 2-block recoding: vertices are edges, edges are composable pairs ``"e|e'"``."""
    edges = tuple(
        Edge(e.id + _PAIR + e2.id, e.id, e2.id) for e in system.edges for e2 in system.out_edges(e.target)
    )
    return FiniteSystem(tuple(e.id for e in system.edges), edges)


def lift_point(point: SymbolicPoint) -> SymbolicPoint:
    p, q = len(point.preperiod), len(point.cycle)
    pair = lambda k: point.orbit_edge(k) + _PAIR + point.orbit_edge(k + 1)
    return SymbolicPoint(tuple(pair(k) for k in range(p)), tuple(pair(k) for k in range(p, p + q)))


def lift_observable(f: Observable, system: FiniteSystem) -> EdgeWeights:
    """Express an edge-weight or coboundary observable on ``higher_block(system)``."""
    pairs = [(e.id, e2.id) for e in system.edges for e2 in system.out_edges(e.target)]
    if isinstance(f, EdgeWeights):
        f.bind(system)
        return EdgeWeights({a + _PAIR + b: f[a] for a, b in pairs})
    if isinstance(f, Coboundary):
        u = f.u0.bind(system)
        return EdgeWeights({a + _PAIR + b: u[b] - u[a] for a, b in pairs})
    raise SystemSpecError(f"cannot lift {type(f).__name__}")


# ---------------------------------------------------------------------------
# spec files
# ---------------------------------------------------------------------------


def load_json(path) -> object:
    """Parse a JSON file, reading every non-integer number as an exact decimal."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        return json.loads(text, parse_float=Fraction)
    except json.JSONDecodeError as exc:
        raise SystemSpecError(f"{path}: invalid JSON ({exc})") from exc


def observable_from_spec(spec: Mapping) -> Observable:
    """Build an observable from ``{"weights": {...}}``, a finite system document
    with per-edge ``weight`` fields, a Fourier block
    ``{"constant": c, "cos": [...], "sin": [...]}``, or any document holding one
    of these under ``"observable"``."""
    if "weights" in spec:
        return EdgeWeights(spec["weights"])
    if "observable" in spec:
        return observable_from_spec(spec["observable"])
    if "edges" in spec:
        if not all("weight" in e for e in spec["edges"]):
            raise SystemSpecError("system spec carries no (complete) edge weights")
        return EdgeWeights({str(e["id"]): e["weight"] for e in spec["edges"]})
    if any(k in spec for k in ("constant", "cos", "sin")):
        return Fourier(
            float(spec.get("constant", 0.0)),
            tuple(float(a) for a in spec.get("cos", ())),
            tuple(float(b) for b in spec.get("sin", ())),
        )
    raise SystemSpecError("unrecognised observable spec")


def system_from_spec(spec: Mapping):
    """Return ``(system, observable or None)`` for a finite-shift or rotation document."""
    kind = spec.get("type", "finite_shift")
    if kind == "rotation":
        if "alpha" not in spec:
            raise SystemSpecError("rotation spec needs 'alpha'")
        alpha = spec["alpha"]
        if isinstance(alpha, Fraction):
            raise SystemSpecError("rotation 'alpha' must be given as a decimal string")
        system = RotationSystem(str(alpha), int(spec.get("grid", 1000)))
        obs = observable_from_spec(spec["observable"]) if "observable" in spec else None
        return system, obs
    system = build_finite_system(spec)
    obs = None
    if spec["edges"] and all("weight" in e for e in spec["edges"]):
        obs = observable_from_spec(spec).bind(system)
    return system, obs
