"""Discounted transfer functions.

For ``0 < eps < 1`` the equation ``f = (1 - eps) u o sigma - u`` has the
unique bounded solution

    U_eps[f](omega) = - sum_{k >= 0} (1 - eps)^k f(sigma^k omega),

and ``U_eps[f] = -(1/eps) int f dmu_{eps, omega}`` for the geometric
probability ``mu_{eps, omega} = sum_k eps (1 - eps)^k delta_{sigma^k omega}``.

Two evaluation routes are kept apart on purpose. The closed forms (periodic
geometric blocks on symbolic points, a resolvent per Fourier mode on the
circle) carry no truncation error. Direct summation truncates after
``K = ceil(ln(tol eps / sup|f|) / ln(1 - eps))`` terms and reports the tail
bound ``sup|f| (1 - eps)^K / eps <= tol``; it serves as the independent
oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .ergopt import balance_check
from .systems import (
    Fourier,
    Observable,
    RotationSystem,
    SymbolicPoint,
    coboundary,
    evaluate_observable,
    value_sequence,
)

_CHUNK = 1 << 20


class NotBalancedError(ValueError):
    """The transfer function has different integrals against two invariant measures."""


@dataclass(frozen=True)
class DiscountedEvaluation:
    epsilon: float
    value: float
    horizon: int
    tail_bound: float
    method: str

    def to_dict(self) -> dict:
        return {"epsilon": self.epsilon, "value": self.value, "method": self.method,
                "horizon": self.horizon, "tail_bound": self.tail_bound}


def _check(eps: float, tol: float) -> None:
    if not 0 < eps < 1:
        raise ValueError(f"discount rate must lie in (0, 1), got {eps}")
    if not tol > 0:
        raise ValueError(f"tolerance must be positive, got {tol}")


def truncation_horizon(eps: float, tol: float, sup: float) -> int:
    """Number of terms after which the geometric tail is below ``tol``."""
    if sup == 0:
        return 0
    return max(0, math.ceil(math.log(tol * eps / sup) / math.log1p(-eps)))


def _geometric_periodic(pre, cyc, eps: float) -> float:
    """``sum_k (1 - eps)^k v_k`` for an eventually periodic sequence, in closed form."""
    lr = math.log1p(-eps)
    head = sum(math.exp(i * lr) * float(v) for i, v in enumerate(pre))
    lap = sum(math.exp(j * lr) * float(v) for j, v in enumerate(cyc))
    return head + math.exp(len(pre) * lr) * lap / -math.expm1(len(cyc) * lr)


def _geometric_direct(values, eps: float) -> float:
    weights = np.exp(np.arange(len(values)) * math.log1p(-eps))
    return float(np.dot(weights, values))


def _symbolic_values(f, system, point: SymbolicPoint, n: int) -> np.ndarray:
    pre, cyc = value_sequence(f, system, point)
    pre = np.asarray([float(v) for v in pre])
    cyc = np.asarray([float(v) for v in cyc])
    rest = max(0, n - len(pre))
    reps = -(-rest // len(cyc))
    return np.concatenate([pre, np.tile(cyc, reps)])[:n]


def _fourier_closed(f: Fourier, system: RotationSystem, x, eps: float):
    """``sum_k (1 - eps)^k f(x + k alpha)`` summed mode by mode; ``x`` may be an array."""
    x = np.asarray(x, dtype=float)
    total = np.full(x.shape, f.constant / eps)
    for j, a, b in f.coefficients():
        turn = np.exp(2j * np.pi * system.orbit_angle(0.0, j))
        total = total + np.real((a - 1j * b) * np.exp(2j * np.pi * j * x) / (1 - (1 - eps) * turn))
    return total


def _fourier_direct(f: Fourier, system: RotationSystem, x, eps: float, n: int):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    total = np.zeros(x.shape)
    lr = math.log1p(-eps)
    step = max(1, _CHUNK // max(1, x.size))
    for start in range(0, n, step):
        k = np.arange(start, min(n, start + step))
        theta = np.mod(x[:, None] + system.orbit_angle(0.0, k)[None, :], 1.0)
        total += f(theta) @ np.exp(k * lr)
    return total


def _series(point, system, f: Observable, eps: float, tol: float, method: str):
    """``(sum_k (1 - eps)^k f(sigma^k point), horizon, tail bound, method tag)``."""
    if method not in ("closed", "direct"):
        raise ValueError(f"unknown method {method!r}")
    if isinstance(system, RotationSystem):
        if not isinstance(f, Fourier):
            raise ValueError("observable/system mismatch: rotation needs a Fourier observable")
        if method == "closed":
            return _fourier_closed(f, system, point, eps), 0, 0.0, "closed-form-fourier"
        sup = f.sup_norm()
        K = truncation_horizon(eps, tol, sup)
        value = _fourier_direct(f, system, point, eps, K)
        value = value if np.ndim(point) else float(value[0])
        return value, K, sup * (1 - eps) ** K / eps, "direct"
    if method == "closed":
        pre, cyc = value_sequence(f, system, point)
        return _geometric_periodic(pre, cyc, eps), 0, 0.0, "closed-form-periodic"
    sup = f.sup_norm()
    K = truncation_horizon(eps, tol, sup)
    value = _geometric_direct(_symbolic_values(f, system, point, K), eps)
    return value, K, sup * (1 - eps) ** K / eps, "direct"


def discounted_value(point, system, f: Observable, eps: float, tol: float = 1e-8, method: str = "closed") -> DiscountedEvaluation:
    """``U_eps[f]`` at a symbolic point or at an angle (angle arrays are accepted on the circle)."""
    _check(eps, tol)
    s, K, tail, tag = _series(point, system, f, eps, tol, method)
    return DiscountedEvaluation(eps, -s, K, tail, tag)


def discounted_measure_apply(point, system, g: Observable, eps: float, tol: float = 1e-8, method: str = "closed") -> DiscountedEvaluation:
    """``int g dmu_{eps, point}``; the tail bound is scaled accordingly."""
    _check(eps, tol)
    s, K, tail, tag = _series(point, system, g, eps, tol, method)
    return DiscountedEvaluation(eps, eps * s, K, eps * tail, tag)


def discounted_mass(point: SymbolicPoint, eps: float) -> float:
    """Total mass of ``mu_{eps, point}`` through the closed-form path (should be 1)."""
    return eps * _geometric_periodic([1.0] * len(point.preperiod), [1.0] * len(point.cycle), eps)


def _real(x):
    return np.asarray(x, dtype=float) if np.ndim(x) else float(x)


def _shift(point, system):
    if isinstance(system, RotationSystem):
        return system.orbit_angle(np.asarray(point, dtype=float), 1)
    return point.shift()


def dce_residual(point, system, f: Observable, eps: float, tol: float = 1e-8, method: str = "closed") -> float:
    """``|f(omega) - (1 - eps) U_eps[f](sigma omega) + U_eps[f](omega)|``."""
    here = discounted_value(point, system, f, eps, tol, method).value
    there = discounted_value(_shift(point, system), system, f, eps, tol, method).value
    fx = _real(evaluate_observable(f, system, point, 0))
    return abs(fx - (1 - eps) * there + here)


def coboundary_identity_gap(point, system, u0: Observable, eps: float, tol: float = 1e-8, method: str = "closed") -> float:
    """``|U_eps[u0 o sigma - u0](omega) - u0(omega) + int u0 o sigma dmu_{eps, omega}|``."""
    f = coboundary(u0, system)
    lhs = discounted_value(point, system, f, eps, tol, method).value
    shifted = discounted_measure_apply(_shift(point, system), system, u0, eps, tol, method).value
    return abs(lhs - _real(evaluate_observable(u0, system, point, 0)) + shifted)


@dataclass
class SweepTable:
    """Sampled sup-errors ``max_omega |U_eps[f](omega) - (u0(omega) - c)|`` per discount rate."""

    rows: list[dict]
    sample: str
    offset: float
    method: str = "closed"
    extra: dict = field(default_factory=dict)

    @property
    def errors(self) -> list[float]:
        return [r["sup_error"] for r in self.rows]


def eventually_decreasing(values, allowed_violations: int = 0) -> bool:
    return sum(b >= a for a, b in zip(values, values[1:])) <= allowed_violations


def convergence_sweep(points, system, u0: Observable, eps_list, tol: float = 1e-8, method: str = "closed") -> SweepTable:
    """Distance between discounted and normalized transfer functions along ``eps_list``.

    ``u0`` is normalized by its common integral ``c`` so that the limit is
    ``u0 - c``. Refuses (``NotBalancedError``) when the integrals differ.
    """
    f = coboundary(u0, system)
    if isinstance(system, RotationSystem):
        offset = u0.constant
        xs = np.asarray(points, dtype=float)
        target = u0(xs) - offset
        labels = [f"x={float(x)!r}" for x in xs]
        sample = f"{len(xs)} angles"
    else:
        report = balance_check(system, u0)
        if not report.balanced:
            raise NotBalancedError(
                f"u0 is not balanced (integrals from {float(report.min_integral)} to "
                f"{float(report.max_integral)}); run the oscillation experiment instead"
            )
        offset = report.min_integral
        target = np.asarray([float(evaluate_observable(u0, system, p, 0) - offset) for p in points])
        labels = [p.label() for p in points]
        sample = f"{len(points)} symbolic points"
    rows = []
    for eps in eps_list:
        if isinstance(system, RotationSystem):
            values = np.asarray(discounted_value(xs, system, f, eps, tol, method).value)
        else:
            values = np.asarray([discounted_value(p, system, f, eps, tol, method).value for p in points])
        err = np.abs(values - target)
        i = int(np.argmax(err))
        rows.append({"epsilon": eps, "sup_error": float(err[i]), "argmax_point": labels[i]})
    return SweepTable(rows, sample, float(offset), method)
