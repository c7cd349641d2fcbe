"""Convergence of discounted transfer values for a balanced u0 on the full 2-shift.

    python3 scripts/balanced_sweep.py --eps 0.1,0.01,0.001 --out-dir results/balanced
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass
from pathlib import Path

from ergoshift.cli import render
from ergoshift.discounted import convergence_sweep
from ergoshift.plots import sweep_plot
from ergoshift.systems import EdgeWeights, enumerate_points, full_shift


@dataclass(frozen=True)
class BalancedSweepConfig:
    eps: tuple[float, ...] = (0.1, 0.01, 0.001)
    max_pre: int = 2
    max_cycle: int = 3
    method: str = "closed"
    out_dir: Path = Path("results/balanced")


def main(cfg: BalancedSweepConfig) -> int:
    system = full_shift(2)
    # u0(v -> w) = v - w integrates to zero on every cycle
    u0 = EdgeWeights({"00": 0, "01": -1, "10": 1, "11": 0})
    points = enumerate_points(system, cfg.max_pre, cfg.max_cycle)
    table = convergence_sweep(points, system, u0, list(cfg.eps), method=cfg.method)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "sweep.csv").write_text(render(table.rows, "csv"))
    sweep_plot(table.rows, cfg.out_dir / "sweep.svg")
    print(f"{table.sample}, method {table.method}")
    for row in table.rows:
        print(f"eps={row['epsilon']:g}  sup error={row['sup_error']:.3e}")
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--eps", default="0.1,0.01,0.001")
    ap.add_argument("--max-pre", type=int, default=BalancedSweepConfig.max_pre)
    ap.add_argument("--max-cycle", type=int, default=BalancedSweepConfig.max_cycle)
    ap.add_argument("--method", choices=["closed", "direct"], default="closed")
    ap.add_argument("--out-dir", type=Path, default=BalancedSweepConfig.out_dir)
    a = ap.parse_args()
    eps = tuple(float(x) for x in a.eps.split(","))
    raise SystemExit(main(BalancedSweepConfig(eps, a.max_pre, a.max_cycle, a.method, a.out_dir)))
