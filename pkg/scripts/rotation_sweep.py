"""Discounted transfer values of cos(2 pi x) under the golden-mean rotation.

The sampled sup-error should track eps / (2 sin(pi alpha)) as eps shrinks.

    python3 scripts/rotation_sweep.py --grid 1000 --out-dir results/rotation
"""

from __future__ import annotations

import argparse
import math
from dataclasses import dataclass
from pathlib import Path

from ergoshift.cli import render
from ergoshift.discounted import convergence_sweep
from ergoshift.plots import sweep_plot
from ergoshift.systems import Fourier, RotationSystem

GOLDEN = "0.61803398874989484820"


@dataclass(frozen=True)
class RotationSweepConfig:
    alpha: str = GOLDEN
    grid: int = 1000
    eps: tuple[float, ...] = (0.1, 0.01, 0.001, 0.0001)
    out_dir: Path = Path("results/rotation")


def main(cfg: RotationSweepConfig) -> int:
    rot = RotationSystem(cfg.alpha)
    table = convergence_sweep(rot.grid_angles(cfg.grid), rot, Fourier(0.0, (1.0,)), list(cfg.eps))
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "rotation.csv").write_text(render(table.rows, "csv"))
    sweep_plot(table.rows, cfg.out_dir / "rotation.svg")
    scale = 2 * math.sin(math.pi * rot.alpha_float)
    for row in table.rows:
        print(f"eps={row['epsilon']:g}  sup error={row['sup_error']:.4e}  first order={row['epsilon'] / scale:.4e}")
    return 0


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", default=GOLDEN)
    ap.add_argument("--grid", type=int, default=RotationSweepConfig.grid)
    ap.add_argument("--eps", default="0.1,0.01,0.001,0.0001")
    ap.add_argument("--out-dir", type=Path, default=RotationSweepConfig.out_dir)
    a = ap.parse_args()
    raise SystemExit(main(RotationSweepConfig(a.alpha, a.grid, tuple(float(x) for x in a.eps.split(",")), a.out_dir)))
