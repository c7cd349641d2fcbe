"""Discounted values of u0 o sigma - u0 along the oscillation schedule on the full 2-shift.

    python3 scripts/run_oscillation.py --out-dir results/oscillation
"""

from __future__ import annotations

import argparse
import json
from dataclasses import asdict, dataclass
from pathlib import Path

from ergoshift.asymptotics import build_oscillation_schedule, oscillation_experiment
from ergoshift.cli import render
from ergoshift.plots import oscillation_plot
from ergoshift.systems import EdgeWeights, full_shift


@dataclass(frozen=True)
class OscillationConfig:
    n1: int = 9
    p_max: int = 3
    w0: tuple[str, ...] = ("00",)
    w1: tuple[str, ...] = ("11",)
    out_dir: Path = Path("results/oscillation")


def main(cfg: OscillationConfig) -> int:
    system = full_shift(2)
    # u0(v -> w) = v separates the two fixed points
    u0 = EdgeWeights({"00": 0, "01": 0, "10": 1, "11": 1})
    schedule = build_oscillation_schedule(system, cfg.w0, cfg.w1, cfg.n1, p_max=cfg.p_max)
    table = oscillation_experiment(schedule, system, u0)
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    (cfg.out_dir / "oscillation.csv").write_text(render(table.rows, "csv"))
    (cfg.out_dir / "schedule.json").write_text(json.dumps(schedule.to_dict(), indent=2) + "\n")
    oscillation_plot(table.rows, cfg.out_dir / "oscillation.svg")
    for row in table.rows:
        print(f"p={row['p']}  eps={row['eps_p']}  U={row['U_value']:.6f}  target={row['target']:g}")
    print("config:", {k: str(v) for k, v in asdict(cfg).items()})
    return 0 if table.passed else 1


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n1", type=int, default=OscillationConfig.n1)
    ap.add_argument("--pmax", type=int, default=OscillationConfig.p_max)
    ap.add_argument("--out-dir", type=Path, default=OscillationConfig.out_dir)
    a = ap.parse_args()
    raise SystemExit(main(OscillationConfig(n1=a.n1, p_max=a.pmax, out_dir=a.out_dir)))
