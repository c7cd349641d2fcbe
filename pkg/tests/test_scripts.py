import subprocess
import sys
from pathlib import Path

import pytest

SCRIPTS = Path(__file__).resolve().parent.parent / "scripts"


@pytest.mark.parametrize("name, extra, outputs", [
    ("run_oscillation.py", ["--pmax", "2"], ["oscillation.csv", "schedule.json", "oscillation.svg"]),
    ("balanced_sweep.py", ["--eps", "0.1,0.01", "--max-cycle", "2"], ["sweep.csv", "sweep.svg"]),
    ("rotation_sweep.py", ["--grid", "50", "--eps", "0.1,0.01"], ["rotation.csv", "rotation.svg"]),
])
def test_script_runs(tmp_path, name, extra, outputs):
    proc = subprocess.run([sys.executable, str(SCRIPTS / name), "--out-dir", str(tmp_path), *extra],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert all((tmp_path / o).stat().st_size > 0 for o in outputs)
