"""Regenerate the golden files under tests/golden.

Only run this after the values have been checked against the oracles in the
test suite; the goldens then guard against regressions.
"""

import json
import subprocess
import sys
from pathlib import Path

from zeroerr.exponents import exponent_ck, parity_source, path_source
from zeroerr.scheme import build_scheme

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "golden"


def write(name, obj):
    path = GOLDEN / name
    path.write_text(json.dumps(obj, indent=2) + "\n")
    print("wrote", path.relative_to(ROOT))


def cli(*args):
    out = subprocess.run([sys.executable, "-m", "zeroerr.cli", *args], check=True,
                         capture_output=True, text=True, cwd=ROOT)
    return out.stdout


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    cb = build_scheme(parity_source(), 4, 0.6, seed=0)
    write("parity_n4_split.json", {
        "source": "parity", "n": 4, "rate": 0.6, "seed": 0,
        "split": cb.split(),
        "types": [{"counts": list(t.counts), "mode": t.mode, "bound": t.bound,
                   "bound_kind": t.bound_kind} for t in cb.types],
    })
    ck = exponent_ck(0.5, path_source())
    write("ck_path.json", {"rate": 0.5, "value": ck.value, "certificate": ck.certificate})
    write("simulate_parity.json", json.loads(cli("simulate", "problems/simulate_parity.json")))
    (GOLDEN / "exponents_path.csv").write_text(cli("exponents", "problems/exponents_path.json",
                                                   "--format", "csv"))
    print("wrote tests/golden/exponents_path.csv")


if __name__ == "__main__":
    main()
