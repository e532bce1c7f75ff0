"""
The emtest command line.

Writes a file of z-scores, then drives the three subcommands through
emtest.cli.main (the same entry point as the installed `emtest` script).
"""
import json
import math
import tempfile
from pathlib import Path

from emtest.cli import main
from emtest.simulation import GeneratorSpec, generate_sample
from emtest.special import RngState

tmp = Path(tempfile.mkdtemp())
z = generate_sample(GeneratorSpec.mixture(0.05, 0.0, 1.4, 2.6), 2000, RngState(9))
path = tmp / "scores.txt"
path.write_text("# simulated z-scores\n" + "\n".join(repr(float(v)) for v in z) + "\n")

# human-readable report
main(["test", str(path)])

# machine-readable report, two levels
out = tmp / "report.json"
with open(out, "w") as fh:
    main(["test", str(path), "--format", "json", "--level", "0.05", "--level", "1e-6"], stdout=fh)
rep = json.loads(out.read_text())
print("json keys:", sorted(rep))
print("decisions:", rep["decisions"])

# a single starting alpha of 0.5 moves the shift to 2 log 0.5
with open(tmp / "r2.json", "w") as fh:
    main(["test", str(path), "--format", "json", "--alpha-grid", "0.5"], stdout=fh)
print("shift:", json.loads((tmp / "r2.json").read_text())["shift"], "=", 2 * math.log(0.5))

# simulation and calibration tables go to stdout as csv; progress goes to stderr
main(["simulate", "--null", "--n", "200", "--reps", "50", "--seed", "7"])
main(["calibrate", "--reference"])

# data errors exit with code 3 and print nothing on stdout
bad = tmp / "bad.txt"
bad.write_text("1.0\noops\n")
print("exit code:", main(["test", str(bad)]))
