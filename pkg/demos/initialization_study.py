"""Initialization sensitivity of the unweighted and weighted objectives.

Runs the Monte-Carlo study (default 2000 trials) and prints the MDPP/MDPAH
table.  The unweighted objective is convex enough that starting at the origin
and at the truth agree; the weighted one needs the unweighted result as a
starting point.

    python3 demos/initialization_study.py [trials] [seed]
"""

import sys

from uwb_relpose import run_monte_carlo

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
seed = int(sys.argv[2]) if len(sys.argv) > 2 else 42
report = run_monte_carlo(trials=trials, seed=seed)
print(report.to_text())
