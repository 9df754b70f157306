"""
Static and scheduled compute-optimal frontiers
==============================================

For each compute budget, the best error any single patch size reaches
versus the error the greedy patch schedule reaches. Both curves are saved as
a log-log SVG next to this script.
"""

from pathlib import Path

import numpy as np

from lawtraverse import default_partition, frontier, greedy_schedule, simulate
from lawtraverse.lawcore import evaluate
from lawtraverse.svg import loglog_svg
from lawtraverse.synthlab import preset_family

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)

family = preset_family("vit_patch")
grid = np.geomspace(1e13, 1e18, 60)
front = frontier(family, grid)

for s, g in list(zip(front.static, front.scheduled))[::12]:
    print(f"C={s.compute:.1e}  static {s.error:.4f} ({s.shape})  scheduled {g.error:.4f} ({g.shape})")

curves = [(law.shape_label, grid, evaluate(law, grid)) for law in family]
curves.append(("scheduled", grid, [p.error for p in front.scheduled]))
traj = simulate(family, greedy_schedule(default_partition(family)), 0.999, max_compute=grid[-1])
marks = [(m.compute, m.error_after) for m in traj.transitions]
(out / "vit_patch_frontier.svg").write_text(loglog_svg(curves, marks, title="patch size frontier"))
print("wrote", out / "vit_patch_frontier.svg")
