"""
Switching between two scaling laws
==================================

Two laws that cross: B is cheap early but saturates high, A is the other way
round. Following whichever law has the smallest compute cost per unit of error
gives a schedule that reaches a target error with less compute than either.
"""

from lawtraverse import LawFamily, PowerLaw, baseline_schedule, greedy_schedule, partition, savings, simulate
from lawtraverse.trajectory import scheduled_compute, static_compute

B = PowerLaw(0.5, 2.0, 0.35, 1.0, "B")
A = PowerLaw(0.8, 1.0, 0.1, 1.0, "A")
family = LawFamily.from_laws([B, A])

part = partition(family, (0.85, 0.25))
for seg in part.segments:
    print(f"follow {seg.shape} from error {seg.e_high:.4f} down to {seg.e_low:.4f}")

target = 0.3
print("static compute:", {k: round(v, 4) for k, v in static_compute(family, target).items()})
print("greedy compute:", round(scheduled_compute(family, part, target), 4))
print(f"saved: {100 * savings(family, part, target):.2f}%")

# the same switch done on a fixed compute timetable instead
greedy = greedy_schedule(part)
for sched in (greedy, baseline_schedule("linear", ["B", "A"], 2.8), baseline_schedule("log", ["B", "A"], 2.8)):
    traj = simulate(family, sched, 0.85, target_error=target)
    print(f"{sched.kind:12s} reaches {target} after {traj.compute_at(target):.4f}")
