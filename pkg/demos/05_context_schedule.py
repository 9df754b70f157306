"""
Growing the context length during training
==========================================

Language-model fixture: short contexts are cheap per sequence but plateau
at a higher loss. The greedy partition walks from short to long contexts,
and the schedule is converted into optimizer-step switch points.
"""

from lawtraverse import default_partition, greedy_schedule, is_monotone, savings, to_step_schedule
from lawtraverse.flopcost import LMShape, lm_forward_flops, train_step_flops
from lawtraverse.synthlab import preset_family

family = preset_family("lm_context")
part = default_partition(family)
sched = greedy_schedule(part)
print("context order:", " -> ".join(sched.shapes), "| monotone:", is_monotone(sched, family))

for t in sched.transitions:
    print(f"switch to {t.shape} once the loss drops below {t.value:.3f}")

for target in (4.0, 3.8, 3.6):
    print(f"loss {target}: {100 * savings(family, part, target):.1f}% less compute than the best fixed context")

# per-step cost at batch 64 for each context
per_step = {}
for label in family.labels:
    n = int(label.split("=")[1])
    per_step[label] = train_step_flops(lm_forward_flops(LMShape(768, 12, n)), 64)
for shape, step in to_step_schedule(sched, family, per_step, part.e_start):
    print(f"step {step:>8d}: switch to {shape}")
