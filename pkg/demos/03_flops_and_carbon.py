"""
FLOPs per image and the carbon bill
===================================

Forward FLOPs for a range of ViT shapes at two patch sizes, then the energy
and emissions of a training run at a given GPU budget.
"""

from lawtraverse.flopcost import HardwareRun, ViTShape, carbon, distill_step_flops, train_step_flops, vit_forward_flops

print("model        p=8 GFLOPs   p=24 GFLOPs")
for width, depth in [(256, 6), (192, 12), (256, 12), (384, 12), (512, 12), (640, 12), (768, 12)]:
    g8 = vit_forward_flops(ViTShape(width, depth, 8)) / 1e9
    g24 = vit_forward_flops(ViTShape(width, depth, 24)) / 1e9
    print(f"V{width}-{depth:<8d} {g8:10.3f} {g24:12.4f}")

# smaller patches mean more tokens and a quadratic attention bill
for p in (24, 12, 8, 6):
    shape = ViTShape(640, 12, p)
    print(f"patch {p:2d}: {shape.tokens:4d} tokens, {vit_forward_flops(shape) / 1e9:7.2f} GFLOPs")

student = vit_forward_flops(ViTShape(384, 12, 12))
teacher = vit_forward_flops(ViTShape(640, 10, 12))
print(f"step at batch 256: {train_step_flops(student, 256):.3e} supervised, {distill_step_flops(student, teacher, 256):.3e} distilled")

for hours in (120, 48):
    mwh, t = carbon(HardwareRun(hours, 280, pue=1.1))
    print(f"{hours} GPU-hours at 280 W: {mwh:.4f} MWh, {t:.4f} tCO2eq")
