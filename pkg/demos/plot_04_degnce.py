"""
A degradation-aware contrastive loss from feature grids
=======================================================

Features of a source night image and of a generated day image arrive as
``(h, w, dim)`` grids, one per extractor layer. Patches are sampled region by
region, negatives never leave their region, and each anchor's negatives are
weighted by its row of the region's transport plan.
"""

import numpy as np

from n2d3.degnce import (
    FeatureGrid, adversarial_losses, compute_plans, deg_nce_loss, sample_patches, total_losses,
)

rng = np.random.default_rng(0)
labels = np.zeros((32, 32), dtype=np.uint8)
labels[:16, 16:] = 1
labels[16:, :16] = 2
labels[16:, 16:] = 3

layers = []
for layer, (side, dim) in enumerate([(8, 16), (4, 32)]):
    src = rng.normal(size=(side, side, dim))
    gen = src + 1.5 * rng.normal(size=src.shape)  # a loosely aligned generator
    src /= np.linalg.norm(src, axis=-1, keepdims=True)
    gen /= np.linalg.norm(gen, axis=-1, keepdims=True)
    layers.append(sample_patches(FeatureGrid(layer, src), FeatureGrid(layer, gen), labels, seed=1))

plans = [compute_plans(s, tau=0.07) for s in layers]
for s, p in zip(layers, plans):
    print(f"layer {s.layer_id}: samples per region {[(r.name.lower(), n) for r, n in s.counts.items()]}")
    print(f"         plan sweeps {[plan.sweeps for plan in p.values()]}")

report = deg_nce_loss(layers, plans, tau=0.07)
print("per-layer losses:", [f"{v:.4g}" for v in report.layer_losses], "total:", f"{report.deg_nce:.4g}")

# %%
# Adversarial terms use the least-squares form; the generator objective adds
# the contrastive loss.
adv_f, adv_d = adversarial_losses(rng.uniform(0.6, 1.0, 64), rng.uniform(0.0, 0.4, 64))
print("generator and discriminator objectives:", total_losses(adv_f, adv_d, report.deg_nce))
