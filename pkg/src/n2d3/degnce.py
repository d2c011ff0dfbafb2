"""Degradation-aware contrastive numerics over externally supplied features.

Patches are grouped by degradation region; similarities, transport plans and
loss terms are only ever formed inside one region, which makes the full
similarity matrix block diagonal by construction.

Within a region with ``K`` sampled cells, anchor ``i`` is the generated-image
feature at cell ``i``, its positive is the source feature at the same cell,
and its negatives are the source features at the other ``K - 1`` cells. The
negatives are reweighted by a zero-diagonal doubly stochastic transport plan
computed with Sinkhorn scaling; anchor ``i`` uses plan row ``i``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp

from n2d3.disentangle import DisentanglementMap, Region

DEFAULT_TAU = 0.07
DEFAULT_OT_EPSILON = 0.05
DEFAULT_MAX_SWEEPS = 1000
DEFAULT_OT_TOL = 1e-6
DEFAULT_MAX_PER_REGION = 256


@dataclass
class FeatureGrid:
    """Features of one extractor layer on a ``(grid_h, grid_w)`` patch grid."""

    layer_id: int
    vectors: np.ndarray  # (grid_h, grid_w, dim)

    def __post_init__(self):
        self.vectors = np.asarray(self.vectors, dtype=np.float64)
        if self.vectors.ndim != 3 or self.vectors.shape[2] < 1:
            raise ValueError(f"feature grid must have shape (h, w, dim >= 1), got {self.vectors.shape}")
        if not np.all(np.isfinite(self.vectors)):
            raise ValueError("feature grid contains non-finite values")

    @property
    def grid_shape(self) -> tuple[int, int]:
        return self.vectors.shape[:2]

    @property
    def dim(self) -> int:
        return self.vectors.shape[2]


@dataclass
class RegionSamples:
    """Samples of one degradation region in one layer.

    ``negatives`` for anchor ``i`` are the rows of ``positives`` other than
    ``i``; the pairing never leaves the region.
    """

    region: Region
    locations: np.ndarray  # (K, 2) grid (row, col)
    anchors: np.ndarray    # (K, dim) generated-image features
    positives: np.ndarray  # (K, dim) source features, same locations

    @property
    def count(self) -> int:
        return len(self.locations)

    @property
    def negatives(self) -> np.ndarray:
        return self.positives

    def negatives_for(self, i: int) -> np.ndarray:
        return np.delete(self.positives, i, axis=0)


@dataclass
class PatchSampleSet:
    layer_id: int
    grid_shape: tuple[int, int]
    regions: dict[Region, RegionSamples]

    @property
    def counts(self) -> dict[Region, int]:
        return {r: s.count for r, s in self.regions.items()}

    @property
    def n_anchors(self) -> int:
        return sum(s.count for s in self.regions.values())


@dataclass
class TransportPlan:
    region: Region | None
    weights: np.ndarray
    epsilon: float
    sweeps: int
    residual: float
    converged: bool
    residual_history: list[float] = field(default_factory=list, repr=False)

    @property
    def size(self) -> int:
        return self.weights.shape[0]


def _labels_of(dmap) -> np.ndarray:
    lab = dmap.labels if isinstance(dmap, DisentanglementMap) else np.asarray(dmap)
    if lab.ndim != 2:
        raise ValueError("label map must be 2-D")
    return lab.astype(np.int64)


def cell_regions(labels, grid_shape: tuple[int, int]) -> np.ndarray:
    """Majority region label of the pixels under each grid cell.

    Ties go to the region with fewer pixels in the whole map (then the lower
    label), so that small regions are not swallowed.
    """
    lab = _labels_of(labels)
    h, w = lab.shape
    gh, gw = grid_shape
    if gh < 1 or gw < 1 or gh > h or gw > w:
        raise ValueError(f"patch grid {grid_shape} incompatible with label map {lab.shape}")
    if lab.min() < 0 or lab.max() > 3:
        raise ValueError("labels must lie in {0, 1, 2, 3}")
    rows = (np.arange(h) * gh) // h
    cols = (np.arange(w) * gw) // w
    cell = rows[:, None] * gw + cols[None, :]
    votes = np.zeros((gh * gw, 4), dtype=np.int64)
    np.add.at(votes, (cell.ravel(), lab.ravel()), 1)

    totals = np.bincount(lab.ravel(), minlength=4)
    # preference order among tied regions: rarest first, then lowest id
    pref = sorted(range(4), key=lambda r: (totals[r], r))
    rank = np.empty(4, dtype=np.int64)
    rank[pref] = np.arange(4)
    best = votes.max(axis=1, keepdims=True)
    tied = votes == best
    choice = np.where(tied, rank[None, :], 4).argmin(axis=1)
    return choice.reshape(gh, gw)


def sample_patches(
    src_grid: FeatureGrid,
    gen_grid: FeatureGrid,
    dmap,
    seed: int = 0,
    max_per_region: int = DEFAULT_MAX_PER_REGION,
) -> PatchSampleSet:
    """Draw anchors, positives and negatives region by region.

    Per region ``K_s = min(cells in region, max_per_region)`` cells are drawn
    without replacement by ``numpy.random.PCG64(seed)``, regions in label
    order.
    """
    if src_grid.vectors.shape != gen_grid.vectors.shape:
        raise ValueError(
            f"source grid {src_grid.vectors.shape} and generated grid "
            f"{gen_grid.vectors.shape} differ"
        )
    if max_per_region < 1:
        raise ValueError("max_per_region must be >= 1")
    gh, gw = src_grid.grid_shape
    cells = cell_regions(dmap, (gh, gw)).ravel()
    rng = np.random.Generator(np.random.PCG64(seed))
    src = src_grid.vectors.reshape(gh * gw, -1)
    gen = gen_grid.vectors.reshape(gh * gw, -1)

    regions = {}
    for region in Region:
        members = np.flatnonzero(cells == region)
        if members.size == 0:
            continue
        k = min(members.size, max_per_region)
        picked = members[rng.choice(members.size, size=k, replace=False)]
        locs = np.stack([picked // gw, picked % gw], axis=1)
        regions[region] = RegionSamples(region, locs, gen[picked].copy(), src[picked].copy())
    return PatchSampleSet(src_grid.layer_id, (gh, gw), regions)


def _check_tau(tau: float) -> None:
    if not tau > 0:
        raise ValueError(f"tau must be > 0, got {tau}")


def similarity_logits(anchors, negatives, tau: float = DEFAULT_TAU) -> np.ndarray:
    """``v_i . v^-_j / tau`` for all pairs of one region."""
    _check_tau(tau)
    a = np.asarray(anchors, dtype=np.float64)
    n = np.asarray(negatives, dtype=np.float64)
    if a.ndim != 2 or a.shape != n.shape:
        raise ValueError(f"anchors {a.shape} and negatives {n.shape} must be matching (K, dim)")
    return a @ n.T / tau


def similarity_block(anchors, negatives, tau: float = DEFAULT_TAU) -> np.ndarray:
    """``exp(v_i . v^-_j / tau)``; the excluded diagonal holds ``inf``."""
    block = np.exp(similarity_logits(anchors, negatives, tau))
    np.fill_diagonal(block, np.inf)
    return block


def _normalize_rows_cols(log_k, g):
    f = -logsumexp(log_k + g[None, :], axis=1)
    g = -logsumexp(log_k + f[:, None], axis=0)
    return f, g


def _marginal_residual(w: np.ndarray) -> float:
    return max(
        float(np.max(np.abs(w.sum(axis=1) - 1.0))),
        float(np.max(np.abs(w.sum(axis=0) - 1.0))),
    )


def _newton_step(log_k, f, g):
    # one damped Newton step on the concave dual sum(f) + sum(g) - sum(w)
    k = f.size
    w = np.exp(log_k + f[:, None] + g[None, :])
    r, c = w.sum(axis=1), w.sum(axis=0)
    grad = np.concatenate([1.0 - r, 1.0 - c])[:-1]  # g[-1] pinned: gauge freedom
    hess = np.block([[np.diag(r), w], [w.T, np.diag(c)]])[:-1, :-1]
    try:
        step = np.linalg.solve(hess + 1e-13 * np.eye(2 * k - 1), grad)
    except np.linalg.LinAlgError:
        step = np.linalg.lstsq(hess, grad, rcond=1e-13)[0]
    step = np.append(step, 0.0)
    base = f.sum() + g.sum() - w.sum()
    slope = float(grad @ step[:-1])
    alpha = 1.0
    with np.errstate(over="ignore"):
        while alpha > 1e-8:
            fn, gn = f + alpha * step[:k], g + alpha * step[k:]
            val = fn.sum() + gn.sum() - np.exp(log_k + fn[:, None] + gn[None, :]).sum()
            if np.isfinite(val) and val >= base + 1e-4 * alpha * slope:
                return fn, gn
            alpha *= 0.5
    return f, g


def ot_reweight(
    block,
    epsilon: float = DEFAULT_OT_EPSILON,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    tol: float = DEFAULT_OT_TOL,
    emphasize_hard: bool = False,
    region: Region | None = None,
    method: str = "newton",
) -> TransportPlan:
    """Entropic transport plan with unit marginals and a forbidden diagonal.

    Minimizes ``sum_{i != j} w_ij C_ij - epsilon H(w)`` in log-domain
    Sinkhorn form, with the cost first divided by its largest off-diagonal
    magnitude so that ``epsilon`` is relative to the cost scale.
    ``emphasize_hard`` negates the cost, giving more weight to similar
    (hard) negatives instead of less. Diagonal entries of ``block`` are
    ignored.

    ``method="sinkhorn"`` alternates plain row and column normalizations.
    ``method="newton"`` anneals epsilon down from 1 and interleaves damped
    Newton steps on the dual with the same normalizations; it reaches small
    epsilon in tens of sweeps where plain scaling needs thousands. Every
    sweep ends with a column normalization.

    Iteration stops once every row and column sum is within ``tol`` of one;
    otherwise the plan is returned with ``converged=False`` and its residual.
    """
    if not epsilon > 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    if not tol > 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    if method not in ("newton", "sinkhorn"):
        raise ValueError(f"method must be 'newton' or 'sinkhorn', got {method!r}")
    cost = np.array(block, dtype=np.float64)
    if cost.ndim != 2 or cost.shape[0] != cost.shape[1]:
        raise ValueError(f"block must be square, got shape {cost.shape}")
    k = cost.shape[0]
    if k < 2:
        raise ValueError("a plan with an excluded diagonal needs K >= 2")
    off = ~np.eye(k, dtype=bool)
    if not np.all(np.isfinite(cost[off])):
        raise ValueError("off-diagonal costs must be finite")

    if k == 2:
        # the only zero-diagonal doubly stochastic 2x2 matrix
        w = np.array([[0.0, 1.0], [1.0, 0.0]])
        return TransportPlan(region, w, epsilon, 0, 0.0, True, [0.0])

    if emphasize_hard:
        cost = -cost
    cost = np.where(off, cost, 0.0)
    scale = float(np.max(np.abs(cost)))
    if scale > 0:
        cost = cost / scale

    if method == "sinkhorn":
        schedule = [epsilon]
    else:
        schedule = []
        e = 1.0
        while e > epsilon:
            schedule.append(e)
            e *= 0.25
        schedule.append(epsilon)

    f, g = np.zeros(k), np.zeros(k)
    history: list[float] = []
    residual = np.inf
    w = np.zeros((k, k))
    prev_eps = None
    for stage_eps in schedule:
        final = stage_eps == schedule[-1]
        if prev_eps is not None:
            # potentials are in units of cost / epsilon
            f, g = f * (prev_eps / stage_eps), g * (prev_eps / stage_eps)
        prev_eps = stage_eps
        log_k = np.where(off, -cost / stage_eps, -np.inf)
        stage_tol = tol if final else max(tol, 1e-3)
        while len(history) < max_sweeps:
            if method == "newton" and np.isfinite(residual) and residual > stage_tol:
                f, g = _newton_step(log_k, f, g)
            f, g = _normalize_rows_cols(log_k, g)
            w = np.exp(log_k + f[:, None] + g[None, :])
            residual = _marginal_residual(w)
            history.append(residual)
            if residual <= stage_tol:
                break
        if len(history) >= max_sweeps:
            break
    converged = residual <= tol and prev_eps == schedule[-1]
    return TransportPlan(region, w, epsilon, len(history), residual, converged, history)


def patch_nce(v, v_pos, negatives, tau: float = DEFAULT_TAU) -> float:
    """``-log(exp(v.v+/tau) / (exp(v.v+/tau) + sum_n exp(v.v-_n/tau)))``."""
    _check_tau(tau)
    v = np.asarray(v, dtype=np.float64)
    pos = float(v @ np.asarray(v_pos, dtype=np.float64)) / tau
    neg = np.asarray(negatives, dtype=np.float64).reshape(-1, v.size) @ v / tau
    return float(logsumexp(np.concatenate([[pos], neg]))) - pos


def weighted_nce(v, v_pos, negatives, weights, tau: float = DEFAULT_TAU) -> float:
    """NCE loss with each negative's exponential scaled by its weight."""
    _check_tau(tau)
    v = np.asarray(v, dtype=np.float64)
    neg_vecs = np.asarray(negatives, dtype=np.float64).reshape(-1, v.size)
    w = np.asarray(weights, dtype=np.float64).reshape(-1)
    if w.size != neg_vecs.shape[0]:
        raise ValueError(f"{w.size} weights for {neg_vecs.shape[0]} negatives")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("weights must be finite and non-negative")
    pos = float(v @ np.asarray(v_pos, dtype=np.float64)) / tau
    if w.size == 0:
        return 0.0
    # weights enter as log-offsets; log(0) = -inf drops a negative cleanly
    with np.errstate(divide="ignore"):
        log_w = np.log(w)
    logits = np.concatenate([[pos], neg_vecs @ v / tau + log_w])
    return float(logsumexp(logits)) - pos


def compute_plans(
    samples: PatchSampleSet,
    tau: float = DEFAULT_TAU,
    epsilon: float = DEFAULT_OT_EPSILON,
    max_sweeps: int = DEFAULT_MAX_SWEEPS,
    tol: float = DEFAULT_OT_TOL,
    emphasize_hard: bool = False,
) -> dict[Region, TransportPlan]:
    """One plan per region holding at least two samples."""
    plans = {}
    for region, rs in samples.regions.items():
        if rs.count < 2:
            continue
        block = similarity_block(rs.anchors, rs.negatives, tau)
        plans[region] = ot_reweight(block, epsilon, max_sweeps, tol, emphasize_hard, region)
    return plans


@dataclass
class LossReport:
    layer_losses: list[float]
    deg_nce: float
    layer_anchor_counts: list[int] = field(default_factory=list)
    adv_f: float | None = None
    adv_d: float | None = None

    @property
    def total_f(self) -> float | None:
        return None if self.adv_f is None else self.adv_f + self.deg_nce

    @property
    def total_d(self) -> float | None:
        return self.adv_d

    def with_adversarial(self, d_real, d_fake) -> "LossReport":
        self.adv_f, self.adv_d = adversarial_losses(d_real, d_fake)
        return self

    def items(self) -> list[tuple[str, object]]:
        out: list[tuple[str, object]] = []
        for i, (loss, n) in enumerate(zip(self.layer_losses, self.layer_anchor_counts)):
            out.append((f"layer{i}.anchors", n))
            out.append((f"layer{i}.deg_nce", loss))
        out.append(("deg_nce", self.deg_nce))
        if self.adv_f is not None:
            out += [("adv_f", self.adv_f), ("adv_d", self.adv_d),
                    ("total_f", self.total_f), ("total_d", self.total_d)]
        return out


def deg_nce_loss(
    samples: Sequence[PatchSampleSet],
    plans: Sequence[Mapping[Region, TransportPlan]],
    tau: float = DEFAULT_TAU,
    rescale: bool = False,
) -> LossReport:
    """Sum over layers of the mean weighted NCE over that layer's anchors.

    Plan rows sum to one; ``rescale=True`` multiplies them by ``K_s - 1`` so
    that a uniform plan reproduces unit weights. Anchors without negatives
    contribute zero.
    """
    _check_tau(tau)
    if len(samples) != len(plans):
        raise ValueError(f"{len(samples)} sample layers but {len(plans)} plan layers")
    layer_losses, counts = [], []
    for layer, layer_plans in zip(samples, plans):
        expected = {r for r, rs in layer.regions.items() if rs.count >= 2}
        if set(layer_plans) != expected:
            raise ValueError(
                f"layer {layer.layer_id}: plans for regions {sorted(map(int, layer_plans))} "
                f"but samples need {sorted(map(int, expected))}"
            )
        terms = []
        for region, rs in layer.regions.items():
            if rs.count < 2:
                terms.extend([0.0] * rs.count)
                continue
            w = layer_plans[region].weights
            if w.shape != (rs.count, rs.count):
                raise ValueError(f"region {region.name}: plan {w.shape} for {rs.count} samples")
            if rescale:
                w = w * (rs.count - 1)
            for i in range(rs.count):
                terms.append(weighted_nce(
                    rs.anchors[i], rs.positives[i], rs.negatives_for(i),
                    np.delete(w[i], i), tau,
                ))
        layer_losses.append(float(np.mean(terms)) if terms else 0.0)
        counts.append(len(terms))
    return LossReport(layer_losses, float(sum(layer_losses)), counts)


def adversarial_losses(d_real, d_fake) -> tuple[float, float]:
    """Least-squares adversarial terms for the generator and the discriminator."""
    real = np.asarray(d_real, dtype=np.float64)
    fake = np.asarray(d_fake, dtype=np.float64)
    if not (np.all(np.isfinite(real)) and np.all(np.isfinite(fake))):
        raise ValueError("discriminator outputs must be finite")
    adv_f = float(np.mean((fake - 1.0) ** 2))
    adv_d = float(np.mean((real - 1.0) ** 2) + np.mean(fake**2))
    return adv_f, adv_d


def total_losses(adv_f: float, adv_d: float, deg_nce: float) -> tuple[float, float]:
    """Generator and discriminator objectives."""
    return adv_f + deg_nce, adv_d
