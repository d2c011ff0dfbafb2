"""Four-way partition of a nighttime image into degradation regions.

The illuminance ``L = max(R, G, B)`` is split by 1-D k-means into darkness,
well-lit and high-light; light effects are then carved out of the well-lit
region wherever the standardized invariant N is positive.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from n2d3._parallel import map_lines
from n2d3.photometric import DEFAULT_EPS, DEFAULT_SIGMA, as_rgb_image, invariant_map

N_CLUSTERS = 3


class Region(IntEnum):
    DARKNESS = 0
    WELL_LIT = 1
    LIGHT_EFFECTS = 2
    HIGH_LIGHT = 3


# k-means cluster rank (ascending centroid) -> region
_CLUSTER_REGIONS = (Region.DARKNESS, Region.WELL_LIT, Region.HIGH_LIGHT)


def illuminance(img) -> np.ndarray:
    """Per-pixel maximum over the RGB channels."""
    return as_rgb_image(img).max(axis=2)


@dataclass
class KMeansResult:
    """Outcome of :func:`kmeans_partition`.

    ``clusters`` holds the rank of each pixel's cluster (0 = lowest centroid).
    Empty clusters have a NaN centroid. ``objective`` records the
    within-cluster sum of squares after initialization and after every Lloyd
    iteration.
    """

    clusters: np.ndarray
    centroids: np.ndarray
    objective: list[float]
    n_iter: int

    @property
    def dark(self) -> np.ndarray:
        return self.clusters == 0

    @property
    def well_lit(self) -> np.ndarray:
        return self.clusters == 1

    @property
    def high_light(self) -> np.ndarray:
        return self.clusters == 2


def _kmeanspp(values, counts, k, rng) -> np.ndarray:
    # D^2 sampling over distinct values, each weighted by its pixel count
    cum = np.cumsum(counts)
    first = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    centers = [values[min(first, values.size - 1)]]
    d2 = (values - centers[0]) ** 2
    for _ in range(1, k):
        w = np.cumsum(counts * d2)
        pick = int(np.searchsorted(w, rng.random() * w[-1], side="right"))
        pick = min(pick, values.size - 1)
        centers.append(values[pick])
        d2 = np.minimum(d2, (values - values[pick]) ** 2)
    return np.sort(np.array(centers, dtype=np.float64))


def _assign(values: np.ndarray, centroids: np.ndarray, threads) -> np.ndarray:
    # argmin keeps the first minimum: ties go to the lower (sorted) centroid
    return map_lines(
        lambda v: np.argmin(np.abs(v[:, None] - centroids[None, :]), axis=1),
        values, 0, threads,
    )


def _objective(values, counts, centroids, assign) -> float:
    return float(np.sum(counts * (values - centroids[assign]) ** 2))


def kmeans_partition(
    lum,
    k: int = N_CLUSTERS,
    seed: int = 0,
    max_iters: int = 300,
    tol: float = 1e-6,
    threads: int | None = None,
) -> KMeansResult:
    """Seeded 1-D k-means on pixel luminances.

    Initialization is k-means++ driven by ``numpy.random.PCG64(seed)``. Lloyd
    iterations stop once no centroid moves by more than ``tol`` times the
    luminance range, or after ``max_iters``. Clusters are ranked by ascending
    centroid. With fewer distinct values than clusters every distinct value
    forms its own cluster, filled from the lowest rank; the rest stay empty.
    """
    if k != N_CLUSTERS:
        raise ValueError(f"the partition uses exactly {N_CLUSTERS} clusters, got k={k}")
    lum = np.asarray(lum, dtype=np.float64)
    if lum.size == 0:
        raise ValueError("cannot cluster an empty image")
    if not np.all(np.isfinite(lum)):
        raise ValueError("luminance contains non-finite values")
    if max_iters < 0 or not tol >= 0:
        raise ValueError("max_iters and tol must be non-negative")

    values, inverse, counts = np.unique(lum.ravel(), return_inverse=True, return_counts=True)
    counts = counts.astype(np.float64)
    inverse = inverse.reshape(lum.shape)

    if values.size < k:
        centroids = np.full(k, np.nan)
        centroids[: values.size] = values
        assign = np.arange(values.size)
        obj = [0.0]
        return KMeansResult(assign[inverse], centroids, obj, 0)

    rng = np.random.Generator(np.random.PCG64(seed))
    centroids = _kmeanspp(values, counts, k, rng)
    assign = _assign(values, centroids, threads)
    history = [_objective(values, counts, centroids, assign)]
    span = float(values[-1] - values[0])

    n_iter = 0
    for n_iter in range(1, max_iters + 1):
        sums = np.bincount(assign, weights=counts * values, minlength=k)
        sizes = np.bincount(assign, weights=counts, minlength=k)
        new = centroids.copy()
        filled = sizes > 0
        new[filled] = sums[filled] / sizes[filled]
        new.sort()
        shift = float(np.max(np.abs(new - centroids)))
        centroids = new
        assign = _assign(values, centroids, threads)
        history.append(_objective(values, counts, centroids, assign))
        if shift <= tol * span:
            break

    sizes = np.bincount(assign, minlength=k)
    centroids = np.where(sizes > 0, centroids, np.nan)
    return KMeansResult(assign[inverse], centroids, history, n_iter)


def extract_light_effects(invariant, well_lit) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split the well-lit mask into light effects and the refined well-lit mask.

    Returns ``(light_effects, well_lit_refined, response)`` where ``response``
    is ``max((N - mean(N)) / std(N), 0)`` with statistics over all pixels.
    """
    n = np.asarray(invariant, dtype=np.float64)
    m = np.asarray(well_lit, dtype=bool)
    if n.shape != m.shape:
        raise ValueError(f"invariant {n.shape} and mask {m.shape} differ in shape")
    std = float(n.std())
    if std > 0:
        response = np.maximum((n - n.mean()) / std, 0.0)
    else:
        response = np.zeros_like(n)
    le = (response > 0) & m
    return le, m & ~le, response


@dataclass
class DisentanglementMap:
    """Exhaustive per-pixel labeling with the diagnostics that produced it."""

    labels: np.ndarray
    centroids: np.ndarray
    invariant: np.ndarray | None = None
    response: np.ndarray | None = None
    kmeans_objective: list[float] = field(default_factory=list)

    @property
    def shape(self) -> tuple[int, int]:
        return self.labels.shape

    def mask(self, region: Region) -> np.ndarray:
        return self.labels == int(region)

    @property
    def masks(self) -> dict[Region, np.ndarray]:
        return {r: self.mask(r) for r in Region}

    def counts(self) -> dict[Region, int]:
        return {r: int(np.count_nonzero(self.mask(r))) for r in Region}

    @classmethod
    def from_labels(cls, labels) -> "DisentanglementMap":
        lab = np.asarray(labels)
        if lab.ndim != 2:
            raise ValueError("label map must be 2-D")
        if lab.size and (lab.min() < 0 or lab.max() > 3):
            raise ValueError("labels must lie in {0, 1, 2, 3}")
        return cls(lab.astype(np.uint8), np.full(N_CLUSTERS, np.nan))


def disentangle(
    img,
    sigma: float = DEFAULT_SIGMA,
    eps: float = DEFAULT_EPS,
    seed: int = 0,
    max_iters: int = 300,
    tol: float = 1e-6,
    threads: int | None = None,
) -> DisentanglementMap:
    """Label every pixel as darkness, well-lit, light effects or high-light."""
    rgb = as_rgb_image(img)
    km = kmeans_partition(illuminance(rgb), seed=seed, max_iters=max_iters, tol=tol, threads=threads)
    n = invariant_map(rgb, sigma, eps, threads)
    le, _, response = extract_light_effects(n, km.well_lit)

    labels = np.empty(km.clusters.shape, dtype=np.uint8)
    for rank, region in enumerate(_CLUSTER_REGIONS):
        labels[km.clusters == rank] = region
    labels[le] = Region.LIGHT_EFFECTS
    return DisentanglementMap(labels, km.centroids, n, response, km.objective)
