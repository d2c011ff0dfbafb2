"""Gaussian color model, scale-space derivatives and the illumination invariant N.

RGB images are float arrays of shape ``(height, width, 3)`` with channels in
``[0, 1]``. Planes are 2-D float arrays of shape ``(height, width)``; axis 1 is
horizontal (``x``) and axis 0 vertical (``y``).

The invariant is assembled from

    N_lx  = (E_lx E - E_l E_x) / E^2
    N_llx = (E_llx E^2 - E_ll E_x E - 2 E_lx E_l E + 2 E_l^2 E_x) / E^3

and the analogous vertical terms, where ``E, E_l, E_ll`` come from a fixed
linear map of RGB and the spatial derivatives from Gaussian derivative
filtering. For a scene whose spectrum factors as ``e(lambda) R(lambda) C(x)``
the reflectance drops out and N depends on the illumination alone.
"""
from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np
from scipy.ndimage import convolve1d

from n2d3._parallel import map_lines

# Rows produce (E, E_lambda, E_lambdalambda) from (R, G, B).
GAUSSIAN_COLOR_MATRIX = np.array(
    [
        [0.06, 0.63, 0.27],
        [0.30, 0.04, -0.35],
        [0.34, -0.60, 0.17],
    ],
    dtype=np.float64,
)

DEFAULT_SIGMA = 1.0
DEFAULT_EPS = 1e-4
TRUNCATE = 4.0

_AXES = {"horizontal": 1, "x": 1, "vertical": 0, "y": 0}


class SpectralImage(NamedTuple):
    """Per-pixel spectral measurements E, E_lambda and E_lambdalambda."""

    e: np.ndarray
    e_lambda: np.ndarray
    e_lambda2: np.ndarray


class InvariantComponents(NamedTuple):
    """The four first-order-in-space invariant components."""

    n_lx: np.ndarray
    n_llx: np.ndarray
    n_ly: np.ndarray
    n_lly: np.ndarray


def as_rgb_image(img) -> np.ndarray:
    """Validate an RGB image and return it as a float64 ``(H, W, 3)`` array."""
    arr = np.asarray(img, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise ValueError(f"RGB image must have shape (height, width, 3), got {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("RGB image must be at least 1x1")
    if not np.all(np.isfinite(arr)):
        raise ValueError("RGB image contains non-finite values")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError("RGB channel values must lie in [0, 1]")
    return arr


def rgb_to_gaussian(img) -> SpectralImage:
    """Map RGB to the Gaussian color model ``(E, E_lambda, E_lambdalambda)``.

    >>> s = rgb_to_gaussian(np.ones((1, 1, 3)))
    >>> [round(float(p[0, 0]), 12) for p in s]
    [0.96, -0.01, -0.09]
    """
    rgb = as_rgb_image(img)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    m = GAUSSIAN_COLOR_MATRIX
    planes = [m[k, 0] * r + m[k, 1] * g + m[k, 2] * b for k in range(3)]
    return SpectralImage(*planes)


def gaussian_kernels(sigma: float) -> tuple[np.ndarray, np.ndarray]:
    """Sampled smoothing and first-derivative kernels truncated at ``ceil(4 sigma)``.

    The smoothing kernel sums to one; the derivative kernel is scaled to unit
    first moment so that convolving the ramp ``f(x) = x`` yields exactly 1.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0, got {sigma}")
    radius = max(1, int(math.ceil(TRUNCATE * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / sigma) ** 2)
    smooth = g / g.sum()
    deriv = -x * g
    deriv /= np.sum(x * x * g)
    return smooth, deriv


def _axis_index(axis) -> int:
    if isinstance(axis, str):
        try:
            return _AXES[axis]
        except KeyError:
            raise ValueError(f"axis must be 'horizontal' or 'vertical', got {axis!r}") from None
    raise ValueError(f"axis must be 'horizontal' or 'vertical', got {axis!r}")


def gaussian_derivative(
    plane,
    sigma: float = DEFAULT_SIGMA,
    axis: str = "horizontal",
    threads: int | None = None,
) -> np.ndarray:
    """First Gaussian derivative of ``plane`` along ``axis``.

    Separable: derivative-of-Gaussian along ``axis``, plain Gaussian smoothing
    of the same ``sigma`` along the other axis. Borders are mirror padded
    (reflect without repeating the edge sample).
    """
    smooth, deriv = gaussian_kernels(sigma)
    arr = np.asarray(plane, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"plane must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("plane contains non-finite values")
    ax = _axis_index(axis)
    other = 1 - ax

    # Each pass filters along one axis, so it may be split along the other.
    out = map_lines(lambda a: convolve1d(a, deriv, axis=ax, mode="mirror"), arr, other, threads)
    out = map_lines(lambda a: convolve1d(a, smooth, axis=other, mode="mirror"), out, ax, threads)
    return out


def invariant_components(
    spec: SpectralImage,
    sigma: float = DEFAULT_SIGMA,
    eps: float = DEFAULT_EPS,
    threads: int | None = None,
) -> InvariantComponents:
    """Evaluate ``N_lx, N_llx, N_ly, N_lly`` pointwise.

    ``E`` is replaced by ``max(E, eps)`` in every denominator.
    """
    if not eps > 0:
        raise ValueError(f"eps must be > 0, got {eps}")
    e, el, ell = (np.asarray(p, dtype=np.float64) for p in spec)
    if not (e.shape == el.shape == ell.shape) or e.ndim != 2:
        raise ValueError("spectral planes must be 2-D and share one shape")
    for p in (e, el, ell):
        if not np.all(np.isfinite(p)):
            raise ValueError("spectral planes contain non-finite values")

    guarded = np.maximum(e, eps)
    d2 = guarded * guarded
    d3 = d2 * guarded

    comps = []
    for axis in ("horizontal", "vertical"):
        e_d = gaussian_derivative(e, sigma, axis, threads)
        el_d = gaussian_derivative(el, sigma, axis, threads)
        ell_d = gaussian_derivative(ell, sigma, axis, threads)
        n_l = (el_d * e - el * e_d) / d2
        n_ll = (ell_d * e * e - ell * e_d * e - 2.0 * el_d * el * e + 2.0 * el * el * e_d) / d3
        comps.extend([n_l, n_ll])
    n_lx, n_llx, n_ly, n_lly = comps
    return InvariantComponents(n_lx, n_llx, n_ly, n_lly)


def combine_invariant(components: Sequence[np.ndarray]) -> np.ndarray:
    """Pointwise Euclidean norm of the four invariant components."""
    comps = [np.asarray(c, dtype=np.float64) for c in components]
    if len(comps) != 4:
        raise ValueError(f"expected 4 component planes, got {len(comps)}")
    shape = comps[0].shape
    if any(c.shape != shape for c in comps):
        raise ValueError(f"component planes differ in shape: {[c.shape for c in comps]}")
    # hypot chains avoid overflow in the squares
    return np.hypot(np.hypot(comps[0], comps[1]), np.hypot(comps[2], comps[3]))


def invariant_map(
    img,
    sigma: float = DEFAULT_SIGMA,
    eps: float = DEFAULT_EPS,
    threads: int | None = None,
) -> np.ndarray:
    """RGB image to the invariant N in one call."""
    return combine_invariant(invariant_components(rgb_to_gaussian(img), sigma, eps, threads))
