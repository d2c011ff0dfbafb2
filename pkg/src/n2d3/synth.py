"""Forward Kubelka-Munk scene synthesis with ground-truth region labels.

The reflected spectrum at a pixel is

    E = e (1 - rho_f)^2 R_inf + e rho_f,     R_inf(lambda, x) = R(lambda) C(x)

(``mode="eq1"``), or the idealized two-branch form ``E = e R C`` inside the
reflectance-dominated set Omega and ``E = e`` outside it (``mode="eq3"``).

Spectra live on a wavelength grid (31 samples over 400-700 nm by default) and
are projected to RGB through three Gaussian sensor bands. The sensor bands and
the scene templates exist to exercise the invariant pipeline; they are not a
camera model.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from n2d3.disentangle import Region
from n2d3.photometric import DEFAULT_EPS, DEFAULT_SIGMA, invariant_map

DEFAULT_WAVELENGTHS = np.linspace(400.0, 700.0, 31)

# Sensor bands (nm): long, mid, short. Equal width so that a flat spectrum
# integrates to equal channel values after per-band normalization.
SENSOR_CENTERS = (610.0, 540.0, 460.0)
SENSOR_WIDTH = 30.0

MODES = ("eq1", "eq3")


def sensor_curves(wavelengths: np.ndarray) -> np.ndarray:
    """``(3, n_lambda)`` quadrature weights of the sensor bands, each summing to one."""
    lam = np.asarray(wavelengths, dtype=np.float64)
    curves = np.stack(
        [np.exp(-0.5 * ((lam - c) / SENSOR_WIDTH) ** 2) for c in SENSOR_CENTERS]
    )
    quad = np.gradient(lam) if lam.size > 1 else np.ones(1)
    curves = curves * quad
    return curves / curves.sum(axis=1, keepdims=True)


# -- spectra ---------------------------------------------------------------

def blackbody(wavelengths: np.ndarray, temperature: float) -> np.ndarray:
    """Planck spectrum at ``temperature`` kelvin, scaled to unit maximum."""
    lam = np.asarray(wavelengths, dtype=np.float64) * 1e-9
    h, c, k = 6.62607015e-34, 2.99792458e8, 1.380649e-23
    spd = 1.0 / (lam**5 * np.expm1(h * c / (lam * k * temperature)))
    return spd / spd.max()


def gaussian_band(wavelengths: np.ndarray, center: float, width: float, floor: float = 0.0) -> np.ndarray:
    lam = np.asarray(wavelengths, dtype=np.float64)
    return floor + (1.0 - floor) * np.exp(-0.5 * ((lam - center) / width) ** 2)


def flat(wavelengths: np.ndarray, value: float = 1.0) -> np.ndarray:
    return np.full(np.asarray(wavelengths).shape, float(value))


def sigmoid(t: np.ndarray, width: float) -> np.ndarray:
    """Logistic step of the given width; ``width <= 0`` gives a hard step."""
    t = np.asarray(t, dtype=np.float64)
    if width <= 0:
        return (t >= 0).astype(np.float64)
    return 0.5 * (1.0 + np.tanh(t / (2.0 * width)))


# -- scene data ------------------------------------------------------------

@dataclass
class SceneSpec:
    """Everything needed to render one scene.

    Attributes:
        wavelengths: ``(n_lambda,)`` grid in nm, at least 16 samples.
        illumination: ``(H, W, n_lambda)`` non-negative illumination e.
        reflectance: ``(m, n_lambda)`` material reflectances in [0, 1].
        material_field: either integer material ids ``(H, W)`` or blending
            weights ``(H, W, m)``; the effective body reflectance is
            ``sum_k w_k R_k``.
        fresnel: ``(H, W)`` Fresnel coefficient in [0, 1].
        omega: ``(H, W)`` reflectance-dominated indicator used by ``eq3``.
        labels: ``(H, W)`` ground-truth region labels.
    """

    wavelengths: np.ndarray
    illumination: np.ndarray
    reflectance: np.ndarray
    material_field: np.ndarray
    fresnel: np.ndarray
    omega: np.ndarray
    labels: np.ndarray
    mode: str = "eq1"
    meta: dict = field(default_factory=dict)

    @property
    def shape(self) -> tuple[int, int]:
        return self.illumination.shape[:2]

    def validate(self) -> None:
        lam = np.asarray(self.wavelengths)
        if lam.ndim != 1 or lam.size < 16:
            raise ValueError("wavelength grid needs at least 16 samples")
        if self.illumination.ndim != 3 or self.illumination.shape[2] != lam.size:
            raise ValueError("illumination must have shape (H, W, n_lambda)")
        h, w = self.shape
        if h < 1 or w < 1:
            raise ValueError("scene must be at least 1x1")
        if np.any(self.illumination < 0) or not np.all(np.isfinite(self.illumination)):
            raise ValueError("illumination must be finite and non-negative")
        refl = np.asarray(self.reflectance)
        if refl.ndim != 2 or refl.shape[1] != lam.size:
            raise ValueError("reflectance must have shape (m, n_lambda)")
        if np.any(refl < 0) or np.any(refl > 1):
            raise ValueError("reflectance must lie in [0, 1]")
        for name in ("fresnel", "omega", "labels"):
            if np.shape(getattr(self, name)) != (h, w):
                raise ValueError(f"{name} must have shape {(h, w)}")
        if np.any(self.fresnel < 0) or np.any(self.fresnel > 1):
            raise ValueError("fresnel coefficient must lie in [0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    def body_reflectance(self) -> np.ndarray:
        """``(H, W, n_lambda)`` body reflectance R_inf."""
        refl = np.asarray(self.reflectance, dtype=np.float64)
        field_ = np.asarray(self.material_field)
        if np.issubdtype(field_.dtype, np.integer):
            if field_.shape != self.shape:
                raise ValueError(f"material ids must have shape {self.shape}")
            bad = (field_ < 0) | (field_ >= refl.shape[0])
            if np.any(bad):
                raise ValueError(f"unknown material id {int(field_[bad][0])}")
            return refl[field_]
        if field_.shape != (*self.shape, refl.shape[0]):
            raise ValueError("material weights must have shape (H, W, m)")
        return field_ @ refl


class SpectralStack(NamedTuple):
    wavelengths: np.ndarray
    radiance: np.ndarray  # (H, W, n_lambda)


def render_spectral(spec: SceneSpec, mode: str | None = None) -> SpectralStack:
    """Reflected spectrum at every pixel."""
    spec.validate()
    mode = spec.mode if mode is None else mode
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    e = np.asarray(spec.illumination, dtype=np.float64)
    r_inf = spec.body_reflectance()
    if mode == "eq1":
        rho = np.asarray(spec.fresnel, dtype=np.float64)[..., None]
        radiance = e * (1.0 - rho) ** 2 * r_inf + e * rho
    else:
        radiance = np.where(np.asarray(spec.omega, dtype=bool)[..., None], e * r_inf, e)
    return SpectralStack(np.asarray(spec.wavelengths, dtype=np.float64), radiance)


def spectral_to_rgb(stack: SpectralStack, white: float | None = None) -> np.ndarray:
    """Integrate radiance against the sensor bands into an RGB image in [0, 1].

    The image is divided by ``white``, or by its own maximum channel value when
    ``white`` is None; a black image stays black.
    """
    curves = sensor_curves(stack.wavelengths)
    rgb = np.asarray(stack.radiance, dtype=np.float64) @ curves.T
    scale = float(rgb.max()) if white is None else float(white)
    if scale > 0:
        rgb = rgb / scale
    return np.clip(rgb, 0.0, 1.0)


def spectrum_rgb(wavelengths: np.ndarray, spectrum: np.ndarray) -> np.ndarray:
    """Unnormalized RGB response of a single spectrum."""
    return sensor_curves(wavelengths) @ np.asarray(spectrum, dtype=np.float64)


def render_rgb(spec: SceneSpec, mode: str | None = None) -> np.ndarray:
    return spectral_to_rgb(render_spectral(spec, mode))


# -- templates -------------------------------------------------------------

def _scene(lam, illum, refl, mfield, fresnel, omega, labels, mode, **meta) -> SceneSpec:
    spec = SceneSpec(
        wavelengths=lam,
        illumination=illum,
        reflectance=np.atleast_2d(refl),
        material_field=mfield,
        fresnel=fresnel,
        omega=omega,
        labels=labels.astype(np.uint8),
        mode=mode,
        meta=meta,
    )
    spec.validate()
    return spec


def uniform_scene(
    width: int = 32,
    height: int = 32,
    temperature: float = 4000.0,
    intensity: float = 1.0,
    reflectance: float = 0.6,
    fresnel: float = 0.0,
    omega: bool = True,
    mode: str = "eq1",
    wavelengths: np.ndarray = DEFAULT_WAVELENGTHS,
) -> SceneSpec:
    """Single material under one uniform illuminant."""
    lam = np.asarray(wavelengths, dtype=np.float64)
    illum = np.broadcast_to(intensity * blackbody(lam, temperature), (height, width, lam.size)).copy()
    refl = flat(lam, reflectance)
    label = Region.WELL_LIT if fresnel < 0.5 else Region.LIGHT_EFFECTS
    return _scene(
        lam, illum, refl,
        np.zeros((height, width), dtype=np.int64),
        np.full((height, width), float(fresnel)),
        np.full((height, width), bool(omega)),
        np.full((height, width), int(label)),
        mode,
    )


def two_material_scene(
    width: int = 32,
    height: int = 16,
    temperature: float = 3000.0,
    intensity: float = 1.0,
    coefficients: tuple[float, float] = (0.3, 0.8),
    mode: str = "eq3",
    wavelengths: np.ndarray = DEFAULT_WAVELENGTHS,
) -> SceneSpec:
    """Left half: reflectance-dominated material; right half: bare illumination.

    Both halves carry a material id (``coefficients`` scale one shared
    reflectance shape) and the left half is Omega.
    """
    lam = np.asarray(wavelengths, dtype=np.float64)
    base = gaussian_band(lam, 560.0, 80.0, floor=0.2)
    refl = np.stack([c * base for c in coefficients])
    illum = np.broadcast_to(intensity * blackbody(lam, temperature), (height, width, lam.size)).copy()
    left = np.zeros((height, width), dtype=bool)
    left[:, : width // 2] = True
    ids = np.where(left, 0, 1).astype(np.int64)
    labels = np.where(left, Region.WELL_LIT, Region.LIGHT_EFFECTS)
    return _scene(lam, illum, refl, ids, np.where(left, 0.0, 1.0), left, labels, mode)


def lamp_scene(
    width: int = 512,
    height: int = 256,
    core_radius: float = 18.0,
    halo_radius: float = 60.0,
    floor_row: int | None = None,
    wall_level: float = 0.5,
    floor_level: float = 0.05,
    halo_temperature: float = 1800.0,
    mode: str = "eq1",
    wavelengths: np.ndarray = DEFAULT_WAVELENGTHS,
) -> SceneSpec:
    """Street-lamp scene: dark floor, gray wall, white lamp core, colored glow.

    The glow is pure illumination (rho_f = 1) whose color drifts from the
    core's white toward a warm blackbody with increasing radius while its
    brightest channel stays at ``wall_level`` of the core. Ground truth:
    floor -> darkness, wall -> well-lit, glow -> light effects, core -> high-light.
    """
    lam = np.asarray(wavelengths, dtype=np.float64)
    if floor_row is None:
        floor_row = int(round(height * 2 / 3))
    cy, cx = height * 0.35, width / 2.0
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    rad = np.hypot(yy - cy + 0.5, xx - cx + 0.5)

    white = flat(lam)
    warm = blackbody(lam, halo_temperature)
    white_peak = spectrum_rgb(lam, white).max()
    warm_peak = spectrum_rgb(lam, warm).max()

    core = rad < core_radius
    halo = (rad >= core_radius) & (rad < halo_radius)
    floor = (yy >= floor_row) & ~core & ~halo
    wall = ~(core | halo | floor)

    # illumination: white everywhere, glow mixes toward warm
    t = np.clip((rad - core_radius) / (halo_radius - core_radius), 0.0, 1.0)[..., None]
    mix = (1.0 - t) * white / white_peak + t * warm / warm_peak
    mix_peak = np.max(mix @ sensor_curves(lam).T, axis=-1, keepdims=True)
    illum = np.where(halo[..., None], wall_level * mix / mix_peak, white / white_peak)
    illum = np.where(core[..., None], white / white_peak, illum)

    # materials: 0 = wall gray, 1 = floor gray (same shape, darker)
    refl = np.stack([flat(lam, 1.0), flat(lam, floor_level / wall_level)])
    ids = np.where(floor, 1, 0).astype(np.int64)
    # wall/floor are lit at wall_level of the core's brightness
    illum = np.where((wall | floor)[..., None], illum * wall_level, illum)

    fresnel = np.where(core | halo, 1.0, 0.0)
    omega = wall | floor
    labels = np.full((height, width), int(Region.WELL_LIT))
    labels[floor] = Region.DARKNESS
    labels[halo] = Region.LIGHT_EFFECTS
    labels[core] = Region.HIGH_LIGHT
    return _scene(lam, illum, refl, ids, fresnel, omega, labels, mode)


# -- Corollary-1 oracle ----------------------------------------------------

class ScenePair(NamedTuple):
    uniform: SceneSpec       # uniform illumination color + material edges
    graded: SceneSpec        # same geometry, illumination color gradient
    material_edges: np.ndarray
    illumination_edges: np.ndarray
    refine: int


@dataclass
class CorollaryPairSpec:
    """Geometry of the paired invariance scenes, in coarse-pixel units.

    Materials share one reflectance shape ``R(lambda)`` and differ only in a
    scale coefficient, so the body reflectance is ``R(lambda) C(x, y)`` with
    ``C`` built from smooth logistic steps of width ``edge_width``: four
    vertical boundaries and one horizontal boundary. In the graded scene the
    illumination color crosses from a ``warm`` to a ``cool`` blackbody across
    a logistic ramp of width ``illum_width`` centred on the image; the
    vertical material boundaries sit inside that ramp. ``gradient`` scales the
    color change (0 makes the two scenes identical).
    """

    width: int = 128
    height: int = 64
    edge_width: float = 2.0
    illum_width: float = 12.0
    gradient: float = 1.0
    warm: float = 2500.0
    cool: float = 9000.0
    falloff: float = 0.3
    edge_band: float = 4.0
    mode: str = "eq1"

    def __post_init__(self):
        if self.width < 64 or self.height < 16:
            raise ValueError("corollary scene needs width >= 64 and height >= 16")
        if not (self.edge_width > 0 and self.illum_width > 0 and self.edge_band >= 0):
            raise ValueError("edge_width and illum_width must be > 0, edge_band >= 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    def boundaries(self) -> tuple[list[float], float]:
        cx = self.width / 2.0
        return [cx - 24.0, cx - 8.0, cx + 8.0, cx + 24.0], self.height / 2.0

    def build(self, refine: int = 1, materials: bool = True) -> ScenePair:
        if refine < 1:
            raise ValueError("refine must be >= 1")
        lam = DEFAULT_WAVELENGTHS
        h, w = self.height * refine, self.width * refine
        yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
        xc, yc = (xx + 0.5) / refine, (yy + 0.5) / refine
        xb, yb = self.boundaries()

        steps_x = sum((-1) ** k * sigmoid(xc - b, self.edge_width) for k, b in enumerate(xb))
        steps_y = sigmoid(yc - yb, self.edge_width)
        shape = gaussian_band(lam, 600.0, 60.0, floor=0.15)
        if materials:
            refl = np.stack([0.3 * shape, 0.4 * shape, 0.25 * shape])
            weights = np.stack([np.ones_like(xc), steps_x, steps_y], axis=-1)
        else:
            refl = np.stack([0.3 * shape])
            weights = np.ones((h, w, 1))

        warm, cool = blackbody(lam, self.warm), blackbody(lam, self.cool)
        intensity = (1.0 - self.falloff * yc / self.height)[..., None]
        flat_illum = intensity * warm
        s = (self.gradient * sigmoid(xc - self.width / 2.0, self.illum_width))[..., None]
        graded_illum = intensity * ((1.0 - s) * warm + s * cool)

        d_mat = np.minimum(np.min([np.abs(xc - b) for b in xb], axis=0), np.abs(yc - yb))
        material_edges = d_mat <= self.edge_band
        ramp = np.abs(xc - self.width / 2.0) <= self.illum_width
        illumination_edges = ramp & (d_mat > self.edge_band + 2.0)

        fresnel = np.zeros((h, w))
        omega = np.ones((h, w), dtype=bool)
        labels = np.full((h, w), int(Region.WELL_LIT))
        a = _scene(lam, flat_illum, refl, weights, fresnel, omega, labels, self.mode, refine=refine)
        b = _scene(lam, graded_illum, refl, weights, fresnel, omega, labels, self.mode, refine=refine)
        return ScenePair(a, b, material_edges, illumination_edges, refine)


@dataclass
class CorollaryReport:
    """Invariance check results. Responses are in coarse-pixel units."""

    material_edge_response: float
    illumination_edge_response: float
    ratio: float
    status: str
    coupled_material_response: float
    sigma: float
    eps: float
    threshold: float = 1e-2
    refine: int = 1
    refined_coupled_material_response: float = float("nan")
    refined_illumination_edge_response: float = float("nan")
    material_decrease: float = float("nan")
    illumination_change: float = float("nan")
    refinement_status: str = "not-run"

    @property
    def passed(self) -> bool:
        return self.status.startswith("PASS") and self.refinement_status in ("not-run", "monotone-decrease", "degenerate")

    def items(self) -> list[tuple[str, object]]:
        return list(self.__dict__.items())


DEGENERATE_FLOOR = 1e-9


def _interior(shape, margin: int) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    h, w = shape
    if h > 2 * margin and w > 2 * margin:
        m[margin : h - margin, margin : w - margin] = True
    return m


def _pair_responses(pair_spec: CorollaryPairSpec, refine, sigma, eps, threads):
    pair = pair_spec.build(refine)
    bare = pair_spec.build(refine, materials=False)
    inner = _interior(pair.material_edges.shape, int(math.ceil(4 * sigma)) + 1)
    n_a = invariant_map(render_rgb(pair.uniform), sigma, eps, threads) * refine
    n_b = invariant_map(render_rgb(pair.graded), sigma, eps, threads) * refine
    n_b_bare = invariant_map(render_rgb(bare.graded), sigma, eps, threads) * refine
    mat = pair.material_edges & inner
    ill = pair.illumination_edges & inner
    return (
        float(n_a[mat].max()),
        float(n_b[ill].max()) if ill.any() else 0.0,
        float(np.abs(n_b - n_b_bare)[mat].max()),
    )


def verify_corollary1(
    pair_spec: CorollaryPairSpec | None = None,
    sigma: float = DEFAULT_SIGMA,
    eps: float = DEFAULT_EPS,
    refine: int | None = None,
    threshold: float = 1e-2,
    threads: int | None = None,
) -> CorollaryReport:
    """Check that material edges leave the invariant untouched.

    Compares the largest interior N on material edges of the uniform scene
    with the largest N on illumination-color edges of the graded scene; PASS
    iff their ratio is at most ``threshold``. With zero illumination gradient
    the ratio is undefined and the status is ``PASS-degenerate``.

    The material term of N also vanishes under a graded illumination in the
    continuum; on the grid it leaves a residue ``|N(scene) - N(scene without
    materials)|`` at material edges (``coupled_material_response``). With
    ``refine`` set, the pair is re-rendered at ``refine`` times the
    resolution and the residue must shrink by at least ``refine`` while the
    illumination-edge response moves by less than 10%.
    """
    pair_spec = pair_spec or CorollaryPairSpec()
    mat, ill, coupled = _pair_responses(pair_spec, 1, sigma, eps, threads)
    if ill <= DEGENERATE_FLOOR:
        ratio, status = float("nan"), "PASS-degenerate"
    else:
        ratio = mat / ill
        status = "PASS" if ratio <= threshold else "FAIL"
    report = CorollaryReport(mat, ill, ratio, status, coupled, sigma, eps, threshold)

    if refine is not None and refine > 1:
        _, ill_f, coupled_f = _pair_responses(pair_spec, refine, sigma, eps, threads)
        report.refine = refine
        report.refined_coupled_material_response = coupled_f
        report.refined_illumination_edge_response = ill_f
        report.material_decrease = coupled / coupled_f if coupled_f > 0 else float("inf")
        if status == "PASS-degenerate":
            report.illumination_change = float("nan")
            report.refinement_status = "degenerate"
        else:
            report.illumination_change = abs(ill_f / ill - 1.0)
            ok = report.material_decrease >= refine and report.illumination_change < 0.1
            report.refinement_status = "monotone-decrease" if ok else "no-decrease"
    return report


# -- scene description files -----------------------------------------------
#
#   # comment
#   scene = lamp              (lamp | uniform | two_material | corollary_pair)
#   width = 512
#   height = 256
#   mode = eq1                (eq1 | eq3)
#
# One ``key = value`` per line; ``#`` starts a comment. Every other key is a
# keyword argument of the chosen template, typed after its default value
# (tuples are comma separated, booleans true/false).

class SceneFileError(ValueError):
    """Malformed scene description; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def _pair_template(**kwargs) -> CorollaryPairSpec:
    return CorollaryPairSpec(**kwargs)


TEMPLATES = {
    "lamp": lamp_scene,
    "uniform": uniform_scene,
    "two_material": two_material_scene,
    "corollary_pair": _pair_template,
}


def _template_defaults(name: str) -> dict:
    if name == "corollary_pair":
        return dict(CorollaryPairSpec().__dict__)
    import inspect

    sig = inspect.signature(TEMPLATES[name])
    return {k: p.default for k, p in sig.parameters.items() if k != "wavelengths"}


def _convert(raw: str, default):
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("true", "yes", "1"):
            return True
        if low in ("false", "no", "0"):
            return False
        raise ValueError(f"expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    if isinstance(default, tuple):
        return tuple(float(v) for v in raw.split(","))
    if default is None:
        return int(raw)  # only integer-or-None parameters exist
    return raw


def parse_scene_text(text: str) -> tuple[str, dict]:
    """Parse a scene description into ``(template name, keyword arguments)``."""
    entries: dict[str, tuple[str, int]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise SceneFileError(f"expected 'key = value', got {body!r}", lineno)
        key, value = (part.strip() for part in body.split("=", 1))
        if not key or not value:
            raise SceneFileError(f"empty key or value in {body!r}", lineno)
        if key in entries:
            raise SceneFileError(f"duplicate key {key!r}", lineno)
        entries[key] = (value, lineno)

    if "scene" not in entries:
        raise SceneFileError("missing 'scene' key")
    name, name_line = entries.pop("scene")
    if name not in TEMPLATES:
        raise SceneFileError(f"unknown scene {name!r}; expected one of {sorted(TEMPLATES)}", name_line)
    defaults = _template_defaults(name)
    params = {}
    for key, (value, lineno) in entries.items():
        if key not in defaults:
            raise SceneFileError(f"unknown key {key!r} for scene {name!r}", lineno)
        try:
            params[key] = _convert(value, defaults[key])
        except ValueError as exc:
            raise SceneFileError(f"bad value for {key!r}: {exc}", lineno) from None
        if key == "mode" and params[key] not in MODES:
            raise SceneFileError(f"mode must be one of {MODES}, got {value!r}", lineno)
    return name, params


def format_scene_text(name: str, params: dict) -> str:
    lines = [f"scene = {name}"]
    for key, value in params.items():
        if isinstance(value, bool):
            value = "true" if value else "false"
        elif isinstance(value, tuple):
            value = ",".join(repr(float(v)) for v in value)
        lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"


def build_scene(name: str, params: dict) -> SceneSpec | CorollaryPairSpec:
    try:
        return TEMPLATES[name](**params)
    except (TypeError, ValueError) as exc:
        raise SceneFileError(f"cannot build scene {name!r}: {exc}") from None


def load_scene(path, mode: str | None = None) -> SceneSpec:
    """Scene from a description file; a corollary pair yields its graded member."""
    from pathlib import Path

    name, params = parse_scene_text(Path(path).read_text())
    if mode is not None:
        params["mode"] = mode
    scene = build_scene(name, params)
    if isinstance(scene, CorollaryPairSpec):
        scene = scene.build().graded
    return scene


def load_scene_pair(path) -> CorollaryPairSpec:
    from pathlib import Path

    name, params = parse_scene_text(Path(path).read_text())
    if name != "corollary_pair":
        raise SceneFileError(f"expected scene = corollary_pair, got {name!r}")
    return build_scene(name, params)


def bundled_scene_path(name: str):
    """Path of a scene file shipped with the package (``lamp``, ``corollary_pair``)."""
    from importlib.resources import files

    return files("n2d3") / "scenes" / f"{name}.scene"
