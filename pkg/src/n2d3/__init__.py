"""Physics-informed disentanglement of nighttime degradations.

The package covers the photometric invariant N, the four-region partition of
a nighttime image, a Kubelka-Munk scene renderer used as ground truth, and the
region-restricted contrastive loss numerics with transport-plan weights.
"""
from n2d3.degnce import (
    FeatureGrid,
    LossReport,
    PatchSampleSet,
    RegionSamples,
    TransportPlan,
    adversarial_losses,
    compute_plans,
    deg_nce_loss,
    ot_reweight,
    patch_nce,
    sample_patches,
    similarity_block,
    total_losses,
    weighted_nce,
)
from n2d3.disentangle import (
    DisentanglementMap,
    KMeansResult,
    Region,
    disentangle,
    extract_light_effects,
    illuminance,
    kmeans_partition,
)
from n2d3.photometric import (
    GAUSSIAN_COLOR_MATRIX,
    InvariantComponents,
    SpectralImage,
    combine_invariant,
    gaussian_derivative,
    invariant_components,
    invariant_map,
    rgb_to_gaussian,
)
from n2d3.synth import (
    CorollaryPairSpec,
    CorollaryReport,
    SceneSpec,
    lamp_scene,
    render_rgb,
    render_spectral,
    verify_corollary1,
)

__version__ = "0.1.0"
