"""Kernels of real and complex hyperbolic type on finite point sets.

Validation of kernel pairs ``(beta, alpha)``, explicit embeddings into
hyperbolic space, power and anisotropic deformations, tree and glueing
kernels, and a randomized property-suite runner.
"""
from hypkern._accel import backend
from hypkern.deform import (
    anisotropic_deform,
    power_kernel,
    power_proof_path,
    rigidity_witness,
    second_order_extrapolate,
    witness_search_power,
)
from hypkern.embed import gns_embed, projective_action
from hypkern.kernels import (
    ComplexHyperbolicKernel,
    Status,
    busemann_decompose,
    check_cocycle,
    polarisation_equiv,
    schoenberg_suite,
    validate_cht,
    validate_rht,
)
from hypkern.minkowski import (
    Field,
    Isometry,
    MinkowskiPoint,
    MinkowskiSpace,
    cartan_arg,
    cosh_dist,
    dist,
    mink_form,
    tautological_kernel,
    translation_length,
)
from hypkern.numcore import (
    DomainError,
    HermitianMatrix,
    PsdReport,
    Verdict,
    cnd_check,
    gram_factor,
    mixed_power,
    psd_check,
    q_series,
)
from hypkern.trees import (
    MetricTree,
    exp_kernel,
    free_product_kernel,
    glue_kernels,
    tree_distance,
    tree_kernel,
)

__version__ = "0.1.0"

__all__ = [
    "backend",
    "anisotropic_deform", "power_kernel", "power_proof_path", "rigidity_witness",
    "second_order_extrapolate", "witness_search_power",
    "gns_embed", "projective_action",
    "ComplexHyperbolicKernel", "Status", "busemann_decompose", "check_cocycle",
    "polarisation_equiv", "schoenberg_suite", "validate_cht", "validate_rht",
    "Field", "Isometry", "MinkowskiPoint", "MinkowskiSpace", "cartan_arg", "cosh_dist", "dist",
    "mink_form", "tautological_kernel", "translation_length",
    "DomainError", "HermitianMatrix", "PsdReport", "Verdict", "cnd_check", "gram_factor",
    "mixed_power", "psd_check", "q_series",
    "MetricTree", "exp_kernel", "free_product_kernel", "glue_kernels", "tree_distance", "tree_kernel",
]
