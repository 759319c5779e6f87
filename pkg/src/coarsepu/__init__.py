"""Partitions of unity, trees of partitions of unity and decomposition trees on
finite extended pseudo-metric spaces, with exhaustive continuity checks."""

from .cover import (
    ContinuityReport,
    Cover,
    CoverError,
    PartitionError,
    PartitionOfUnity,
    blend,
    characteristic_pu,
    continuity_modulus,
    index,
    index_vector,
    l1_normalize,
    lebesgue_number,
    mix,
    multiplicity,
    natural_pu,
    trim,
    trivial_pu,
)
from .decomp import (
    ConversionError,
    DecompTree,
    Decomposition,
    EnlargementError,
    Level,
    Schedule,
    UniformlyBounded,
    annuli,
    annuli_tree,
    check_decomposition,
    conversion_radii,
    cover_from_decomposition,
    decomp_to_pu_tree,
    disjointness_schedule,
    enlarge_tree,
    greedy_nets,
    target_of_path,
    max_ball_size,
    validate_decomp_tree,
)
from .metric import (
    INF,
    TOL,
    FiniteSpace,
    MetricAxiomError,
    ball,
    diameter,
    generate,
    graph_space,
    grid,
    interval,
    is_r_disjoint,
    validate_space,
    wedge,
    wedge_id,
)
from .putree import (
    InvalidTreeError,
    ModulusProfile,
    PUTree,
    induced_pu,
    modulus_profile,
    truncate_at_depth,
    validate_pu_tree,
)
from .validation import ValidationReport, Violation

__version__ = "0.1.0"
