"""Pure-state reconstruction from measured probability distributions by
iterated physical imposition, and enumeration of Pauli partners."""
from .core import (
    TOL,
    DimensionError,
    RandomSource,
    canonicalize,
    hermitian_eigenbasis,
    induced_distance,
    random_state,
    ray_distance,
    state_from_json,
    state_to_json,
)
from .imposition import (
    ImpositionData,
    born_distribution,
    impose_distribution,
    impose_phases,
    load_distributions,
    post_imposition_bound,
)
from .observables import (
    ObservableSpec,
    OrthonormalBasis,
    UnsupportedDimensionError,
    angular_momentum_basis,
    fourier_basis,
    mub_family,
    parse_observable,
    random_basis,
    standard_basis,
    unbiasedness_check,
)
from .partners import (
    JState3,
    PartnerSet,
    cluster_rays,
    enumerate_partners,
    j_partner_conditions,
    j_partner_construct,
    pathological_expected_count,
)
from .reconstruct import ReconstructionConfig, RunResult, cycle, detect_stall, reconstruct, residual

__version__ = "0.1.0"
