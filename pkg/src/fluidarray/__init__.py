"""Geometry, spacing statistics, CRBs and port placement for planar fluid antenna arrays."""

from .beam import BeamMap, array_factor, beam_map, psl_db
from .crb import (
    CrbResult,
    ObservationSpec,
    SourceDirection,
    crb_1d_reduction,
    fim_closed_form,
    fim_numeric_oracle,
    steering_vector,
)
from .errors import (
    DomainError,
    EmptyAccumulatorError,
    InfeasiblePlacementError,
    NoSidelobeError,
    SingularFisherError,
)
from .geometry import (
    Aperture,
    InertiaMatrix,
    PortLayout,
    ScatterAccumulator,
    accumulator_add,
    det_from_sums,
    det_trace,
    inertia_matrix,
    rotate_coordinates,
)
from .placement import (
    PlacementConfig,
    beta_from_beta0,
    count_interior_ports,
    generate_candidates,
    greedy_select,
    random_baseline,
    uniform_grid_baseline,
)
from .spacing import MinDistanceSample, SpacingLaw, sample_min_distances

__version__ = "0.1.0"
