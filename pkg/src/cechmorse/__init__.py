"""Čech filtrations, critical simplices and persistence diagrams of random point clouds."""

__version__ = "0.1.0"

from .errors import CrossCheckMismatch, DegenerateInput, MalformedFiltration, TieAmbiguity, UnsupportedDimension
from .filtration import (
    CechFiltration,
    CriticalCensus,
    StepGroup,
    build_cech_filtration,
    cech_value,
    critical_census,
    detect_critical_geometric,
    group_steps,
)
from .geometry import (
    BallDescriptor,
    BarycentricReport,
    PointCloud,
    circumcenter_in_open_hull,
    circumsphere,
    general_position_check,
    min_enclosing_ball,
)
from .identities import IdentityReport, check_critical_correspondence, check_morse_identities, check_pd_count_identity
from .persistence import (
    DiagramSummary,
    PersistenceDiagram,
    StepEffect,
    betti_at,
    compute_persistence,
    persistent_betti,
    single_simplex_step_effect,
    summarize,
)
