"""diophlab: windowed experiments in uniform Diophantine approximation with restricted sets."""
from ._jit import NUMBA_ENABLED, backend_name
from .convex import (
    DirectionSet,
    HullCertificate,
    SeparationWitness,
    caratheodory_reduce,
    check_ch_condition,
    empty_open_box,
    generalized_caratheodory,
    origin_in_hull,
)
from .core import Mat, PowerLaw, Tabulated, dirichlet_psi, make_approx_function, parse_psi
from .density import coverage_scan, omega_region, total_density_probe
from .geometry import BoxRegion, ResonantSubspace, TPoint, intersect_two, jacobian_probe, project
from .logdensity import gap_counterexample, gap_ratio_profile, logdense_in_subspace, logdense_test
from .sets import example_set, parse_generator
from .uniformity import (
    build_uniform_witness,
    check_uniform,
    check_uniform_augmented,
    check_uniform_inhom,
    dirichlet_margin,
)

__version__ = "0.1.0"
