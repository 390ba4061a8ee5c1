"""Systoles and symplectic capacities of smooth convex bodies.

Clarke-dual variational computation of minimal-action closed
characteristics, cross-validated by a Reeb-flow shooting oracle, with
Conley-Zehnder indices, Morse complexes of the reduced dual action, and
linking diagnostics for orbits on four dimensional boundaries.
"""

from __future__ import annotations

from .bodies import (
    ConvexBody,
    ball,
    body_from_spec,
    ellipsoid,
    gauge_eval,
    perturbed_ellipsoid,
    regularized,
    smoothed_polydisk,
)
from .certificate import (
    dumps_certificate,
    load_certificate,
    make_certificate,
    spectrum_rows,
    write_certificate,
    write_spectrum_csv,
)
from .czindex import (
    AsymptoticOperator,
    SpectralData,
    conley_zehnder,
    conley_zehnder_rotation,
    fredholm_indices,
    hamiltonian_linearization,
    operator_spectrum,
    transverse_linearization,
)
from .dual import (
    DualCriticalPoint,
    InconsistencyError,
    check_dual_inequality,
    dual_action_eval,
    find_critical_points,
    reconstruct_orbit,
    reduced_eval,
    systole,
    tail_minimizer,
)
from .fourier import FourierLoop
from .hamiltonians import (
    ConvexProfile,
    CorePatchedProfile,
    LinearProfile,
    SplitPerturbation,
    TimeHamiltonian,
    build_hamiltonian,
    direct_action,
    fenchel_eval,
    hamiltonian_field,
)
from .linking import (
    gauss_linking,
    linking_number,
    project_to_space,
    self_linking,
    xi_frame,
)
from .morse import (
    MorseComplexData,
    build_complex,
    homology_ranks,
    trace_unstable,
    verify_complex,
)
from .reeb import ClosedOrbit, find_closed_orbits, flow_with_variations, orbit_data
from .suite import CheckResult, run_check, run_suite

__all__ = [
    "AsymptoticOperator",
    "ClosedOrbit",
    "ConvexBody",
    "ConvexProfile",
    "CorePatchedProfile",
    "DualCriticalPoint",
    "FourierLoop",
    "InconsistencyError",
    "LinearProfile",
    "MorseComplexData",
    "SpectralData",
    "SplitPerturbation",
    "TimeHamiltonian",
    "CheckResult",
    "ball",
    "body_from_spec",
    "build_complex",
    "build_hamiltonian",
    "check_dual_inequality",
    "conley_zehnder",
    "conley_zehnder_rotation",
    "direct_action",
    "dual_action_eval",
    "dumps_certificate",
    "ellipsoid",
    "fenchel_eval",
    "find_closed_orbits",
    "find_critical_points",
    "flow_with_variations",
    "fredholm_indices",
    "gauge_eval",
    "gauss_linking",
    "hamiltonian_field",
    "hamiltonian_linearization",
    "homology_ranks",
    "linking_number",
    "load_certificate",
    "make_certificate",
    "operator_spectrum",
    "orbit_data",
    "perturbed_ellipsoid",
    "project_to_space",
    "reconstruct_orbit",
    "reduced_eval",
    "regularized",
    "run_check",
    "run_suite",
    "self_linking",
    "smoothed_polydisk",
    "spectrum_rows",
    "systole",
    "tail_minimizer",
    "trace_unstable",
    "transverse_linearization",
    "verify_complex",
    "write_certificate",
    "write_spectrum_csv",
    "xi_frame",
]

__version__ = "0.1.0"
