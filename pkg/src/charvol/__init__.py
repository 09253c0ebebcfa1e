"""Character varieties, eigenvalue varieties and the volume differential
for orientable cusped hyperbolic 3-manifolds given by finite presentations
with peripheral data."""

__version__ = "0.1.0"

from .manifold import ManifoldSpec, SpecError, Z2CohomologyData, h1_z2, load_spec, parse_spec
from .repvar import (CharacterPoint, GaugedSystem, SignTwist, apply_twist,
                     build_gauged_system, enumerate_twists, find_complete,
                     on_V, restriction_traces)
from .eigenvar import (EigenvaluePoint, EliminantSet, ExtendedSystem,
                       build_extended, eliminate, gamma_act, on_U, sample_point)
from .continuation import (DeformationProblem, FillingCoefficients, FiberReport,
                           TrackedPath, fiber_over, jacobian_check, newton_correct,
                           sample_dense_set, solve_filling, track)
from .volume import (EtaValue, VolumeLabel, anchored_volume, eta_at,
                     fiber_volume_equality, integrate_eta, lobachevsky,
                     loop_integral)

__all__ = [
    "ManifoldSpec", "SpecError", "Z2CohomologyData", "h1_z2", "load_spec",
    "parse_spec", "CharacterPoint", "GaugedSystem", "SignTwist", "apply_twist",
    "build_gauged_system",
    "enumerate_twists", "find_complete", "on_V", "restriction_traces",
    "EigenvaluePoint", "EliminantSet", "ExtendedSystem", "build_extended",
    "eliminate", "gamma_act", "on_U", "sample_point", "DeformationProblem",
    "FillingCoefficients", "FiberReport", "TrackedPath", "fiber_over",
    "jacobian_check", "newton_correct", "sample_dense_set", "solve_filling",
    "track", "EtaValue", "VolumeLabel", "anchored_volume", "eta_at",
    "fiber_volume_equality", "integrate_eta", "lobachevsky", "loop_integral",
]
