"""
Finite-element solver for quasi-static Biot poroelasticity in the
three-field total-pressure form, with a manufactured-solution verification
harness and a brain-edema application.
"""
from .biot import BiotMaterial, ProblemData, TransientState, lame_from_E_nu, run_transient
from .edema import EdemaConfig, run_normal_state, run_tbi
from .mesh import Mesh, load_mesh, refine_uniform, synthetic_brain_mesh, unit_square_mesh
from .verify import convergence_study

__version__ = "0.1.0"

__all__ = [
    "BiotMaterial",
    "ProblemData",
    "TransientState",
    "lame_from_E_nu",
    "run_transient",
    "EdemaConfig",
    "run_normal_state",
    "run_tbi",
    "Mesh",
    "load_mesh",
    "refine_uniform",
    "synthetic_brain_mesh",
    "unit_square_mesh",
    "convergence_study",
]
