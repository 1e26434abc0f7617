"""Local discontinuous Galerkin solver for fractional diffusion on the unit disk.

The model problem is ``u_t + (-Delta)^s u = f`` on the unit disk with
``u = 0`` outside it, for ``0 < s < 1``.  The integral fractional Laplacian
is split as ``-div (-Delta)^(s-1) grad``: a local DG gradient and divergence
sandwich the Gram matrix of the Riesz potential ``(-Delta)^(s-1)``, whose
weakly singular kernel is integrated with dedicated triangle-pair rules.
"""
__version__ = "0.1.0"

from .basis import ReferenceBasis, reference_basis  # noqa: E402
from .blockdiag import BlockDiagonal  # noqa: E402
from .ldg import FluxVariant, LdgOperators, assemble_ldg, assemble_spatial_operator  # noqa: E402
from .manufactured import ManufacturedProblem  # noqa: E402
from .mesh import Mesh, MeshError, disk_mesh, generate_disk_mesh, load_mesh  # noqa: E402
from .riesz import QuadratureOrders, RieszGram, assemble_riesz_gram  # noqa: E402
from .special import gamma_fn, hyp2f1  # noqa: E402
from .timestep import ConfigError, ShiftedSystem, SolverConfig, SolverError, State, run, step  # noqa: E402
from .convergence import ConvergenceReport, StudyConfig, rate, run_convergence  # noqa: E402

__all__ = [
    "BlockDiagonal", "ConfigError", "ConvergenceReport", "FluxVariant", "LdgOperators",
    "ManufacturedProblem", "Mesh", "MeshError", "QuadratureOrders", "ReferenceBasis",
    "RieszGram", "ShiftedSystem", "SolverConfig", "SolverError", "State", "StudyConfig",
    "assemble_ldg", "assemble_riesz_gram", "assemble_spatial_operator", "disk_mesh",
    "gamma_fn", "generate_disk_mesh", "hyp2f1", "load_mesh", "rate", "reference_basis",
    "run", "run_convergence", "step",
]
