"""Dynamic-programming regularization for static and dynamic linear inverse
problems, with a dynamic EIT test bed."""

from .linalg import (SpectralDecomposition, apply_spectral_function,
                     dump_matrix, load_matrix, solve_sym, svd)
from .static import (FilterResult, SourceConditionInstance, StaticProblem,
                     choose_T, evolve_u, q_filter, rate_study,
                     riccati_ode_solve, static_filter_solve)
from .dynamic import (DynamicProblem, ReconstructionSeries, RiccatiTrajectory,
                      backward_sweep, continuous_riccati_solve, dp_solve,
                      euler_lagrange_residual, forward_sweep, functional_value,
                      tikhonov_oracle)
from .mesh import DiskMesh, assemble_stiffness, boundary_mass, build_disk_mesh
from .eit import (NDMap, PhantomSpec, blob_centroid, hs_inner, hs_norm,
                  linearized_forward, make_phantom, nd_map,
                  reconstruct_series, simulate_data)

__all__ = [name for name in dir() if not name.startswith("_")]
