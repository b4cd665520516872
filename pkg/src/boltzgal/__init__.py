"""Spectral Petrov-Galerkin solver for the homogeneous Boltzmann equation.

The density is expanded as a Maxwellian times nodal Lagrange polynomials on
tensor Gauss-Hermite nodes; the collision operator is evaluated through
hierarchical basis changes that diagonalize the inner collision integrals,
at O(N^7) work and O(N^4) storage.
"""

__version__ = "0.1.0"

from .bases import (BasisIndexMaps, TransformSet, build_shift_1d,
                    build_transform_set, cylinder_to_hermite,
                    cylinder_to_spherical, hermite_to_cylinder, hier_dim,
                    nodal_to_hermite, nodal_to_hermite_t, shift_3d,
                    spherical_to_cylinder)
from .collision import (CollisionWorkspace, SpectralDensity,
                        apply_inner_operator, compute_f2, evaluate_collision,
                        exact_mode_params, galerkin_rhs, storage_report)
from .dynamics import (ExperimentConfig, MomentSet, analytic_moments_maxwell,
                       bkw_eval, compute_moments, error_norms,
                       project_initial, rk4_integrate, two_maxwellians)
from .kernel import (CollisionKernel, build_collision_eigenvalues,
                     build_kernel, build_radial_mult, funk_hecke_lambdas,
                     parse_kernel_params)
from .oracle import OracleTensor, build_oracle, load_oracle, oracle_apply, save_oracle
from .specfun import (QuadratureRule, eval_assoc_laguerre_all,
                      eval_hermite_all, eval_lagrange_all, eval_real_sph_harm,
                      gauss_hermite, gauss_laguerre, gauss_legendre)
