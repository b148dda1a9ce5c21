"""Wall-normal derivatives and skin friction from cell-centered solution data
on irregular anisotropic triangular grids."""

from .errors import WallgradError
from .fields import (BlasiusFieldSpec, BlasiusTable, CellField, FlowParams,
                     Polynomial2D, PolynomialFieldSpec, WallBC, eta_of,
                     exact_wall_derivative, no_slip, polynomial_bc,
                     sample_blasius_field, sample_polynomial_field,
                     solve_blasius, with_value_noise)
from .gradient import (CellGradients, LsqOptions, NodalGradientField,
                       cell_average_gradient, cell_gradients_from_nodal,
                       cell_gradients_lsq, face_average_gradient,
                       nodal_lsq_gradients)
from .gridgen import GridSpec, centroid_height_profile, generate
from .mesh import (FaceGeom, NodeNormal, TriMesh, build_mesh, mesh_to_bytes,
                   read_mesh, write_mesh)
from .report import (NoiseReport, SkinFrictionCurve, blasius_reference,
                     emit_csv, emit_svg, noise_metrics, reference_cfx_fn,
                     skin_friction)
from .wallnormal import (FD_METHODS, LSQ_METHODS, Method, StepRule, WallSample,
                         step_length, wall_deriv_cang, wall_deriv_fang,
                         wall_deriv_fd1, wall_deriv_fd2, wall_deriv_fd3,
                         wall_deriv_fd_fawc, wall_deriv_ng)

__version__ = "0.1.0"
