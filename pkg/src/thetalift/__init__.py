"""Siegel theta machinery for even unimodular lattices of signature (b, 2):
lattices and majorant enumeration, tube-domain geometry with an explicit
Iwasawa identification, splitting of the degree-(2,0) kernel polynomials,
truncated theta evaluation, Rankin-Selberg unfolding with closed-form
Fourier coefficients, and executable injectivity certificates.
"""

__version__ = "0.1.0"

from .exact import QSqrt2, bareiss_det, ldl_exact
from .geometry import (Isometry, PointFrame, Space, TubePoint, apply_to_tube,
                       base_frame, frame_of_isometry, identify, kan_factors,
                       majorant_value, plane_to_tube, project, psi1, space,
                       translation_isometry, translation_matrix_kan,
                       tube_to_frame, w_map, x_independence_check)
from .injectivity import (CertificateReport, Witness, find_witness,
                          imaginary_part_term, injectivity_certificate,
                          swap_isometry)
from .lattices import (Lattice, RealBasisMap, SplitB2, direct_sum, e8_lattice,
                       ellipsoid_points, enumerate_majorant, hyperbolic_plane,
                       lattice_from_json, majorant_gram, make_lattice,
                       quadratic_form, real_basis_map, represent_integer,
                       signature_b2_lattice, standard_real_basis_map,
                       vector_divisors)
from .polynomials import (MultiPoly, PolyDecomposition, decompose,
                          decompose_general, exact_base_frame, heat_expansion,
                          heat_operator, laplacian, p_alpha_beta)
from .theta import (ModularCheck, ThetaInput, ThetaResult, Truncation,
                    f_alpha_beta, modular_check, siegel_theta, split_rhs)
from .unfolding import (ConstantTermResult, CuspFormProxy,
                        FourierCoefficientResult, QuadratureConfig,
                        bessel_integral, constant_term, expansion_vs_quadrature,
                        fourier_coefficient, fourier_series_value,
                        generic_unfold_check, h_alpha_beta, ramanujan_tau,
                        strip_integral_h, unit_cusp_form)
