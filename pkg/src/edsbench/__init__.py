"""Exterior differential systems, Cartan tests and the generalized Gauss map."""

from .config import DEFAULT, Config
from .coeffalg import Poly, format_poly, parse_poly
from .extcalc import Form, PointForm, VectorField, exterior_d, interior_product, pullback, wedge, wedge_all
from .edscore import (CartanReport, ExteriorSystem, Flag, IntegralElement, cartan_characters, cartan_test,
                      close_system, frobenius_check, greedy_flag, is_integral_element, polar_space)
from .bundleconn import CoFrame, ConnectionForm, curvature, levi_civita, torsion
from .gaussmap import ProblemDims, build_embedding_ideal, dimension_audit, gauss_map, solve_gauss
from .emtensor import covariant_divergence, tensor_to_form, verify_equivalence

__version__ = "0.1.0"
