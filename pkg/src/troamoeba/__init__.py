"""Compact, limit and GQ amoebas of toric degenerations, and their quantization limits."""
from .amoeba import AmoebaSample, MembershipVerdict, amoeba_membership, hausdorff, sample_compact_amoeba
from .polytope import DelzantPolytope, FaceRef, build_polytope, lattice_points, locate, vertex_chart
from .potential import (
    PotentialFamily,
    Quadratic,
    QuarticRadial,
    complex_structure,
    dual_potential,
    eval_gp,
    eval_gs,
    kappa,
    kappa_inv,
    legendre_psi,
)
from .projection import gq_amoeba, id_minus_pi, limit_amoeba, normal_cone, project_pi
from .quantization import (
    bs_count,
    dirac_concentration,
    f_m,
    h_m_s,
    norm_log_derivative,
    polarization_gap,
    section_norm_l1,
)
from .render import Scene, render_scene
from .scenario import Scenario, parse_scenario, serialize_scenario
from .tropical import PolyhedralComplex, TropicalPolynomial, build_gq_valuation, tropical_curve_2d

__version__ = "0.1.0"
