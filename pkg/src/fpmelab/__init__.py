"""Numerical laboratory for the signed fractional porous medium equation in 1D."""

__version__ = "0.1.0"

from .grid import (  # noqa: F401
    EnergyParams,
    Grid,
    GridFunction,
    g_map,
    lp_norm,
    make_grid,
    neg_part,
    phi_inv,
    phi_map,
    pos_part,
)
from .frlap import (  # noqa: F401
    StiffnessForm,
    assemble_form,
    bilinear,
    check_m_structure,
    exterior_density,
    seminorm_sq,
    spectral_bound,
)
