"""Certified conformal points of planar Hamiltonian fields and area-preserving maps."""

__version__ = "0.1.0"

from .domain import BoundaryCurve, PlanarDomain, TubularChart  # noqa: E402
from .expr import eval_jet, parse, pretty  # noqa: E402
from .fields import (PlanarMap, ScalarField, VectorField, conformal_defect,  # noqa: E402
                     hamiltonian_field, loewner_field, map_conformal_defect, riemannian_defect)
from .index import (line_field_index, locate_zeros, poincare_hopf_check,  # noqa: E402
                    winding)
from .jets import Jet2  # noqa: E402

__all__ = [
    "BoundaryCurve", "Jet2", "PlanarDomain", "PlanarMap", "ScalarField", "TubularChart",
    "VectorField", "conformal_defect", "eval_jet", "hamiltonian_field", "line_field_index",
    "locate_zeros", "loewner_field", "map_conformal_defect", "parse", "poincare_hopf_check",
    "pretty", "riemannian_defect", "winding",
]
