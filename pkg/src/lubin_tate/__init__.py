"""
Lubin-Tate action

The universal deformation of the height-h Honda formal group law modulo
(p, u_1, ..., u_{h-2}) and the action of the Morava stabilizer group on it.
"""

__version__ = "0.1.0"
__author__ = "lubin-tate-action contributors"

from lubin_tate.fgl import universal_F
from lubin_tate.models import DeformationParams
from lubin_tate.oracle import residual, solve_action
from lubin_tate.stabilizer import ActionData, GroupElement, unfold_action

__all__ = [
    "ActionData",
    "DeformationParams",
    "GroupElement",
    "residual",
    "solve_action",
    "unfold_action",
    "universal_F",
]
