from __future__ import annotations

from ..conflict import build_offer_conflict_graph
from ..core import Instance
from .bnb import BnbResult, BranchAndBoundConfig, solve_bnb
from .coloring import CapacityExceeded, assign_vehicles, color_intervals
from .export import export_model, safe_name, to_lp, to_mps
from .model import IlpModel, build_model, restrict

__all__ = [
    "BnbResult", "BranchAndBoundConfig", "CapacityExceeded", "IlpModel", "assign_vehicles",
    "build_model", "color_intervals", "export_model", "restrict", "safe_name", "solve_bnb",
    "solve_exact", "to_lp", "to_mps",
]


def solve_exact(instance: Instance, formulation: str = "clique", classes: bool = False,
                cfg: BranchAndBoundConfig | None = None) -> BnbResult:
    """Build the graph and model for ``instance`` and run :func:`solve_bnb`.

    With ``classes`` the optimal class solution is lifted to vehicles.
    """
    g = build_offer_conflict_graph(instance)
    model = build_model(instance, g, formulation, classes)
    res = solve_bnb(model, cfg)
    if classes and res.solution is not None:
        res.solution = assign_vehicles(instance, res.solution)
    return res
