from .anneal import AnnealConfig, Proposer, optimize
from .attraction import attraction_init, attraction_paths
from .escort import escort_loop, mobile_ee_path
from .mission import Mission, MissionPlan, ObjectiveConfig, PlanningError, evaluate_objective

__all__ = [
    "AnnealConfig", "Mission", "MissionPlan", "ObjectiveConfig", "PlanningError", "Proposer",
    "attraction_init", "attraction_paths", "escort_loop", "evaluate_objective", "mobile_ee_path",
    "optimize",
]
