"""Scheduling, delivery simulation and predictor evaluation for T-gate
execution under bounded magic-state supply."""

from .dag import CircuitDag, slack_analysis, t_count, t_depth
from .delivery import INFEASIBLE, DeliveryParams, ExecResult, delta_max, detect_inversion, lower_bound, simulate
from .scheduling import Policy, Schedule, demand_trace, schedule
from .workloads import Family, FamilyParams, generate

__version__ = "0.1.0"
