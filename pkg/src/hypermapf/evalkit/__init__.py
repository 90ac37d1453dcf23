from .analysis import (
    FailureReport,
    ScenarioSpec,
    ShapleyReport,
    attention_entropy,
    classify_failures,
    load_scenario,
    normalised_entropy,
    scenario_cv,
    shapley_exact,
)
from .benchmark import (
    BenchmarkReport,
    evaluate,
    joint_solver,
    pibt_solver,
    policy_solver,
    radar_metrics,
)
from .generators import generate_instances
from .movingai import parse_movingai, to_movingai
from .svg import render_svg

__all__ = [
    "ScenarioSpec", "ShapleyReport", "FailureReport", "attention_entropy",
    "normalised_entropy", "scenario_cv", "shapley_exact", "classify_failures",
    "load_scenario", "BenchmarkReport", "evaluate", "radar_metrics",
    "pibt_solver", "policy_solver", "joint_solver", "generate_instances",
    "parse_movingai", "to_movingai", "render_svg",
]
