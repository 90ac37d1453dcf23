import numpy as np
import pytest

from hypermapf.costs import Trajectory, soc_metrics
from hypermapf.errors import ResourceLimitError
from hypermapf.evalkit import (
    attention_entropy,
    classify_failures,
    evaluate,
    generate_instances,
    load_scenario,
    normalised_entropy,
    pibt_solver,
    radar_metrics,
    scenario_cv,
    shapley_exact,
)
from hypermapf.evalkit.analysis import (
    ScenarioSpec,
    coefficient_of_variation,
    plausible_action_classes,
)
from hypermapf.evalkit.benchmark import BenchmarkReport, InstanceRow
from hypermapf.experts import pibt_expert
from hypermapf.grid import GridMap, Instance, bfs_dist, format_instance
from hypermapf.hypergraphs import HypergraphStrategy
from hypermapf.network import ArchConfig, ModelParams
from hypermapf.rollout import run_policy

ARCH = ArchConfig(feature_dim=8, conv_channels=(3, 4), r_obs=2,
                  decoder_hidden=8, edge_mlp_hidden=6, temp_hidden=4)
STRATEGY = HypergraphStrategy("kmeans", seed=0, k_init=4)


# ----------------------------------------------------------------- generators

def test_zero_density_random_maps_are_empty():
    instances = generate_instances("random", 3, (6, 8), 2, 0.0, seed=1)
    assert all(not inst.grid.obstacles.any() for inst in instances)


def test_generation_is_deterministic_per_seed():
    a = generate_instances("maze", 4, (9, 11), 3, 0.35, seed=7)
    b = generate_instances("maze", 4, (9, 11), 3, 0.35, seed=7)
    assert [format_instance(x) for x in a] == [format_instance(x) for x in b]
    c = generate_instances("maze", 4, (9, 11), 3, 0.35, seed=8)
    assert [format_instance(x) for x in a] != [format_instance(x) for x in c]


@pytest.mark.parametrize("kind,density", [("random", 0.2), ("maze", 0.35),
                                          ("room", 0.25)])
def test_generated_instances_are_screened(kind, density):
    instances = generate_instances(kind, 5, (8, 10), 3, density, seed=3)
    for inst in instances:
        assert inst.num_agents == 3
        for start, goal in zip(inst.starts, inst.goals):
            field = bfs_dist(inst.grid, goal)
            assert np.isfinite(field[start[1], start[0]])


def test_maze_density_band():
    instances = generate_instances("maze", 5, (11, 13), 2, 0.35, seed=5)
    for inst in instances:
        frac = inst.grid.obstacles.mean()
        assert 0.25 <= frac <= 0.42  # lands near the requested band


def test_generator_rejects_bad_inputs():
    with pytest.raises(ValueError):
        generate_instances("city", 1, (5, 6), 1, 0.1)
    with pytest.raises(ValueError):
        generate_instances("random", 1, (5, 6), 1, 1.2)


# ------------------------------------------------------------------ evaluate

def test_expert_against_itself_has_unit_rel_soc():
    instances = generate_instances("random", 4, (6, 8), 2, 0.1, seed=11)
    report = evaluate(pibt_solver(), instances, step_limit=64,
                      baseline=pibt_solver())
    assert all(r.rel_soc == 1.0 for r in report.rows)
    agg = report.aggregates()[("map", 2)]
    assert agg["success_rate"] == 1.0 and agg["mean_rel_soc"] == 1.0


def test_stay_policy_closed_form():
    grid = GridMap.empty(5, 5)
    inst = Instance(grid, ((0, 0), (4, 4)), ((4, 0), (0, 4)))

    def stay_solver():
        def solve(instance, step_limit, seed):
            configs = [instance.starts] * (step_limit + 1)
            return Trajectory.from_configs(configs), False, False
        return "stay", solve

    limit = 16
    report = evaluate(stay_solver(), [inst], step_limit=limit)
    row = report.rows[0]
    assert not row.success
    baseline = soc_metrics(pibt_expert(inst, limit).trajectory, inst, limit).total
    assert row.soc == limit * inst.num_agents
    assert row.rel_soc == pytest.approx(limit * inst.num_agents / baseline)


def test_aggregates_recompute_from_rows():
    instances = generate_instances("random", 6, (6, 7), 2, 0.15, seed=13)
    report = evaluate(pibt_solver(), instances, step_limit=64)
    agg = report.aggregates()[("map", 2)]
    rel = np.array([r.rel_soc for r in report.rows])
    assert agg["mean_rel_soc"] == pytest.approx(rel.mean())
    assert agg["success_rate"] == pytest.approx(
        np.mean([r.success for r in report.rows]))
    assert agg["rel_soc_ci95"] == pytest.approx(
        1.96 * rel.std(ddof=1) / np.sqrt(len(rel)))


# --------------------------------------------------------------------- radar

def _row(idx, label, n, success, soc, base, runtime, timed_out=False):
    rel = soc / base
    return InstanceRow(idx, label, n, success, soc, base, rel, runtime,
                       timed_out, soc)


def test_radar_best_solver_scores_unit_quality():
    report = BenchmarkReport("x", "b", 64,
                             [_row(0, "m", 2, True, 10, 10, 0.5)])
    scores = radar_metrics(report)
    assert scores.solution_quality[("m", 2)] == 1.0


def test_radar_timeout_scores_zero_scalability_and_failure_zero_quality():
    rows = [_row(0, "m", 2, True, 10, 10, 0.5),
            _row(1, "m", 4, False, 99, 10, 2.0, timed_out=True)]
    scores = radar_metrics(BenchmarkReport("x", "b", 64, rows))
    assert scores.scalability[("m", 4)] == 0.0
    assert scores.solution_quality[("m", 4)] == 0.0


def test_radar_linear_runtime_scores_unit_scalability():
    rows = [_row(0, "m", 2, True, 10, 10, 1.0),
            _row(1, "m", 4, True, 10, 10, 2.0),
            _row(2, "m", 8, True, 10, 10, 4.0)]
    scores = radar_metrics(BenchmarkReport("x", "b", 64, rows))
    assert scores.scalability[("m", 2)] == pytest.approx(1.0)
    assert scores.scalability[("m", 4)] == pytest.approx(1.0)
    assert scores.scalability[("m", 8)] == pytest.approx(1.0)


def test_radar_requires_rows():
    with pytest.raises(ValueError):
        radar_metrics(BenchmarkReport("x", "b", 64, []))


# ------------------------------------------------------------------- entropy

def test_uniform_attention_has_unit_entropy():
    for m in (2, 3, 7):
        assert normalised_entropy(np.full(m, 1.0 / m)) == pytest.approx(1.0)


def test_one_hot_attention_has_zero_entropy():
    assert normalised_entropy(np.array([1.0, 0.0, 0.0])) == 0.0


def test_hand_computed_three_neighbour_entropy():
    assert normalised_entropy(np.array([0.7, 0.2, 0.1])) == \
        pytest.approx(0.7304, abs=1e-3)


def test_entropy_requires_two_entries():
    with pytest.raises(ValueError):
        normalised_entropy(np.array([1.0]))


def test_attention_entropy_over_rollout_bounded_and_counts_exclusions():
    params = ModelParams.init(ARCH, seed=0)
    grid = GridMap.empty(6, 6)
    inst = Instance(grid, ((0, 0), (5, 5), (0, 5)), ((5, 0), (0, 4), (5, 4)))
    result = run_policy(params, inst, STRATEGY, 10, seed=0,
                        record_attention=True)
    report = attention_entropy(result.attention, layer=0)
    assert report.included_rows + report.excluded_rows > 0
    if report.included_rows:
        assert 0.0 <= report.mean <= 1.0


# ---------------------------------------------------------------------- CV

def test_cv_of_constant_series_is_zero():
    assert coefficient_of_variation(np.array([0.4, 0.4, 0.4])) == \
        pytest.approx(0.0, abs=1e-12)


def test_cv_hand_case():
    assert coefficient_of_variation(np.array([0.2, 0.3, 0.4])) == \
        pytest.approx(33.3, abs=0.1)


def test_scenario_cv_runs_on_fixture():
    spec = load_scenario("scenario1")
    assert len(spec.starts) == 8 and spec.initial_count == 4
    params = ModelParams.init(ARCH, seed=1)
    out = scenario_cv(params, spec, STRATEGY)
    assert set(out) == {"first_layer", "layer_mean"}
    for variant in out.values():
        assert set(variant) == {0, 1, 2, 3}
        assert all(v >= 0 for v in variant.values())


# ------------------------------------------------------------------- Shapley

def test_shapley_null_player_symmetry_efficiency():
    spec = load_scenario("scenario2")
    params = ModelParams.init(ARCH, seed=2)
    coalition = (1, 2, 3, 4)
    classes = plausible_action_classes(spec.instance(), spec.target)
    assert 0 in classes  # staying put is always collision-free

    report = shapley_exact(params, spec, spec.target, coalition, STRATEGY,
                           average_flipped=False)
    assert set(report.values) == set(coalition)
    assert sum(report.percentages.values()) == pytest.approx(100.0)

    # efficiency: per class, contributions sum to v(N) - v(empty)
    from hypermapf.evalkit.analysis import _log_odds
    for ci, c in enumerate(report.classes):
        grand = _log_odds(params, spec, coalition, spec.target, STRATEGY,
                          report.classes)
        empty = _log_odds(params, spec, (), spec.target, STRATEGY,
                          report.classes)
        total = sum(report.per_class[c][i] for i in coalition)
        assert total == pytest.approx(grand[ci] - empty[ci], abs=1e-9)


def test_shapley_null_player_gets_zero():
    # an agent so far away it never enters any hypergraph or observation
    grid = GridMap.empty(25, 3)
    spec = ScenarioSpec("isolated", grid,
                        starts=((1, 1), (2, 1), (24, 1)),
                        goals=((1, 0), (2, 0), (24, 0)),
                        groups=(0, 1, 2), target=0, initial_count=3)
    params = ModelParams.init(ARCH, seed=3)
    strategy = HypergraphStrategy("distance", seed=0)
    report = shapley_exact(params, spec, 0, (1, 2), strategy,
                           average_flipped=False)
    assert report.values[2] == pytest.approx(0.0, abs=1e-12)
    assert report.values[1] >= 0.0


def test_shapley_symmetric_agents_get_equal_values():
    grid = GridMap.empty(9, 5)
    # agents 1 and 2 are mirror images around the target's column
    spec = ScenarioSpec("sym", grid,
                        starts=((4, 2), (2, 2), (6, 2)),
                        goals=((4, 0), (2, 0), (6, 0)),
                        groups=(0, 1, 2), target=0, initial_count=3)
    params = ModelParams.init(ARCH, seed=4)
    report = shapley_exact(params, spec, 0, (1, 2), STRATEGY,
                           average_flipped=True)
    assert report.values[1] == pytest.approx(report.values[2], abs=1e-9)


def test_shapley_coalition_cap():
    spec = load_scenario("scenario1")
    params = ModelParams.init(ARCH, seed=5)
    with pytest.raises(ResourceLimitError):
        shapley_exact(params, spec, 0, (1, 2, 3, 4, 5, 6, 7), STRATEGY)


# ------------------------------------------------------------ failure modes

def _traj(path):
    return Trajectory.from_configs([(p,) for p in path])


def test_failure_classification():
    grid = GridMap.empty(6, 1)
    inst = Instance(grid, ((0, 0),), ((5, 0),))

    at_goal = _traj([(0, 0), (1, 0), (2, 0), (3, 0), (4, 0), (5, 0)])
    assert classify_failures(at_goal, inst).labels == ("success",)

    stuck = _traj([(0, 0), (1, 0)] + [(1, 0)] * 5)
    assert classify_failures(stuck, inst).labels == ("deadlock",)

    osc = _traj([(0, 0), (1, 0), (0, 0), (1, 0), (0, 0), (1, 0), (0, 0)])
    assert classify_failures(osc, inst).labels == ("livelock",)

    wandering = _traj([(0, 0), (1, 0), (2, 0), (1, 0), (0, 0)])
    assert classify_failures(wandering, inst).labels == ("timeout",)


def test_partial_success_rate():
    grid = GridMap.empty(4, 2)
    inst = Instance(grid, ((0, 0), (0, 1)), ((3, 0), (3, 1)))
    configs = [((0, 0), (0, 1)), ((1, 0), (0, 1)), ((2, 0), (0, 1)),
               ((3, 0), (0, 1))]
    report = classify_failures(Trajectory.from_configs(configs), inst)
    assert report.labels[0] == "success"
    assert report.partial_success_rate == 0.5


def test_two_oscillations_are_not_livelock():
    grid = GridMap.empty(6, 1)
    inst = Instance(grid, ((0, 0),), ((5, 0),))
    osc2 = _traj([(0, 0), (1, 0), (0, 0), (1, 0), (0, 0)])
    assert classify_failures(osc2, inst).labels == ("timeout",)
