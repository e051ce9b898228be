"""
ANASTAARS Benchmark Pipeline Tests
"""

import json

import numpy as np
import pandas as pd
import pytest

from benchmark import (
    TRAJECTORY_COLUMNS,
    ExperimentError,
    ExperimentSpec,
    TrialCell,
    aggregate_experiment,
    aggregate_median,
    enumerate_cells,
    load_experiment_spec,
    run_experiment,
    step_values,
)
from interpolation import ModelKind
from main import main
from optimizer import Method, check_dimension_trace
from plotting import emit_plot

SMALL_SPEC = """\
graph = cycle6
p = 1
shots = 20
optimizers = anastaars, stars
model_kind = mfn
trials = 3
evaluations_per_trial = 40
base_seed = 7
"""


def write_spec(tmp_path, text=SMALL_SPEC, name="small.cfg"):
    path = tmp_path / name
    path.write_text(text)
    return path


def trajectory(shots, best):
    return pd.DataFrame({'shots_cumulative': shots, 'best_true_so_far': best})


def test_spec_file_parsing(tmp_path):
    spec = load_experiment_spec(write_spec(tmp_path))
    assert spec.graph == 'cycle6'
    assert spec.p == [1]
    assert spec.shots == [20]
    assert spec.optimizers == [Method.ANASTAARS, Method.STARS]
    assert spec.model_kind is ModelKind.MFN
    assert spec.budget_for(20) == 800


def test_spec_defaults_follow_published_protocol():
    spec = ExperimentSpec()
    assert spec.trials == 30
    assert spec.budget_for(1000) == 550_000
    assert ExperimentSpec(shot_budget=100_000).budget_for(100) == 100_000


@pytest.mark.parametrize("text", [
    SMALL_SPEC + "colour = blue\n",
    SMALL_SPEC.replace("trials = 3", "trials = 0"),
    SMALL_SPEC.replace("shots = 20", "shots = 20, 0"),
    SMALL_SPEC.replace("optimizers = anastaars, stars", "optimizers = bobyqa"),
])
def test_bad_spec_files_rejected(text, tmp_path):
    with pytest.raises(ExperimentError):
        load_experiment_spec(write_spec(tmp_path, text))


def test_missing_spec_file(tmp_path):
    with pytest.raises(ExperimentError):
        load_experiment_spec(tmp_path / "nope.cfg")


def test_cell_seeds_are_stable_and_distinct():
    spec = ExperimentSpec(p=[5, 10], shots=[50, 1000], trials=3)
    cells = enumerate_cells(spec, 'cycle6')
    assert len(cells) == 2 * 2 * 2 * 3
    seeds = {cell.seed(spec.base_seed) for cell in cells}
    assert len(seeds) == len(cells)
    cell = TrialCell('cycle6', 5, 50, 'anastaars', 0)
    assert cell.seed(1) == TrialCell('cycle6', 5, 50, 'anastaars', 0).seed(1)
    assert cell.seed(1) != cell.seed(2)


def test_run_experiment_writes_trajectories_and_manifest(tmp_path):
    spec = load_experiment_spec(write_spec(tmp_path))
    written = run_experiment(spec, out_dir=tmp_path / "out")
    csvs = [p for p in written if p.suffix == '.csv']
    assert len(csvs) == 6
    manifest = json.loads((tmp_path / "out" / "manifest.json").read_text())
    assert manifest['maxcut'] == 6
    assert manifest['initial_box'] == [-1.0, 1.0]
    assert len(manifest['cells']) == 6

    for entry, path in zip(manifest['cells'], csvs):
        frame = pd.read_csv(path)
        assert list(frame.columns) == TRAJECTORY_COLUMNS
        assert (np.diff(frame['shots_cumulative']) > 0).all()
        assert frame['shots_cumulative'].max() <= entry['shot_budget']
        assert (np.diff(frame['best_true_so_far']) <= 0).all()
        assert frame['best_true_so_far'].iloc[0] <= entry['initial_true_value']


def test_run_experiment_is_byte_reproducible(tmp_path):
    spec = load_experiment_spec(write_spec(tmp_path))
    first = run_experiment(spec, out_dir=tmp_path / "a")
    second = run_experiment(spec, out_dir=tmp_path / "b", jobs=2)
    for a, b in zip(first, second):
        assert a.name == b.name
        assert a.read_bytes() == b.read_bytes()


def test_single_trial_median_is_the_trial():
    frame = trajectory([10, 30, 60], [-1.0, -2.0, -2.5])
    grid = np.array([10, 20, 30, 45, 60, 80])
    table = aggregate_median({'anastaars': [frame]}, grid)
    assert list(table['median']) == [-1.0, -1.0, -2.0, -2.0, -2.5, -2.5]
    assert (table['n_trials'] == 1).all()


def test_constant_trajectories_median():
    frames = [trajectory([10, 20, 30], [v, v, v]) for v in (1.0, 2.0, 5.0)]
    table = aggregate_median({'stars': frames}, np.array([10, 20, 30]))
    assert (table['median'] == 2.0).all()
    assert (table['q25'] == 1.5).all()
    assert (table['q75'] == 3.5).all()


def test_staggered_median_matches_reference(rng):
    frames = []
    for _ in range(7):
        shots = np.cumsum(rng.integers(5, 40, size=30))
        best = np.minimum.accumulate(rng.standard_normal(30))
        frames.append(trajectory(shots, best))
    grid = np.linspace(0, 900, 100).round()

    reference = []
    for g in grid:
        current = []
        for f in frames:
            idx = np.searchsorted(f['shots_cumulative'].to_numpy(), g, side='right') - 1
            if idx >= 0:
                current.append(f['best_true_so_far'].iloc[idx])
        reference.append(np.median(current) if current else np.nan)

    table = aggregate_median({'anastaars': frames}, grid, maxcut=6.0)
    assert np.allclose(table['median'], reference, equal_nan=True)
    assert np.allclose(table['ratio_median'], -np.array(reference) / 6.0, equal_nan=True)


def test_step_values_before_first_row_is_missing():
    values = step_values(np.array([10, 20]), np.array([3.0, 1.0]), np.array([0, 10, 15, 25]))
    assert np.isnan(values[0])
    assert list(values[1:]) == [3.0, 3.0, 1.0]


def test_empty_cell_rejected():
    with pytest.raises(ExperimentError):
        aggregate_median({'anastaars': []}, np.arange(5))


def median_table():
    grid = np.array([0, 10, 20, 30])
    return pd.concat([
        aggregate_median({'anastaars': [trajectory([5, 15], [-2.0, -3.0])]}, grid, maxcut=6.0),
        aggregate_median({'stars': [trajectory([5, 25], [-1.0, -2.0])]}, grid, maxcut=6.0),
    ], ignore_index=True)


def test_plot_has_one_line_per_series(tmp_path):
    path = emit_plot(median_table(), tmp_path / "median.svg")
    svg = path.read_text()
    assert svg.count('id="series-') == 2
    assert 'id="series-anastaars"' in svg and 'id="series-stars"' in svg
    assert 'Cumulative shots' in svg


def test_plot_is_byte_stable(tmp_path):
    a = emit_plot(median_table(), tmp_path / "a.svg", ratio=True)
    b = emit_plot(median_table(), tmp_path / "b.svg", ratio=True)
    assert a.read_bytes() == b.read_bytes()


def test_plot_of_empty_series_writes_nothing(tmp_path):
    table = median_table()
    table['median'] = np.nan
    target = tmp_path / "empty.svg"
    with pytest.raises(ValueError):
        emit_plot(table, target)
    assert not target.exists()
    with pytest.raises(ValueError):
        emit_plot(table.iloc[0:0], target)
    assert not target.exists()


def test_cli_pipeline(tmp_path, capsys):
    spec_path = write_spec(tmp_path)
    out = tmp_path / "cli"
    assert main(['run', '--spec', str(spec_path), '--out', str(out), '--seed', '11']) == 0
    assert main(['aggregate', '--out', str(out)]) == 0
    assert main(['plot', '--out', str(out)]) == 0
    assert main(['plot', '--out', str(out), '--ratio']) == 0
    assert (out / "median_cycle6_p1_B20.csv").exists()
    assert (out / "median_cycle6_p1_B20.svg").exists()
    assert (out / "median_cycle6_p1_B20_ratio.svg").exists()
    assert json.loads((out / "manifest.json").read_text())['spec']['base_seed'] == 11


def test_cli_maxcut(tmp_path, capsys):
    assert main(['maxcut', 'chvatal']) == 0
    assert 'maxcut=20' in capsys.readouterr().out

    graph_file = tmp_path / "square.txt"
    graph_file.write_text("n 4\n0 1\n1 2\n2 3\n0 3\n")
    assert main(['maxcut', str(graph_file)]) == 0
    assert 'maxcut=4' in capsys.readouterr().out


def test_cli_reports_errors_with_exit_status(tmp_path):
    assert main(['maxcut', str(tmp_path / "missing.txt")]) == 1
    assert main(['run', '--spec', str(tmp_path / "missing.cfg")]) == 1
    assert main(['aggregate', '--out', str(tmp_path)]) == 1


def test_cli_selftest_passes(tmp_path):
    report = tmp_path / "selftest.json"
    assert main(['selftest', '--report', str(report)]) == 0
    checks = json.loads(report.read_text())
    assert len(checks) == 5
    assert all(c['passed'] for c in checks)
    assert set(checks[0]) == {'name', 'passed', 'detail', 'seconds'}


@pytest.mark.slow
def test_noise_aware_variant_beats_fixed_dimension_baseline(tmp_path):
    spec = ExperimentSpec(graph='cycle6', p=[5], shots=[100], trials=30, shot_budget=100_000)
    run_experiment(spec, jobs=4, out_dir=tmp_path)
    cells = json.loads((tmp_path / "manifest.json").read_text())['cells']
    final = {m: np.median([c['final_best_true_value'] for c in cells if c['optimizer'] == m])
             for m in ('anastaars', 'stars')}
    initial = np.median([c['initial_true_value'] for c in cells if c['optimizer'] == 'anastaars'])
    assert final['anastaars'] <= final['stars']
    # negated cut: a 20% improvement moves the value further below zero
    assert final['anastaars'] <= initial - 0.2 * abs(initial)


@pytest.mark.slow
def test_desk_scale_sweep(tmp_path):
    spec = ExperimentSpec(graph='cycle6', p=[5, 15, 25], shots=[50, 1000], trials=10)
    run_experiment(spec, jobs=4, out_dir=tmp_path)
    tables = aggregate_experiment(tmp_path)
    assert len(tables) == 6
    for table_path in tables:
        emit_plot(pd.read_csv(table_path), table_path.with_suffix('.svg'))

    manifest = json.loads((tmp_path / "manifest.json").read_text())
    for entry in manifest['cells']:
        frame = pd.read_csv(tmp_path / entry['file'])
        adaptive = entry['optimizer'] == 'anastaars'
        q_max = 2 * entry['p'] if adaptive else 2
        assert _trace_is_legal(frame, q_max, adaptive)


def _trace_is_legal(frame, q_max, adaptive):
    q = frame['q'].to_numpy()
    success = frame['success'].to_numpy().astype(bool)
    if not ((2 <= q) & (q <= q_max)).all():
        return False
    for prev_q, prev_ok, cur_q in zip(q, success, q[1:]):
        if prev_ok or not adaptive:
            if cur_q != 2:
                return False
        elif cur_q not in (2, prev_q + 1):
            return False
    return True


def test_trace_helper_agrees_with_optimizer_check():
    from optimizer import OptimizerConfig, run_anastaars
    from oracle import gaussian_noise_oracle, shifted_sphere
    records = run_anastaars(OptimizerConfig(shots_per_estimate=10, max_evaluations=3000, seed=1),
                            gaussian_noise_oracle(shifted_sphere(np.zeros(6)), 0.5, 6), np.ones(6))
    frame = pd.DataFrame({'q': [r.q for r in records], 'success': [int(r.success) for r in records]})
    assert check_dimension_trace(records, 2, 6) == []
    assert _trace_is_legal(frame, 6, True)


@pytest.mark.parametrize("name", ["toy_p5.cfg", "noise_aware.cfg", "scalability.cfg", "chvatal.cfg"])
def test_shipped_experiment_specs_load(name):
    from pathlib import Path
    spec = load_experiment_spec(Path(__file__).parent / "experiments" / name)
    assert spec.trials >= 1
    assert set(spec.optimizers) == {Method.ANASTAARS, Method.STARS}
