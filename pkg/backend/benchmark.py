"""
ANASTAARS Benchmark Module
Experiment specs, per-trial QAOA runs, trajectory CSVs and median aggregation
"""

import hashlib
import json
import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from dotenv import dotenv_values
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from interpolation import ModelKind
from optimizer import IterationRecord, Method, OptimizerConfig, run_optimizer
from qaoa import Graph, brute_force_maxcut, qaoa_oracle, resolve_graph

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = [
    'k', 'q', 'success', 'rho_tilde', 'delta', 'noise_estimate',
    'shots_cumulative', 'estimate_f0', 'true_value', 'best_true_so_far',
]
MANIFEST_NAME = 'manifest.json'
INITIAL_BOX = (-1.0, 1.0)
DEFAULT_GRID_POINTS = 200


class ExperimentError(ValueError):
    """Raised for unusable experiment specs or result directories"""


class ExperimentSpec(BaseModel):
    """One sweep over graphs x layers x shot counts x optimizers x trials"""
    model_config = ConfigDict(protected_namespaces=())

    graph: str = Field("cycle6", description="chvatal, cycle<N> or an edge-list file")
    p: List[int] = Field(default_factory=lambda: [5])
    shots: List[int] = Field(default_factory=lambda: [1000], description="Per-evaluation shot counts B")
    optimizers: List[Method] = Field(default_factory=lambda: [Method.ANASTAARS, Method.STARS])
    model_kind: ModelKind = ModelKind.MFN
    trials: int = Field(30, ge=1)
    evaluations_per_trial: int = Field(550, ge=1, description="Budget in estimates; shots budget = this x B")
    shot_budget: Optional[int] = Field(None, ge=1, description="Fixed shot budget overriding evaluations_per_trial")
    q0: int = Field(2, ge=1)
    q_max: Optional[int] = Field(None, ge=2)
    r: float = Field(1.0, ge=0.0)
    base_seed: int = Field(20250101, ge=0)
    output_dir: str = "results"

    @field_validator('p', 'shots', 'optimizers', mode='before')
    @classmethod
    def _split_list(cls, value):
        if isinstance(value, str):
            return [item.strip() for item in value.split(',') if item.strip()]
        return value

    @field_validator('p', 'shots')
    @classmethod
    def _positive_entries(cls, value: List[int]) -> List[int]:
        if not value or any(v < 1 for v in value):
            raise ValueError(f"Entries must be positive integers, got {value}")
        return value

    def budget_for(self, shots: int) -> int:
        return self.shot_budget if self.shot_budget is not None else self.evaluations_per_trial * shots

    def optimizer_config(self, shots: int, seed: int) -> OptimizerConfig:
        return OptimizerConfig(
            q0=self.q0,
            q_max=self.q_max,
            r=self.r,
            model_kind=self.model_kind,
            shots_per_estimate=shots,
            max_evaluations=self.budget_for(shots),
            seed=seed,
        )


def load_experiment_spec(path: Union[str, Path]) -> ExperimentSpec:
    """Parse a flat `key = value` spec file; lists are comma-separated"""
    path = Path(path)
    if not path.exists():
        raise ExperimentError(f"Experiment spec not found: {path}")
    values = {k: v for k, v in dotenv_values(path).items() if v is not None and v != ''}
    unknown = sorted(set(values) - set(ExperimentSpec.model_fields))
    if unknown:
        raise ExperimentError(f"{path}: unknown keys {', '.join(unknown)}")
    try:
        return ExperimentSpec(**values)
    except ValidationError as e:
        raise ExperimentError(f"{path}: invalid experiment spec\n{e}")


@dataclass(frozen=True)
class TrialCell:
    """One (graph, p, B, optimizer, trial) work item"""
    graph: str
    p: int
    shots: int
    optimizer: str
    trial: int

    @property
    def name(self) -> str:
        return f"{self.graph}_p{self.p}_B{self.shots}_{self.optimizer}_t{self.trial:02d}"

    @property
    def series(self) -> str:
        return f"{self.graph}_p{self.p}_B{self.shots}"

    def seed(self, base_seed: int) -> int:
        digest = hashlib.blake2b(self.name.encode(), digest_size=8).digest()
        return base_seed ^ int.from_bytes(digest, 'little')


def enumerate_cells(spec: ExperimentSpec, graph_name: str) -> List[TrialCell]:
    return [
        TrialCell(graph=graph_name, p=p, shots=b, optimizer=Method(opt).value, trial=t)
        for p in spec.p
        for b in spec.shots
        for opt in spec.optimizers
        for t in range(spec.trials)
    ]


def trajectory_frame(records: Sequence[IterationRecord], initial_true_value: Optional[float]) -> pd.DataFrame:
    """One row per iteration in the trajectory CSV schema"""
    frame = pd.DataFrame({
        'k': [rec.k for rec in records],
        'q': [rec.q for rec in records],
        'success': [int(rec.success) for rec in records],
        'rho_tilde': [rec.rho_tilde for rec in records],
        'delta': [rec.delta for rec in records],
        'noise_estimate': [rec.noise_estimate for rec in records],
        'shots_cumulative': [rec.shots_used_cumulative for rec in records],
        'estimate_f0': [rec.f0_estimate for rec in records],
        'true_value': [np.nan if rec.incumbent_true_value is None else rec.incumbent_true_value
                       for rec in records],
    }, columns=TRAJECTORY_COLUMNS[:-1])
    best = frame['true_value'].cummin()
    if initial_true_value is not None:
        best = best.clip(upper=initial_true_value)
    frame['best_true_so_far'] = best
    return frame


def run_cell(spec: ExperimentSpec, cell: TrialCell, graph: Graph, out_dir: Path) -> Dict:
    """Run one trial and write its trajectory CSV; returns the manifest entry"""
    seed = cell.seed(spec.base_seed)
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(*INITIAL_BOX, size=2 * cell.p)
    oracle = qaoa_oracle(graph, cell.p)
    config = spec.optimizer_config(cell.shots, seed)

    records = run_optimizer(Method(cell.optimizer), config, oracle, x0, rng)
    initial_true = oracle.true_value(x0)
    frame = trajectory_frame(records, initial_true)

    path = out_dir / f"{cell.name}.csv"
    frame.to_csv(path, index=False)
    final_best = float(frame['best_true_so_far'].iloc[-1]) if len(frame) else initial_true
    logger.info(f"{cell.name}: {len(records)} iterations, best true value {final_best:.4f}")

    return {
        **asdict(cell),
        'series': cell.series,
        'seed': seed,
        'file': path.name,
        'iterations': len(records),
        'shot_budget': config.max_evaluations,
        'initial_true_value': initial_true,
        'final_best_true_value': final_best,
    }


def run_experiment(spec: ExperimentSpec,
                   jobs: int = 1,
                   out_dir: Optional[Union[str, Path]] = None) -> List[Path]:
    """Run every cell of the sweep; returns the written trajectory files followed by the manifest"""
    out_dir = Path(out_dir if out_dir is not None else spec.output_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as e:
        raise ExperimentError(f"Cannot create output directory {out_dir}: {e}")

    graph = resolve_graph(spec.graph)
    maxcut, assignment = brute_force_maxcut(graph)
    cells = enumerate_cells(spec, graph.name)
    logger.info(f"Running {len(cells)} cells on {graph.name} (n={graph.n}, MaxCut={maxcut:g}) with {jobs} jobs")

    entries = Parallel(n_jobs=jobs)(delayed(run_cell)(spec, cell, graph, out_dir) for cell in cells)

    manifest = {
        'graph': graph.name,
        'n': graph.n,
        'edges': len(graph.edges),
        'maxcut': maxcut,
        'maxcut_assignment': assignment,
        'initial_box': list(INITIAL_BOX),
        'spec': spec.model_dump(mode='json'),
        'cells': entries,
    }
    manifest_path = out_dir / MANIFEST_NAME
    manifest_path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + '\n')
    logger.info(f"Wrote {len(entries)} trajectories and {manifest_path}")
    return [out_dir / entry['file'] for entry in entries] + [manifest_path]


def load_manifest(out_dir: Union[str, Path]) -> Dict:
    path = Path(out_dir) / MANIFEST_NAME
    if not path.exists():
        raise ExperimentError(f"No {MANIFEST_NAME} in {out_dir}; run an experiment first")
    return json.loads(path.read_text())


def step_values(shots: np.ndarray, values: np.ndarray, grid: np.ndarray) -> np.ndarray:
    """Last-value-carried-forward lookup of a trajectory on a shot grid; NaN before its first row"""
    idx = np.searchsorted(shots, grid, side='right') - 1
    out = np.full(grid.shape, np.nan)
    hit = idx >= 0
    out[hit] = values[idx[hit]]
    return out


def default_shot_grid(budget: int, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    return np.unique(np.linspace(0, budget, points).round().astype(np.int64))


def aggregate_median(groups: Dict[str, List[pd.DataFrame]],
                     shot_grid: np.ndarray,
                     maxcut: Optional[float] = None) -> pd.DataFrame:
    """Pointwise median and quartiles of best-so-far trajectories per optimizer.

    Each trajectory is read as a step function of cumulative shots. Grid points
    before a trial's first completed iteration do not count toward that point's
    statistics. When `maxcut` is given, `ratio_median` holds -median / maxcut.
    """
    shot_grid = np.asarray(shot_grid)
    tables = []
    for optimizer, frames in groups.items():
        if not frames:
            raise ExperimentError(f"No trajectories for '{optimizer}'")
        columns = {
            i: step_values(f['shots_cumulative'].to_numpy(), f['best_true_so_far'].to_numpy(), shot_grid)
            for i, f in enumerate(frames)
        }
        wide = pd.DataFrame(columns, index=shot_grid)
        table = pd.DataFrame({
            'optimizer': optimizer,
            'shots': shot_grid,
            'median': wide.median(axis=1).to_numpy(),
            'q25': wide.quantile(0.25, axis=1).to_numpy(),
            'q75': wide.quantile(0.75, axis=1).to_numpy(),
            'n_trials': wide.notna().sum(axis=1).to_numpy(),
        })
        table['ratio_median'] = -table['median'] / maxcut if maxcut else np.nan
        tables.append(table)
    if not tables:
        raise ExperimentError("Nothing to aggregate")
    return pd.concat(tables, ignore_index=True)


def group_trajectories(out_dir: Union[str, Path]) -> Tuple[Dict, Dict[str, Dict[str, List[pd.DataFrame]]]]:
    """Read the manifest and the trajectory CSVs grouped by series then optimizer"""
    out_dir = Path(out_dir)
    manifest = load_manifest(out_dir)
    grouped: Dict[str, Dict[str, List[pd.DataFrame]]] = {}
    for entry in manifest['cells']:
        frame = pd.read_csv(out_dir / entry['file'])
        grouped.setdefault(entry['series'], {}).setdefault(entry['optimizer'], []).append(frame)
    return manifest, grouped


def aggregate_experiment(out_dir: Union[str, Path], points: int = DEFAULT_GRID_POINTS) -> List[Path]:
    """Write one median table per (graph, p, B) series of an experiment directory"""
    out_dir = Path(out_dir)
    manifest, grouped = group_trajectories(out_dir)
    budgets = {entry['series']: entry['shot_budget'] for entry in manifest['cells']}
    written = []
    for series, groups in sorted(grouped.items()):
        table = aggregate_median(groups, default_shot_grid(budgets[series], points), manifest['maxcut'])
        path = out_dir / f"median_{series}.csv"
        table.to_csv(path, index=False)
        written.append(path)
        logger.info(f"Aggregated {sum(len(f) for f in groups.values())} trials into {path}")
    return written
