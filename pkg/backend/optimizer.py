"""
ANASTAARS Optimizer Module
Noise-aware stochastic trust-region loop over adaptive random subspaces, plus the
fixed-dimension STARS baseline
"""

import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np
from numpy.linalg import norm
from pydantic import BaseModel, ConfigDict, Field, model_validator

from interpolation import (
    InterpolationSet,
    ModelKind,
    PoisednessError,
    QuadraticSubspaceModel,
    build_model,
    extend_interpolation_set,
    extend_linear_model,
    extension_points,
    generate_poised_set,
)
from oracle import Estimate, StochasticOracle, estimate_at
from subspace import SubspaceBasis, extend_basis, sample_haar_basis
from trust_region import cauchy_reduction, compute_rho_tilde, model_reduction, solve_tr_subproblem

logger = logging.getLogger(__name__)

# smallest radius whose square is still a normal float
RADIUS_FLOOR = float(np.sqrt(np.finfo(float).tiny))


class ConfigurationError(ValueError):
    """Raised when optimizer settings are inconsistent with the problem"""


class BudgetExhausted(Exception):
    """Raised when an iteration would spend more shots than remain"""


class Method(str, Enum):
    """Optimizer variants runnable from an experiment"""
    ANASTAARS = "anastaars"
    STARS = "stars"


class Construction(str, Enum):
    """How an iteration obtained its subspace model"""
    FRESH = "fresh"
    EXTENDED = "extended"
    FALLBACK = "fallback"


class OptimizerConfig(BaseModel):
    """Algorithm parameters; defaults are the ANASTAARS-QD2 settings"""
    model_config = ConfigDict(frozen=True, protected_namespaces=())

    gamma: float = Field(2.0, gt=1.0, description="Radius expansion/contraction factor")
    eta1: float = Field(0.01, gt=0.0, lt=1.0, description="Acceptance threshold on the ratio")
    eta2: float = Field(0.9, gt=0.0, description="Gradient-radius coupling in the success test")
    delta0: float = Field(1.0, gt=0.0, description="Initial trust-region radius")
    delta_max: float = Field(5.0, gt=0.0, description="Radius cap")
    r: float = Field(1.0, ge=0.0, description="Noise-inflation coefficient of the ratio")
    q0: int = Field(2, ge=1, description="Reset subspace dimension")
    q_max: Optional[int] = Field(None, ge=2, description="Subspace dimension cap, defaults to d")
    model_kind: ModelKind = Field(ModelKind.MFN, description="Interpolation model family")
    shots_per_estimate: int = Field(1000, ge=1, description="Shots B averaged into one estimate")
    max_evaluations: int = Field(550_000, ge=0, description="Total shot budget of a run")
    eps_f: float = Field(0.1, gt=0.0, lt=1.0, description="Estimate accuracy level; inert under fixed B")
    stars_noise_aware: bool = Field(False, description="Keep the r * noise term in STARS ratios")
    seed: int = Field(0, ge=0)

    @model_validator(mode='after')
    def _check_ranges(self) -> 'OptimizerConfig':
        if self.delta0 >= self.delta_max:
            raise ValueError(f"delta0={self.delta0} must be below delta_max={self.delta_max}")
        if self.q_max is not None and self.q_max < self.q0:
            raise ValueError(f"q_max={self.q_max} must be at least q0={self.q0}")
        return self


@dataclass
class IterationRecord:
    """One completed iteration of a run"""
    k: int
    q: int
    success: bool
    rho_tilde: float
    delta: float
    f0_estimate: float
    fs_estimate: float
    noise_estimate: float
    shots_used_cumulative: int
    incumbent_true_value: Optional[float]
    construction: str
    new_estimates: int
    model_reduction: float
    cauchy_reduction: float
    step_norm: float
    gradient_norm: float

    def to_dict(self) -> Dict:
        return asdict(self)


@dataclass
class OptimizerState:
    """Incumbent, radius and subspace bookkeeping carried between iterations"""
    x: np.ndarray
    delta: float
    q: int
    F_flag: int = 0
    basis: Optional[SubspaceBasis] = None
    iset: Optional[InterpolationSet] = None
    model: Optional[QuadraticSubspaceModel] = None
    center: Optional[Estimate] = None
    k: int = 0
    shots_used: int = 0
    history: List[IterationRecord] = field(default_factory=list)

    @classmethod
    def initial(cls, x0: np.ndarray, config: OptimizerConfig) -> 'OptimizerState':
        return cls(x=np.array(x0, dtype=float), delta=config.delta0, q=config.q0)


def resolve_q_max(config: OptimizerConfig, d: int) -> int:
    return config.q_max if config.q_max is not None else d


def validate_problem(config: OptimizerConfig, oracle: StochasticOracle, x0: np.ndarray, adaptive: bool = True):
    """Check dimension-dependent settings before any oracle call"""
    if x0.ndim != 1 or x0.shape[0] < 1:
        raise ConfigurationError(f"Starting point must be a nonempty vector, got shape {x0.shape}")
    d = x0.shape[0]
    if oracle.dim != d:
        raise ConfigurationError(f"Oracle dimension {oracle.dim} does not match starting point dimension {d}")
    if config.q0 > d:
        raise ConfigurationError(f"q0={config.q0} exceeds the problem dimension d={d}")
    if adaptive and resolve_q_max(config, d) > d:
        raise ConfigurationError(f"q_max={config.q_max} exceeds the problem dimension d={d}")


def _estimate_values(oracle, x, basis, points, shots, rng) -> np.ndarray:
    return np.array([estimate_at(oracle, x + basis.embed(p), shots, rng).mean for p in points])


def _plan_extension(state: OptimizerState, kind: ModelKind) -> Optional[np.ndarray]:
    """New points for extending the current set, or None when the extended set would be ill-poised"""
    zeta = None if kind is ModelKind.DIAGONAL else state.delta
    try:
        new_points = extension_points(state.iset, zeta)
        extend_interpolation_set(state.iset, zeta, np.zeros(new_points.shape[0]))
    except PoisednessError as e:
        logger.warning(f"Extension to q={state.q + 1} rejected, regenerating a fresh set there: {e}")
        return None
    return new_points


def _iterate(state: OptimizerState,
             oracle: StochasticOracle,
             config: OptimizerConfig,
             rng: np.random.Generator,
             adaptive: bool,
             r: float) -> OptimizerState:
    d = state.x.shape[0]
    q_max = resolve_q_max(config, d)
    shots = config.shots_per_estimate
    kind = ModelKind(config.model_kind)
    delta = state.delta

    construction = Construction.FRESH
    new_points = None
    if adaptive and state.F_flag == 1 and state.iset is not None and state.q + 1 <= q_max:
        new_points = _plan_extension(state, kind)
        construction = Construction.EXTENDED if new_points is not None else Construction.FALLBACK

    if construction is Construction.EXTENDED:
        q = state.q + 1
        new_estimates = new_points.shape[0]
    else:
        q = state.q + 1 if construction is Construction.FALLBACK else config.q0
        fresh_size = q + 1 if kind is ModelKind.LINEAR else 2 * q + 1
        new_estimates = fresh_size - 1 + (1 if state.center is None else 0)

    cost = (new_estimates + 1) * shots
    if state.shots_used + cost > config.max_evaluations:
        raise BudgetExhausted(f"Iteration {state.k} needs {cost} shots, "
                              f"{config.max_evaluations - state.shots_used} remain")

    center = state.center
    if construction is Construction.EXTENDED:
        zeta = None if kind is ModelKind.DIAGONAL else delta
        basis = extend_basis(state.basis, rng)
        new_values = _estimate_values(oracle, state.x, basis, new_points, shots, rng)
        iset = extend_interpolation_set(state.iset, zeta, new_values)
        if kind is ModelKind.LINEAR:
            model = extend_linear_model(state.model, zeta, new_values[0] - state.iset.values[0])
        else:
            model = build_model(iset)
    else:
        if construction is Construction.FALLBACK:
            basis = extend_basis(state.basis, rng)
        else:
            basis = sample_haar_basis(d, q, rng)
        points = generate_poised_set(q, delta, kind)
        if center is None:
            center = estimate_at(oracle, state.x, shots, rng)
        values = np.concatenate([[center.mean],
                                 _estimate_values(oracle, state.x, basis, points[1:], shots, rng)])
        iset = InterpolationSet(points=points, values=values, radius=delta, kind=kind)
        model = build_model(iset)

    s = solve_tr_subproblem(model, delta)
    reduction = model_reduction(model, s)
    trial_point = state.x + basis.embed(s)
    trial = estimate_at(oracle, trial_point, shots, rng)

    rho = compute_rho_tilde(center.mean, trial.mean, center.std, r, reduction)
    gradient_norm = float(norm(model.g))
    success = rho >= config.eta1 and gradient_norm >= config.eta2 * delta

    if success:
        x_next = trial_point
        delta_next = min(config.gamma * delta, config.delta_max)
        center_next = trial
    else:
        x_next = state.x
        delta_next = delta / config.gamma
        center_next = center

    shots_used = state.shots_used + cost
    record = IterationRecord(
        k=state.k,
        q=q,
        success=bool(success),
        rho_tilde=float(rho),
        delta=delta,
        f0_estimate=center.mean,
        fs_estimate=trial.mean,
        noise_estimate=center.std,
        shots_used_cumulative=shots_used,
        incumbent_true_value=oracle.true_value(x_next),
        construction=construction.value,
        new_estimates=new_estimates + 1,
        model_reduction=float(reduction),
        cauchy_reduction=float(cauchy_reduction(model, delta)),
        step_norm=float(norm(s)),
        gradient_norm=gradient_norm,
    )
    logger.debug(f"k={state.k} q={q} {construction.value} delta={delta:.3e} "
                 f"rho={rho:.3e} success={success} shots={shots_used}")

    return OptimizerState(
        x=x_next,
        delta=delta_next,
        q=q,
        F_flag=0 if success else 1,
        basis=basis,
        iset=iset,
        model=model,
        center=center_next,
        k=state.k + 1,
        shots_used=shots_used,
        history=state.history + [record],
    )


def anastaars_step(state: OptimizerState,
                   oracle: StochasticOracle,
                   config: OptimizerConfig,
                   rng: np.random.Generator) -> OptimizerState:
    """One ANASTAARS iteration: reset or extend the subspace, step, test, update"""
    return _iterate(state, oracle, config, rng, adaptive=True, r=config.r)


def stars_step(state: OptimizerState,
               oracle: StochasticOracle,
               config: OptimizerConfig,
               rng: np.random.Generator) -> OptimizerState:
    """One STARS iteration: always a fresh q0-dimensional subspace and set"""
    r = config.r if config.stars_noise_aware else 0.0
    return _iterate(state, oracle, config, rng, adaptive=False, r=r)


def _run(step, config, oracle, x0, rng, adaptive) -> List[IterationRecord]:
    x0 = np.asarray(x0, dtype=float)
    validate_problem(config, oracle, x0, adaptive=adaptive)
    rng = rng if rng is not None else np.random.default_rng(config.seed)

    state = OptimizerState.initial(x0, config)
    while True:
        try:
            state = step(state, oracle, config, rng)
        except BudgetExhausted as e:
            logger.debug(f"Run stopped: {e}")
            break
        if state.delta < RADIUS_FLOOR:
            logger.warning(f"Trust-region radius underflowed after {state.k} iterations; stopping")
            break
    return state.history


def run_anastaars(config: OptimizerConfig,
                  oracle: StochasticOracle,
                  x0: np.ndarray,
                  rng: Optional[np.random.Generator] = None) -> List[IterationRecord]:
    """Iterate ANASTAARS until the shot budget is spent"""
    return _run(anastaars_step, config, oracle, x0, rng, adaptive=True)


def run_stars(config: OptimizerConfig,
              oracle: StochasticOracle,
              x0: np.ndarray,
              rng: Optional[np.random.Generator] = None) -> List[IterationRecord]:
    """Iterate the fixed-dimension STARS baseline until the shot budget is spent"""
    return _run(stars_step, config, oracle, x0, rng, adaptive=False)


def run_optimizer(method: Method,
                  config: OptimizerConfig,
                  oracle: StochasticOracle,
                  x0: np.ndarray,
                  rng: Optional[np.random.Generator] = None) -> List[IterationRecord]:
    runners = {Method.ANASTAARS: run_anastaars, Method.STARS: run_stars}
    return runners[Method(method)](config, oracle, x0, rng)


def check_dimension_trace(records: List[IterationRecord], q0: int, q_max: int, adaptive: bool = True) -> List[str]:
    """Return every violation of the adaptive dimension policy in a trajectory"""
    violations = []
    for i, rec in enumerate(records):
        prev = records[i - 1] if i > 0 else None
        if not (q0 <= rec.q <= q_max):
            violations.append(f"k={rec.k}: q={rec.q} outside [{q0}, {q_max}]")
        if rec.construction == Construction.EXTENDED.value:
            if not adaptive or prev is None or prev.success or rec.q != prev.q + 1:
                violations.append(f"k={rec.k}: illegal extension to q={rec.q}")
        elif rec.construction == Construction.FALLBACK.value:
            if not adaptive or prev is None or prev.success or rec.q != prev.q + 1:
                violations.append(f"k={rec.k}: illegal fallback at q={rec.q}")
        else:
            if rec.q != q0:
                violations.append(f"k={rec.k}: fresh set with q={rec.q} instead of q0={q0}")
            if adaptive and prev is not None and not prev.success and prev.q + 1 <= q_max:
                violations.append(f"k={rec.k}: reset after a failure below q_max")
    return violations
