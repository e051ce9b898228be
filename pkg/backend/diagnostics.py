"""
ANASTAARS Diagnostics Module
Fast self-test of the geometric, interpolation and QAOA invariants
"""

import logging
import time
from dataclasses import asdict, dataclass
from typing import Callable, Dict, List, Tuple

import numpy as np

from interpolation import (
    InterpolationSet,
    ModelKind,
    build_diagonal_model,
    build_linear_model,
    build_mfn_model,
    evaluate_model,
    extend_linear_model,
    generate_poised_set,
    mfn_kkt_residual,
    q_hat,
)
from qaoa import (
    QaoaAngles,
    brute_force_maxcut,
    build_cut_diagonal,
    chvatal_graph,
    cycle_graph,
    exact_expectation,
    prepare_qaoa_state,
    sample_shots,
    triangle_count,
)
from subspace import extend_basis, sample_haar_basis

logger = logging.getLogger(__name__)


@dataclass
class CheckResult:
    """Outcome of one self-test check"""
    name: str
    passed: bool
    detail: str
    seconds: float

    def to_dict(self) -> Dict:
        return asdict(self)


def _random_ball_point(q: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    direction = rng.standard_normal(q)
    direction /= np.linalg.norm(direction)
    return direction * radius * rng.random() ** (1.0 / q)


def check_haar_orthogonality(rng: np.random.Generator) -> Tuple[bool, str]:
    worst = 0.0
    count = 0
    for d in (5, 10, 50):
        for q in (1, 2, 5):
            for _ in range(112):
                worst = max(worst, sample_haar_basis(d, q, rng).orthogonality_error())
                count += 1
    return worst <= 1e-10, f"{count} bases, max |U^T U - I| = {worst:.2e}"


def check_extension_identity(rng: np.random.Generator) -> Tuple[bool, str]:
    d = 10
    worst_reuse = 0.0
    worst_closed_form = 0.0
    for _ in range(100):
        q = int(rng.integers(1, d))
        basis = sample_haar_basis(d, q, rng)
        extended = extend_basis(basis, rng)
        x = rng.standard_normal(d)
        s = rng.standard_normal(q)
        lifted = np.append(q_hat(q) * s, 0.0)
        worst_reuse = max(worst_reuse, float(np.max(np.abs((x + basis.embed(s)) - (x + extended.embed(lifted))))))

        delta = 1.0
        points = generate_poised_set(q, delta, ModelKind.LINEAR)
        g = rng.standard_normal(q)
        f0 = float(rng.standard_normal())
        model = build_linear_model(InterpolationSet(points, f0 + points @ g, delta, ModelKind.LINEAR))
        zeta = float(rng.uniform(0.1, 1.0))
        delta_f = float(rng.standard_normal())
        closed = extend_linear_model(model, zeta, delta_f)

        block = np.zeros((q + 1, q + 1))
        block[:q, :q] = q_hat(q) * points[1:]
        block[q, q] = zeta
        rhs = np.append(points[1:] @ g, delta_f)
        direct = np.linalg.solve(block, rhs)
        worst_closed_form = max(worst_closed_form, float(np.max(np.abs(closed.g - direct))))

    passed = worst_reuse <= 1e-12 and worst_closed_form <= 1e-12
    return passed, f"reuse error {worst_reuse:.2e}, closed-form error {worst_closed_form:.2e}"


def check_model_exactness(rng: np.random.Generator) -> Tuple[bool, str]:
    worst_diag = 0.0
    for _ in range(100):
        q = int(rng.integers(1, 8))
        delta = float(rng.uniform(0.1, 2.0))
        c, g, h = float(rng.standard_normal()), rng.standard_normal(q), rng.standard_normal(q)

        def quad(s):
            return c + g @ s + 0.5 * np.sum(h * s ** 2)

        points = generate_poised_set(q, delta, ModelKind.DIAGONAL)
        model = build_diagonal_model(InterpolationSet(points, [quad(p) for p in points], delta, ModelKind.DIAGONAL))
        for _ in range(50):
            s = _random_ball_point(q, delta, rng)
            worst_diag = max(worst_diag, abs(evaluate_model(model, s) - quad(s)))

    worst_interp = 0.0
    worst_kkt = 0.0
    for _ in range(20):
        q = int(rng.integers(1, 6))
        delta = float(rng.uniform(0.1, 2.0))
        points = generate_poised_set(q, delta, ModelKind.MFN)
        values = rng.standard_normal(points.shape[0])
        iset = InterpolationSet(points, values, delta, ModelKind.MFN)
        model = build_mfn_model(iset)
        residual = max(abs(evaluate_model(model, p) - v) / max(1.0, abs(v)) for p, v in zip(points, values))
        worst_interp = max(worst_interp, residual)
        worst_kkt = max(worst_kkt, mfn_kkt_residual(iset, model))

    passed = worst_diag <= 1e-10 and worst_interp <= 1e-8 and worst_kkt <= 1e-8
    return passed, (f"diagonal error {worst_diag:.2e}, mfn interpolation {worst_interp:.2e}, "
                    f"kkt residual {worst_kkt:.2e}")


def check_maxcut(rng: np.random.Generator) -> Tuple[bool, str]:
    cycle_cut, _ = brute_force_maxcut(cycle_graph(6))
    chvatal = chvatal_graph()
    chvatal_cut, _ = brute_force_maxcut(chvatal)
    regular = set(chvatal.degrees()) == {4}
    triangles = triangle_count(chvatal)
    passed = cycle_cut == 6 and chvatal_cut == 20 and chvatal.n == 12 and regular and triangles == 0
    return passed, f"cycle6 {cycle_cut:g}, chvatal {chvatal_cut:g}, 4-regular {regular}, triangles {triangles}"


def check_qaoa_identities(rng: np.random.Generator) -> Tuple[bool, str]:
    zero_errors = []
    for graph in (cycle_graph(6), chvatal_graph()):
        angles = QaoaAngles.from_vector(np.zeros(10))
        zero_errors.append(abs(exact_expectation(graph, angles) - graph.total_weight / 2))

    chvatal = chvatal_graph()
    diagonal = build_cut_diagonal(chvatal)
    worst_norm = 0.0
    for _ in range(100):
        angles = QaoaAngles.from_vector(rng.uniform(-np.pi, np.pi, 10))
        worst_norm = max(worst_norm, abs(prepare_qaoa_state(chvatal, angles, diagonal).norm() - 1.0))

    cycle = cycle_graph(6)
    cycle_diag = build_cut_diagonal(cycle)
    angles = QaoaAngles.from_vector(rng.uniform(-1.0, 1.0, 10))
    state = prepare_qaoa_state(cycle, angles, cycle_diag)
    exact = float(state.probabilities() @ cycle_diag.values)
    spread = np.sqrt(state.probabilities() @ (cycle_diag.values - exact) ** 2)
    shots = 1_000_000
    z = abs(sample_shots(state, cycle_diag, shots, rng) - exact) / (spread / np.sqrt(shots))

    passed = max(zero_errors) <= 1e-12 and worst_norm <= 1e-10 and z <= 5.0
    return passed, f"zero-angle error {max(zero_errors):.2e}, norm error {worst_norm:.2e}, shot z-score {z:.2f}"


SELFTEST_CHECKS: List[Tuple[str, Callable[[np.random.Generator], Tuple[bool, str]]]] = [
    ('haar_orthogonality', check_haar_orthogonality),
    ('extension_identity', check_extension_identity),
    ('model_exactness', check_model_exactness),
    ('maxcut_oracles', check_maxcut),
    ('qaoa_identities', check_qaoa_identities),
]


def run_selftest(seed: int = 20250101) -> List[CheckResult]:
    """Run every check with its own seeded stream; a crashing check counts as failed"""
    results = []
    for i, (name, check) in enumerate(SELFTEST_CHECKS):
        rng = np.random.default_rng([seed, i])
        start = time.perf_counter()
        try:
            passed, detail = check(rng)
        except Exception as e:
            logger.error(f"Self-test check {name} raised: {e}")
            passed, detail = False, f"error: {e}"
        elapsed = time.perf_counter() - start
        results.append(CheckResult(name=name, passed=bool(passed), detail=detail, seconds=elapsed))
        level = logging.INFO if passed else logging.WARNING
        logger.log(level, f"{name}: {'PASS' if passed else 'FAIL'} ({detail}, {elapsed:.2f}s)")
    return results
