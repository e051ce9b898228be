"""
ANASTAARS QAOA MaxCut Module
Exact statevector simulation of QAOA MaxCut circuits with shot sampling
"""

import logging
import re
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from oracle import StochasticOracle

logger = logging.getLogger(__name__)

MAX_QUBITS = 24
NORM_TOL = 1e-8

# standard construction: 12 vertices, 24 edges, 4-regular, triangle-free
CHVATAL_EDGES = [
    (0, 1), (0, 4), (0, 6), (0, 9),
    (1, 2), (1, 5), (1, 7),
    (2, 3), (2, 6), (2, 8),
    (3, 4), (3, 7), (3, 9),
    (4, 5), (4, 8),
    (5, 10), (5, 11),
    (6, 10), (6, 11),
    (7, 8), (7, 11),
    (8, 10),
    (9, 10), (9, 11),
]


class GraphError(ValueError):
    """Raised for malformed or oversized MaxCut instances"""


class NormalizationError(ValueError):
    """Raised when a state's probabilities do not sum to one"""


@dataclass(frozen=True)
class Graph:
    """Weighted undirected MaxCut instance"""
    n: int
    edges: Tuple[Tuple[int, int, float], ...]
    name: str = "graph"

    def __post_init__(self):
        if self.n < 1:
            raise GraphError(f"Graph needs at least one vertex, got n={self.n}")
        if self.n > MAX_QUBITS:
            raise GraphError(f"n={self.n} exceeds the statevector limit of {MAX_QUBITS} vertices")
        seen = set()
        for u, v, _ in self.edges:
            if not (0 <= u < v < self.n):
                raise GraphError(f"Edge ({u}, {v}) must satisfy 0 <= u < v < {self.n}")
            if (u, v) in seen:
                raise GraphError(f"Duplicate edge ({u}, {v})")
            seen.add((u, v))

    @classmethod
    def from_edges(cls, n: int, edges: Sequence, name: str = "graph") -> 'Graph':
        """Build a graph from (u, v) or (u, v, w) tuples; endpoints are sorted and w defaults to 1"""
        normalized = []
        for edge in edges:
            u, v = int(edge[0]), int(edge[1])
            w = float(edge[2]) if len(edge) > 2 else 1.0
            if u == v:
                raise GraphError(f"Self-loop at vertex {u}")
            normalized.append((min(u, v), max(u, v), w))
        return cls(n=n, edges=tuple(normalized), name=name)

    @property
    def total_weight(self) -> float:
        return float(sum(w for _, _, w in self.edges))

    def degrees(self) -> List[int]:
        deg = [0] * self.n
        for u, v, _ in self.edges:
            deg[u] += 1
            deg[v] += 1
        return deg


@dataclass(frozen=True)
class QaoaAngles:
    """Phase angles gamma and mixer angles beta of a p-layer circuit"""
    gamma: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        if np.shape(self.gamma) != np.shape(self.beta) or np.ndim(self.gamma) != 1:
            raise ValueError("gamma and beta must be vectors of equal length p")

    @property
    def p(self) -> int:
        return len(self.gamma)

    @classmethod
    def from_vector(cls, x: np.ndarray) -> 'QaoaAngles':
        """Split x = (gamma_1..gamma_p, beta_1..beta_p)"""
        x = np.asarray(x, dtype=float)
        if x.ndim != 1 or x.size % 2:
            raise ValueError(f"Parameter vector must have even length 2p, got shape {x.shape}")
        p = x.size // 2
        return cls(gamma=x[:p], beta=x[p:])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.gamma, self.beta])


@dataclass
class StateVector:
    """2^n amplitudes; qubit i is bit i of the basis index"""
    n: int
    amplitudes: np.ndarray

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))


@dataclass
class CutDiagonal:
    """values[x] = cut weight of the partition encoded by bitstring x"""
    n: int
    values: np.ndarray


def _assignment_bits(assignment: Union[str, int, Sequence[int]], n: int) -> np.ndarray:
    if isinstance(assignment, str):
        if len(assignment) != n or set(assignment) - {'0', '1'}:
            raise ValueError(f"Assignment must be a {n}-character bitstring, got '{assignment}'")
        return np.array([int(c) for c in assignment])
    if isinstance(assignment, (int, np.integer)):
        return (int(assignment) >> np.arange(n)) & 1
    bits = np.asarray(assignment, dtype=int)
    if bits.shape != (n,):
        raise ValueError(f"Assignment must have {n} bits")
    return bits


def cut_value(graph: Graph, assignment: Union[str, int, Sequence[int]]) -> float:
    """Total weight of edges crossing the partition (character/bit i is vertex i)"""
    bits = _assignment_bits(assignment, graph.n)
    return float(sum(w for u, v, w in graph.edges if bits[u] != bits[v]))


def build_cut_diagonal(graph: Graph) -> CutDiagonal:
    """Diagonal of H_P = sum (w/2)(I - Z_u Z_v) in the computational basis"""
    index = np.arange(2 ** graph.n, dtype=np.int64)
    values = np.zeros(index.size)
    for u, v, w in graph.edges:
        values += w * (((index >> u) ^ (index >> v)) & 1)
    return CutDiagonal(n=graph.n, values=values)


def brute_force_maxcut(graph: Graph) -> Tuple[float, str]:
    """Exact MaxCut by enumeration; vertex n-1 is pinned to side 0 by flip symmetry"""
    values = build_cut_diagonal(graph).values[: 2 ** (graph.n - 1)] if graph.n > 1 else np.zeros(1)
    best = int(np.argmax(values))
    assignment = ''.join(str((best >> i) & 1) for i in range(graph.n))
    return float(values[best]), assignment


def _apply_mixer(amplitudes: np.ndarray, n: int, beta: float) -> np.ndarray:
    c, s = np.cos(beta), -1j * np.sin(beta)
    for qubit in range(n):
        view = amplitudes.reshape(-1, 2, 2 ** qubit)
        a = view[:, 0, :].copy()
        b = view[:, 1, :]
        view[:, 0, :] = c * a + s * b
        view[:, 1, :] = s * a + c * b
    return amplitudes


def prepare_qaoa_state(graph: Graph, angles: QaoaAngles, diagonal: Optional[CutDiagonal] = None) -> StateVector:
    """Uniform superposition followed by p phase/mixer layers"""
    diagonal = diagonal if diagonal is not None else build_cut_diagonal(graph)
    dim = 2 ** graph.n
    amplitudes = np.full(dim, 1.0 / np.sqrt(dim), dtype=complex)
    for gamma, beta in zip(angles.gamma, angles.beta):
        amplitudes *= np.exp(-1j * gamma * diagonal.values)
        amplitudes = _apply_mixer(amplitudes, graph.n, beta)
    return StateVector(n=graph.n, amplitudes=amplitudes)


def exact_expectation(graph: Graph, angles: QaoaAngles, diagonal: Optional[CutDiagonal] = None) -> float:
    """<psi|H_P|psi>"""
    diagonal = diagonal if diagonal is not None else build_cut_diagonal(graph)
    state = prepare_qaoa_state(graph, angles, diagonal)
    return float(state.probabilities() @ diagonal.values)


def sample_shot_values(state: StateVector,
                       diagonal: CutDiagonal,
                       shots: int,
                       rng: np.random.Generator) -> np.ndarray:
    """Measure `shots` times (inverse CDF over |psi|^2) and return the per-shot cut values"""
    if shots < 1:
        raise ValueError(f"Shot count must be at least 1, got {shots}")
    cdf = np.cumsum(state.probabilities())
    if abs(cdf[-1] - 1.0) > NORM_TOL:
        raise NormalizationError(f"State probabilities sum to {cdf[-1]:.12f}")
    draws = rng.random(shots) * cdf[-1]
    indices = np.minimum(np.searchsorted(cdf, draws, side='right'), cdf.size - 1)
    return diagonal.values[indices]


def sample_shots(state: StateVector, diagonal: CutDiagonal, shots: int, rng: np.random.Generator) -> float:
    """Mean cut value over `shots` measurements"""
    return float(np.mean(sample_shot_values(state, diagonal, shots, rng)))


class QaoaOracle(StochasticOracle):
    """Negated shot-sampled MaxCut energy over x = (gamma, beta) in R^{2p}"""

    def __init__(self, graph: Graph, p: int):
        if p < 1:
            raise ValueError(f"QAOA needs at least one layer, got p={p}")
        super().__init__(2 * p)
        self.graph = graph
        self.p = p
        self.diagonal = build_cut_diagonal(graph)

    def _draw(self, x, shots, rng):
        state = prepare_qaoa_state(self.graph, QaoaAngles.from_vector(x), self.diagonal)
        return -sample_shot_values(state, self.diagonal, shots, rng)

    def true_value(self, x):
        return -exact_expectation(self.graph, QaoaAngles.from_vector(x), self.diagonal)


def qaoa_oracle(graph: Graph, p: int) -> QaoaOracle:
    return QaoaOracle(graph, p)


def triangle_count(graph: Graph) -> int:
    adjacency = np.zeros((graph.n, graph.n), dtype=np.int64)
    for u, v, _ in graph.edges:
        adjacency[u, v] = adjacency[v, u] = 1
    return int(np.trace(np.linalg.matrix_power(adjacency, 3)) // 6)


def chvatal_graph() -> Graph:
    """Chvatal graph with unit weights, checked for 4-regularity and triangle-freeness"""
    graph = Graph.from_edges(12, CHVATAL_EDGES, name="chvatal")
    if len(graph.edges) != 24 or set(graph.degrees()) != {4} or triangle_count(graph) != 0:
        raise GraphError("Chvatal edge list is corrupted")
    return graph


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise GraphError(f"A cycle needs at least 3 vertices, got {n}")
    return Graph.from_edges(n, [(i, (i + 1) % n) for i in range(n)], name=f"cycle{n}")


def load_graph(path: Union[str, Path]) -> Graph:
    """Read the `n <count>` header plus one `u v [w]` edge per line"""
    path = Path(path)
    n = None
    edges = []
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if fields[0] == 'n':
            if n is not None or len(fields) != 2:
                raise GraphError(f"{path}:{lineno}: malformed header '{raw}'")
            n = int(fields[1])
            continue
        if n is None:
            raise GraphError(f"{path}:{lineno}: edge before the 'n <count>' header")
        if len(fields) not in (2, 3):
            raise GraphError(f"{path}:{lineno}: expected 'u v [w]', got '{raw}'")
        try:
            edges.append(tuple(int(f) for f in fields[:2]) + tuple(float(f) for f in fields[2:]))
        except ValueError:
            raise GraphError(f"{path}:{lineno}: non-numeric field in '{raw}'")
    if n is None:
        raise GraphError(f"{path}: missing 'n <count>' header")
    return Graph.from_edges(n, edges, name=path.stem)


def save_graph(graph: Graph, path: Union[str, Path]) -> Path:
    path = Path(path)
    lines = [f"n {graph.n}"] + [f"{u} {v} {w:g}" for u, v, w in graph.edges]
    path.write_text('\n'.join(lines) + '\n')
    return path


def resolve_graph(source: str) -> Graph:
    """Named graphs (`chvatal`, `cycle6`, `cycle<N>`) or an edge-list file path"""
    if source == 'chvatal':
        return chvatal_graph()
    match = re.fullmatch(r'cycle(\d+)', source)
    if match:
        return cycle_graph(int(match.group(1)))
    path = Path(source)
    if not path.exists():
        raise GraphError(f"Unknown graph '{source}': not a named graph and no such file")
    return load_graph(path)
