"""
ANASTAARS QAOA MaxCut Tests
"""

import itertools

import numpy as np
import pytest

from oracle import estimate_at
from qaoa import (
    CutDiagonal,
    Graph,
    GraphError,
    NormalizationError,
    QaoaAngles,
    StateVector,
    brute_force_maxcut,
    build_cut_diagonal,
    chvatal_graph,
    cut_value,
    cycle_graph,
    exact_expectation,
    load_graph,
    prepare_qaoa_state,
    qaoa_oracle,
    resolve_graph,
    sample_shots,
    save_graph,
    triangle_count,
)

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)


def single_edge(w=1.0):
    return Graph.from_edges(2, [(0, 1, w)])


def kron_on(op, qubit, n):
    """Dense operator acting on `qubit` (bit `qubit` of the basis index)"""
    out = np.eye(1, dtype=complex)
    for i in reversed(range(n)):
        out = np.kron(out, op if i == qubit else np.eye(2))
    return out


def dense_expectation(graph, angles):
    n = graph.n
    dim = 2 ** n
    hp = np.zeros((dim, dim), dtype=complex)
    for u, v, w in graph.edges:
        hp += 0.5 * w * (np.eye(dim) - kron_on(Z, u, n) @ kron_on(Z, v, n))
    hm = sum(kron_on(X, i, n) for i in range(n))
    psi = np.full(dim, 1 / np.sqrt(dim), dtype=complex)
    for gamma, beta in zip(angles.gamma, angles.beta):
        w_p, v_p = np.linalg.eigh(hp)
        psi = v_p @ (np.exp(-1j * gamma * w_p) * (v_p.conj().T @ psi))
        w_m, v_m = np.linalg.eigh(hm)
        psi = v_m @ (np.exp(-1j * beta * w_m) * (v_m.conj().T @ psi))
    return float(np.real(psi.conj() @ hp @ psi))


def test_cut_value_examples():
    cycle = cycle_graph(6)
    assert cut_value(cycle, '000000') == 0
    assert cut_value(cycle, '010101') == 6
    assert cut_value(single_edge(2.0), '01') == 2
    assert cut_value(single_edge(2.0), 0b10) == 2


def test_brute_force_maxcut_values():
    assert brute_force_maxcut(cycle_graph(6))[0] == 6
    assert brute_force_maxcut(chvatal_graph())[0] == 20
    value, assignment = brute_force_maxcut(single_edge())
    assert value == 1
    assert cut_value(single_edge(), assignment) == 1


def test_chvatal_structure():
    graph = chvatal_graph()
    assert graph.n == 12
    assert len(graph.edges) == 24
    assert set(graph.degrees()) == {4}
    assert triangle_count(graph) == 0


def test_cut_diagonal():
    assert np.array_equal(build_cut_diagonal(single_edge()).values, [0, 1, 1, 0])
    diag = build_cut_diagonal(cycle_graph(6))
    assert diag.values.max() == 6
    full = 2 ** 6 - 1
    assert all(diag.values[x] == diag.values[full ^ x] for x in range(2 ** 6))
    graph = chvatal_graph()
    values = build_cut_diagonal(graph).values
    for x in [0, 5, 1234, 4095]:
        assert values[x] == cut_value(graph, x)


@pytest.mark.parametrize("graph", [single_edge(), Graph.from_edges(3, [(0, 1), (1, 2, 0.5)]),
                                   cycle_graph(4)])
def test_statevector_matches_dense_reference(graph, rng):
    for _ in range(3):
        angles = QaoaAngles.from_vector(rng.uniform(-np.pi, np.pi, 4))
        assert exact_expectation(graph, angles) == pytest.approx(dense_expectation(graph, angles), abs=1e-10)
    angles = QaoaAngles(gamma=np.array([np.pi / 2]), beta=np.array([np.pi / 4]))
    assert exact_expectation(single_edge(), angles) == pytest.approx(
        dense_expectation(single_edge(), angles), abs=1e-10)


def test_empty_and_zero_circuits_are_uniform():
    graph = cycle_graph(6)
    uniform = np.full(64, 1 / 8)
    empty = prepare_qaoa_state(graph, QaoaAngles(gamma=np.array([]), beta=np.array([])))
    assert np.allclose(empty.amplitudes, uniform)
    zero = prepare_qaoa_state(graph, QaoaAngles.from_vector(np.zeros(10)))
    assert np.allclose(zero.amplitudes, uniform)


@pytest.mark.parametrize("graph,expected", [(cycle_graph(6), 3.0), (chvatal_graph(), 12.0)])
def test_zero_angle_expectation_is_half_the_weight(graph, expected):
    assert exact_expectation(graph, QaoaAngles.from_vector(np.zeros(10))) == pytest.approx(expected, abs=1e-12)
    assert exact_expectation(graph, QaoaAngles(np.array([]), np.array([]))) == pytest.approx(expected, abs=1e-12)


def test_norm_and_range_over_random_angles(rng):
    graph = chvatal_graph()
    diagonal = build_cut_diagonal(graph)
    for _ in range(100):
        angles = QaoaAngles.from_vector(rng.uniform(-np.pi, np.pi, 10))
        state = prepare_qaoa_state(graph, angles, diagonal)
        assert state.norm() == pytest.approx(1.0, abs=1e-10)
        assert 0.0 <= exact_expectation(graph, angles, diagonal) <= 20.0


def test_periodicity_for_unit_weights(rng):
    graph = cycle_graph(6)
    x = rng.uniform(-1, 1, 6)
    shifted = x + np.concatenate([np.full(3, 2 * np.pi), np.full(3, np.pi)])
    assert exact_expectation(graph, QaoaAngles.from_vector(shifted)) == pytest.approx(
        exact_expectation(graph, QaoaAngles.from_vector(x)), abs=1e-10)


def test_sampling_concentrated_state(rng):
    diag = build_cut_diagonal(cycle_graph(6))
    amplitudes = np.zeros(64, dtype=complex)
    amplitudes[0b010101] = 1.0
    state = StateVector(n=6, amplitudes=amplitudes)
    assert sample_shots(state, diag, 1, rng) == 6
    assert sample_shots(state, diag, 500, rng) == 6


def test_sampling_uniform_single_edge(rng):
    state = prepare_qaoa_state(single_edge(), QaoaAngles(np.array([]), np.array([])))
    diag = build_cut_diagonal(single_edge())
    assert sample_shots(state, diag, 1_000_000, rng) == pytest.approx(0.5, abs=0.005)


def test_single_shot_is_reproducible():
    state = prepare_qaoa_state(cycle_graph(6), QaoaAngles.from_vector(np.full(4, 0.3)))
    diag = build_cut_diagonal(cycle_graph(6))
    assert sample_shots(state, diag, 1, np.random.default_rng(4)) == sample_shots(
        state, diag, 1, np.random.default_rng(4))


def test_unnormalized_state_rejected(rng):
    diag = CutDiagonal(n=1, values=np.array([0.0, 1.0]))
    with pytest.raises(NormalizationError):
        sample_shots(StateVector(n=1, amplitudes=np.array([1.0, 1.0], dtype=complex)), diag, 10, rng)


def test_shot_mean_matches_exact_expectation(rng):
    graph = cycle_graph(6)
    diag = build_cut_diagonal(graph)
    state = prepare_qaoa_state(graph, QaoaAngles.from_vector(rng.uniform(-1, 1, 10)), diag)
    probs = state.probabilities()
    exact = probs @ diag.values
    stderr = np.sqrt(probs @ (diag.values - exact) ** 2 / 1_000_000)
    assert abs(sample_shots(state, diag, 1_000_000, rng) - exact) <= 5 * stderr


def test_oracle_values(rng):
    graph = cycle_graph(6)
    oracle = qaoa_oracle(graph, 5)
    assert oracle.dim == 10
    assert oracle.true_value(np.zeros(10)) == pytest.approx(-3.0)

    x = rng.uniform(-1, 1, 10)
    est = estimate_at(oracle, x, 100_000, rng)
    assert abs(est.mean - oracle.true_value(x)) <= 4 * est.std / np.sqrt(100_000)

    a = estimate_at(qaoa_oracle(graph, 5), x, 50, np.random.default_rng(1))
    b = estimate_at(qaoa_oracle(graph, 5), x, 50, np.random.default_rng(1))
    assert a.mean == b.mean

    with pytest.raises(ValueError):
        oracle.sample(np.zeros(9), 10, rng)


@pytest.mark.parametrize("n,edges", [
    (3, [(0, 0)]),
    (3, [(0, 1), (1, 0)]),
    (3, [(0, 3)]),
    (25, []),
])
def test_invalid_graphs(n, edges):
    with pytest.raises(GraphError):
        Graph.from_edges(n, edges)


def test_graph_files_round_trip(tmp_path):
    path = save_graph(Graph.from_edges(4, [(0, 1), (1, 2, 2.5), (2, 3)]), tmp_path / "path4.txt")
    graph = load_graph(path)
    assert graph.n == 4
    assert graph.edges == ((0, 1, 1.0), (1, 2, 2.5), (2, 3, 1.0))
    assert graph.name == "path4"


def test_graph_file_with_comments_and_default_weights(tmp_path):
    path = tmp_path / "triangle.txt"
    path.write_text("# a triangle\nn 3\n0 1\n1 2 # middle\n0 2 3\n")
    graph = load_graph(path)
    assert brute_force_maxcut(graph)[0] == 4


@pytest.mark.parametrize("text", ["0 1\n", "n 3\n0 1 2 3\n", "n 3\nn 3\n", "n 3\na b\n"])
def test_malformed_graph_files(text, tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text(text)
    with pytest.raises(GraphError):
        load_graph(path)


def test_resolve_graph(tmp_path):
    assert resolve_graph('chvatal').n == 12
    assert resolve_graph('cycle6').name == 'cycle6'
    assert len(resolve_graph('cycle9').edges) == 9
    with pytest.raises(GraphError):
        resolve_graph(str(tmp_path / "missing.txt"))


def test_brute_force_agrees_with_enumeration():
    graph = Graph.from_edges(5, [(0, 1, 1.5), (1, 2), (2, 3, 0.5), (3, 4), (0, 4, 2.0), (1, 3)])
    best = max(cut_value(graph, ''.join(bits)) for bits in itertools.product('01', repeat=5))
    assert brute_force_maxcut(graph)[0] == best
