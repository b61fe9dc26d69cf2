"""Penalty and curvature operators: grid differences, Laplacians, graph incidences."""

from typing import List, Sequence, Tuple

import networkx as nx
import numpy as np
import scipy.sparse as sp

from src.core.exceptions import ConstructionError
from src.linalg.sparse import canonical, csr_from_triplets

Edge = Tuple[int, int]


def forward_difference_1d(n: int) -> sp.csr_matrix:
    """(n-1) x n matrix with rows e_j - e_{j+1}."""
    return canonical(sp.diags([np.ones(n - 1), -np.ones(n - 1)], [0, 1], shape=(n - 1, n)))


def grid_difference_operator(grid_n: int) -> sp.csr_matrix:
    """Anisotropic discrete gradient on a grid_n x grid_n grid, nodes numbered row-major.

    Horizontal neighbour rows come first, then vertical ones; each row has
    +1 at the first node of the pair and -1 at the second.
    """
    if grid_n < 2:
        raise ConstructionError(f"grid_n must be at least 2, got {grid_n}")
    D = forward_difference_1d(grid_n)
    I = sp.identity(grid_n, format="csr")  # noqa: E741
    horizontal = sp.kron(I, D)
    vertical = sp.kron(D, I)
    return canonical(sp.vstack([horizontal, vertical]))


def dirichlet_laplacian(grid_n: int) -> sp.csr_matrix:
    """5-point Laplacian with homogeneous Dirichlet boundary, scaled by h^2 (entries 4 and -1)."""
    if grid_n < 2:
        raise ConstructionError(f"grid_n must be at least 2, got {grid_n}")
    T = sp.diags([-np.ones(grid_n - 1), 2.0 * np.ones(grid_n), -np.ones(grid_n - 1)], [-1, 0, 1])
    I = sp.identity(grid_n)  # noqa: E741
    return canonical(sp.kron(I, T) + sp.kron(T, I))


def edge_incidence(edges: Sequence[Edge], n_nodes: int) -> sp.csr_matrix:
    """Rows +1 at i and -1 at j for every edge (i, j), in input order."""
    triplets = []
    for row, (i, j) in enumerate(edges):
        if i == j:
            raise ConstructionError(f"self-loop edge ({i}, {j})")
        triplets += [(row, i, 1.0), (row, j, -1.0)]
    try:
        return csr_from_triplets(triplets, len(edges), n_nodes)
    except ConstructionError as e:
        raise ConstructionError(f"edge list refers to a node outside 0..{n_nodes - 1}") from e


def oriented_incidence(edges: Sequence[Edge], n_nodes: int) -> sp.csr_matrix:
    """Graph difference operator of order 1: -1 at the source, +1 at the target, one row per edge."""
    for i, j in edges:
        if i == j:
            raise ConstructionError(f"self-loop edge ({i}, {j})")
        if not (0 <= i < n_nodes and 0 <= j < n_nodes):
            raise ConstructionError(f"edge ({i}, {j}) refers to a node outside 0..{n_nodes - 1}")
    graph = nx.MultiDiGraph()
    graph.add_nodes_from(range(n_nodes))
    edgelist = [(i, j, k) for k, (i, j) in enumerate(edges)]
    graph.add_edges_from(edgelist)
    incidence = nx.incidence_matrix(graph, nodelist=range(n_nodes), edgelist=edgelist, oriented=True)
    return canonical(sp.csr_matrix(incidence).T)


def graph_difference_operator(edges: Sequence[Edge], n_nodes: int, order: int = 2) -> sp.csr_matrix:
    """Graph difference operator of the given order.

    Order 1 is the oriented incidence matrix D. Higher orders follow
    Delta(k+1) = D^T Delta(k) for odd k and D Delta(k) for even k, so order 2
    is the graph Laplacian D^T D.
    """
    if order < 1:
        raise ConstructionError(f"order must be at least 1, got {order}")
    D = oriented_incidence(edges, n_nodes)
    delta = D
    for k in range(1, order):
        delta = D.T @ delta if k % 2 == 1 else D @ delta
    return canonical(delta)


def grid_graph_edges(rows: int, cols: int) -> List[Edge]:
    """Edges of a rows x cols lattice graph, nodes numbered row-major."""
    graph = nx.grid_2d_graph(rows, cols)
    index = {(r, c): r * cols + c for r in range(rows) for c in range(cols)}
    return sorted((min(index[u], index[v]), max(index[u], index[v])) for u, v in graph.edges())


def breadth_first_ordering(M: sp.spmatrix) -> np.ndarray:
    """Cuthill-McKee (breadth-first) numbering of the sparsity graph of M."""
    graph = nx.from_scipy_sparse_array(sp.csr_matrix(M))
    graph.remove_edges_from(nx.selfloop_edges(graph))
    return np.fromiter(nx.utils.cuthill_mckee_ordering(graph), dtype=np.int64, count=M.shape[0])
