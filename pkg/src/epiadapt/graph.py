"""Scale-free contact networks: generation, topology metrics, spectral radius.

Networks are undirected with a nonnegative weight matrix; generated instances
carry binary weights (1 on every edge). The spectral radius of the weight
matrix sets the epidemic threshold of the mean-field SIS dynamics.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

POWER_ITERATION_CAP = 10_000


class PowerIterationError(RuntimeError):
    """Power iteration failed to converge within the iteration cap."""


@dataclass(frozen=True)
class Network:
    """Undirected contact network with an initial weight matrix.

    ``edges`` holds unordered pairs (i, j) with i < j. ``w0`` is the full
    N x N weight matrix: zero diagonal, entries in [0, 1], and nonzero
    exactly on the (symmetric) support of ``edges``.
    """

    n: int
    edges: frozenset[tuple[int, int]]
    w0: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        w0 = np.asarray(self.w0, dtype=float)
        if w0.shape != (self.n, self.n):
            raise ValueError(f"w0 must be {self.n}x{self.n}, got {w0.shape}")
        if np.any(np.diag(w0) != 0.0):
            raise ValueError("w0 must have a zero diagonal (no self-loops)")
        if np.any(w0 < 0.0) or np.any(w0 > 1.0):
            raise ValueError("w0 entries must lie in [0, 1]")
        support = w0 > 0.0
        if not np.array_equal(support, support.T):
            raise ValueError("w0 support must be symmetric (both directions present)")
        derived = {(i, j) for i, j in zip(*np.nonzero(np.triu(support, k=1)))}
        derived = frozenset((int(i), int(j)) for i, j in derived)
        if derived != self.edges:
            raise ValueError("edges do not match the nonzero pattern of w0")
        for i, j in self.edges:
            if not (0 <= i < self.n and 0 <= j < self.n) or i == j:
                raise ValueError(f"invalid edge ({i}, {j})")
        w0.setflags(write=False)
        object.__setattr__(self, "w0", w0)

    @property
    def edge_count(self) -> int:
        return len(self.edges)


@dataclass(frozen=True)
class TopologyStats:
    avg_degree: float
    avg_clustering: float
    density: float


def network_from_weights(w0: np.ndarray) -> Network:
    """Build a Network from a weight matrix, deriving the edge set."""
    w0 = np.asarray(w0, dtype=float)
    n = w0.shape[0]
    support = np.triu(w0 > 0.0, k=1)
    edges = frozenset((int(i), int(j)) for i, j in zip(*np.nonzero(support)))
    return Network(n=n, edges=edges, w0=w0)


def generate_ba(n: int, m0: int, m: int, seed: int) -> Network:
    """Grow a Barabasi-Albert network with a fully connected seed clique.

    Starts from ``m0`` fully connected nodes; every later node attaches to
    ``m`` distinct existing nodes drawn with probability proportional to
    current degree (collisions redrawn). The edge count is therefore exactly
    m0*(m0-1)/2 + (n-m0)*m for every seed. Weights are 1 on every edge.
    """
    if m > m0:
        raise ValueError(f"m={m} must not exceed m0={m0}")
    if m0 > n:
        raise ValueError(f"m0={m0} must not exceed n={n}")
    if m < 1 or m0 < 1:
        raise ValueError("m and m0 must be positive")
    rng = np.random.default_rng(seed)

    w0 = np.zeros((n, n))
    w0[:m0, :m0] = 1.0
    np.fill_diagonal(w0, 0.0)
    degree = np.zeros(n)
    degree[:m0] = m0 - 1

    for v in range(m0, n):
        targets: set[int] = set()
        weights = degree[:v]
        total = weights.sum()
        while len(targets) < m:
            # m0=1 starts from a degree-0 seed; fall back to uniform there.
            u = int(rng.choice(v, p=weights / total) if total > 0 else rng.integers(v))
            targets.add(u)
        for u in targets:
            w0[v, u] = w0[u, v] = 1.0
            degree[u] += 1
        degree[v] = m

    return network_from_weights(w0)


def topology_stats(net: Network) -> TopologyStats:
    """Average degree, Watts-Strogatz average local clustering, and density.

    Nodes of degree < 2 contribute 0 to the clustering average.
    """
    if net.n < 2:
        raise ValueError("topology stats need at least 2 nodes")
    adj = net.w0 > 0.0
    degree = adj.sum(axis=1)
    coeffs = np.zeros(net.n)
    for v in range(net.n):
        k = int(degree[v])
        if k < 2:
            continue
        nbrs = np.nonzero(adj[v])[0]
        links = np.count_nonzero(np.triu(adj[np.ix_(nbrs, nbrs)], k=1))
        coeffs[v] = 2.0 * links / (k * (k - 1))
    m_edges = net.edge_count
    return TopologyStats(
        avg_degree=2.0 * m_edges / net.n,
        avg_clustering=float(coeffs.mean()),
        density=2.0 * m_edges / (net.n * (net.n - 1)),
    )


def spectral_radius(matrix: np.ndarray, tol: float = 1e-10) -> float:
    """Largest eigenvalue of a nonnegative matrix by power iteration.

    Deterministic all-ones start vector; Rayleigh-quotient estimate iterated
    to relative tolerance ``tol``. A vanishing iterate (e.g. the zero matrix)
    returns 0.0; failure to converge within the cap raises
    PowerIterationError (imprimitive or otherwise degenerate input).
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError("matrix must be square and nonempty")
    if np.any(a < 0.0):
        raise ValueError("matrix must be nonnegative")
    x = np.ones(a.shape[0])
    est = 0.0
    for _ in range(POWER_ITERATION_CAP):
        y = a @ x
        norm = np.linalg.norm(y)
        if norm == 0.0:
            return 0.0
        x = y / norm
        new_est = float(x @ (a @ x))
        if abs(new_est - est) <= tol * max(abs(new_est), 1e-300):
            return new_est
        est = new_est
    raise PowerIterationError(
        f"no convergence after {POWER_ITERATION_CAP} iterations (tol={tol})"
    )


def epidemic_threshold(net: Network) -> float:
    """Threshold 1/lambda_max of the weight matrix; errors on edgeless input."""
    lam = spectral_radius(net.w0)
    if lam == 0.0:
        raise ValueError("epidemic threshold undefined: spectral radius is 0")
    return 1.0 / lam


def save_network(net: Network, path: str | Path) -> None:
    """Write the network as CSV rows ``i,j,w``, one per directed nonzero weight."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "w"])
        for i in range(net.n):
            for j in range(net.n):
                if net.w0[i, j] > 0.0:
                    writer.writerow([i, j, f"{net.w0[i, j]:.12g}"])


def load_network(path: str | Path) -> Network:
    """Read a network CSV written by :func:`save_network`, validating invariants."""
    rows: list[tuple[int, int, float]] = []
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["i", "j", "w"]:
            raise ValueError(f"{path}: expected header 'i,j,w'")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns")
            i, j, w = int(row[0]), int(row[1]), float(row[2])
            rows.append((i, j, w))
    if not rows:
        raise ValueError(f"{path}: no weight rows")
    n = max(max(i, j) for i, j, _ in rows) + 1
    w0 = np.zeros((n, n))
    seen: set[tuple[int, int]] = set()
    for i, j, w in rows:
        if i == j:
            raise ValueError(f"self-loop at node {i}")
        if (i, j) in seen:
            raise ValueError(f"duplicate entry for ({i}, {j})")
        seen.add((i, j))
        if not 0.0 < w <= 1.0:
            raise ValueError(f"weight {w} for ({i}, {j}) outside (0, 1]")
        w0[i, j] = w
    return network_from_weights(w0)
