"""Eight per-node centrality measures with deterministic conventions.

Measures and conventions (n = node count, scores keyed by node id):

* ``dg``  degree / (n - 1); 0 on a singleton graph.
* ``cl``  component-scaled closeness: ((r-1)/(n-1)) * ((r-1)/sum d(v,u))
  over v's r-node reachable set; isolated nodes score 0.
* ``bc``  shortest-path betweenness via per-source dependency
  accumulation, normalized by (n-1)(n-2)/2; endpoints excluded.
* ``hits`` mutual-reinforcement fixed point. On an undirected graph the
  update degenerates so authority equals hub; both are the dominant
  (Perron) direction of the adjacency. The iteration carries an identity
  shift so bipartite graphs converge instead of oscillating.
* ``pr``  damped random walk (default 0.85); dangling mass spreads
  uniformly; scores sum to one.
* ``ec``  dominant adjacency eigenvector, nonnegative, unit Euclidean
  norm, power iteration from all-ones (same identity shift).
* ``cc``  communicability (subgraph) centrality diag(expm(A)) via dense
  symmetric eigendecomposition; isolated nodes score exactly 1.
* ``lc``  load centrality: unit packets routed along shortest paths,
  splitting equally at each hop, summed over ordered pairs and
  normalized by (n-1)(n-2).

All reductions run in ascending-node-id order, so repeated runs agree
bit for bit on one platform.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .graph import GraphError, SocialGraph

MEASURES = ("dg", "cl", "bc", "hits", "pr", "ec", "cc", "lc")

_DEFAULT_TOL = 1e-8
_DEFAULT_MAX_ITER = 1000
_BLOCK = 256


class CentralityError(GraphError):
    """A measure could not be computed for this graph."""


class ConvergenceError(CentralityError):
    """An iterative solver ran out of iterations; carries its last iterate."""

    def __init__(self, message: str, last_iterate):
        super().__init__(message)
        self.last_iterate = last_iterate


@dataclass(frozen=True)
class CentralityConfig:
    tol: float = _DEFAULT_TOL
    max_iter: int = _DEFAULT_MAX_ITER
    damping: float = 0.85
    communicability_cap: int = 20000
    approximate_communicability: bool = False


def _as_scores(g: SocialGraph, values: np.ndarray) -> dict[int, float]:
    return {v: float(values[i]) for i, v in enumerate(g.nodes)}


# -- degree --------------------------------------------------------------------


def degree_centrality(g: SocialGraph) -> dict[int, float]:
    n = g.num_nodes
    if n <= 1:
        return {v: 0.0 for v in g.nodes}
    return {v: g.degree(v) / (n - 1) for v in g.nodes}


# -- BFS machinery (shared by cl / bc / lc) -------------------------------------


def _blocks(n: int, size: int = _BLOCK) -> Iterable[np.ndarray]:
    for start in range(0, n, size):
        yield np.arange(start, min(start + size, n))


def _level_masks(
    A: sp.csr_array, sources: np.ndarray
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Batched BFS. Returns integer distances (n x B, -1 unreachable) and
    per-level boolean masks, masks[0] being the sources themselves."""
    n = A.shape[0]
    B = len(sources)
    cols = np.arange(B)
    dist = np.full((n, B), -1, dtype=np.int64)
    dist[sources, cols] = 0
    frontier = np.zeros((n, B), dtype=bool)
    frontier[sources, cols] = True
    masks = [frontier]
    level = 0
    while True:
        reach = (A @ frontier.astype(np.float64)) > 0
        new = reach & (dist < 0)
        if not new.any():
            break
        level += 1
        dist[new] = level
        masks.append(new)
        frontier = new
    return dist, masks


def closeness_centrality(g: SocialGraph) -> dict[int, float]:
    n = g.num_nodes
    if n == 0:
        return {}
    if n == 1:
        return {g.nodes[0]: 0.0}
    A = g.adjacency_matrix()
    out = np.zeros(n)
    for sources in _blocks(n):
        dist, _ = _level_masks(A, sources)
        finite = dist >= 0
        r = finite.sum(axis=0)  # includes the source itself
        totals = np.where(finite, dist, 0).sum(axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            scores = np.where(
                totals > 0,
                ((r - 1) / (n - 1)) * ((r - 1) / np.where(totals > 0, totals, 1)),
                0.0,
            )
        out[sources] = scores
    return _as_scores(g, out)


def betweenness_centrality(g: SocialGraph) -> dict[int, float]:
    n = g.num_nodes
    if n < 3:
        return {v: 0.0 for v in g.nodes}
    A = g.adjacency_matrix()
    acc = np.zeros(n)
    for sources in _blocks(n):
        B = len(sources)
        cols = np.arange(B)
        dist, masks = _level_masks(A, sources)
        sigma = np.zeros((n, B))
        sigma[sources, cols] = 1.0
        for level in range(1, len(masks)):
            prev = masks[level - 1]
            paths = A @ np.where(prev, sigma, 0.0)
            mask = masks[level]
            sigma[mask] = paths[mask]
        delta = np.zeros((n, B))
        for level in range(len(masks) - 1, 0, -1):
            mask = masks[level]
            coeff = np.zeros((n, B))
            np.divide(1.0 + delta, sigma, out=coeff, where=mask)
            contrib = A @ coeff
            prev = masks[level - 1]
            delta[prev] += (contrib * sigma)[prev]
        delta[sources, cols] = 0.0
        acc += delta.sum(axis=1)
    acc /= 2.0  # each unordered pair was accumulated from both endpoints
    acc /= (n - 1) * (n - 2) / 2.0
    return _as_scores(g, acc)


def load_centrality(g: SocialGraph) -> dict[int, float]:
    n = g.num_nodes
    if n < 3:
        return {v: 0.0 for v in g.nodes}
    A = g.adjacency_matrix()
    acc = np.zeros(n)
    for sources in _blocks(n):
        B = len(sources)
        cols = np.arange(B)
        dist, masks = _level_masks(A, sources)
        flow = np.where(dist > 0, 1.0, 0.0)  # one packet per reachable target
        initial = flow.copy()
        for level in range(len(masks) - 1, 0, -1):
            mask = masks[level]
            prev = masks[level - 1]
            npreds = A @ prev.astype(np.float64)
            coeff = np.zeros((n, B))
            np.divide(flow, npreds, out=coeff, where=mask)
            contrib = A @ coeff
            flow[prev] += contrib[prev]
        through = flow - initial
        through[sources, cols] = 0.0
        acc += through.sum(axis=1)
    acc /= (n - 1) * (n - 2)  # ordered pairs
    return _as_scores(g, acc)


# -- spectral measures ----------------------------------------------------------


def _degrees(A: sp.csr_array) -> np.ndarray:
    return np.asarray(A.sum(axis=1)).ravel()


def _pagerank_vector(
    g: SocialGraph, damping: float, tol: float, max_iter: int
) -> tuple[np.ndarray, int]:
    n = g.num_nodes
    if not 0.0 < damping < 1.0:
        raise CentralityError("damping must lie strictly between 0 and 1")
    A = g.adjacency_matrix()
    deg = _degrees(A)
    dangling = deg == 0.0
    safe_deg = np.where(dangling, 1.0, deg)
    x = np.full(n, 1.0 / n)
    # Successive-iterate threshold scaled so the documented tol bounds the
    # distance to the true fixed point (contraction factor = damping).
    threshold = tol * (1.0 - damping) / damping
    for iteration in range(1, max_iter + 1):
        with_links = np.where(dangling, 0.0, x / safe_deg)
        dangling_mass = float(x[dangling].sum())
        x_new = (1.0 - damping) / n + damping * (A @ with_links + dangling_mass / n)
        delta = float(np.max(np.abs(x_new - x)))
        x = x_new
        if delta < threshold:
            return x, iteration
    raise ConvergenceError(
        f"pagerank did not converge in {max_iter} iterations", _as_scores(g, x)
    )


def pagerank(
    g: SocialGraph,
    damping: float = 0.85,
    tol: float = _DEFAULT_TOL,
    max_iter: int = _DEFAULT_MAX_ITER,
) -> dict[int, float]:
    """Damped random-walk scores; dangling mass is spread uniformly."""
    if g.num_nodes == 0:
        return {}
    x, _ = _pagerank_vector(g, damping, tol, max_iter)
    return _as_scores(g, x)


def _eigenvector_vector(
    g: SocialGraph, tol: float, max_iter: int
) -> tuple[np.ndarray, int]:
    n = g.num_nodes
    A = g.adjacency_matrix()
    x = np.full(n, 1.0 / np.sqrt(n))
    for iteration in range(1, max_iter + 1):
        y = A @ x + x  # identity shift: keeps bipartite spectra from oscillating
        y /= np.linalg.norm(y)
        delta = float(np.max(np.abs(y - x)))
        x = y
        if delta < tol:
            return x, iteration
    raise ConvergenceError(
        f"eigenvector centrality did not converge in {max_iter} iterations",
        _as_scores(g, x),
    )


def eigenvector_centrality(
    g: SocialGraph, tol: float = _DEFAULT_TOL, max_iter: int = _DEFAULT_MAX_ITER
) -> dict[int, float]:
    """Dominant adjacency eigenvector, nonnegative, unit Euclidean norm."""
    if g.num_edges == 0:
        raise CentralityError("eigenvector centrality needs at least one edge")
    x, _ = _eigenvector_vector(g, tol, max_iter)
    return _as_scores(g, x)


def _hits_vectors(
    g: SocialGraph, tol: float, max_iter: int
) -> tuple[np.ndarray, np.ndarray, int]:
    n = g.num_nodes
    A = g.adjacency_matrix()
    authority = np.full(n, 1.0 / np.sqrt(n))
    hub = authority.copy()
    for iteration in range(1, max_iter + 1):
        a_new = A @ hub + hub
        a_new /= np.linalg.norm(a_new)
        h_new = A @ a_new + a_new
        h_new /= np.linalg.norm(h_new)
        done = (
            float(np.max(np.abs(a_new - authority))) < tol
            and float(np.max(np.abs(h_new - hub))) < tol
        )
        authority, hub = a_new, h_new
        if done:
            return authority, hub, iteration
    raise ConvergenceError(
        f"hits did not converge in {max_iter} iterations",
        (_as_scores(g, authority), _as_scores(g, hub)),
    )


def hits(
    g: SocialGraph, tol: float = _DEFAULT_TOL, max_iter: int = _DEFAULT_MAX_ITER
) -> tuple[dict[int, float], dict[int, float]]:
    """Authority and hub scores from the mutual-reinforcement update.

    On an undirected graph the two roles coincide, so the returned
    vectors are equal: both converge to the Perron direction of the
    adjacency (the same identity shift as ``eigenvector_centrality``
    guarantees convergence on bipartite graphs).
    """
    if g.num_nodes == 0:
        raise CentralityError("hits needs a non-empty graph")
    authority, hub, _ = _hits_vectors(g, tol, max_iter)
    return _as_scores(g, authority), _as_scores(g, hub)


def communicability_centrality(
    g: SocialGraph,
    cap: int = 20000,
    approximate: bool = False,
    tol: float = 1e-10,
) -> dict[int, float]:
    """diag(expm(A)) per node. Dense eigendecomposition up to ``cap`` nodes;
    beyond that pass ``approximate=True`` for per-node Lanczos quadrature
    (error bounded by the quadrature's convergence tolerance)."""
    n = g.num_nodes
    if n == 0:
        return {}
    if n > cap:
        if not approximate:
            raise CentralityError(
                f"graph has {n} nodes, above the dense cap {cap}; "
                "pass approximate=True to use Lanczos quadrature"
            )
        return {v: communicability_estimate(g, v, tol=tol) for v in g.nodes}
    dense = g.adjacency_matrix().toarray()
    eigenvalues, vectors = np.linalg.eigh(dense)
    scores = (vectors**2) @ np.exp(eigenvalues)
    return _as_scores(g, scores)


def communicability_estimate(
    g: SocialGraph, node: int, tol: float = 1e-10, max_steps: int = 80
) -> float:
    """Lanczos-quadrature estimate of one diagonal entry of expm(A)."""
    A = g.adjacency_matrix()
    n = g.num_nodes
    start = np.zeros(n)
    start[g.index_of(node)] = 1.0
    basis = [start]
    alphas: list[float] = []
    betas: list[float] = []
    previous = None
    estimate = 1.0
    for step in range(1, max_steps + 1):
        w = A @ basis[-1]
        alpha = float(basis[-1] @ w)
        alphas.append(alpha)
        w = w - alpha * basis[-1]
        if len(basis) > 1:
            w = w - betas[-1] * basis[-2]
        for b in basis:  # full reorthogonalization; n is small here per call
            w = w - (b @ w) * b
        beta = float(np.linalg.norm(w))
        T = np.diag(alphas)
        if betas:
            off = np.array(betas)
            T += np.diag(off, 1) + np.diag(off, -1)
        estimate = float(scipy.linalg.expm(T)[0, 0])
        if previous is not None and abs(estimate - previous) <= tol * max(
            1.0, abs(estimate)
        ):
            return estimate
        previous = estimate
        if beta < 1e-14:  # Krylov space exhausted: estimate is exact
            return estimate
        betas.append(beta)
        basis.append(w / beta)
    return estimate


# -- the combined table ---------------------------------------------------------


@dataclass
class CentralityTable:
    """Per-node scores for every computed measure, plus failure notes.

    ``scores['hits']`` is the authority vector (the value fed to feature
    matrices); the hub vector rides along in ``hub_scores``.
    """

    nodes: tuple[int, ...]
    scores: dict[str, dict[int, float]]
    hub_scores: dict[int, float] | None = None
    failures: dict[str, str] = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)

    @property
    def measures(self) -> tuple[str, ...]:
        return tuple(m for m in MEASURES if m in self.scores)

    def feature_matrix(self, nodes: Sequence[int] | None = None) -> np.ndarray:
        """n x 8 matrix in MEASURES order; requires every measure present."""
        if self.failures:
            raise CentralityError(
                f"table is partial; failed measures: {sorted(self.failures)}"
            )
        use = tuple(nodes) if nodes is not None else self.nodes
        out = np.empty((len(use), len(MEASURES)))
        for j, measure in enumerate(MEASURES):
            column = self.scores[measure]
            out[:, j] = [column[v] for v in use]
        return out

    def to_csv_bytes(self) -> bytes:
        columns = list(self.measures)
        header = ["node"] + columns + (["hits_hub"] if self.hub_scores else [])
        lines = [",".join(header)]
        for v in self.nodes:
            row = [str(v)] + [repr(self.scores[m][v]) for m in columns]
            if self.hub_scores:
                row.append(repr(self.hub_scores[v]))
            lines.append(",".join(row))
        iteration_notes = self.provenance.get("iterations", {})
        if iteration_notes:
            noted = " ".join(
                f"{m}={iteration_notes[m]}" for m in sorted(iteration_notes)
            )
            lines.append(f"# iterations: {noted}")
        for measure in sorted(self.failures):
            lines.append(f"# failed: {measure}: {self.failures[measure]}")
        return ("\n".join(lines) + "\n").encode("utf-8")

    @classmethod
    def from_csv_bytes(cls, data: bytes) -> "CentralityTable":
        lines = [
            ln
            for ln in data.decode("utf-8").splitlines()
            if ln.strip() and not ln.startswith("#")
        ]
        if not lines:
            raise CentralityError("empty centrality table")
        header = lines[0].split(",")
        if header[0] != "node":
            raise CentralityError("centrality table must start with a node column")
        measure_cols = [h for h in header[1:] if h != "hits_hub"]
        unknown = set(measure_cols) - set(MEASURES)
        if unknown:
            raise CentralityError(f"unknown measures in table: {sorted(unknown)}")
        nodes = []
        scores: dict[str, dict[int, float]] = {m: {} for m in measure_cols}
        hub: dict[int, float] = {}
        for line in lines[1:]:
            cells = line.split(",")
            v = int(cells[0])
            nodes.append(v)
            for name, cell in zip(header[1:], cells[1:]):
                if name == "hits_hub":
                    hub[v] = float(cell)
                else:
                    scores[name][v] = float(cell)
        failures = {m: "absent from table" for m in MEASURES if m not in measure_cols}
        return cls(
            nodes=tuple(nodes),
            scores=scores,
            hub_scores=hub or None,
            failures=failures,
        )


def _validate_table(g: SocialGraph, table: CentralityTable) -> None:
    n = g.num_nodes
    slack = 1e-9
    for measure in ("dg", "cl", "bc", "lc"):
        if measure in table.scores:
            vals = np.array([table.scores[measure][v] for v in table.nodes])
            if len(vals) and (vals.min() < -slack or vals.max() > 1 + slack):
                raise CentralityError(f"{measure} escaped [0, 1]")
    if "pr" in table.scores and n:
        total = sum(table.scores["pr"][v] for v in table.nodes)
        if abs(total - 1.0) > 1e-9:
            raise CentralityError(f"pagerank sums to {total!r}, not 1")
    for measure in ("ec", "hits"):
        if measure in table.scores and n:
            vec = np.array([table.scores[measure][v] for v in table.nodes])
            if abs(float(np.linalg.norm(vec)) - 1.0) > 1e-6:
                raise CentralityError(f"{measure} is not unit-norm")
    if "cc" in table.scores:
        low = min(table.scores["cc"].values(), default=1.0)
        if low < 1.0 - 1e-9:
            raise CentralityError("communicability fell below 1")


def centrality_table(
    g: SocialGraph,
    config: CentralityConfig | None = None,
    measures: Sequence[str] = MEASURES,
) -> CentralityTable:
    """Compute the requested measures, recording failures instead of dying.

    A measure that cannot be computed (no edges for ``ec``, solver ran out
    of iterations, dense cap exceeded) becomes a ``failures`` entry; the
    table keeps every measure that did succeed.
    """
    if g.num_nodes == 0:
        raise CentralityError("centrality_table needs a non-empty graph")
    cfg = config or CentralityConfig()
    unknown = set(measures) - set(MEASURES)
    if unknown:
        raise CentralityError(f"unknown measures requested: {sorted(unknown)}")
    table = CentralityTable(nodes=g.nodes, scores={})
    iterations: dict[str, int] = {}
    seconds: dict[str, float] = {}

    def run(measure: str, fn):
        started = time.perf_counter()
        try:
            result = fn()
        except CentralityError as exc:
            table.failures[measure] = str(exc)
        else:
            if measure == "hits":
                table.scores["hits"], table.hub_scores = result
            else:
                table.scores[measure] = result
        seconds[measure] = time.perf_counter() - started

    def run_hits():
        authority, hub, count = _hits_vectors(g, cfg.tol, cfg.max_iter)
        iterations["hits"] = count
        return _as_scores(g, authority), _as_scores(g, hub)

    def run_pr():
        x, count = _pagerank_vector(g, cfg.damping, cfg.tol, cfg.max_iter)
        iterations["pr"] = count
        return _as_scores(g, x)

    def run_ec():
        if g.num_edges == 0:
            raise CentralityError("eigenvector centrality needs at least one edge")
        x, count = _eigenvector_vector(g, cfg.tol, cfg.max_iter)
        iterations["ec"] = count
        return _as_scores(g, x)

    runners = {
        "dg": lambda: degree_centrality(g),
        "cl": lambda: closeness_centrality(g),
        "bc": lambda: betweenness_centrality(g),
        "hits": run_hits,
        "pr": run_pr,
        "ec": run_ec,
        "cc": lambda: communicability_centrality(
            g,
            cap=cfg.communicability_cap,
            approximate=cfg.approximate_communicability,
        ),
        "lc": lambda: load_centrality(g),
    }
    for measure in (m for m in MEASURES if m in measures):
        run(measure, runners[measure])
    table.provenance = {"iterations": iterations, "seconds": seconds}
    _validate_table(g, table)
    return table
