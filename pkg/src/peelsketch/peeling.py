"""Weighted hypergraph peeling.

An edge ``e`` is rho-free when some vertex ``v`` in it satisfies

    w_e >= rho * (w_v + sum of w_e' over the other live edges at v)

and rho-peelable when some sequence of rho-free deletions reaches it.
Deleting an edge only lowers the right-hand side at its vertices, so a
free edge stays free; greedily deleting free edges until none remain
therefore finds exactly the peelable set, whatever the order.

Sums over incident edges use ``math.fsum`` so the free test does not
depend on summation order.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components

from .core import ParameterError

HYPERTREE = "hypertree"
UNICYCLIC = "unicyclic"
COMPLEX = "complex"


class PreconditionError(ParameterError):
    pass


class ConfigError(ParameterError):
    pass


@dataclass
class WeightedHypergraph:
    N: int
    edges: np.ndarray
    edge_weights: np.ndarray
    vertex_weights: np.ndarray
    h: int = 3
    _incidence: list[list[int]] | None = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        self.edges = np.asarray(self.edges, dtype=np.int64).reshape(-1, self.h)
        self.edge_weights = np.asarray(self.edge_weights, dtype=np.float64)
        self.vertex_weights = np.asarray(self.vertex_weights, dtype=np.float64)
        M = self.edges.shape[0]
        if self.edge_weights.shape != (M,):
            raise ParameterError(f"expected {M} edge weights, got {self.edge_weights.shape}")
        if self.vertex_weights.shape != (self.N,):
            raise ParameterError(f"expected {self.N} vertex weights, got {self.vertex_weights.shape}")
        if M and (self.edges.min() < 0 or self.edges.max() >= self.N):
            raise ParameterError("edge endpoint out of range")
        if M and np.any(np.diff(np.sort(self.edges, axis=1), axis=1) == 0):
            raise ParameterError("edges must have h distinct vertices")
        for w in (self.edge_weights, self.vertex_weights):
            if not np.all(np.isfinite(w)) or np.any(w < 0):
                raise ParameterError("weights must be finite and non-negative")

    @property
    def M(self) -> int:
        return self.edges.shape[0]

    @property
    def incidence(self) -> list[list[int]]:
        """Edge ids incident to each vertex, in increasing id order."""
        if self._incidence is None:
            inc: list[list[int]] = [[] for _ in range(self.N)]
            for e, row in enumerate(self.edges.tolist()):
                for v in row:
                    inc[v].append(e)
            self._incidence = inc
        return self._incidence

    def edge_vertices(self, e: int) -> list[int]:
        return self.edges[e].tolist()

    def without_edges(self, drop: Sequence[int]) -> WeightedHypergraph:
        keep = np.ones(self.M, dtype=bool)
        keep[list(drop)] = False
        return WeightedHypergraph(self.N, self.edges[keep], self.edge_weights[keep], self.vertex_weights.copy(), self.h)


@dataclass(frozen=True)
class PeelingResult:
    sequence: tuple[int, ...]
    peelable: frozenset[int]
    survivors: frozenset[int]


def is_free(G: WeightedHypergraph, e: int, rho: float, removed=None) -> bool:
    """Whether edge ``e`` is rho-free in G minus the ``removed`` edges."""
    we = G.edge_weights[e]
    for v in G.edge_vertices(e):
        terms = [G.vertex_weights[v]]
        for f in G.incidence[v]:
            if f != e and (removed is None or not removed[f]):
                terms.append(G.edge_weights[f])
        if we >= rho * math.fsum(terms):
            return True
    return False


def peel(G: WeightedHypergraph, rho: float, rng: np.random.Generator | None = None) -> PeelingResult:
    """Remove rho-free edges until none is left.

    With ``rng`` the worklist is seeded and extended in random order; the
    peelable set does not depend on it.
    """
    M = G.M
    removed = np.zeros(M, dtype=bool)
    queued = np.ones(M, dtype=bool)
    order = np.arange(M) if rng is None else rng.permutation(M)
    work = deque(order.tolist())
    seq: list[int] = []
    while work:
        e = work.popleft()
        queued[e] = False
        if removed[e] or not is_free(G, e, rho, removed):
            continue
        removed[e] = True
        seq.append(e)
        nbrs = [f for v in G.edge_vertices(e) for f in G.incidence[v] if not removed[f] and not queued[f]]
        if rng is not None:
            nbrs = [nbrs[t] for t in rng.permutation(len(nbrs))]
        for f in nbrs:
            if not queued[f]:
                queued[f] = True
                work.append(f)
    peeled = frozenset(seq)
    return PeelingResult(tuple(seq), peeled, frozenset(range(M)) - peeled)


def is_peeling_sequence(G: WeightedHypergraph, rho: float, seq: Sequence[int]) -> bool:
    removed = np.zeros(G.M, dtype=bool)
    for e in seq:
        if removed[e] or not is_free(G, e, rho, removed):
            return False
        removed[e] = True
    return True


def spreadness(G: WeightedHypergraph, e: int, rho: float) -> float:
    """Sum over edges e' in C(e) of rho ** (1 + d(e, e')).

    d is the vertex distance between the edges: 0 for e itself and for
    edges sharing a vertex with e, one more per additional BFS layer.
    """
    layer_of = {e: 0}
    frontier = [e]
    seen_v: set[int] = set()
    layer = 0
    total = [rho]
    while frontier:
        layer += 1
        nxt = []
        for f in frontier:
            for v in G.edge_vertices(f):
                if v in seen_v:
                    continue
                seen_v.add(v)
                for g in G.incidence[v]:
                    if g not in layer_of:
                        layer_of[g] = layer
                        nxt.append(g)
        if nxt:
            total.append(len(nxt) * rho ** (1 + (layer - 1)))
        frontier = nxt
    return math.fsum(total)


def _component(G: WeightedHypergraph, start_vertices, skip_edge: int | None = None) -> tuple[set[int], set[int]]:
    verts = set(start_vertices)
    edges: set[int] = set()
    stack = list(verts)
    while stack:
        v = stack.pop()
        for f in G.incidence[v]:
            if f == skip_edge or f in edges:
                continue
            edges.add(f)
            for u in G.edge_vertices(f):
                if u not in verts:
                    verts.add(u)
                    stack.append(u)
    return verts, edges


def _class_of(nv: int, ne: int, h: int) -> str:
    if nv == (h - 1) * ne + 1:
        return HYPERTREE
    if nv == (h - 1) * ne:
        return UNICYCLIC
    return COMPLEX


def classify_component(G: WeightedHypergraph, e: int) -> str:
    verts, edges = _component(G, G.edge_vertices(e))
    return _class_of(len(verts), len(edges), G.h)


def unicyclic_break(G: WeightedHypergraph, e: int) -> int:
    """A vertex v of e whose component in G minus e is a hypertree."""
    if classify_component(G, e) != UNICYCLIC:
        raise PreconditionError(f"component of edge {e} is not unicyclic")
    for v in G.edge_vertices(e):
        verts, edges = _component(G, [v], skip_edge=e)
        if _class_of(len(verts), len(edges), G.h) == HYPERTREE:
            return v
    raise AssertionError("unicyclic component without a hypertree side")  # pragma: no cover


@dataclass(frozen=True)
class Census:
    """Component structure of a whole hypergraph."""

    labels: np.ndarray  # per vertex
    vertex_counts: np.ndarray  # per component
    edge_counts: np.ndarray  # per component
    classes: np.ndarray  # per component, object array of class names

    def edge_classes(self, G: WeightedHypergraph) -> np.ndarray:
        if G.M == 0:
            return np.zeros(0, dtype=object)
        return self.classes[self.labels[G.edges[:, 0]]]

    @property
    def all_sparse(self) -> bool:
        """True when every component is a hypertree or unicyclic."""
        return bool(np.all(self.classes != COMPLEX))


def census(G: WeightedHypergraph) -> Census:
    M = G.M
    if M:
        rows = np.repeat(G.edges[:, 0], G.h - 1)
        cols = G.edges[:, 1:].reshape(-1)
        adj = sp.coo_matrix((np.ones(rows.shape[0]), (rows, cols)), shape=(G.N, G.N))
    else:
        adj = sp.coo_matrix((G.N, G.N))
    ncomp, labels = connected_components(adj, directed=False)
    nv = np.bincount(labels, minlength=ncomp)
    ne = np.bincount(labels[G.edges[:, 0]], minlength=ncomp) if M else np.zeros(ncomp, dtype=np.int64)
    classes = np.full(ncomp, COMPLEX, dtype=object)
    classes[nv == (G.h - 1) * ne + 1] = HYPERTREE
    classes[nv == (G.h - 1) * ne] = UNICYCLIC
    return Census(labels, nv, ne, classes)


def random_edges(N: int, M: int, h: int, rng: np.random.Generator) -> np.ndarray:
    """M i.i.d. uniform size-h vertex sets (whole edges may repeat)."""
    if h < 2 or N < h or M < 0:
        raise ParameterError(f"need h >= 2, N >= h and M >= 0, got N={N}, M={M}, h={h}")
    edges = rng.integers(0, N, size=(M, h))
    while True:
        s = np.sort(edges, axis=1)
        bad = np.flatnonzero(np.any(np.diff(s, axis=1) == 0, axis=1))
        if bad.size == 0:
            return edges
        edges[bad] = rng.integers(0, N, size=(bad.size, h))


def random_hypergraph(N: int, M: int, h: int = 3, seed=None) -> WeightedHypergraph:
    """Uniform random h-uniform multi-hypergraph, unit edge and zero vertex weights."""
    rng = np.random.default_rng(seed)
    edges = random_edges(N, M, h, rng)
    return WeightedHypergraph(N, edges, np.ones(M), np.zeros(N), h)


# ---------------------------------------------------------------------------
# batched peeling for Monte Carlo


def peel_batch(G: WeightedHypergraph, vertex_weights: np.ndarray, rho: float) -> np.ndarray:
    """Peelable mask, shape ``(T, M)``, for T vertex-weight draws on G's edges.

    Each round deletes every currently free edge at once; by monotonicity
    that is a valid peeling sequence, so the fixed point is the peelable set.
    """
    W = np.asarray(vertex_weights, dtype=np.float64)
    if W.ndim != 2 or W.shape[1] != G.N:
        raise ParameterError(f"vertex weights must have shape (T, {G.N})")
    T, M = W.shape[0], G.M
    live = np.ones((T, M), dtype=bool)
    if M == 0:
        return ~live
    we = G.edge_weights
    inc = sp.csr_matrix(
        (np.ones(M * G.h), (np.repeat(np.arange(M), G.h), G.edges.reshape(-1))), shape=(M, G.N)
    )
    while True:
        load = np.asarray(inc.T @ (live * we).T).T  # (T, N) live edge weight per vertex
        free = np.zeros((T, M), dtype=bool)
        for t in range(G.h):
            v = G.edges[:, t]
            free |= we[None, :] >= rho * (W[:, v] + (load[:, v] - we[None, :]))
        newly = live & free
        if not newly.any():
            return ~live
        live &= ~newly


@dataclass
class PeelingBoundReport:
    frequency: np.ndarray  # per edge, non-peelable frequency
    bound: np.ndarray  # per edge, mu * D(e) / w_e
    spread: np.ndarray  # per edge, D(e)
    eligible: np.ndarray  # per edge, component is hypertree/unicyclic
    trials: int
    mu: float

    @property
    def sigma(self) -> np.ndarray:
        b = np.clip(self.bound, 0.0, 1.0)
        return np.sqrt(b * (1 - b) / self.trials)

    def violations(self, n_sigma: float = 3.0) -> np.ndarray:
        """Eligible edges whose frequency exceeds bound + n_sigma * sigma."""
        over = self.frequency > self.bound + n_sigma * self.sigma
        return np.flatnonzero(over & self.eligible)


def mc_nonpeelable(
    G: WeightedHypergraph,
    sampler: Callable[[np.random.Generator, int, int], np.ndarray],
    mu: float,
    rho: float,
    trials: int,
    seed=None,
    batch: int = 2000,
) -> PeelingBoundReport:
    """Estimate per-edge non-peelable frequency under random vertex weights.

    ``sampler(rng, T, N)`` returns a ``(T, N)`` array of vertex weights;
    entries may be dependent.  The declared ``mu`` must bound their mean.
    """
    rng = np.random.default_rng(seed)
    fails = np.zeros(G.M)
    trial_means = []
    done = 0
    while done < trials:
        T = min(batch, trials - done)
        W = np.asarray(sampler(rng, T, G.N), dtype=np.float64)
        if W.shape != (T, G.N) or np.any(W < 0) or not np.all(np.isfinite(W)):
            raise ConfigError("sampler must return finite non-negative weights of shape (T, N)")
        trial_means.append(W.mean(axis=1))
        fails += (~peel_batch(G, W, rho)).sum(axis=0)
        done += T
    means = np.concatenate(trial_means)
    se = means.std() / math.sqrt(trials) if trials > 1 else 0.0
    if means.mean() > mu + 4 * se:
        raise ConfigError(f"sampler mean {means.mean():.4g} exceeds declared mu={mu:.4g}")
    spread = np.array([spreadness(G, e, rho) for e in range(G.M)])
    cls = census(G).edge_classes(G)
    return PeelingBoundReport(
        frequency=fails / trials,
        bound=mu * spread / G.edge_weights,
        spread=spread,
        eligible=cls != COMPLEX,
        trials=trials,
        mu=mu,
    )


# ---------------------------------------------------------------------------
# text format


def write_graph(path: str | Path, G: WeightedHypergraph) -> None:
    lines = [f"{G.N} {G.M} {G.h}"]
    for row, w in zip(G.edges.tolist(), G.edge_weights.tolist()):
        lines.append(" ".join(map(str, row)) + f" {w!r}")
    lines.extend(repr(w) for w in G.vertex_weights.tolist())
    Path(path).write_text("\n".join(lines) + "\n")


def read_graph(path: str | Path) -> WeightedHypergraph:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln.strip() and not ln.startswith("#")]
    if not lines:
        raise ParameterError(f"{path}: empty graph file")
    try:
        N, M, h = map(int, lines[0].split())
        body = lines[1 : 1 + M]
        edges = [list(map(int, ln.split()[:h])) for ln in body]
        ew = [float(ln.split()[h]) for ln in body]
        vw_lines = lines[1 + M :]
        vw = [float(ln) for ln in vw_lines] if vw_lines else [0.0] * N
    except (ValueError, IndexError):
        raise ParameterError(f"{path}: malformed graph file") from None
    if len(edges) != M or len(vw) != N:
        raise ParameterError(f"{path}: expected {M} edges and {N} vertex weights")
    return WeightedHypergraph(N, np.array(edges, dtype=np.int64).reshape(M, h), np.array(ew), np.array(vw), h)
