"""Independent check: the stacked system as a difference-constraint graph.

Every finite entry ``M[i, j]`` is the constraint ``x_i - x_j >= M[i, j]``,
i.e. an arc ``j -> i``.  The makespan is the longest path from the first to
the last node, found by Bellman-Ford with max-relaxation.  Nothing here
touches the Kleene star.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sldiflow._kernels import bellman_ford_max
from sldiflow.maxplus import NEG_INF, TOL, InfeasibleCircuit
from sldiflow.sldi import MakespanResult, SldiInstance, Witness, assemble_Mv


@dataclass(frozen=True, eq=False)
class ConstraintGraph:
    """Arcs ``src[e] -> dst[e]`` with weight ``weight[e]``; nodes are 0-based."""

    node_count: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray

    @property
    def arcs(self) -> list[tuple[int, int, float]]:
        return [(int(s), int(d), float(w)) for s, d, w in zip(self.src, self.dst, self.weight)]


def to_graph(mv) -> ConstraintGraph:
    mv = np.asarray(mv, dtype=float)
    if mv.ndim != 2 or mv.shape[0] != mv.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {mv.shape}")
    if np.isposinf(mv).any():
        raise ValueError("constraint matrix must not contain +inf")
    dst, src = np.nonzero(np.isfinite(mv))
    # sort by destination so forward chains settle in a single sweep
    order = np.lexsort((src, dst))
    src, dst = src[order], dst[order]
    return ConstraintGraph(mv.shape[0], src.astype(np.int64), dst.astype(np.int64), mv[dst, src].copy())


def chain_graph(cs, is_, ps) -> ConstraintGraph:
    """Graph of the block-tridiagonal system without materializing the full matrix."""
    n, K = cs[0].shape[0], len(cs)
    src, dst, w = [], [], []

    def add(block, row0, col0):
        d, s = np.nonzero(np.isfinite(block))
        if np.isposinf(block[d, s]).any():
            raise ValueError("constraint matrix must not contain +inf")
        src.append(s + col0)
        dst.append(d + row0)
        w.append(block[d, s])

    for k in range(K):
        add(cs[k], k * n, k * n)
        if k + 1 < K:
            add(is_[k], (k + 1) * n, k * n)
            add(ps[k], k * n, (k + 1) * n)
    src, dst, w = (np.concatenate(a) for a in (src, dst, w))
    order = np.lexsort((src, dst))
    return ConstraintGraph(K * n, src[order].astype(np.int64), dst[order].astype(np.int64), w[order].astype(float))


def has_positive_cycle(g: ConstraintGraph, tol: float = TOL) -> int:
    """Node index on a positive circuit anywhere in ``g``, or -1.

    Starts every node at 0, as if a virtual source fed all of them.
    """
    dist = np.zeros(g.node_count)
    return int(bellman_ford_max(g.node_count, g.src, g.dst, g.weight, dist, tol))


def bf_longest_path(g: ConstraintGraph, src: int, dst: int, tol: float = TOL) -> float:
    """Maximum path weight ``src -> dst`` (0-based nodes).

    Raises :class:`InfeasibleCircuit` if the graph has a positive circuit
    anywhere, reachable or not.  An unreachable ``dst`` gives ``-inf``.
    """
    bad = has_positive_cycle(g, tol)
    if bad >= 0:
        raise InfeasibleCircuit(bad)
    dist = np.full(g.node_count, NEG_INF)
    dist[src] = 0.0
    bellman_ford_max(g.node_count, g.src, g.dst, g.weight, dist, tol)
    return float(dist[dst])


def graph_makespan(mv, n: int, tol: float = TOL) -> MakespanResult:
    """``mv`` is the stacked matrix or an already built :class:`ConstraintGraph`."""
    g = mv if isinstance(mv, ConstraintGraph) else to_graph(mv)
    try:
        value = bf_longest_path(g, 0, g.node_count - 1, tol)
    except InfeasibleCircuit as exc:
        return MakespanResult.infeasible("oracle", Witness("node", exc.node + 1, n))
    return MakespanResult(True, value, "oracle", status="ok" if value > NEG_INF else "decoupled")


def oracle_makespan(inst: SldiInstance, tol: float = TOL) -> MakespanResult:
    return graph_makespan(assemble_Mv(inst), inst.n, tol)


def graph_trajectory(mv, n: int, tol: float = TOL) -> MakespanResult:
    """Makespan plus the earliest trajectory pinned at ``x_1(1) = 0``.

    Nodes reached from node 1 get their longest-path distance, which is the
    first column of the star.  The rest start from a value far below any
    path weight, so they settle consistently without moving the others.
    """
    g = mv if isinstance(mv, ConstraintGraph) else to_graph(mv)
    bad = has_positive_cycle(g, tol)
    if bad >= 0:
        return MakespanResult.infeasible("oracle", Witness("node", bad + 1, n))
    low = -(2.0 * float(np.abs(g.weight).sum()) + 1.0)
    dist = np.full(g.node_count, low)
    dist[0] = 0.0
    bellman_ford_max(g.node_count, g.src, g.dst, g.weight, dist, tol)
    reach = np.full(g.node_count, NEG_INF)
    reach[0] = 0.0
    bellman_ford_max(g.node_count, g.src, g.dst, g.weight, reach, tol)
    value = float(reach[-1])
    res = MakespanResult(True, value, "oracle", status="ok" if value > NEG_INF else "decoupled")
    res.trajectory = dist.reshape(-1, n)
    return res
