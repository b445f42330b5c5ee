"""Exhaustive search over type orders, with a per-type factorization.

A type change uses mode ``c_j``, whose step-to-step upper bounds are all
+inf, so its ``P`` block is -inf everywhere.  That zeroes the reduced block
``PP`` on the link, the backward recursion for ``CC`` restarts there, and the
bottom-left block of ``M_v*`` splits into pieces that depend only on the type
and on the ordered pair of types at each boundary::

    MM(w) = S[j_J] X[j_{J-1} -> j_J] ... X[j_1 -> j_2] S[j_1]

``S[j]`` is the block-solver product for the ``Q_j`` products of type ``j``
alone, ``X[j -> j'] = C*(j') I(c_j) C*(j)``.  Both are computed once per
configuration; afterwards one schedule costs J matrix-vector products, no
matter how many products there are.
"""

from __future__ import annotations

import itertools
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from sldiflow._kernels import mp_matmul, mp_matvec
from sldiflow.bakery import BakeryConfig, BakeryModel, normalize_schedule
from sldiflow.block import InfeasibleChain, block_feasible
from sldiflow.maxplus import NEG_INF, POS_INF, TOL
from sldiflow.sldi import MakespanResult, Witness

METHODS = ("fast", "block", "dense", "oracle")
WORKERS_ENV = "SLDIFLOW_WORKERS"


class LimitExceeded(RuntimeError):
    pass


@dataclass
class SegmentCache:
    cfg: BakeryConfig
    segments: dict    # type -> S_j
    boundaries: dict  # (j, j') -> X_{j -> j'}
    steps: dict       # (j, j') -> S_{j'} X_{j -> j'}
    n: int


def segment_sequence(cfg: BakeryConfig, j: int) -> tuple:
    """Mode labels for the products of type ``j`` taken on their own."""
    q, c = cfg.quantities[j - 1], cfg.capacities[j - 1]
    seq = [f"b{j}" if (r + 1) % c == 0 else f"a{j}" for r in range(q - 1)]
    return tuple(seq) + (f"a{j}",)


def build_cache(cfg: BakeryConfig, model: BakeryModel | None = None) -> SegmentCache:
    """Per-type segment products and per-pair boundary matrices.

    Raises :class:`InfeasibleChain` if some type is infeasible on its own,
    which makes every schedule infeasible.
    """
    model = model or BakeryModel(cfg)
    segments, cstars = {}, {}
    for j in cfg.active_types:
        chain = model.chain_of(segment_sequence(cfg, j))
        try:
            red = block_feasible(chain)
        except InfeasibleChain as exc:
            raise InfeasibleChain(Witness(exc.witness.kind, exc.witness.index, segment=j)) from None
        segments[j] = red.M
        cstars[j] = red.Cstar[0]
    boundaries, steps = {}, {}
    for j, jn in itertools.permutations(cfg.active_types, 2):
        x = mp_matmul(mp_matmul(cstars[jn], model.reduced[f"c{j}"][1]), cstars[j])
        boundaries[j, jn] = x
        steps[j, jn] = mp_matmul(segments[jn], x)
    n = next(iter(model.reduced.values()))[0].shape[0]
    return SegmentCache(cfg, segments, boundaries, steps, n)


def cached_product(cache: SegmentCache, w) -> np.ndarray:
    """The full bottom-left block ``MM(w)`` assembled from the cache."""
    w = normalize_schedule(cache.cfg, w)
    m = cache.segments[w[0]]
    for prev, cur in zip(w, w[1:]):
        m = mp_matmul(cache.steps[prev, cur], m)
    return m


def fast_makespan(cache: SegmentCache, w) -> MakespanResult:
    w = normalize_schedule(cache.cfg, w)
    if not w:
        return MakespanResult(True, 0.0, "fast", status="degenerate")
    v = cache.segments[w[0]][:, 0]
    for prev, cur in zip(w, w[1:]):
        v = mp_matvec(cache.steps[prev, cur], v)
    value = float(v[-1])
    return MakespanResult(True, value, "fast", status="ok" if value > NEG_INF else "decoupled")


# -- search --------------------------------------------------------------------

@dataclass
class SearchResult:
    method: str
    best_schedule: tuple | None
    best_makespan: float
    evaluated: int
    feasible: bool = True
    status: str = "ok"
    witness: Witness | None = None
    per_schedule: list | None = None
    timing: dict = field(default_factory=dict)


class _Tracker:
    """Keeps the lexicographically first minimizer and enforces the budget."""

    def __init__(self, total, budget, keep_table, on_row, tol):
        self.total = total
        self.budget = budget
        self.table = [] if keep_table else None
        self.on_row = on_row
        self.tol = tol
        self.best = POS_INF
        self.best_w = None
        self.count = 0
        self.t0 = time.perf_counter()

    def add(self, w, value):
        self.count += 1
        if value < self.best - self.tol:
            self.best, self.best_w = value, w
        if self.table is not None:
            self.table.append((w, value))
        if self.on_row is not None:
            self.on_row(w, value)
        if self.budget is not None and self.count & 0xFF in (0, 16):
            elapsed = time.perf_counter() - self.t0
            if elapsed > self.budget:
                raise LimitExceeded(f"search budget of {self.budget:g} s exhausted after {self.count} schedules")
            if self.count >= 16:
                eta = elapsed / self.count * self.total
                if eta > self.budget * 1.05:
                    raise LimitExceeded(
                        f"{self.total} schedules would take about {eta:.0f} s, over the {self.budget:g} s budget"
                    )


def _fast_dfs(cache: SegmentCache, first: int, rest: tuple, tracker: _Tracker):
    """All schedules starting with ``first``, sharing work between common prefixes."""
    n1 = cache.n - 1
    steps = cache.steps

    def walk(prefix, last, v, remaining):
        if not remaining:
            tracker.add(prefix, float(v[n1]))
            return
        for idx, j in enumerate(remaining):
            walk(prefix + (j,), j, mp_matvec(steps[last, j], v), remaining[:idx] + remaining[idx + 1:])

    walk((first,), first, np.ascontiguousarray(cache.segments[first][:, 0]), rest)


def _search_partition(cfg, method, first, budget, keep_table, tol):
    """Search schedules beginning with type ``first``; runs in worker processes too."""
    active = cfg.active_types
    rest = tuple(j for j in active if j != first)
    tracker = _Tracker(math.factorial(len(rest)), budget, keep_table, None, tol)
    if method == "fast":
        _fast_dfs(build_cache(cfg), first, rest, tracker)
    else:
        model = BakeryModel(cfg)
        for tail in itertools.permutations(rest):
            w = (first,) + tail
            tracker.add(w, model.makespan(w, method).makespan)
    return tracker.best_w, tracker.best, tracker.count, tracker.table


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def exhaustive_search(
    cfg: BakeryConfig,
    method: str = "fast",
    max_types: int = 10,
    budget_seconds: float | None = None,
    keep_table: bool = False,
    on_row: Callable | None = None,
    workers: int | None = None,
    tol: float = TOL,
) -> SearchResult:
    """Minimum makespan over every order of the types with nonzero demand.

    Ties are broken towards the lexicographically smallest schedule, so the
    answer does not depend on ``method`` or on how work is split across
    ``workers``.  Raises :class:`LimitExceeded` if there are more than
    ``max_types`` active types or the search would overrun ``budget_seconds``.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    cfg.check()
    active = cfg.active_types
    if not active:
        return SearchResult(method, (), 0.0, 0, status="degenerate")
    if len(active) > max_types:
        raise LimitExceeded(f"{len(active)} product types exceed the limit of {max_types} ({math.factorial(len(active))} schedules)")
    workers = default_workers() if workers is None else workers
    t0 = time.perf_counter()
    timing = {}

    if method == "fast":
        try:
            cache = build_cache(cfg)
        except InfeasibleChain as exc:
            return SearchResult(method, None, POS_INF, 0, feasible=False, status="infeasible",
                                witness=exc.witness, timing={"cache": time.perf_counter() - t0})
        timing["cache"] = time.perf_counter() - t0

    t1 = time.perf_counter()
    if workers > 1 and len(active) > 1 and on_row is None:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_search_partition, cfg, method, first, budget_seconds, keep_table, tol)
                       for first in active]
            parts = [f.result() for f in futures]
        best_w, best, count, table = None, POS_INF, 0, [] if keep_table else None
        for w, value, c, rows in parts:  # partitions arrive in lexicographic order
            count += c
            if value < best - tol:
                best, best_w = value, w
            if keep_table:
                table.extend(rows)
    else:
        tracker = _Tracker(math.factorial(len(active)), budget_seconds, keep_table, on_row, tol)
        if method == "fast":
            for first in active:
                _fast_dfs(cache, first, tuple(j for j in active if j != first), tracker)
        else:
            model = BakeryModel(cfg)
            for w in itertools.permutations(active):
                tracker.add(w, model.makespan(w, method).makespan)
        best_w, best, count, table = tracker.best_w, tracker.best, tracker.count, tracker.table
    timing["search"] = time.perf_counter() - t1

    feasible = best < POS_INF
    return SearchResult(method, best_w, best, count, feasible=feasible,
                        status="ok" if feasible else "infeasible", per_schedule=table, timing=timing)
