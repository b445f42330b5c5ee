"""Random SLDI instances with integer data, for cross-checking the solvers.

Instances are built around a hidden integer trajectory, so every window is
satisfied by construction.  Infeasible ones get one extra upper bound that is
tighter than a path the other constraints already force.
"""

from __future__ import annotations

import numpy as np

from sldiflow.maxplus import NEG_INF, POS_INF, InfeasibleCircuit, kleene_star
from sldiflow.sldi import ModeSpec, SldiInstance, assemble_Mv


def _windows(rng, diffs_lo, diffs_hi, p_lo, p_hi, forced):
    """Lower/upper bound matrices bracketing the observed differences."""
    n = diffs_lo.shape[0]
    lo = np.full((n, n), NEG_INF)
    hi = np.full((n, n), POS_INF)
    seen = np.isfinite(diffs_lo)
    take_lo = seen & ((rng.random((n, n)) < p_lo) | forced)
    take_hi = seen & (rng.random((n, n)) < p_hi)
    lo[take_lo] = diffs_lo[take_lo] - rng.integers(0, 4, size=(n, n))[take_lo]
    hi[take_hi] = diffs_hi[take_hi] + rng.integers(0, 4, size=(n, n))[take_hi]
    return lo, hi


def random_instance(rng, n_max: int = 6, k_max: int = 12, infeasible: bool = False,
                    p_lo: float = 0.3, p_hi: float = 0.15) -> SldiInstance:
    """A feasible instance, or with ``infeasible=True`` one with a positive circuit.

    Consecutive events of a step and equal events of consecutive steps always
    carry a lower bound, so the makespan is finite when feasible.
    """
    while True:
        inst = _draw(rng, n_max, k_max, infeasible, p_lo, p_hi)
        if inst is not None:
            return inst


def _draw(rng, n_max, k_max, infeasible, p_lo, p_hi, tries=50):
    n = int(rng.integers(1, n_max + 1))
    K = int(rng.integers(1, k_max + 1))
    labels = [f"m{i}" for i in range(int(rng.integers(1, 4)))]
    seq = [labels[int(rng.integers(len(labels)))] for _ in range(K)]
    xs = np.cumsum(rng.integers(0, 6, size=(K, n)), axis=None).reshape(K, n)
    xs = xs - xs[0, 0] + rng.integers(-3, 4, size=(K, n))
    xs[0, 0] = 0

    chain_within = np.full((n, n), False)
    for i in range(n - 1):
        chain_within[i + 1, i] = True
    same_event = np.eye(n, dtype=bool)

    modes = {}
    for lab in labels:
        steps = [k for k in range(K) if seq[k] == lab]
        w_lo = np.full((n, n), np.inf)
        w_hi = np.full((n, n), -np.inf)
        b_lo = np.full((n, n), np.inf)
        b_hi = np.full((n, n), -np.inf)
        for k in steps:
            d = xs[k][:, None] - xs[k][None, :]
            w_lo, w_hi = np.minimum(w_lo, d), np.maximum(w_hi, d)
            if k + 1 < K:
                d = xs[k + 1][:, None] - xs[k][None, :]
                b_lo, b_hi = np.minimum(b_lo, d), np.maximum(b_hi, d)
        w_lo[np.isposinf(w_lo)] = NEG_INF
        b_lo[np.isposinf(b_lo)] = NEG_INF
        a0, b0 = _windows(rng, w_lo, w_hi, p_lo, p_hi, chain_within)
        np.fill_diagonal(a0, NEG_INF)
        np.fill_diagonal(b0, POS_INF)
        a1, b1 = _windows(rng, b_lo, b_hi, p_lo, p_hi, same_event)
        modes[lab] = [a0, a1, b0, b1]

    def build():
        return SldiInstance({lab: ModeSpec(lab, *m) for lab, m in modes.items()}, tuple(seq))

    inst = build()
    if not infeasible:
        return inst
    star = kleene_star(assemble_Mv(inst))
    for _ in range(tries):
        k = int(rng.integers(K))
        lab = seq[k]
        between = K > 1 and k + 1 < K and rng.random() < 0.5
        i, j = (int(v) for v in rng.integers(n, size=2))
        if not between and i == j:
            continue
        row = (k + 1) * n + i if between else k * n + i
        forced = star[row, k * n + j]  # longest path forcing x_i - x_j from below
        lo, hi = (modes[lab][1], modes[lab][3]) if between else (modes[lab][0], modes[lab][2])
        if not np.isfinite(forced) or lo[i, j] > forced - 1:
            continue
        hi[i, j] = min(hi[i, j], forced - 1)
        return build()
    return None


def random_batch(rng, count: int, infeasible_share: float = 0.3, **kw) -> list[tuple[SldiInstance, bool]]:
    """``count`` instances with the requested share built to be infeasible.

    Returns pairs ``(instance, intended_infeasible)``.
    """
    out = []
    for idx in range(count):
        bad = idx < round(count * infeasible_share)
        out.append((random_instance(rng, infeasible=bad, **kw), bad))
    order = rng.permutation(count)
    return [out[i] for i in order]


def is_feasible(inst: SldiInstance) -> bool:
    try:
        kleene_star(assemble_Mv(inst))
    except InfeasibleCircuit:
        return False
    return True
