"""Linear-in-K makespan through the block-tridiagonal structure of ``M_v``.

With ``C_k*`` the per-step stars, define for each link ``i`` (steps i, i+1)::

    PP_i = C_i* P_i C_{i+1}*        II_i = C_{i+1}* I_i C_i*
    CC_{K-1} = PP_{K-1} II_{K-1}
    CC_i     = PP_i CC_{i+1}* II_i

The system is feasible iff every ``C_k`` and every ``CC_i`` has no positive
circuit, and the bottom-left block of ``M_v*`` is::

    MM = II_{K-1} CC_{K-1}* ... II_1 CC_1*

whose entry ``(n, 1)`` is the makespan.  ``CC`` is produced in one backward
pass that keeps the running star, so the whole computation is O(K n^3).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from sldiflow._kernels import mp_matmul
from sldiflow.maxplus import NEG_INF, TOL, InfeasibleCircuit, identity, kleene_star
from sldiflow.sldi import MakespanResult, SldiInstance, Witness, chain_blocks


class InfeasibleChain(Exception):
    def __init__(self, witness: Witness):
        self.witness = witness
        super().__init__(str(witness))


@dataclass(frozen=True, eq=False)
class BlockChain:
    C: list  # K matrices
    I: list  # K-1 matrices
    P: list  # K-1 matrices

    def __post_init__(self):
        if not self.C:
            raise ValueError("a chain needs at least one step")
        if len(self.I) != len(self.C) - 1 or len(self.P) != len(self.C) - 1:
            raise ValueError("a chain of K steps needs K-1 I and P blocks")

    @property
    def K(self) -> int:
        return len(self.C)

    @property
    def n(self) -> int:
        return self.C[0].shape[0]

    @classmethod
    def from_instance(cls, inst: SldiInstance) -> "BlockChain":
        return cls(*chain_blocks(inst))


@dataclass(frozen=True, eq=False)
class ReducedChain:
    Cstar: list
    PP: list
    II: list
    CC: list
    CCstar: list
    M: np.ndarray


def _star(a, tol, witness):
    try:
        return kleene_star(a, tol)
    except InfeasibleCircuit:
        raise InfeasibleChain(witness) from None


def _is_eps(a) -> bool:
    return not (a > NEG_INF).any()


def block_feasible(chain: BlockChain, tol: float = TOL) -> ReducedChain:
    """Reduce the chain; raises :class:`InfeasibleChain` naming the failing step or link."""
    K, n = chain.K, chain.n
    cstar = [_star(c, tol, Witness("step", k + 1)) for k, c in enumerate(chain.C)]
    pp, ii = [], []
    for i in range(K - 1):
        ii.append(mp_matmul(mp_matmul(cstar[i + 1], chain.I[i]), cstar[i]))
        # P = eps is the common case (no step-to-step upper bounds); skip the products
        if _is_eps(chain.P[i]):
            pp.append(np.full((n, n), NEG_INF))
        else:
            pp.append(mp_matmul(mp_matmul(cstar[i], chain.P[i]), cstar[i + 1]))

    cc = [None] * (K - 1)
    ccstar = [None] * (K - 1)
    inner = identity(n)  # CC_K* by convention
    for i in range(K - 2, -1, -1):
        if _is_eps(pp[i]):
            cc[i] = np.full((n, n), NEG_INF)
            inner = identity(n)
        else:
            cc[i] = mp_matmul(mp_matmul(pp[i], inner), ii[i])
            inner = _star(cc[i], tol, Witness("link", i + 1))
        ccstar[i] = inner

    if K == 1:
        m = cstar[0]
    else:
        m = ccstar[0]
        for i in range(K - 1):
            m = mp_matmul(ii[i], m)
            if i + 1 < K - 1:
                m = mp_matmul(ccstar[i + 1], m)
    return ReducedChain(cstar, pp, ii, cc, ccstar, m)


def block_makespan(chain: BlockChain | SldiInstance, tol: float = TOL) -> MakespanResult:
    """Makespan as entry (n, 1) of the bottom-left block, no trajectory."""
    if isinstance(chain, SldiInstance):
        chain = BlockChain.from_instance(chain)
    try:
        red = block_feasible(chain, tol)
    except InfeasibleChain as exc:
        return MakespanResult.infeasible("block", exc.witness)
    value = float(red.M[-1, 0])
    return MakespanResult(True, value, "block", status="ok" if value > NEG_INF else "decoupled")


def corner_blocks(chain: BlockChain, tol: float = TOL) -> tuple[np.ndarray, np.ndarray]:
    """The (1,1) and (K,1) blocks of ``M_v*``: ``C_1* CC_1* C_1*`` and ``MM``."""
    red = block_feasible(chain, tol)
    if chain.K == 1:
        return red.Cstar[0], red.M
    c1 = red.Cstar[0]
    return mp_matmul(mp_matmul(c1, red.CCstar[0]), c1), red.M
