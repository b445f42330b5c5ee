"""Max-plus and min-plus arithmetic on extended reals.

Scalars are plain floats in R u {-inf, +inf}; matrices are 2-D float64 numpy
arrays.  IEEE addition turns (-inf) + (+inf) into NaN, so every product
below resolves that case explicitly: it is -inf under the max-plus product
and +inf under the min-plus (dual) product.

Matrix layout follows the precedence-graph convention: entry ``A[i, j]`` is
the weight of the arc from node ``j`` to node ``i``.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from sldiflow import _kernels

NEG_INF = -math.inf
POS_INF = math.inf

#: default tolerance for comparisons on float data; integer data is exact.
TOL = 1e-9


class DimensionError(ValueError):
    pass


class InfeasibleCircuit(Exception):
    """A precedence graph has a circuit of positive weight.

    ``node`` is a 0-based index of a node lying on such a circuit.
    """

    def __init__(self, node: int, message: str | None = None):
        self.node = int(node)
        super().__init__(message or f"positive-weight circuit through node {self.node + 1}")


# -- scalars ---------------------------------------------------------------

def scalar_oplus(a: float, b: float) -> float:
    return max(a, b)


def scalar_dplus(a: float, b: float) -> float:
    return min(a, b)


def scalar_otimes(a: float, b: float) -> float:
    if a == NEG_INF or b == NEG_INF:
        return NEG_INF
    return a + b


def scalar_dtimes(a: float, b: float) -> float:
    if a == POS_INF or b == POS_INF:
        return POS_INF
    return a + b


# -- construction and validation ---------------------------------------------

def as_matrix(a) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1) if arr.size else arr.reshape(0, 0)
    if arr.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {arr.shape}")
    if np.isnan(arr).any():
        raise ValueError("NaN is not an extended real")
    return arr


def eps(m: int, n: int | None = None) -> np.ndarray:
    """The all -inf matrix, neutral for (+)."""
    return np.full((m, m if n is None else n), NEG_INF)


def top(m: int, n: int | None = None) -> np.ndarray:
    """The all +inf matrix, neutral for the dual sum."""
    return np.full((m, m if n is None else n), POS_INF)


def identity(n: int) -> np.ndarray:
    e = np.full((n, n), NEG_INF)
    np.fill_diagonal(e, 0.0)
    return e


def check_rmax(a: np.ndarray, what: str = "matrix") -> None:
    if np.isposinf(a).any():
        i, j = np.argwhere(np.isposinf(a))[0]
        raise ValueError(f"{what} must lie in R_max but has +inf at ({i + 1}, {j + 1})")


def check_rmin(a: np.ndarray, what: str = "matrix") -> None:
    if np.isneginf(a).any():
        i, j = np.argwhere(np.isneginf(a))[0]
        raise ValueError(f"{what} must lie in R_min but has -inf at ({i + 1}, {j + 1})")


def _same_shape(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"shape mismatch: {a.shape} vs {b.shape}")


def _square(a: np.ndarray) -> int:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")
    return a.shape[0]


# -- matrix operations -----------------------------------------------------

def mat_oplus(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    _same_shape(a, b)
    return np.maximum(a, b)


def mat_dplus(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    _same_shape(a, b)
    return np.minimum(a, b)


def mat_otimes(a, c) -> np.ndarray:
    """Max-plus product: ``(A (x) C)[i, h] = max_k A[i, k] + C[k, h]``."""
    a, c = np.asarray(a, dtype=float), np.asarray(c, dtype=float)
    if a.ndim != 2 or c.ndim != 2 or a.shape[1] != c.shape[0]:
        raise DimensionError(f"cannot multiply {a.shape} by {c.shape}")
    return _kernels.mp_matmul(np.ascontiguousarray(a), np.ascontiguousarray(c))


def mat_dtimes(a, c) -> np.ndarray:
    """Min-plus product, +inf absorbing; computed as -((-A) (x) (-C))."""
    a, c = np.asarray(a, dtype=float), np.asarray(c, dtype=float)
    return -mat_otimes(-a, -c)


def mat_power(a, r: int) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    out = identity(_square(a))
    for _ in range(r):
        out = mat_otimes(out, a)
    return out


def sharp(a) -> np.ndarray:
    """Conjugate ``-A^T``; +inf and -inf swap under negation."""
    return -np.asarray(a, dtype=float).T


def preceq(a, b, tol: float = 0.0) -> bool:
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    _same_shape(a, b)
    return bool(np.all(a <= b + tol))


def kleene_star(a, tol: float = TOL) -> np.ndarray:
    """``A* = E (+) A (+) A^2 (+) ...`` by a tropical Floyd-Warshall sweep.

    ``A*[i, j]`` is the maximum weight of a path from ``j`` to ``i``.  Raises
    :class:`InfeasibleCircuit` when a diagonal entry ends up above ``tol``.
    """
    a = np.asarray(a, dtype=float)
    n = _square(a)
    check_rmax(a)
    d = np.maximum(a, identity(n))
    _kernels.closure_inplace(d)
    diag = np.diagonal(d)
    bad = np.flatnonzero(~(diag <= tol))
    if bad.size:
        raise InfeasibleCircuit(bad[0])
    return d


def in_gamma(a, tol: float = TOL) -> bool:
    """True iff the precedence graph of ``a`` has no positive-weight circuit."""
    try:
        kleene_star(a, tol)
    except InfeasibleCircuit:
        return False
    return True


def assemble(blocks: Sequence[Sequence[np.ndarray]]) -> np.ndarray:
    return np.block([[np.asarray(b, dtype=float) for b in row] for row in blocks])


def block_star(a, b, c, d, tol: float = TOL):
    """Star of ``[[a, b], [c, d]]`` assembled from stars of its blocks.

    Returns the four blocks ``(top_left, top_right, bottom_left, bottom_right)``.
    """
    a, b, c, d = (np.asarray(x, dtype=float) for x in (a, b, c, d))
    n1, n2 = _square(a), _square(d)
    if b.shape != (n1, n2) or c.shape != (n2, n1):
        raise DimensionError("off-diagonal blocks do not match the diagonal ones")
    mul = mat_otimes
    a_s = kleene_star(a, tol)
    d_s = kleene_star(d, tol)
    # a* b d*  and  d* c a*
    abd = mul(mul(a_s, b), d_s)
    dca = mul(mul(d_s, c), a_s)
    left = kleene_star(mul(abd, mul(c, a_s)), tol)   # (a* b d* c a*)*
    right = kleene_star(mul(dca, mul(b, d_s)), tol)  # (d* c a* b d*)*
    return (
        mul(mul(a_s, left), a_s),
        mul(abd, right),
        mul(dca, left),
        mul(mul(d_s, right), d_s),
    )


# -- text literals -----------------------------------------------------------

_TOKENS = {"-inf": NEG_INF, "+inf": POS_INF, "inf": POS_INF}


def parse_matrix(text: str) -> np.ndarray:
    """Parse ``"0,-inf;3,0"``: rows split on ``;``, entries on ``,``."""
    text = text.strip()
    if not text:
        raise ValueError("empty matrix literal")
    rows = []
    for r, row in enumerate(text.split(";"), start=1):
        entries = []
        for tok in row.split(","):
            tok = tok.strip().lower()
            if tok in _TOKENS:
                entries.append(_TOKENS[tok])
                continue
            try:
                val = float(tok)
            except ValueError:
                raise ValueError(f"row {r}: bad matrix entry {tok!r}") from None
            if not math.isfinite(val):
                raise ValueError(f"row {r}: bad matrix entry {tok!r}")
            entries.append(val)
        rows.append(entries)
    if len({len(r) for r in rows}) != 1:
        raise DimensionError("matrix literal rows have different lengths")
    return np.array(rows, dtype=np.float64)


def _fmt(x: float) -> str:
    if x == NEG_INF:
        return "-inf"
    if x == POS_INF:
        return "+inf"
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def format_matrix(a) -> str:
    a = np.asarray(a, dtype=float)
    return ";".join(",".join(_fmt(x) for x in row) for row in a)
