"""Switched max-plus linear-dual inequalities over a finite mode sequence.

For a sequence ``v = (v_1, ..., v_K)`` the trajectory ``x(1), ..., x(K)`` in
R^n must satisfy, with 1-based steps ``k``::

    A0[v_k] (x) x(k)   <= x(k)     <= B0[v_k] (x)' x(k)
    A1[v_k] (x) x(k)   <= x(k+1)   <= B1[v_k] (x)' x(k)      (k < K)

i.e. ``A0[i, j] <= x_i(k) - x_j(k) <= B0[i, j]`` and the analogous
step-to-step windows.  Moving the upper bounds to the max-plus side through
the conjugate gives one inequality ``M_v (x) x~ <= x~`` on the stacked vector,
which is what the solvers here and in :mod:`sldiflow.block` work on.

Step and event indices in witnesses and violation reports are 1-based.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from sldiflow.maxplus import (
    NEG_INF,
    TOL,
    InfeasibleCircuit,
    as_matrix,
    check_rmax,
    check_rmin,
    eps,
    format_matrix,
    kleene_star,
    parse_matrix,
    sharp,
)


class ModeSpecError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class ModeSpec:
    """Constraint matrices of one mode.

    ``a0``/``a1`` hold lower bounds (R_max), ``b0``/``b1`` upper bounds (R_min).
    """

    label: str
    a0: np.ndarray
    a1: np.ndarray
    b0: np.ndarray
    b1: np.ndarray

    def __post_init__(self):
        for name in ("a0", "a1", "b0", "b1"):
            arr = as_matrix(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        self.validate()

    @property
    def n(self) -> int:
        return self.a0.shape[0]

    def validate(self) -> None:
        n = self.a0.shape[0]
        for name in ("a0", "a1", "b0", "b1"):
            if getattr(self, name).shape != (n, n):
                raise ModeSpecError(
                    f"mode {self.label!r}: {name} has shape {getattr(self, name).shape}, expected ({n}, {n})"
                )
        try:
            check_rmax(self.a0, f"mode {self.label!r} a0")
            check_rmax(self.a1, f"mode {self.label!r} a1")
            check_rmin(self.b0, f"mode {self.label!r} b0")
            check_rmin(self.b1, f"mode {self.label!r} b1")
        except ValueError as exc:
            raise ModeSpecError(str(exc)) from None
        for lo, hi, tag in ((self.a0, self.b0, "0"), (self.a1, self.b1, "1")):
            empty = np.argwhere(lo > hi + TOL)
            if empty.size:
                i, j = empty[0]
                raise ModeSpecError(
                    f"mode {self.label!r}: empty window at ({i + 1}, {j + 1}): "
                    f"a{tag}={lo[i, j]:g} > b{tag}={hi[i, j]:g}"
                )

    def to_dict(self) -> dict:
        return {k: format_matrix(getattr(self, k)) for k in ("a0", "a1", "b0", "b1")}


@dataclass(frozen=True, eq=False)
class SldiInstance:
    modes: Mapping[str, ModeSpec]
    sequence: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "sequence", tuple(self.sequence))
        object.__setattr__(self, "modes", dict(self.modes))
        if not self.sequence:
            raise ModeSpecError("mode sequence must be non-empty")
        missing = sorted(set(self.sequence) - set(self.modes))
        if missing:
            raise ModeSpecError(f"sequence uses undefined modes: {', '.join(missing)}")
        dims = {m.n for m in self.modes.values()}
        if len(dims) != 1:
            raise ModeSpecError(f"modes disagree on the event dimension: {sorted(dims)}")

    @property
    def n(self) -> int:
        return next(iter(self.modes.values())).n

    @property
    def K(self) -> int:
        return len(self.sequence)

    def mode_at(self, k: int) -> ModeSpec:
        """Mode of 1-based step ``k``."""
        return self.modes[self.sequence[k - 1]]

    # -- documents -----------------------------------------------------------

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SldiInstance":
        try:
            raw_modes = doc["modes"]
            sequence = doc["sequence"]
        except KeyError as exc:
            raise ModeSpecError(f"instance document lacks field {exc.args[0]!r}") from None
        modes = {}
        for label, mats in raw_modes.items():
            try:
                parsed = {k: parse_matrix(mats[k]) for k in ("a0", "a1", "b0", "b1")}
            except KeyError as exc:
                raise ModeSpecError(f"mode {label!r} lacks matrix {exc.args[0]!r}") from None
            except ValueError as exc:
                raise ModeSpecError(f"mode {label!r}: {exc}") from None
            modes[label] = ModeSpec(label, **parsed)
        inst = cls(modes, tuple(sequence))
        if "n" in doc and int(doc["n"]) != inst.n:
            raise ModeSpecError(f"declared n={doc['n']} but matrices are {inst.n}x{inst.n}")
        return inst

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "modes": {label: m.to_dict() for label, m in self.modes.items()},
            "sequence": list(self.sequence),
        }

    @classmethod
    def load(cls, path) -> "SldiInstance":
        return cls.from_dict(json.loads(Path(path).read_text()))


def check_permutation_flow_shop(inst: SldiInstance) -> list[str]:
    """Entries that break ``x_{i+1}(k) >= x_i(k)`` and ``x_i(k+1) >= x_i(k)``."""
    problems = []
    for label in dict.fromkeys(inst.sequence):
        m = inst.modes[label]
        for i in range(m.n - 1):
            if not m.a0[i + 1, i] >= 0:
                problems.append(f"mode {label!r}: a0[{i + 2},{i + 1}] = {m.a0[i + 1, i]:g} < 0")
        for i in range(m.n):
            if not m.a1[i, i] >= 0:
                problems.append(f"mode {label!r}: a1[{i + 1},{i + 1}] = {m.a1[i, i]:g} < 0")
    return problems


# -- results -------------------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    """Where infeasibility was detected.

    ``kind`` is ``"node"`` (1-based node of the stacked graph on a positive
    circuit), ``"step"`` (1-based k with a bad diagonal block C_k) or
    ``"link"`` (1-based i with a bad reduced block between steps i and i+1).
    ``segment`` names a product type when the step or link is counted within
    that type's own run of products.
    """

    kind: str
    index: int
    n: int | None = None
    segment: int | None = None

    def __str__(self) -> str:
        if self.kind == "node" and self.n:
            k, e = divmod(self.index - 1, self.n)
            text = f"positive circuit through node {self.index} (step {k + 1}, event {e + 1})"
        elif self.kind == "step":
            text = f"positive circuit inside step {self.index}"
        elif self.kind == "link":
            text = f"positive circuit across link {self.index} -> {self.index + 1}"
        else:
            text = f"{self.kind} {self.index}"
        if self.segment is not None:
            text += f" among the products of type {self.segment}"
        return text


@dataclass
class MakespanResult:
    feasible: bool
    makespan: float
    solver: str
    status: str = "ok"  # ok | decoupled | infeasible | degenerate
    trajectory: np.ndarray | None = None  # shape (K, n)
    witness: Witness | None = None
    timings: dict = field(default_factory=dict)

    @classmethod
    def infeasible(cls, solver: str, witness: Witness) -> "MakespanResult":
        return cls(False, math.inf, solver, status="infeasible", witness=witness)


# -- reduction -----------------------------------------------------------------

def reduce_mode(mode: ModeSpec) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(C, I, P) = (a0 (+) b0#, a1, b1#)``, all in R_max."""
    c = np.maximum(mode.a0, sharp(mode.b0))
    return c, np.array(mode.a1), np.ascontiguousarray(sharp(mode.b1))


def chain_blocks(inst: SldiInstance):
    """Per-step blocks ``(C[0..K-1], I[0..K-2], P[0..K-2])`` of the stacked system."""
    reduced = {label: reduce_mode(inst.modes[label]) for label in dict.fromkeys(inst.sequence)}
    cs = [reduced[lab][0] for lab in inst.sequence]
    is_ = [reduced[lab][1] for lab in inst.sequence[:-1]]
    ps = [reduced[lab][2] for lab in inst.sequence[:-1]]
    return cs, is_, ps


def assemble_blocks(cs, is_, ps) -> np.ndarray:
    """Block-tridiagonal matrix: C on the diagonal, I below, P above."""
    n = cs[0].shape[0]
    K = len(cs)
    m = eps(K * n)
    for k, c in enumerate(cs):
        m[k * n:(k + 1) * n, k * n:(k + 1) * n] = c
    for k in range(K - 1):
        m[(k + 1) * n:(k + 2) * n, k * n:(k + 1) * n] = is_[k]
        m[k * n:(k + 1) * n, (k + 1) * n:(k + 2) * n] = ps[k]
    return m


def assemble_Mv(inst: SldiInstance) -> np.ndarray:
    return assemble_blocks(*chain_blocks(inst))


def consistent_vector(star: np.ndarray, col: int = 0) -> np.ndarray:
    """A finite solution of ``A x <= x`` agreeing with column ``col`` of ``A*``.

    Where the column is finite it is returned unchanged.  Nodes the column
    does not reach get values from ``A* (x) u`` with ``u`` very negative off
    ``col``, which keeps ``A x <= x`` and leaves reached entries intact.
    """
    x = np.array(star[:, col])
    if np.isfinite(x).all():
        return x
    finite = star[np.isfinite(star)]
    low = -(2.0 * float(np.abs(finite).sum()) + 1.0)
    u = np.full(star.shape[0], low)
    u[col] = 0.0
    return (star + u[None, :]).max(axis=1)


def dense_from_blocks(cs, is_, ps, want_trajectory: bool = False, tol: float = TOL) -> MakespanResult:
    n, K = cs[0].shape[0], len(cs)
    m = assemble_blocks(cs, is_, ps)
    try:
        star = kleene_star(m, tol)
    except InfeasibleCircuit as exc:
        return MakespanResult.infeasible("dense", Witness("node", exc.node + 1, n))
    value = float(star[K * n - 1, 0])
    res = MakespanResult(True, value, "dense", status="ok" if value > NEG_INF else "decoupled")
    if want_trajectory:
        res.trajectory = consistent_vector(star).reshape(K, n)
    return res


def dense_makespan(inst: SldiInstance, want_trajectory: bool = False, tol: float = TOL) -> MakespanResult:
    """Makespan ``x_n(K) - x_1(1)`` from the star of the full stacked matrix.

    Costs O((K n)^3).  When feasible the optional trajectory is the first
    column of the star (so ``x_1(1) = 0``), split into ``K`` rows.
    """
    return dense_from_blocks(*chain_blocks(inst), want_trajectory=want_trajectory, tol=tol)


# -- trajectory check ----------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    k: int
    i: int
    j: int
    side: str  # "lower" | "upper"
    scope: str  # "within": x_i(k) - x_j(k); "between": x_i(k+1) - x_j(k)
    bound: float
    slack: float

    def __str__(self) -> str:
        lhs = f"x{self.i}({self.k}) - x{self.j}({self.k})"
        if self.scope == "between":
            lhs = f"x{self.i}({self.k + 1}) - x{self.j}({self.k})"
        op = ">=" if self.side == "lower" else "<="
        return f"{lhs} {op} {self.bound:g} violated by {-self.slack:g}"


def _window_violations(diff, lo, hi, k, scope, tol):
    out = []
    with np.errstate(invalid="ignore"):
        slack_lo = diff - lo
        slack_hi = hi - diff
    for i, j in np.argwhere(np.isfinite(lo) & (slack_lo < -tol)):
        out.append(Violation(k, i + 1, j + 1, "lower", scope, float(lo[i, j]), float(slack_lo[i, j])))
    for i, j in np.argwhere(np.isfinite(hi) & (slack_hi < -tol)):
        out.append(Violation(k, i + 1, j + 1, "upper", scope, float(hi[i, j]), float(slack_hi[i, j])))
    return out


def check_trajectory(inst: SldiInstance, xs: Sequence[Sequence[float]], tol: float = TOL) -> list[Violation]:
    """Every window of the system that ``xs`` (K rows of n reals) breaks."""
    xs = np.asarray(xs, dtype=float)
    if xs.shape != (inst.K, inst.n):
        raise ValueError(f"trajectory has shape {xs.shape}, expected {(inst.K, inst.n)}")
    if not np.isfinite(xs).all():
        raise ValueError("trajectory entries must be finite")
    found = []
    for k in range(inst.K):
        mode = inst.mode_at(k + 1)
        x = xs[k]
        found += _window_violations(x[:, None] - x[None, :], mode.a0, mode.b0, k + 1, "within", tol)
        if k + 1 < inst.K:
            diff = xs[k + 1][:, None] - x[None, :]
            found += _window_violations(diff, mode.a1, mode.b1, k + 1, "between", tol)
    return found
