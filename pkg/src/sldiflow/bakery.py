"""The seven-stage bakery flow shop as a switched system.

Each product ``k`` carries 14 events, entry and exit of every machine::

    x(k) = [xi_1, xi'_1, xi_2, xi'_2, ..., xi_7, xi'_7]

(0-based index ``2m - 2`` for entry of machine ``m``, ``2m - 1`` for exit).
Machine 1 mixes whole batches, machines 2-5 handle one product at a time with
no waiting, machines 6-7 (proofer, oven) take a batch at once.

For each product type ``j`` there are three modes, picked by what happens
between product ``k`` and ``k+1``: ``a_j`` same batch, ``b_j`` new batch of the
same type, ``c_j`` switch to another type (mixer cleaning).  Type ids are
1-based everywhere in this module.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from sldiflow.block import BlockChain, block_makespan
from sldiflow.maxplus import NEG_INF, POS_INF, TOL, eps, top
from sldiflow.oracle import chain_graph, graph_makespan, graph_trajectory
from sldiflow.sldi import (
    MakespanResult,
    ModeSpec,
    SldiInstance,
    dense_from_blocks,
    reduce_mode,
)

MACHINES = ("mixing", "dividing", "rounding", "pre-proofing", "rolling", "proofing", "baking")
N_MACHINES = len(MACHINES)
N_EVENTS = 2 * N_MACHINES
NO_WAIT = range(2, 6)        # machines whose processing time is exact
RIGID_LINKS = range(1, 5)    # transports fixed at zero
BATCH_MACHINES = (6, 7)
TRAJECTORY_METHODS = ("dense", "oracle")


class ConfigError(ValueError):
    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


def start(m: int) -> int:
    """0-based event index of entering machine ``m``."""
    return 2 * m - 2


def finish(m: int) -> int:
    return 2 * m - 1


def _window(lo, hi):
    lo = float(lo)
    hi = POS_INF if hi is None else float(hi)
    return lo, hi


@dataclass
class BakeryConfig:
    """Shop parameters plus one day's demand.

    ``proc_min``/``proc_max`` have shape (7, J); ``transport_min``/``transport_max``
    have length 6 (link ``m`` goes from machine ``m`` to ``m + 1``).  Times are
    in minutes.
    """

    quantities: tuple
    capacities: tuple
    proc_min: np.ndarray
    proc_max: np.ndarray
    transport_min: np.ndarray
    transport_max: np.ndarray
    clean_time: float
    type_names: tuple = ()

    def __post_init__(self):
        self.quantities = tuple(int(q) for q in self.quantities)
        self.capacities = tuple(int(c) for c in self.capacities)
        self.proc_min = np.asarray(self.proc_min, dtype=float)
        self.proc_max = np.asarray(self.proc_max, dtype=float)
        self.transport_min = np.asarray(self.transport_min, dtype=float)
        self.transport_max = np.asarray(self.transport_max, dtype=float)
        self.clean_time = float(self.clean_time)
        if not self.type_names:
            self.type_names = tuple(f"type{j}" for j in range(1, self.J + 1))
        self.type_names = tuple(self.type_names)

    @property
    def J(self) -> int:
        return len(self.quantities)

    @property
    def Q(self) -> int:
        return sum(self.quantities)

    def batch_count(self, j: int) -> int:
        q, c = self.quantities[j - 1], self.capacities[j - 1]
        return -(-q // c)

    @property
    def B(self) -> int:
        return sum(self.batch_count(j) for j in range(1, self.J + 1))

    @property
    def active_types(self) -> tuple:
        return tuple(j for j in range(1, self.J + 1) if self.quantities[j - 1] > 0)

    def validate(self) -> list[str]:
        """Human-readable list of every invariant the parameters break."""
        J = self.J
        out = []
        if len(self.capacities) != J:
            out.append(f"{len(self.capacities)} capacities for {J} types")
        if len(self.type_names) != J:
            out.append(f"{len(self.type_names)} type names for {J} types")
        for name, arr, shape in (
            ("processing minima", self.proc_min, (N_MACHINES, J)),
            ("processing maxima", self.proc_max, (N_MACHINES, J)),
            ("transport minima", self.transport_min, (N_MACHINES - 1,)),
            ("transport maxima", self.transport_max, (N_MACHINES - 1,)),
        ):
            if arr.shape != shape:
                out.append(f"{name} have shape {arr.shape}, expected {shape}")
        if out:
            return out
        for j in range(1, J + 1):
            if self.quantities[j - 1] < 0:
                out.append(f"type {j}: negative quantity {self.quantities[j - 1]}")
            if self.capacities[j - 1] < 1:
                out.append(f"type {j}: capacity {self.capacities[j - 1]} < 1")
        for m in range(1, N_MACHINES + 1):
            for j in range(1, J + 1):
                lo, hi = self.proc_min[m - 1, j - 1], self.proc_max[m - 1, j - 1]
                where = f"machine {m} ({MACHINES[m - 1]}), type {j}"
                if not math.isfinite(lo) or lo < 0:
                    out.append(f"{where}: processing minimum {lo:g} must be finite and >= 0")
                elif lo > hi:
                    out.append(f"{where}: processing minimum {lo:g} > maximum {hi:g}")
                elif m in NO_WAIT and lo != hi:
                    out.append(f"{where}: no-wait stage needs minimum == maximum, got {lo:g} < {hi:g}")
        for m in range(1, N_MACHINES):
            lo, hi = self.transport_min[m - 1], self.transport_max[m - 1]
            where = f"link {m} ({MACHINES[m - 1]} -> {MACHINES[m]})"
            if not math.isfinite(lo) or lo < 0:
                out.append(f"{where}: transport minimum {lo:g} must be finite and >= 0")
            elif lo > hi:
                out.append(f"{where}: transport minimum {lo:g} > maximum {hi:g}")
            elif m in RIGID_LINKS and (lo != 0 or hi != 0):
                out.append(f"{where}: rigid link needs minimum == maximum == 0, got [{lo:g}, {hi:g}]")
        if not math.isfinite(self.clean_time) or self.clean_time < 0:
            out.append(f"cleaning time {self.clean_time:g} must be finite and >= 0")
        return out

    def check(self) -> "BakeryConfig":
        problems = self.validate()
        if problems:
            raise ConfigError(problems)
        return self

    # -- documents -----------------------------------------------------------

    def to_dict(self) -> dict:
        def num(x):
            x = float(x)
            if x == POS_INF:
                return None
            return int(x) if x.is_integer() else x

        machines = []
        for m in range(1, N_MACHINES + 1):
            entry = {
                "name": MACHINES[m - 1],
                "processing": [[num(self.proc_min[m - 1, j]), num(self.proc_max[m - 1, j])] for j in range(self.J)],
            }
            if m < N_MACHINES:
                entry["transport"] = [num(self.transport_min[m - 1]), num(self.transport_max[m - 1])]
            machines.append(entry)
        return {
            "types": [{"name": n, "capacity": c} for n, c in zip(self.type_names, self.capacities)],
            "clean_time": num(self.clean_time),
            "machines": machines,
            "demand": {n: q for n, q in zip(self.type_names, self.quantities)},
        }

    @classmethod
    def from_dict(cls, shop: dict, demand: dict | None = None) -> "BakeryConfig":
        """Build from a shop document and a demand document (or ``shop["demand"]``).

        Raises :class:`ConfigError` with field-level context on malformed input;
        invariant checking is left to :meth:`validate`.
        """
        problems = []
        types = shop.get("types")
        if not isinstance(types, list) or not types:
            raise ConfigError(["shop document needs a non-empty 'types' list"])
        names, caps = [], []
        for idx, t in enumerate(types, start=1):
            if not isinstance(t, dict):
                problems.append(f"types[{idx}]: expected an object")
                continue
            names.append(str(t.get("name", f"type{idx}")))
            if "capacity" not in t:
                problems.append(f"types[{idx}] ({names[-1]}): missing field 'capacity'")
            else:
                caps.append(t["capacity"])
        J = len(types)
        machines = shop.get("machines")
        if not isinstance(machines, list) or len(machines) != N_MACHINES:
            problems.append(f"shop document needs a 'machines' list of {N_MACHINES} entries")
            raise ConfigError(problems)
        pmin = np.zeros((N_MACHINES, J))
        pmax = np.zeros((N_MACHINES, J))
        tmin = np.zeros(N_MACHINES - 1)
        tmax = np.zeros(N_MACHINES - 1)
        for m, mach in enumerate(machines, start=1):
            proc = mach.get("processing")
            if not isinstance(proc, list) or len(proc) != J:
                problems.append(f"machines[{m}]: 'processing' needs one [min, max] pair per type ({J})")
                continue
            for j, pair in enumerate(proc):
                try:
                    pmin[m - 1, j], pmax[m - 1, j] = _window(*pair)
                except (TypeError, ValueError):
                    problems.append(f"machines[{m}].processing[{j + 1}]: expected [min, max], got {pair!r}")
            if m < N_MACHINES:
                try:
                    tmin[m - 1], tmax[m - 1] = _window(*mach["transport"])
                except KeyError:
                    problems.append(f"machines[{m}]: missing field 'transport'")
                except (TypeError, ValueError):
                    problems.append(f"machines[{m}].transport: expected [min, max], got {mach['transport']!r}")
        if "clean_time" not in shop:
            problems.append("shop document lacks field 'clean_time'")
        demand = shop.get("demand") if demand is None else demand.get("quantities", demand)
        if demand is None:
            problems.append("no demand given (field 'demand' or a separate demand document)")
        quantities = []
        if isinstance(demand, dict):
            unknown = sorted(set(demand) - set(names))
            if unknown:
                problems.append(f"demand names unknown types: {', '.join(unknown)}")
            quantities = [demand.get(n, 0) for n in names]
        elif isinstance(demand, list):
            if len(demand) != J:
                problems.append(f"demand lists {len(demand)} quantities for {J} types")
            quantities = list(demand)
        if problems:
            raise ConfigError(problems)
        return cls(quantities, caps, pmin, pmax, tmin, tmax, shop["clean_time"], tuple(names))

    @classmethod
    def load(cls, path, demand_path=None) -> "BakeryConfig":
        docs = []
        for p in (path, demand_path):
            if p is None:
                docs.append(None)
                continue
            try:
                docs.append(json.loads(Path(p).read_text()))
            except json.JSONDecodeError as exc:
                raise ConfigError([f"{p}: line {exc.lineno}, column {exc.colno}: {exc.msg}"]) from None
        return cls.from_dict(*docs)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


# -- products and modes --------------------------------------------------------

@dataclass(frozen=True)
class ProductIndexing:
    """Type ``j(k)`` and within-type batch ``b(k)`` of products k = 1..Q."""

    schedule: tuple
    types: tuple
    batches: tuple
    batch_counts: dict = field(default_factory=dict)

    @property
    def Q(self) -> int:
        return len(self.types)

    @property
    def B(self) -> int:
        return sum(self.batch_counts.values())


def normalize_schedule(cfg: BakeryConfig, w: Sequence[int]) -> tuple:
    """Drop types without demand; insist on a permutation of the remaining ones."""
    w = tuple(int(j) for j in w)
    active = cfg.active_types
    kept = tuple(j for j in w if 1 <= j <= cfg.J and cfg.quantities[j - 1] > 0)
    bad = [j for j in w if not 1 <= j <= cfg.J]
    if bad or sorted(kept) != list(active) or len(set(w)) != len(w):
        raise ValueError(f"schedule {w} is not a permutation of the active types {active}")
    return kept


def index_products(cfg: BakeryConfig, w: Sequence[int]) -> ProductIndexing:
    w = normalize_schedule(cfg, w)
    types, batches, counts = [], [], {}
    for j in w:
        q, c = cfg.quantities[j - 1], cfg.capacities[j - 1]
        counts[j] = cfg.batch_count(j)
        for r in range(q):
            types.append(j)
            batches.append(r // c + 1)
    return ProductIndexing(w, tuple(types), tuple(batches), counts)


def build_modes(cfg: BakeryConfig) -> dict:
    """Modes ``a{j}``, ``b{j}``, ``c{j}`` for every type, keyed by label."""
    cfg.check()
    n = N_EVENTS
    modes = {}
    for j in range(1, cfg.J + 1):
        a0, b0 = eps(n), top(n)
        for m in range(1, N_MACHINES + 1):
            a0[finish(m), start(m)] = cfg.proc_min[m - 1, j - 1]
            b0[finish(m), start(m)] = cfg.proc_max[m - 1, j - 1]
        for m in range(1, N_MACHINES):
            a0[start(m + 1), finish(m)] = cfg.transport_min[m - 1]
            b0[start(m + 1), finish(m)] = cfg.transport_max[m - 1]

        base = eps(n)
        for m in NO_WAIT:
            base[start(m), finish(m)] = 0.0      # unit capacity: next enters after this leaves
        base[finish(1), finish(1)] = 0.0         # mixer releases dough in FIFO order

        a1, b1 = base.copy(), top(n)
        for e in (start(1), start(6), finish(6), start(7), finish(7)):
            a1[e, e] = b1[e, e] = 0.0            # same batch: identical mixer/proofer/oven times

        b_lo = base.copy()
        for m in BATCH_MACHINES:
            b_lo[start(m), finish(m)] = 0.0      # next batch waits for this one to leave
        c_lo = b_lo.copy()
        c_lo[start(1), finish(1)] = cfg.clean_time

        modes[f"a{j}"] = ModeSpec(f"a{j}", a0, a1, b0, b1)
        modes[f"b{j}"] = ModeSpec(f"b{j}", a0, b_lo, b0, top(n))
        modes[f"c{j}"] = ModeSpec(f"c{j}", a0, c_lo, b0, top(n))
    return modes


def build_sequence(idx: ProductIndexing) -> tuple:
    seq = []
    for k in range(idx.Q - 1):
        j = idx.types[k]
        if idx.types[k + 1] != j:
            seq.append(f"c{j}")
        elif idx.batches[k + 1] != idx.batches[k]:
            seq.append(f"b{j}")
        else:
            seq.append(f"a{j}")
    if idx.Q:
        seq.append(f"a{idx.types[-1]}")
    return tuple(seq)


class BakeryModel:
    """Modes of one configuration, reduced once and reused for every schedule."""

    def __init__(self, cfg: BakeryConfig):
        self.cfg = cfg.check()
        self.modes = build_modes(cfg)
        self.reduced = {label: reduce_mode(m) for label, m in self.modes.items()}

    def indexing(self, w) -> ProductIndexing:
        return index_products(self.cfg, w)

    def instance(self, w) -> SldiInstance:
        return SldiInstance(self.modes, build_sequence(self.indexing(w)))

    def chain(self, w) -> BlockChain:
        seq = build_sequence(self.indexing(w))
        return self.chain_of(seq)

    def chain_of(self, seq) -> BlockChain:
        red = self.reduced
        return BlockChain(
            [red[s][0] for s in seq],
            [red[s][1] for s in seq[:-1]],
            [red[s][2] for s in seq[:-1]],
        )

    def makespan(self, w, method: str = "block", want_trajectory: bool = False) -> MakespanResult:
        if self.cfg.Q == 0:
            normalize_schedule(self.cfg, w)
            return MakespanResult(True, 0.0, method, status="degenerate")
        if want_trajectory and method not in TRAJECTORY_METHODS:
            raise ValueError(f"method {method!r} gives no trajectory; use {' or '.join(TRAJECTORY_METHODS)}")
        chain = self.chain(w)
        if method == "block":
            return block_makespan(chain)
        if method == "dense":
            return dense_from_blocks(chain.C, chain.I, chain.P, want_trajectory=want_trajectory)
        if method == "oracle" and want_trajectory:
            return graph_trajectory(chain_graph(chain.C, chain.I, chain.P), chain.n)
        if method == "oracle":
            return graph_makespan(chain_graph(chain.C, chain.I, chain.P), chain.n)
        raise ValueError(f"unknown method {method!r}")


def bakery_makespan(cfg: BakeryConfig, w, method: str = "block", want_trajectory: bool = False) -> MakespanResult:
    """Shop makespan ``xi'_7(Q) - xi_1(1)`` for schedule ``w``."""
    return BakeryModel(cfg).makespan(w, method, want_trajectory)


# -- trajectory audit ----------------------------------------------------------

def audit_trajectory(cfg: BakeryConfig, idx: ProductIndexing, xs, tol: float = 1e-6) -> list[str]:
    """Shop-level properties every consistent trajectory must show.

    Checks batch equality at mixer entry, proofer and oven; cleaning gaps at
    type changes; exact no-wait durations; and that machines 2-7 and the mixer
    exit never let a later product overtake an earlier one.
    """
    xs = np.asarray(xs, dtype=float)
    out = []
    for k in range(idx.Q):
        j = idx.types[k]
        for m in NO_WAIT:
            d = xs[k, finish(m)] - xs[k, start(m)]
            if abs(d - cfg.proc_min[m - 1, j - 1]) > tol:
                out.append(f"product {k + 1}: machine {m} took {d:g}, expected {cfg.proc_min[m - 1, j - 1]:g}")
        if k + 1 == idx.Q:
            continue
        nxt = k + 1
        same_batch = idx.types[nxt] == j and idx.batches[nxt] == idx.batches[k]
        if same_batch:
            for e in (start(1), start(6), finish(6), start(7), finish(7)):
                if abs(xs[nxt, e] - xs[k, e]) > tol:
                    out.append(f"products {k + 1},{k + 2}: same batch but event {e + 1} differs")
        if idx.types[nxt] != j:
            gap = xs[nxt, start(1)] - xs[k, finish(1)]
            if gap < cfg.clean_time - tol:
                out.append(f"products {k + 1},{k + 2}: cleaning gap {gap:g} < {cfg.clean_time:g}")
        for m in range(2, N_MACHINES + 1):
            for e in (start(m), finish(m)):
                if xs[nxt, e] < xs[k, e] - tol:
                    out.append(f"products {k + 1},{k + 2}: overtaking at event {e + 1}")
        if xs[nxt, finish(1)] < xs[k, finish(1)] - tol:
            out.append(f"products {k + 1},{k + 2}: mixer exit out of order")
    return out


# -- synthetic shops -----------------------------------------------------------

def _quarter(rng, lo, hi):
    """Uniform multiple of 0.25 in [lo, hi]; dyadic values keep float sums exact."""
    return float(rng.integers(int(lo * 4), int(hi * 4) + 1)) / 4.0


def synthetic_config(quantities, capacities, seed=0, feasible: bool = True) -> BakeryConfig:
    """Random but plausible shop times for the given demand and capacities.

    Holding windows at the mixer and on the trolley to the proofer are made
    wide enough for a full batch to pass the single-product machines, which
    makes every schedule feasible.  ``feasible=False`` shrinks the trolley
    window below that and makes every multi-product batch infeasible.
    """
    rng = np.random.default_rng(seed)
    J = len(quantities)
    pmin = np.zeros((N_MACHINES, J))
    pmax = np.zeros((N_MACHINES, J))
    spacing = np.zeros(J)
    for j in range(J):
        for m in NO_WAIT:
            pmin[m - 1, j] = pmax[m - 1, j] = _quarter(rng, 0.25, 1.0)
        spacing[j] = pmin[1:5, j].max()
        hold = (capacities[j] - 1) * spacing[j]
        pmin[0, j] = _quarter(rng, 8, 20)
        pmax[0, j] = pmin[0, j] + hold + _quarter(rng, 5, 20)
        pmin[5, j] = _quarter(rng, 30, 60)
        pmax[5, j] = pmin[5, j] + _quarter(rng, 5, 30)
        pmin[6, j] = _quarter(rng, 20, 45)
        pmax[6, j] = pmin[6, j] + _quarter(rng, 0, 5)
    tmin = np.zeros(N_MACHINES - 1)
    tmax = np.zeros(N_MACHINES - 1)
    widest = max(((c - 1) * s for c, s in zip(capacities, spacing)), default=0.0)
    tmin[4] = _quarter(rng, 0.25, 2)
    tmax[4] = tmin[4] + widest + _quarter(rng, 2, 10)
    if not feasible:
        tmax[4] = tmin[4] + max(widest - 1.0, 0.0) / 2
    tmin[5] = _quarter(rng, 0.25, 1)
    tmax[5] = tmin[5] + _quarter(rng, 5, 20)
    return BakeryConfig(quantities, capacities, pmin, pmax, tmin, tmax, _quarter(rng, 5, 15))


#: demand and capacities giving Q = 975 products of J = 9 types in B = 12 batches
FULL_SCALE_QUANTITIES = (160, 150, 140, 95, 90, 90, 85, 85, 80)
FULL_SCALE_CAPACITIES = (90, 80, 100, 95, 90, 90, 85, 90, 80)


def full_scale_config(seed=0) -> BakeryConfig:
    return synthetic_config(FULL_SCALE_QUANTITIES, FULL_SCALE_CAPACITIES, seed=seed)


def random_config(rng, max_types: int = 4, max_products: int = 30) -> BakeryConfig:
    """Small random shop for cross-checking solvers (J <= max_types, Q <= max_products)."""
    J = int(rng.integers(1, max_types + 1))
    q = rng.multinomial(int(rng.integers(J, max_products + 1)), np.ones(J) / J)
    q = np.maximum(q, 1)
    while q.sum() > max_products:
        q[int(np.argmax(q))] -= 1
    caps = rng.integers(1, 9, size=J)
    return synthetic_config(q.tolist(), caps.tolist(), seed=int(rng.integers(1 << 31)))
