"""Two-state self-stabilizing token ring under a central demon.

A ring of n nodes each holds one bit x_i.  Node 0 is privileged when
x_0 == x_{n-1}; node i >= 1 is privileged when x_i != x_{i-1}.  A move
flips the privileged node's bit.  A configuration is legitimate when
exactly one node is privileged, and that node is read as holding the
token.  The central demon serializes execution: at each step it picks
one privileged node, which then moves.

Besides the per-configuration semantics this module provides
demon-driven execution traces under four explicit scheduling policies
and an exhaustive model checker for the closure and convergence
properties over all 2**n configurations.

Configurations are written x_0 x_1 ... x_{n-1} left to right; the
integer encoding puts x_0 in the most significant bit, matching the
bitstring keys used on the quantum side.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import CapacityError, NotPrivilegedError

# Exhaustive checks enumerate all 2**n configurations and ~n*2**n move
# edges; 2**20 keeps both comfortably in memory.
MAX_CHECK_SIZE = 20


@dataclass(frozen=True)
class RingConfig:
    """Bit vector x_0 .. x_{n-1} of an n-node ring."""

    n: int
    bits: tuple[int, ...]

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"ring size must be >= 2, got {self.n}")
        if len(self.bits) != self.n:
            raise ValueError(f"expected {self.n} bits, got {len(self.bits)}")
        if any(b not in (0, 1) for b in self.bits):
            raise ValueError(f"bits must be 0 or 1: {self.bits!r}")

    @classmethod
    def from_string(cls, s: str) -> RingConfig:
        return cls(len(s), tuple(int(c) for c in s))

    @classmethod
    def from_index(cls, n: int, v: int) -> RingConfig:
        return cls(n, tuple((v >> (n - 1 - i)) & 1 for i in range(n)))

    def to_string(self) -> str:
        return "".join(str(b) for b in self.bits)

    def index(self) -> int:
        """Integer encoding with x_0 as the most significant bit."""
        v = 0
        for b in self.bits:
            v = (v << 1) | b
        return v


@dataclass(frozen=True)
class RoundRobin:
    """Pick the lowest privileged index at or after (last chosen + 1), cyclically."""


@dataclass(frozen=True)
class SeededRandom:
    """Pick uniformly among the privileged nodes with a deterministic seeded generator."""

    seed: int


@dataclass(frozen=True)
class Adversarial:
    """Pick the move whose successor is worst for convergence.

    Among the privileged nodes, choose one whose successor has maximal
    shortest-path distance to the legitimate set, infinite when the
    successor can still reach a cycle of illegitimate configurations.
    Ties break toward the lowest node index.  Needs the precomputed
    transition graph, so the ring size is bounded by MAX_CHECK_SIZE.
    """


@dataclass(frozen=True)
class FixedSchedule:
    """Consume a fixed list of node ids; non-privileged entries become recorded skips."""

    schedule: tuple[int, ...]

    def __post_init__(self):
        if not self.schedule:
            raise ValueError("fixed schedule must be nonempty")


DemonPolicy = RoundRobin | SeededRandom | Adversarial | FixedSchedule


@dataclass(frozen=True)
class TraceStep:
    """One demon step.

    action is "move" (chosen is privileged and after = apply_move(before,
    chosen)), "skip" (a fixed-schedule entry naming a non-privileged
    node; after == before), or "fault" (an injected bit flip; chosen is
    the flipped bit, no privilege required).
    """

    before: RingConfig
    privileged: tuple[int, ...]
    chosen: int
    after: RingConfig
    action: str = "move"


@dataclass(frozen=True)
class ClosureReport:
    """Whether every move from a legitimate configuration stays legitimate."""

    n: int
    holds: bool
    counterexample: tuple[RingConfig, int, RingConfig] | None = None


@dataclass(frozen=True)
class ConvergenceReport:
    """Whether every demon execution reaches the legitimate set.

    When holds, max_moves_to_legitimate is the longest path through
    illegitimate configurations before entering the legitimate set;
    otherwise witness_cycle is a cycle of illegitimate configurations
    the demon can follow forever.  Exactly one of the two is present.
    """

    n: int
    holds: bool
    max_moves_to_legitimate: int | None = None
    witness_cycle: tuple[RingConfig, ...] | None = None


def is_privileged(cfg: RingConfig, i: int) -> bool:
    """Rule guard of node i: x_0 == x_{n-1} for node 0, x_i != x_{i-1} otherwise."""
    if not 0 <= i < cfg.n:
        raise IndexError(f"node {i} out of range for ring size {cfg.n}")
    if i == 0:
        return cfg.bits[0] == cfg.bits[cfg.n - 1]
    return cfg.bits[i] != cfg.bits[i - 1]


def privileged_set(cfg: RingConfig) -> list[int]:
    """Ascending list of privileged nodes. Never empty: the count is always odd."""
    return [i for i in range(cfg.n) if is_privileged(cfg, i)]


def apply_move(cfg: RingConfig, i: int) -> RingConfig:
    """Execute node i's move (flip bit i). The node must be privileged."""
    if not is_privileged(cfg, i):
        raise NotPrivilegedError(f"node {i} is not privileged in {cfg.to_string()}")
    bits = list(cfg.bits)
    bits[i] ^= 1
    return RingConfig(cfg.n, tuple(bits))


def inject_bit_fault(cfg: RingConfig, i: int) -> RingConfig:
    """Flip bit i unconditionally (transient-fault model; no privilege required)."""
    if not 0 <= i < cfg.n:
        raise IndexError(f"node {i} out of range for ring size {cfg.n}")
    bits = list(cfg.bits)
    bits[i] ^= 1
    return RingConfig(cfg.n, tuple(bits))


def is_legitimate(cfg: RingConfig) -> bool:
    """True iff exactly one node is privileged."""
    return len(privileged_set(cfg)) == 1


# ---------------------------------------------------------------------------
# Exhaustive transition-graph analysis.  Configurations are encoded as
# integers (x_0 = MSB); guard tables and move edges are built with numpy.


def _require_capacity(n: int) -> None:
    if n < 2:
        raise ValueError(f"ring size must be >= 2, got {n}")
    if n > MAX_CHECK_SIZE:
        raise CapacityError(
            f"ring size {n} exceeds the exhaustive-check bound {MAX_CHECK_SIZE}"
        )


def _guard_table(n: int) -> np.ndarray:
    """guards[i, c] is node i's guard in configuration c, for all c at once."""
    idx = np.arange(1 << n, dtype=np.int64)

    def bit(i: int) -> np.ndarray:
        return (idx >> (n - 1 - i)) & 1

    guards = np.empty((n, 1 << n), dtype=bool)
    guards[0] = bit(0) == bit(n - 1)
    for i in range(1, n):
        guards[i] = bit(i) != bit(i - 1)
    return guards


class _Analysis:
    __slots__ = (
        "n", "guards", "masks", "legit",
        "dist", "reach_cycle", "acyclic", "max_moves", "cycle",
    )


@lru_cache(maxsize=None)
def _analyze(n: int) -> _Analysis:
    guards = _guard_table(n)
    size = 1 << n
    idx = np.arange(size, dtype=np.int64)
    masks = np.array([1 << (n - 1 - i) for i in range(n)], dtype=np.int64)
    legit = guards.sum(axis=0) == 1

    # Shortest distance to the legitimate set: multi-source BFS over
    # reversed move edges.  -1 marks configurations that cannot reach it.
    dist = np.where(legit, 0, -1).astype(np.int64)
    frontier = idx[legit]
    level = 0
    while frontier.size:
        level += 1
        found = []
        for i in range(n):
            pred = frontier ^ masks[i]
            new = pred[guards[i, pred] & (dist[pred] < 0)]
            if new.size:
                dist[new] = level
                found.append(new)
        frontier = (
            np.unique(np.concatenate(found)) if found else np.empty(0, dtype=np.int64)
        )

    # Peel the subgraph induced by illegitimate configurations (Kahn's
    # algorithm on move edges).  Peeling everything proves acyclicity and
    # yields the longest path to the legitimate set; leftovers are exactly
    # the configurations from which a cycle is still reachable.
    illeg = ~legit
    out_deg = np.zeros(size, dtype=np.int64)
    for i in range(n):
        succ = idx ^ masks[i]
        out_deg += (guards[i] & illeg & illeg[succ]).astype(np.int64)

    moves = np.zeros(size, dtype=np.int64)
    processed = np.zeros(size, dtype=bool)
    frontier = idx[illeg & (out_deg == 0)]
    moves[frontier] = 1
    processed[frontier] = True
    done = int(frontier.size)
    total_illeg = int(illeg.sum())
    while frontier.size:
        preds = []
        for i in range(n):
            pred = frontier ^ masks[i]
            sel = guards[i, pred] & illeg[pred]
            p = pred[sel]
            if p.size:
                np.maximum.at(moves, p, 1 + moves[frontier[sel]])
                np.subtract.at(out_deg, p, 1)
                preds.append(p)
        if preds:
            cand = np.unique(np.concatenate(preds))
            frontier = cand[(out_deg[cand] == 0) & ~processed[cand]]
        else:
            frontier = np.empty(0, dtype=np.int64)
        processed[frontier] = True
        done += int(frontier.size)

    a = _Analysis()
    a.n = n
    a.guards = guards
    a.masks = masks
    a.legit = legit
    a.dist = dist
    a.acyclic = done == total_illeg
    if a.acyclic:
        a.max_moves = int(moves.max()) if total_illeg else 0
        a.reach_cycle = np.zeros(size, dtype=bool)
        a.cycle = None
    else:
        a.max_moves = None
        a.reach_cycle = illeg & ~processed
        a.cycle = _extract_cycle(a)
    return a


def _extract_cycle(a: _Analysis) -> tuple[int, ...]:
    """Deterministic walk inside the un-peeled region until a repeat closes a cycle."""
    size = 1 << a.n
    start = int(np.arange(size, dtype=np.int64)[a.reach_cycle][0])
    path = [start]
    pos = {start: 0}
    cur = start
    while True:
        nxt = None
        for i in range(a.n):
            cand = cur ^ int(a.masks[i])
            if a.guards[i, cur] and a.reach_cycle[cand]:
                nxt = cand
                break
        assert nxt is not None, "un-peeled node must keep an edge into the region"
        if nxt in pos:
            return tuple(path[pos[nxt]:])
        pos[nxt] = len(path)
        path.append(nxt)
        cur = nxt


def check_closure(n: int) -> ClosureReport:
    """Exhaustively verify that moves from legitimate configurations stay legitimate."""
    _require_capacity(n)
    a = _analyze(n)
    size = 1 << n
    idx = np.arange(size, dtype=np.int64)
    viol = np.zeros(size, dtype=bool)
    for i in range(n):
        succ = idx ^ a.masks[i]
        viol |= a.legit & a.guards[i] & ~a.legit[succ]
    if viol.any():
        cfg = RingConfig.from_index(n, int(idx[viol][0]))
        i = privileged_set(cfg)[0]
        return ClosureReport(n, False, (cfg, i, apply_move(cfg, i)))
    return ClosureReport(n, True, None)


def check_convergence(n: int) -> ConvergenceReport:
    """Decide whether every demon execution reaches the legitimate set.

    Builds the move graph over all 2**n configurations and reports
    acyclicity of the subgraph induced by illegitimate configurations.
    Correctness of this criterion presumes closure, which check_closure
    verifies independently.
    """
    _require_capacity(n)
    a = _analyze(n)
    if a.acyclic:
        return ConvergenceReport(n, True, max_moves_to_legitimate=a.max_moves)
    witness = tuple(RingConfig.from_index(n, v) for v in a.cycle)
    return ConvergenceReport(n, False, witness_cycle=witness)


def _round_robin_pick(priv: list[int], last: int, n: int) -> int:
    for d in range(1, n + 1):
        cand = (last + d) % n
        if cand in priv:
            return cand
    raise AssertionError("privileged set is never empty")


def _adversarial_pick(cfg: RingConfig, priv: list[int], a: _Analysis) -> int:
    best, best_score = priv[0], -1.0
    for i in priv:
        s = apply_move(cfg, i).index()
        if a.reach_cycle[s] or a.dist[s] < 0:
            score = math.inf
        else:
            score = float(a.dist[s])
        if score > best_score:
            best, best_score = i, score
    return best


def run_demon(
    start: RingConfig,
    policy: DemonPolicy,
    max_steps: int,
    fault: tuple[int, int] | None = None,
) -> list[TraceStep]:
    """Run the central demon for max_steps moves under the given policy.

    fault, when given, is a (step, node) pair: before the demon acts at
    that step index, bit `node` is flipped and recorded as an extra
    "fault" trace entry (it does not count against max_steps).  A fixed
    schedule that runs out ends the trace early, so the returned list may
    be shorter than max_steps.
    """
    if max_steps < 1:
        raise ValueError(f"max_steps must be >= 1, got {max_steps}")
    if fault is not None:
        fstep, fnode = fault
        if fstep < 0:
            raise ValueError(f"fault step must be >= 0, got {fstep}")
        if not 0 <= fnode < start.n:
            raise IndexError(f"fault node {fnode} out of range for ring size {start.n}")
    if isinstance(policy, FixedSchedule):
        for entry in policy.schedule:
            if not 0 <= entry < start.n:
                raise IndexError(
                    f"schedule entry {entry} out of range for ring size {start.n}"
                )
    rng = random.Random(policy.seed) if isinstance(policy, SeededRandom) else None
    analysis = None
    if isinstance(policy, Adversarial):
        _require_capacity(start.n)
        analysis = _analyze(start.n)

    trace: list[TraceStep] = []
    cfg = start
    last = -1
    sched_pos = 0
    for step in range(max_steps):
        if fault is not None and fault[0] == step:
            after = inject_bit_fault(cfg, fault[1])
            trace.append(
                TraceStep(cfg, tuple(privileged_set(cfg)), fault[1], after, "fault")
            )
            cfg = after
        priv = privileged_set(cfg)
        if isinstance(policy, FixedSchedule):
            if sched_pos == len(policy.schedule):
                break
            node = policy.schedule[sched_pos]
            sched_pos += 1
            if node not in priv:
                trace.append(TraceStep(cfg, tuple(priv), node, cfg, "skip"))
                continue
            chosen = node
        elif isinstance(policy, RoundRobin):
            chosen = _round_robin_pick(priv, last, cfg.n)
            last = chosen
        elif isinstance(policy, SeededRandom):
            chosen = priv[rng.randrange(len(priv))]
        elif isinstance(policy, Adversarial):
            chosen = _adversarial_pick(cfg, priv, analysis)
        else:
            raise TypeError(f"unknown demon policy {policy!r}")
        after = apply_move(cfg, chosen)
        trace.append(TraceStep(cfg, tuple(priv), chosen, after, "move"))
        cfg = after
    return trace
