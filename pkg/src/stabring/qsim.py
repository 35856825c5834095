"""Exact gate-level statevector simulation.

Small gate set: H, X, RY(theta), CX, CCX, and MCX with per-control
polarity.  Indexing convention everywhere: qubit 0 is the most
significant bit of the amplitude index, so basis state
|q_0 q_1 ... q_{m-1}> lives at index int("q_0...q_{m-1}", 2) and
bitstring keys read left to right.

Distributions drop entries below PRUNE_EPS; density-matrix eigenvalues
at or below EIG_EPS count as zero when taking entropies.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, sin
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .errors import CapacityError

if TYPE_CHECKING:
    from .synth import Circuit

MAX_QUBITS = 24  # 2**24 complex amplitudes, 256 MiB
PRUNE_EPS = 1e-12
EIG_EPS = 1e-12

_KINDS = {"h", "x", "ry", "cx", "ccx", "mcx"}
_N_CONTROLS = {"h": 0, "x": 0, "ry": 0, "cx": 1, "ccx": 2}

_H_MATRIX = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)


def _ry_matrix(theta: float) -> np.ndarray:
    c, s = cos(theta / 2), sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


@dataclass(frozen=True)
class Gate:
    """One gate: kind, target, positive/negative controls, optional angle."""

    kind: str
    target: int
    controls: tuple[tuple[int, bool], ...] = ()
    theta: float | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        want = _N_CONTROLS.get(self.kind)
        if want is not None and len(self.controls) != want:
            raise ValueError(f"{self.kind} takes {want} controls, got {len(self.controls)}")
        if self.kind == "mcx" and not self.controls:
            raise ValueError("mcx needs at least one control")
        if self.kind == "ry":
            if self.theta is None:
                raise ValueError("ry needs an angle")
        elif self.theta is not None:
            raise ValueError(f"{self.kind} takes no angle")
        cqs = [q for q, _ in self.controls]
        if len(set(cqs)) != len(cqs):
            raise ValueError(f"duplicate control qubits: {cqs}")
        if self.target in cqs:
            raise ValueError(f"target {self.target} collides with a control")
        if self.target < 0 or any(q < 0 for q in cqs):
            raise ValueError("qubit indices must be nonnegative")

    @property
    def qubits(self) -> tuple[int, ...]:
        return tuple(q for q, _ in self.controls) + (self.target,)


def h(target: int) -> Gate:
    return Gate("h", target)


def x(target: int) -> Gate:
    return Gate("x", target)


def ry(target: int, theta: float) -> Gate:
    return Gate("ry", target, theta=float(theta))


def cx(control: int, target: int) -> Gate:
    return Gate("cx", target, ((control, True),))


def ccx(control1: int, control2: int, target: int) -> Gate:
    return Gate("ccx", target, ((control1, True), (control2, True)))


def mcx(controls: Iterable[tuple[int, bool]], target: int) -> Gate:
    return Gate("mcx", target, tuple((int(q), bool(p)) for q, p in controls))


@dataclass(frozen=True, eq=False)
class StateVector:
    """2**m complex amplitudes of unit norm; treat as immutable."""

    m: int
    amps: np.ndarray

    def __post_init__(self):
        if self.amps.shape != (1 << self.m,):
            raise ValueError(f"expected {1 << self.m} amplitudes, got {self.amps.shape}")
        norm2 = float(np.vdot(self.amps, self.amps).real)
        if abs(norm2 - 1.0) > 1e-12:
            raise ValueError(f"state norm**2 = {norm2!r}, not 1")


@dataclass(frozen=True)
class Distribution:
    """Probabilities keyed by fixed-width bitstrings; entries < PRUNE_EPS omitted."""

    width: int
    probs: dict[str, float]

    def __post_init__(self):
        for k, p in self.probs.items():
            if len(k) != self.width or set(k) - {"0", "1"}:
                raise ValueError(f"key {k!r} is not a {self.width}-bit string")
            if not -1e-12 <= p <= 1 + 1e-12:
                raise ValueError(f"probability out of range: {k} -> {p}")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """2**k x 2**k Hermitian trace-one matrix."""

    k: int
    entries: np.ndarray

    def __post_init__(self):
        dim = 1 << self.k
        if self.entries.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got {self.entries.shape}")
        if not np.allclose(self.entries, self.entries.conj().T, atol=1e-10):
            raise ValueError("density matrix is not Hermitian")
        tr = complex(np.trace(self.entries))
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"trace is {tr}, not 1")

    def purity(self) -> float:
        """Trace of the squared matrix; 1 iff pure."""
        return float(np.trace(self.entries @ self.entries).real)


@dataclass(frozen=True)
class ShotCounts:
    """Histogram of seeded measurement draws; counts sum to shots."""

    shots: int
    seed: int
    counts: dict[str, int]


def init_state(m: int) -> StateVector:
    """All-zeros basis state on m qubits."""
    if not 1 <= m <= MAX_QUBITS:
        raise CapacityError(f"qubit count {m} outside supported range 1..{MAX_QUBITS}")
    amps = np.zeros(1 << m, dtype=complex)
    amps[0] = 1.0
    return StateVector(m, amps)


def _check_indices(gate: Gate, m: int) -> None:
    for q in gate.qubits:
        if not 0 <= q < m:
            raise IndexError(f"qubit index {q} out of range for {m} qubits")


def _apply_inplace(amps: np.ndarray, m: int, gate: Gate) -> np.ndarray:
    """Apply one gate; flips mutate amps, rotations return a fresh array."""
    if gate.kind in ("h", "ry"):
        mat = _H_MATRIX if gate.kind == "h" else _ry_matrix(gate.theta)
        t = np.moveaxis(amps.reshape([2] * m), gate.target, -1)
        t = np.tensordot(t, mat, axes=([-1], [1]))
        return np.moveaxis(t, -1, gate.target).reshape(-1)
    # x / cx / ccx / mcx: swap the target slices where all controls match
    t = amps.reshape([2] * m)
    sel: list[object] = [slice(None)] * m
    for q, positive in gate.controls:
        sel[q] = 1 if positive else 0
    s0, s1 = list(sel), list(sel)
    s0[gate.target], s1[gate.target] = 0, 1
    s0, s1 = tuple(s0), tuple(s1)
    tmp = t[s0].copy()
    t[s0] = t[s1]
    t[s1] = tmp
    return amps


def apply(state: StateVector, gate: Gate) -> StateVector:
    """Pure single-gate application."""
    _check_indices(gate, state.m)
    return StateVector(state.m, _apply_inplace(state.amps.copy(), state.m, gate))


def run(circuit: Circuit) -> StateVector:
    """Apply the circuit's gates in order to the all-zeros state."""
    if not 1 <= circuit.m <= MAX_QUBITS:
        raise CapacityError(
            f"qubit count {circuit.m} outside supported range 1..{MAX_QUBITS}"
        )
    amps = np.zeros(1 << circuit.m, dtype=complex)
    amps[0] = 1.0
    for gate in circuit.gates:
        _check_indices(gate, circuit.m)
        amps = _apply_inplace(amps, circuit.m, gate)
    return StateVector(circuit.m, amps)


def _as_distribution(p: np.ndarray, width: int) -> Distribution:
    probs = {
        format(b, f"0{width}b"): float(p[b])
        for b in range(p.size)
        if p[b] > PRUNE_EPS
    }
    return Distribution(width, probs)


def probabilities(state: StateVector) -> Distribution:
    """Born probabilities of every basis state."""
    return _as_distribution(np.abs(state.amps) ** 2, state.m)


def _check_keep(keep: Sequence[int], m: int) -> None:
    if not keep:
        raise ValueError("keep must be nonempty")
    if len(set(keep)) != len(keep):
        raise ValueError(f"keep has duplicates: {list(keep)}")
    for q in keep:
        if not 0 <= q < m:
            raise IndexError(f"qubit index {q} out of range for {m} qubits")


def _marginal_array(state: StateVector, keep: Sequence[int]) -> np.ndarray:
    p = (np.abs(state.amps) ** 2).reshape([2] * state.m)
    drop = tuple(q for q in range(state.m) if q not in set(keep))
    if drop:
        p = p.sum(axis=drop)
    order = sorted(keep)
    perm = [order.index(q) for q in keep]
    return p.transpose(perm).reshape(-1)


def marginal(state: StateVector, keep: Sequence[int]) -> Distribution:
    """Distribution over the kept qubits; key bits follow the order of keep."""
    _check_keep(keep, state.m)
    return _as_distribution(_marginal_array(state, keep), len(keep))


def sample(state: StateVector, keep: Sequence[int], shots: int, seed: int) -> ShotCounts:
    """shots seeded independent draws from marginal(state, keep)."""
    _check_keep(keep, state.m)
    if shots < 1:
        raise ValueError(f"shots must be >= 1, got {shots}")
    p = _marginal_array(state, keep)
    p = p / p.sum()
    rng = np.random.default_rng(seed)
    draws = rng.multinomial(shots, p)
    width = len(keep)
    counts = {
        format(b, f"0{width}b"): int(draws[b]) for b in range(draws.size) if draws[b]
    }
    return ShotCounts(shots, seed, counts)


def reduced_density(state: StateVector, keep: Sequence[int]) -> DensityMatrix:
    """Partial trace of |state><state| onto the kept qubits, in keep order."""
    _check_keep(keep, state.m)
    k = len(keep)
    t = np.moveaxis(state.amps.reshape([2] * state.m), list(keep), range(k))
    a = t.reshape(1 << k, -1)
    return DensityMatrix(k, a @ a.conj().T)


def entropy(dm: DensityMatrix) -> float:
    """Von Neumann entropy in bits; eigenvalues <= EIG_EPS are treated as zero."""
    w = np.linalg.eigvalsh(dm.entries)
    w = w[w > EIG_EPS]
    if w.size == 0:
        return 0.0
    return float(-(w * np.log2(w)).sum())
