"""Circuit construction for the token-ring rules and reference entangled states.

The ring's x register occupies qubits 0..n-1 (x_i at index i); ancillas
follow.  Each rule application consumes one fresh ancilla: the move
x_i := not x_i fires iff the guard holds, which is non-injective on the
x register alone, and the recorded guard bit is exactly what makes the
embedding reversible.  Ancillas are left dirty (not uncomputed): when a
move fires the guard value changes underneath it, so in-place
uncomputation is impossible, and dirty ancillas do not affect the
measured x-marginal.

Circuit text format (UTF-8, one statement per line, '#' starts a comment):

    qubits <m>
    x <i0,i1,...>        register declaration; defaults to all qubits
    anc <j0,j1,...>      'anc -' when there are none; defaults to none
    <gate lines>
    measure <i0,i1,...>  must equal the x register

Gate lines: ``h q`` | ``x q`` | ``ry q theta`` | ``cx c t`` |
``ccx c1 c2 t`` | ``mcx c1:+ c2:- ... t``.  Canonical form (what emit
produces): lowercase, single spaces, no trailing whitespace, theta with
17 significant digits, register lines always present.  A schedule
annotation survives round-trips as a structured comment
(``# schedule 0,1,2``).  A leading ``x`` line directly after the header
is always read as the register declaration, never as a gate.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from math import acos, sqrt

from .errors import AncillaReuseError, CircuitParseError
from .qsim import Gate, cx, h, ry, x

_SCHEDULE_COMMENT = re.compile(r"^#\s*schedule\s+(\d+(?:,\d+)*)\s*$")


@dataclass(frozen=True)
class RegisterLayout:
    """x register at qubits 0..n_x-1, ancillas at n_x..n_x+n_anc-1."""

    n_x: int
    n_anc: int = 0

    def __post_init__(self):
        if self.n_x < 1:
            raise ValueError(f"need at least one x qubit, got {self.n_x}")
        if self.n_anc < 0:
            raise ValueError(f"negative ancilla count {self.n_anc}")

    @property
    def m(self) -> int:
        return self.n_x + self.n_anc

    def x_index(self, i: int) -> int:
        if not 0 <= i < self.n_x:
            raise IndexError(f"x index {i} out of range for {self.n_x} x qubits")
        return i

    def anc_index(self, j: int) -> int:
        if not 0 <= j < self.n_anc:
            raise IndexError(f"ancilla index {j} out of range for {self.n_anc} ancillas")
        return self.n_x + j

    @property
    def measured(self) -> tuple[int, ...]:
        return tuple(range(self.n_x))


@dataclass(frozen=True)
class Circuit:
    """Gate list over a register layout; meta carries the schedule annotation."""

    m: int
    layout: RegisterLayout
    gates: tuple[Gate, ...]
    meta: tuple[int, ...] = ()

    def __post_init__(self):
        if self.m != self.layout.m:
            raise ValueError(f"m={self.m} disagrees with layout ({self.layout.m} qubits)")
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < self.m:
                    raise ValueError(f"gate {g} touches qubit {q}, circuit has {self.m}")
        for node in self.meta:
            if not 0 <= node < self.layout.n_x:
                raise ValueError(f"schedule annotation {node} out of node range")


@dataclass(frozen=True)
class ScheduleSpec:
    """Serialized rule applications: node ids in demon order, repeats allowed."""

    n: int
    order: tuple[int, ...] = field(default=())

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"ring size must be >= 2, got {self.n}")
        for node in self.order:
            if not 0 <= node < self.n:
                raise ValueError(f"node {node} out of range for ring size {self.n}")


def uniform_init(n: int) -> tuple[Gate, ...]:
    """One H per x qubit: uniform superposition over all n-bit ring states."""
    if n < 1:
        raise ValueError(f"need at least one qubit, got {n}")
    return tuple(h(i) for i in range(n))


def ghz_circuit(n: int) -> Circuit:
    """H on qubit 0 followed by a CX chain; yields (|0...0> + |1...1>)/sqrt(2)."""
    if n < 2:
        raise ValueError(f"GHZ needs n >= 2, got {n}")
    gates = (h(0),) + tuple(cx(i, i + 1) for i in range(n - 1))
    return Circuit(n, RegisterLayout(n), gates)


def w_circuit(n: int) -> Circuit:
    """Uniform superposition of the n one-hot basis states, amplitude 1/sqrt(n).

    Linear cascade: X on qubit 0 puts the excitation there, then each
    step k peels amplitude 1/sqrt(n) off to keep the excitation at k-1
    and hands the rest to qubit k (controlled-RY expressed as two RY
    halves around CXs, then CX back to clear the previous position).
    """
    if n < 2:
        raise ValueError(f"W needs n >= 2, got {n}")
    gates: list[Gate] = [x(0)]
    for k in range(1, n):
        theta = 2.0 * acos(sqrt(1.0 / (n - k + 1)))
        gates += [
            ry(k, theta / 2),
            cx(k - 1, k),
            ry(k, -theta / 2),
            cx(k - 1, k),
            cx(k, k - 1),
        ]
    return Circuit(n, RegisterLayout(n), tuple(gates))


def rule_circuit(
    n: int, node: int, anc: int, used_slots: set[int] | None = None
) -> tuple[Gate, ...]:
    """Reversible embedding of node's rule onto a fresh ancilla at qubit index anc.

    On basis input |x>|0> the fragment computes the guard into the
    ancilla and flips x_node iff it holds: for node >= 1 the ancilla
    becomes x_{node-1} XOR x_node, for node 0 it becomes
    NOT (x_0 XOR x_{n-1}), and a final CX from the ancilla applies the
    conditional flip.  Pass used_slots to enforce one-use ancillas across
    composed fragments.
    """
    if n < 2:
        raise ValueError(f"ring size must be >= 2, got {n}")
    if not 0 <= node < n:
        raise IndexError(f"node {node} out of range for ring size {n}")
    if anc < n:
        raise ValueError(f"ancilla index {anc} collides with the x register 0..{n - 1}")
    if used_slots is not None:
        if anc in used_slots:
            raise AncillaReuseError(f"ancilla slot {anc} was already used")
        used_slots.add(anc)
    if node == 0:
        return (cx(n - 1, anc), cx(0, anc), x(anc), cx(anc, 0))
    return (cx(node - 1, anc), cx(node, anc), cx(anc, node))


def schedule_circuit(
    spec: ScheduleSpec, fault: tuple[int, int] | None = None
) -> Circuit:
    """Uniform initialization followed by the rule fragments in schedule order.

    One fresh ancilla per rule application; the x qubits are the
    measured set.  fault, when given, is (position, target): an X on
    x-qubit target inserted before the rule at that position, with
    position == len(order) meaning after all rules.
    """
    if not spec.order:
        raise ValueError("schedule must contain at least one rule application")
    if fault is not None:
        fpos, ftarget = fault
        if not 0 <= fpos <= len(spec.order):
            raise ValueError(f"fault position {fpos} out of range 0..{len(spec.order)}")
        if not 0 <= ftarget < spec.n:
            raise IndexError(f"fault target {ftarget} out of range for ring size {spec.n}")
    layout = RegisterLayout(spec.n, len(spec.order))
    gates: list[Gate] = list(uniform_init(spec.n))
    used: set[int] = set()
    for k, node in enumerate(spec.order):
        if fault is not None and fault[0] == k:
            gates.append(x(fault[1]))
        gates += rule_circuit(spec.n, node, layout.anc_index(k), used)
    if fault is not None and fault[0] == len(spec.order):
        gates.append(x(fault[1]))
    return Circuit(layout.m, layout, tuple(gates), meta=spec.order)


# ---------------------------------------------------------------------------
# Text format


def _emit_gate(g: Gate) -> str:
    if g.kind in ("h", "x"):
        return f"{g.kind} {g.target}"
    if g.kind == "ry":
        return f"ry {g.target} {g.theta:.17g}"
    if g.kind == "cx":
        return f"cx {g.controls[0][0]} {g.target}"
    if g.kind == "ccx":
        return f"ccx {g.controls[0][0]} {g.controls[1][0]} {g.target}"
    ctrls = " ".join(f"{q}:{'+' if pos else '-'}" for q, pos in g.controls)
    return f"mcx {ctrls} {g.target}"


def emit(circuit: Circuit) -> str:
    """Canonical text form of a circuit (see the module docstring)."""
    lay = circuit.layout
    lines = [f"qubits {circuit.m}"]
    lines.append("x " + ",".join(str(i) for i in range(lay.n_x)))
    if lay.n_anc:
        lines.append("anc " + ",".join(str(lay.n_x + j) for j in range(lay.n_anc)))
    else:
        lines.append("anc -")
    if circuit.meta:
        lines.append("# schedule " + ",".join(str(v) for v in circuit.meta))
    lines += [_emit_gate(g) for g in circuit.gates]
    lines.append("measure " + ",".join(str(i) for i in lay.measured))
    return "\n".join(lines) + "\n"


def _parse_int(lineno: int, tok: str) -> int:
    try:
        return int(tok)
    except ValueError:
        raise CircuitParseError(lineno, f"expected an integer, got {tok!r}") from None


def _parse_index(lineno: int, tok: str, m: int) -> int:
    v = _parse_int(lineno, tok)
    if not 0 <= v < m:
        raise CircuitParseError(lineno, f"qubit index {v} out of range for {m} qubits")
    return v


def _parse_index_list(lineno: int, tok: str, m: int) -> list[int]:
    items = tok.split(",")
    if any(not item for item in items):
        raise CircuitParseError(lineno, f"malformed index list {tok!r}")
    out = [_parse_index(lineno, item, m) for item in items]
    if len(set(out)) != len(out):
        raise CircuitParseError(lineno, f"duplicate indices in {tok!r}")
    return out


def _parse_gate(lineno: int, toks: list[str], m: int) -> Gate:
    head = toks[0]
    try:
        if head in ("h", "x"):
            if len(toks) != 2:
                raise CircuitParseError(lineno, f"'{head}' takes one qubit argument")
            return Gate(head, _parse_index(lineno, toks[1], m))
        if head == "ry":
            if len(toks) != 3:
                raise CircuitParseError(lineno, "'ry' takes a qubit and an angle")
            q = _parse_index(lineno, toks[1], m)
            try:
                theta = float(toks[2])
            except ValueError:
                raise CircuitParseError(
                    lineno, f"expected a decimal angle, got {toks[2]!r}"
                ) from None
            return ry(q, theta)
        if head == "cx":
            if len(toks) != 3:
                raise CircuitParseError(lineno, "'cx' takes control and target")
            return cx(_parse_index(lineno, toks[1], m), _parse_index(lineno, toks[2], m))
        if head == "ccx":
            if len(toks) != 4:
                raise CircuitParseError(lineno, "'ccx' takes two controls and a target")
            return Gate(
                "ccx",
                _parse_index(lineno, toks[3], m),
                (
                    (_parse_index(lineno, toks[1], m), True),
                    (_parse_index(lineno, toks[2], m), True),
                ),
            )
        if head == "mcx":
            if len(toks) < 3:
                raise CircuitParseError(lineno, "'mcx' takes controls and a target")
            controls = []
            for tok in toks[1:-1]:
                if ":" not in tok:
                    raise CircuitParseError(
                        lineno, f"control {tok!r} must look like '<qubit>:+' or '<qubit>:-'"
                    )
                qs, pol = tok.rsplit(":", 1)
                if pol not in ("+", "-"):
                    raise CircuitParseError(lineno, f"bad control polarity {pol!r}")
                controls.append((_parse_index(lineno, qs, m), pol == "+"))
            return Gate("mcx", _parse_index(lineno, toks[-1], m), tuple(controls))
    except ValueError as e:
        raise CircuitParseError(lineno, str(e)) from None
    raise CircuitParseError(lineno, f"unknown statement {head!r}")


def parse(text: str) -> Circuit:
    """Parse circuit text; inverse of emit on canonical form.

    Errors raise CircuitParseError carrying the 1-based line number.
    """
    m: int | None = None
    x_list: list[int] | None = None
    anc_list: list[int] | None = None
    meta: tuple[int, ...] = ()
    meta_line = 0
    gates: list[Gate] = []
    measured: list[int] | None = None
    measure_line = 0
    stage = "header"
    lineno = 0

    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            sched = _SCHEDULE_COMMENT.match(stripped)
            if sched:
                meta = tuple(int(v) for v in sched.group(1).split(","))
                meta_line = lineno
            continue
        toks = raw.split("#", 1)[0].split()
        head = toks[0]

        if stage == "header":
            if head != "qubits" or len(toks) != 2:
                raise CircuitParseError(lineno, "expected 'qubits <m>' header")
            m = _parse_int(lineno, toks[1])
            if m < 1:
                raise CircuitParseError(lineno, f"qubit count must be >= 1, got {m}")
            stage = "registers"
            continue

        if stage == "registers":
            if head == "x" and x_list is None:
                if len(toks) != 2:
                    raise CircuitParseError(lineno, "'x' register line takes one index list")
                x_list = _parse_index_list(lineno, toks[1], m)
                if x_list != list(range(len(x_list))):
                    raise CircuitParseError(
                        lineno, "x register must occupy indices 0..k-1 in order"
                    )
                continue
            if head == "anc" and anc_list is None:
                if len(toks) != 2:
                    raise CircuitParseError(lineno, "'anc' register line takes one index list")
                anc_list = [] if toks[1] == "-" else _parse_index_list(lineno, toks[1], m)
                continue
            stage = "body"  # fall through: first gate or measure line

        if stage == "body":
            if head == "measure":
                if len(toks) != 2:
                    raise CircuitParseError(lineno, "'measure' takes one index list")
                measured = _parse_index_list(lineno, toks[1], m)
                measure_line = lineno
                stage = "end"
                continue
            gates.append(_parse_gate(lineno, toks, m))
            continue

        raise CircuitParseError(lineno, "statement after 'measure'")

    if m is None:
        raise CircuitParseError(lineno + 1, "missing 'qubits <m>' header")
    if measured is None:
        raise CircuitParseError(lineno + 1, "missing 'measure' line")

    if anc_list is None:
        anc_list = []
    if x_list is None:
        anc_set = set(anc_list)
        x_list = [i for i in range(m) if i not in anc_set]
        if not x_list:
            raise CircuitParseError(lineno + 1, "x register is empty")
    n_x = len(x_list)
    if anc_list != list(range(n_x, m)):
        raise CircuitParseError(
            lineno + 1,
            f"ancilla register must occupy indices {n_x}..{m - 1} in order",
        )
    if measured != x_list:
        raise CircuitParseError(measure_line, "measure set must equal the x register")
    for node in meta:
        if node >= n_x:
            raise CircuitParseError(meta_line, f"schedule annotation {node} out of node range")

    layout = RegisterLayout(n_x, m - n_x)
    return Circuit(m, layout, tuple(gates), meta=meta)
