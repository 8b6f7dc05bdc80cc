"""One-way CNOT: measurement pattern on the six-qubit cluster.

Qubits 5, 1, 6, 4 are measured (in that order) in the bases
``B(t) = {(|0> + e^{it}|1>)/sqrt2, (|0> - e^{it}|1>)/sqrt2}`` with angles
``alpha, beta, alpha', beta'``.  The remaining qubits 2 (control) and 3
(target) carry

    (1 x H) CNOT [Rx(beta') Rz(alpha') x H Rx(beta) Rz(alpha)] |+>|+>.

The pattern acts on the undressed linear cluster, i.e. the resource state of
:func:`onewaysim.graph.build_lc6` with the Hadamards on the two spatial qubits
undone before measuring.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .graph import LC6_LABELS, SPATIAL_LABELS, build_lc6
from .statevec import (
    CNOT,
    H,
    I2,
    KET_PLUS,
    PAULIS,
    DensityOp,
    EmptyBranchError,
    Ket,
    State,
    apply_gate,
    as_density,
    fidelity_with,
    permute,
    project,
    rx,
    rz,
)

TWO_PI = 2 * math.pi
MEASUREMENT_ORDER: tuple[int, ...] = (5, 1, 6, 4)
OUTPUT_LABELS: tuple[int, ...] = (2, 3)
OUTCOME_STRINGS = tuple("".join(bits) for bits in itertools.product("01", repeat=4))
MODES = ("postselect", "feedforward")


@dataclass(frozen=True)
class Angles:
    """Measurement angles for qubits 5 (alpha), 1 (beta), 6 (alpha') and 4 (beta')."""

    alpha: float = 0.0
    beta: float = 0.0
    alpha_prime: float = 0.0
    beta_prime: float = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "alpha_prime", "beta_prime"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val % TWO_PI)

    def for_label(self, label: int) -> float:
        return {5: self.alpha, 1: self.beta, 6: self.alpha_prime, 4: self.beta_prime}[label]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "alpha_prime": self.alpha_prime,
            "beta_prime": self.beta_prime,
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "Angles":
        extra = set(doc) - {"alpha", "beta", "alpha_prime", "beta_prime"}
        if extra:
            raise ValueError(f"unknown angle fields: {sorted(extra)}")
        return cls(**{k: float(v) for k, v in doc.items()})


def b_direction(alpha: float, bit: int) -> np.ndarray:
    """|alpha_+> for bit 0, |alpha_-> for bit 1."""
    return np.array([1, (-1) ** bit * np.exp(1j * alpha)], dtype=complex) / np.sqrt(2)


def measure_B(
    state: State,
    qubit: int,
    alpha: float,
    forced: int | None = None,
    rng: np.random.Generator | None = None,
    labels: tuple[int, ...] | None = None,
) -> tuple[int, float, State | None]:
    """Measure one qubit in ``B(alpha)`` and remove it from the register.

    ``qubit`` is a register slot, or a label looked up in ``labels`` when given.
    A ``forced`` bit selects the branch; otherwise the outcome is sampled from
    ``rng``.  Forcing a branch of zero probability raises ``EmptyBranchError``.
    """
    slot = labels.index(qubit) if labels is not None else qubit
    if forced is not None:
        if forced not in (0, 1):
            raise ValueError("forced outcome must be 0 or 1")
        prob, post = project(state, slot, b_direction(alpha, forced))
        if post is None:
            raise EmptyBranchError(f"branch {forced} of qubit {qubit} has probability {prob:.3g}")
        return forced, prob, post
    rng = np.random.default_rng() if rng is None else rng
    p0, post0 = project(state, slot, b_direction(alpha, 0))
    if post0 is not None and rng.random() < p0:
        return 0, p0, post0
    p1, post1 = project(state, slot, b_direction(alpha, 1))
    if post1 is None:
        return 0, p0, post0
    return 1, p1, post1


def encoded_inputs(a: Angles) -> tuple[np.ndarray, np.ndarray]:
    """Logical control and target inputs of the CNOT for angles ``a``."""
    control = rx(a.beta_prime) @ rz(a.alpha_prime) @ KET_PLUS
    target = H @ rx(a.beta) @ rz(a.alpha) @ KET_PLUS
    return control, target


def reference_circuit(a: Angles) -> Ket:
    """Expected pattern output; slot 0 is qubit 2 (control), slot 1 qubit 3 (target)."""
    control = rx(a.beta_prime) @ rz(a.alpha_prime) @ KET_PLUS
    target = H @ rx(a.beta) @ rz(a.alpha) @ KET_PLUS
    return Ket(np.kron(I2, H) @ CNOT @ np.kron(control, target))


def compensate_h(state: State) -> State:
    """Undo the Hadamard that follows the CNOT on the target (slot 1)."""
    if state.n_qubits != 2:
        raise ValueError("compensate_h expects a two-qubit state")
    return apply_gate(state, [1], H)


@dataclass(frozen=True)
class Correction:
    """Feed-forward rule for one outcome string.

    ``paulis`` are applied to qubits 2 and 3 after the last measurement;
    ``flip_beta``/``flip_beta_prime`` negate the angles of qubits 1 and 4.
    """

    paulis: tuple[str, str]
    flip_beta: bool = False
    flip_beta_prime: bool = False


@dataclass(frozen=True)
class CorrectionTable:
    entries: Mapping[str, Correction]

    def __getitem__(self, outcome: str) -> Correction:
        return self.entries[outcome]

    def to_dict(self) -> dict:
        return {
            k: {"paulis": "".join(c.paulis), "flip_beta": c.flip_beta, "flip_beta_prime": c.flip_beta_prime}
            for k, c in self.entries.items()
        }


def _adapted(a: Angles, corr: Correction | None) -> Angles:
    if corr is None:
        return a
    return Angles(
        a.alpha,
        -a.beta if corr.flip_beta else a.beta,
        a.alpha_prime,
        -a.beta_prime if corr.flip_beta_prime else a.beta_prime,
    )


def _undress(resource: State) -> tuple[State, list[int]]:
    labels = list(LC6_LABELS)
    for lab in SPATIAL_LABELS:
        resource = apply_gate(resource, [labels.index(lab)], H)
    return resource, labels


def _finish(state: State, labels: list[int], corr: Correction | None) -> State:
    state = permute(state, [labels.index(lab) for lab in OUTPUT_LABELS])
    if corr is not None:
        state = apply_gate(state, [0, 1], np.kron(PAULIS[corr.paulis[0]], PAULIS[corr.paulis[1]]))
    return state


def run_branch(
    a: Angles,
    outcome: str,
    table: CorrectionTable | None = None,
    resource: State | None = None,
) -> tuple[float, State]:
    """Force the outcome string (bits for qubits 5, 1, 6, 4) through the pattern.

    With a table, angle flips and the Pauli correction for ``outcome`` are
    applied; without one the bare branch output is returned.
    """
    if len(outcome) != 4 or set(outcome) - {"0", "1"}:
        raise ValueError(f"bad outcome string {outcome!r}")
    corr = table[outcome] if table is not None else None
    angles = _adapted(a, corr)
    state, labels = _undress(build_lc6() if resource is None else resource)
    prob = 1.0
    for lab, bit in zip(MEASUREMENT_ORDER, outcome):
        _, p, state = measure_B(state, lab, angles.for_label(lab), forced=int(bit), labels=tuple(labels))
        labels.remove(lab)
        prob *= p
    return prob, _finish(state, labels, corr)


def derive_corrections(n_samples: int = 25, seed: int = 2024) -> CorrectionTable:
    """Find, per outcome string, angle flips plus a Pauli pair restoring the reference output.

    Candidates without angle flips are tried first.  Raises ``RuntimeError`` if
    some outcome admits no correction, which would indicate a convention error.
    """
    rng = np.random.default_rng(seed)
    samples = [Angles(*rng.uniform(0, TWO_PI, 4)) for _ in range(n_samples)]
    refs = [reference_circuit(a) for a in samples]
    entries = {}
    for outcome in OUTCOME_STRINGS:
        entries[outcome] = _search_correction(outcome, samples, refs)
    return CorrectionTable(entries)


def _search_correction(outcome: str, samples: list[Angles], refs: list[Ket]) -> Correction:
    for flip_b, flip_bp in itertools.product((False, True), repeat=2):
        probe = CorrectionTable({outcome: Correction(("I", "I"), flip_b, flip_bp)})
        outs = [run_branch(a, outcome, probe)[1].amplitudes for a in samples]
        for p2, p3 in itertools.product("IXYZ", repeat=2):
            corr = np.kron(PAULIS[p2], PAULIS[p3])
            if all(fidelity_with(ref, Ket(corr @ out)) >= 1 - 1e-9 for ref, out in zip(refs, outs)):
                return Correction((p2, p3), flip_b, flip_bp)
    raise RuntimeError(f"no feed-forward correction found for outcome {outcome}")


@functools.lru_cache(maxsize=None)
def default_corrections() -> CorrectionTable:
    return derive_corrections()


@dataclass
class OutcomeRecord:
    """Measured bits per qubit label and the probability of the realized branch.

    In postselect mode ``acceptance`` is the probability of the all-zero
    branch, the only one kept.
    """

    outcomes: dict[int, int]
    probability: float
    mode: str
    acceptance: float | None = None
    correction: Correction | None = None

    @property
    def outcome_string(self) -> str:
        return "".join(str(self.outcomes[lab]) for lab in MEASUREMENT_ORDER)

    def to_dict(self) -> dict:
        doc = {
            "mode": self.mode,
            "outcomes": {str(lab): self.outcomes[lab] for lab in MEASUREMENT_ORDER},
            "outcome_string": self.outcome_string,
            "probability": self.probability,
        }
        if self.acceptance is not None:
            doc["acceptance"] = self.acceptance
        if self.correction is not None:
            doc["correction"] = {
                "paulis": "".join(self.correction.paulis),
                "flip_beta": self.correction.flip_beta,
                "flip_beta_prime": self.correction.flip_beta_prime,
            }
        return doc


def run_cnot(
    a: Angles,
    mode: str = "feedforward",
    seed: int | np.random.Generator | None = None,
    resource: State | None = None,
    table: CorrectionTable | None = None,
) -> tuple[State, OutcomeRecord]:
    """Run the pattern once.

    ``feedforward`` samples every outcome, flips the angles of qubits 1 and 4 as
    the earlier outcomes require and applies the Pauli correction, so the output
    is deterministic.  ``postselect`` keeps only the all-zero branch (no
    corrections), as in an experiment without active feed-forward.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    resource = build_lc6() if resource is None else resource
    if mode == "postselect":
        prob, out = run_branch(a, "0000", None, resource)
        record = OutcomeRecord({lab: 0 for lab in MEASUREMENT_ORDER}, prob, mode, acceptance=prob)
        return out, record

    table = default_corrections() if table is None else table
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    state, labels = _undress(resource)
    bits: dict[int, int] = {}
    prob = 1.0
    for lab in MEASUREMENT_ORDER:
        angle = a.for_label(lab)
        if lab == 1 and bits[5]:
            angle = -angle
        if lab == 4 and bits[6]:
            angle = -angle
        bit, p, state = measure_B(state, lab, angle, rng=rng, labels=tuple(labels))
        labels.remove(lab)
        bits[lab] = bit
        prob *= p
    outcome = "".join(str(bits[lab]) for lab in MEASUREMENT_ORDER)
    corr = table[outcome]
    if corr.flip_beta != bool(bits[5]) or corr.flip_beta_prime != bool(bits[6]):
        raise RuntimeError(f"correction table for {outcome} disagrees with the adaptive angle rule")
    return _finish(state, labels, corr), OutcomeRecord(bits, prob, mode, correction=corr)


def branch_distribution(
    a: Angles, resource: State | None = None, table: CorrectionTable | None = None
) -> dict[str, float]:
    """Probability of each outcome string under feed-forward (or bare, if ``table`` is None)."""
    resource = build_lc6() if resource is None else resource
    return {s: run_branch(a, s, table, resource)[0] for s in OUTCOME_STRINGS}


def gate_output(a: Angles, mode: str = "feedforward", resource: State | None = None) -> State:
    """Deterministic output state of the gate.

    For feed-forward this is the outcome-averaged, corrected output; for
    postselection the normalized all-zero branch.  A pure resource in
    feed-forward mode returns a ket, since every corrected branch agrees.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    resource = build_lc6() if resource is None else resource
    if mode == "postselect":
        return run_branch(a, "0000", None, resource)[1]
    table = default_corrections()
    if isinstance(resource, Ket):
        return run_branch(a, "0000", table, resource)[1]
    acc = np.zeros((4, 4), dtype=complex)
    for s in OUTCOME_STRINGS:
        try:
            p, out = run_branch(a, s, table, resource)
        except EmptyBranchError:
            continue
        acc += p * as_density(out).matrix
    return DensityOp(acc / np.trace(acc).real)


_HALF_PI_SET = (math.pi / 2, -math.pi / 2)
_ZERO_PI_SET = (0.0, math.pi)
_LOGICAL = {
    ("Z", 0): np.array([1, 0], dtype=complex),
    ("Z", 1): np.array([0, 1], dtype=complex),
    ("X", 0): np.array([1, 1], dtype=complex) / np.sqrt(2),
    ("X", 1): np.array([1, -1], dtype=complex) / np.sqrt(2),
}
INPUT_NAMES = {("Z", 0): "H", ("Z", 1): "V", ("X", 0): "+", ("X", 1): "-"}


def logical_state(basis: str, bit: int) -> np.ndarray:
    try:
        return _LOGICAL[(basis, int(bit))]
    except KeyError:
        raise ValueError(f"unsupported input ({basis!r}, {bit!r}); basis must be Z or X") from None


def input_encoding(control: tuple[str, int], target: tuple[str, int]) -> Angles:
    """Measurement angles that prepare the requested logical inputs.

    A Z-basis control uses alpha', beta' in {+-pi/2}; an X-basis control uses
    {0, pi}.  For the target the roles are swapped, because its encoding ends
    with a Hadamard.  The first matching tuple in a fixed enumeration is used.
    """
    want_c = logical_state(*control)
    want_t = logical_state(*target)
    c_set = _HALF_PI_SET if control[0] == "Z" else _ZERO_PI_SET
    t_set = _ZERO_PI_SET if target[0] == "Z" else _HALF_PI_SET
    c_angles = next(
        (ap, bp)
        for ap, bp in itertools.product(c_set, repeat=2)
        if abs(np.vdot(want_c, rx(bp) @ rz(ap) @ KET_PLUS)) ** 2 > 1 - 1e-12
    )
    t_angles = next(
        (al, be)
        for al, be in itertools.product(t_set, repeat=2)
        if abs(np.vdot(want_t, H @ rx(be) @ rz(al) @ KET_PLUS)) ** 2 > 1 - 1e-12
    )
    return Angles(t_angles[0], t_angles[1], c_angles[0], c_angles[1])


def cnot_runner(mode: str = "feedforward", resource: State | None = None) -> Callable[[Angles], State]:
    """Gate runner returning the H-compensated output for given angles."""
    resource = build_lc6() if resource is None else resource
    return lambda a: compensate_h(gate_output(a, mode, resource))
