"""Dense state-vector and density-matrix primitives.

Qubit ``q`` of an ``n``-qubit register is bit ``n - 1 - q`` of the amplitude
index, i.e. qubit 0 is the most significant bit.  ``|0>`` stands for H
polarization (or the first spatial path) and ``|1>`` for V polarization (or the
second path).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence, Union

import numpy as np

NORM_TOL = 1e-10
UNITARY_TOL = 1e-10
EMPTY_BRANCH_TOL = 1e-12

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
P0 = np.array([[1, 0], [0, 0]], dtype=complex)
P1 = np.array([[0, 0], [0, 1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.array([[1, 0], [0, 1j]], dtype=complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)

FACTORS = {"I": I2, "X": X, "Y": Y, "Z": Z, "P0": P0, "P1": P1}
PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}

KET_0 = np.array([1, 0], dtype=complex)
KET_1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / np.sqrt(2)
KET_MINUS = np.array([1, -1], dtype=complex) / np.sqrt(2)
KET_R = np.array([1, 1j], dtype=complex) / np.sqrt(2)
KET_L = np.array([1, -1j], dtype=complex) / np.sqrt(2)


class EmptyBranchError(ValueError):
    """Raised when a measurement is forced onto a branch of zero probability."""


def rz(alpha: float) -> np.ndarray:
    """exp(i alpha Z / 2)."""
    return np.diag([np.exp(0.5j * alpha), np.exp(-0.5j * alpha)])


def rx(beta: float) -> np.ndarray:
    """exp(i beta X / 2)."""
    c, s = np.cos(beta / 2), np.sin(beta / 2)
    return np.array([[c, 1j * s], [1j * s, c]])


def _n_from_dim(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if n < 0 or 2**n != dim:
        raise ValueError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True, eq=False)
class Ket:
    """Normalized pure state over ``n_qubits`` qubits."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        _n_from_dim(amps.size)
        norm = np.linalg.norm(amps)
        if abs(norm - 1) > 1e-8:
            raise ValueError(f"ket is not normalized (norm {norm:.3g})")
        amps = amps / norm
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def from_vector(cls, vec) -> "Ket":
        """Normalize an arbitrary non-zero vector."""
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        norm = np.linalg.norm(vec)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(vec / norm)

    @property
    def n_qubits(self) -> int:
        return _n_from_dim(self.amplitudes.size)

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape((2,) * self.n_qubits)

    def __len__(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True, eq=False)
class DensityOp:
    """Hermitian, positive, unit-trace operator over ``n_qubits`` qubits."""

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.array(self.matrix, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError("density operator must be a square matrix")
        _n_from_dim(mat.shape[0])
        if not np.allclose(mat, mat.conj().T, atol=NORM_TOL):
            raise ValueError("density operator is not Hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1) > NORM_TOL:
            raise ValueError(f"density operator has trace {tr:.12g}")
        mat = 0.5 * (mat + mat.conj().T)
        if np.linalg.eigvalsh(mat).min() < -1e-9:
            raise ValueError("density operator is not positive semidefinite")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @classmethod
    def from_ket(cls, ket: Ket) -> "DensityOp":
        return cls(np.outer(ket.amplitudes, ket.amplitudes.conj()))

    @classmethod
    def maximally_mixed(cls, n: int) -> "DensityOp":
        return cls(np.eye(2**n, dtype=complex) / 2**n)

    @property
    def n_qubits(self) -> int:
        return _n_from_dim(self.matrix.shape[0])


State = Union[Ket, DensityOp]


def basis_ket(n: int, bitstring: str) -> Ket:
    """Computational basis state ``|bitstring>``; character ``q`` is qubit ``q``."""
    if len(bitstring) != n or set(bitstring) - {"0", "1"}:
        raise ValueError(f"bitstring {bitstring!r} does not describe {n} qubits")
    amps = np.zeros(2**n, dtype=complex)
    amps[int(bitstring, 2) if n else 0] = 1
    return Ket(amps)


def product_ket(*factors) -> Ket:
    """Tensor product of single-qubit (or larger) amplitude vectors."""
    vec = np.ones(1, dtype=complex)
    for f in factors:
        vec = np.kron(vec, np.asarray(f, dtype=complex))
    return Ket(vec)


def _check_qubits(qubits: Sequence[int], n: int):
    if len(set(qubits)) != len(qubits):
        raise ValueError(f"repeated qubit index in {list(qubits)}")
    for q in qubits:
        if not 0 <= q < n:
            raise IndexError(f"qubit {q} out of range for {n} qubits")


def _apply_to_axes(tensor: np.ndarray, qubits: Sequence[int], op: np.ndarray) -> np.ndarray:
    k = len(qubits)
    op_t = op.reshape((2,) * (2 * k))
    out = np.tensordot(op_t, tensor, axes=(list(range(k, 2 * k)), list(qubits)))
    return np.moveaxis(out, list(range(k)), list(qubits))


def apply_gate(state: State, qubits: Sequence[int], unitary) -> State:
    """Apply ``unitary`` to the listed qubits (first listed = most significant)."""
    qubits = [int(q) for q in qubits]
    unitary = np.asarray(unitary, dtype=complex)
    n = state.n_qubits
    _check_qubits(qubits, n)
    dim = 2 ** len(qubits)
    if unitary.shape != (dim, dim):
        raise ValueError(f"gate of shape {unitary.shape} does not act on {len(qubits)} qubits")
    if not np.allclose(unitary.conj().T @ unitary, np.eye(dim), atol=UNITARY_TOL):
        raise ValueError("gate matrix is not unitary")
    if isinstance(state, Ket):
        out = _apply_to_axes(state.tensor(), qubits, unitary)
        return Ket(out.reshape(-1))
    rho = state.matrix.reshape((2,) * (2 * n))
    rho = _apply_to_axes(rho, qubits, unitary)
    rho = _apply_to_axes(rho, [q + n for q in qubits], unitary.conj())
    return DensityOp(rho.reshape(2**n, 2**n))


def permute(state: State, order: Sequence[int]) -> State:
    """Reorder qubits so that new qubit ``i`` is old qubit ``order[i]``."""
    n = state.n_qubits
    if sorted(order) != list(range(n)):
        raise ValueError(f"{list(order)} is not a permutation of {n} qubits")
    if isinstance(state, Ket):
        return Ket(state.tensor().transpose(order).reshape(-1))
    rho = state.matrix.reshape((2,) * (2 * n))
    rho = rho.transpose(list(order) + [q + n for q in order])
    return DensityOp(rho.reshape(2**n, 2**n))


def as_density(state: State) -> DensityOp:
    return state if isinstance(state, DensityOp) else DensityOp.from_ket(state)


@dataclass(frozen=True)
class ObservableExpr:
    """Real-weighted sum of tensor products of single-qubit Hermitian factors.

    Each term is ``(coefficient, labels)`` with one label per qubit drawn from
    ``I, X, Y, Z, P0, P1``.
    """

    n_qubits: int
    terms: tuple[tuple[float, tuple[str, ...]], ...]

    def __post_init__(self):
        clean = []
        for coef, labels in self.terms:
            labels = tuple(labels)
            if len(labels) != self.n_qubits:
                raise ValueError(f"term {labels} does not cover {self.n_qubits} qubits")
            bad = set(labels) - set(FACTORS)
            if bad:
                raise ValueError(f"unknown factor labels {sorted(bad)}")
            clean.append((float(coef), labels))
        object.__setattr__(self, "terms", tuple(clean))

    @classmethod
    def term(cls, n: int, factors: Mapping[int, str], coef: float = 1.0) -> "ObservableExpr":
        """Single product term; qubits missing from ``factors`` carry identity."""
        labels = ["I"] * n
        for q, lab in factors.items():
            _check_qubits([q], n)
            labels[q] = lab
        return cls(n, ((coef, tuple(labels)),))

    @classmethod
    def identity(cls, n: int) -> "ObservableExpr":
        return cls(n, ((1.0, ("I",) * n),))

    def __add__(self, other: "ObservableExpr") -> "ObservableExpr":
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        return ObservableExpr(self.n_qubits, self.terms + other.terms)

    def __mul__(self, other):
        if isinstance(other, ObservableExpr):
            return self._compose(other)
        return ObservableExpr(self.n_qubits, tuple((c * float(other), l) for c, l in self.terms))

    __rmul__ = __mul__

    def __neg__(self) -> "ObservableExpr":
        return self * -1.0

    def __sub__(self, other: "ObservableExpr") -> "ObservableExpr":
        return self + (-other)

    def _compose(self, other: "ObservableExpr") -> "ObservableExpr":
        # Operator product restricted to factors acting on disjoint qubits.
        if other.n_qubits != self.n_qubits:
            raise ValueError("qubit counts differ")
        terms = []
        for c1, l1 in self.terms:
            for c2, l2 in other.terms:
                labels = []
                for a, b in zip(l1, l2):
                    if a != "I" and b != "I":
                        raise ValueError("product of observables with overlapping support")
                    labels.append(b if a == "I" else a)
                terms.append((c1 * c2, tuple(labels)))
        return ObservableExpr(self.n_qubits, tuple(terms))

    def simplify(self) -> "ObservableExpr":
        """Merge equal label tuples and drop vanishing coefficients."""
        acc: dict[tuple[str, ...], float] = {}
        for c, l in self.terms:
            acc[l] = acc.get(l, 0.0) + c
        return ObservableExpr(self.n_qubits, tuple((c, l) for l, c in acc.items() if abs(c) > 1e-15))

    def to_matrix(self) -> np.ndarray:
        dim = 2**self.n_qubits
        out = np.zeros((dim, dim), dtype=complex)
        for coef, labels in self.terms:
            m = np.ones((1, 1), dtype=complex)
            for lab in labels:
                m = np.kron(m, FACTORS[lab])
            out += coef * m
        return out

    def measurement_bases(self) -> list[str | None]:
        """Per-qubit local basis (``X``, ``Y`` or ``Z``) shared by every term.

        ``None`` marks qubits where every factor is the identity.  Raises
        ``ValueError`` if two terms need incompatible bases on one qubit.
        """
        bases: list[str | None] = [None] * self.n_qubits
        for _, labels in self.terms:
            for q, lab in enumerate(labels):
                if lab == "I":
                    continue
                basis = "Z" if lab in ("Z", "P0", "P1") else lab
                if bases[q] not in (None, basis):
                    raise ValueError(f"qubit {q} needs both {bases[q]} and {basis} measurements")
                bases[q] = basis
        return bases


def p_plus(n: int, i: int, j: int) -> ObservableExpr:
    """|00><00| + |11><11| on qubits ``i, j``."""
    return ObservableExpr.term(n, {i: "P0", j: "P0"}) + ObservableExpr.term(n, {i: "P1", j: "P1"})


def p_minus(n: int, i: int, j: int) -> ObservableExpr:
    """|00><00| - |11><11| on qubits ``i, j``."""
    return ObservableExpr.term(n, {i: "P0", j: "P0"}) - ObservableExpr.term(n, {i: "P1", j: "P1"})


def _term_on_tensor(tensor: np.ndarray, labels: Iterable[str]) -> np.ndarray:
    for q, lab in enumerate(labels):
        if lab != "I":
            tensor = _apply_to_axes(tensor, [q], FACTORS[lab])
    return tensor


def expectation(state: State, obs: ObservableExpr) -> float:
    """tr(rho O) evaluated term by term without forming the full operator."""
    n = state.n_qubits
    if obs.n_qubits != n:
        raise ValueError(f"observable on {obs.n_qubits} qubits, state on {n}")
    total = 0.0
    if isinstance(state, Ket):
        psi = state.tensor()
        for coef, labels in obs.terms:
            total += coef * np.vdot(psi, _term_on_tensor(psi, labels)).real
        return float(total)
    dim = 2**n
    rho = state.matrix.reshape((2,) * n + (dim,))
    for coef, labels in obs.terms:
        out = _term_on_tensor(rho, labels).reshape(dim, dim)
        total += coef * np.trace(out).real
    return float(total)


def fidelity_with(pure: Ket, rho: State) -> float:
    """<psi|rho|psi>; for a ket argument this is |<psi|phi>|^2."""
    if pure.n_qubits != rho.n_qubits:
        raise ValueError("qubit counts differ")
    psi = pure.amplitudes
    if isinstance(rho, Ket):
        val = abs(np.vdot(psi, rho.amplitudes)) ** 2
    else:
        val = np.vdot(psi, rho.matrix @ psi).real
    return float(min(max(val, 0.0), 1.0))


def project(state: State, qubit: int, direction) -> tuple[float, State | None]:
    """Project ``qubit`` onto ``direction`` and remove it from the register.

    Returns the branch probability and the normalized post-measurement state.
    A branch with probability below 1e-12 yields ``(prob, None)``.
    """
    n = state.n_qubits
    _check_qubits([qubit], n)
    d = np.asarray(direction, dtype=complex).reshape(-1)
    if d.shape != (2,) or abs(np.linalg.norm(d) - 1) > NORM_TOL:
        raise ValueError("direction must be a normalized single-qubit vector")
    bra = d.conj()
    if isinstance(state, Ket):
        post = np.tensordot(bra, state.tensor(), axes=([0], [qubit])).reshape(-1)
        prob = float(np.vdot(post, post).real)
        if prob < EMPTY_BRANCH_TOL:
            return prob, None
        return prob, Ket(post / np.sqrt(prob))
    rho = state.matrix.reshape((2,) * (2 * n))
    rho = np.tensordot(bra, rho, axes=([0], [qubit]))
    rho = np.tensordot(d, rho, axes=([0], [qubit + n - 1]))
    dim = 2 ** (n - 1)
    rho = rho.reshape(dim, dim)
    prob = float(np.trace(rho).real)
    if prob < EMPTY_BRANCH_TOL:
        return prob, None
    return prob, DensityOp(rho / prob)


def partial_trace(state: State, keep: Sequence[int]) -> DensityOp:
    """Reduced density operator on ``keep`` (in the listed order)."""
    rho = as_density(state)
    n = rho.n_qubits
    _check_qubits(keep, n)
    drop = [q for q in range(n) if q not in keep]
    t = rho.matrix.reshape((2,) * (2 * n))
    order = list(keep) + drop + [q + n for q in keep] + [q + n for q in drop]
    t = t.transpose(order)
    dk, dd = 2 ** len(keep), 2 ** len(drop)
    t = t.reshape(dk, dd, dk, dd)
    return DensityOp(np.einsum("ajbj->ab", t))
