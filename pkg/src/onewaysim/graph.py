"""Graph and cluster states, stabilizer generators, and the hyper-entangled
six-qubit resource state.

The six-qubit register is stored in the order of photon/mode labels
``(5, 1, 3, 2, 4, 6)``; qubits 1-4 are polarization qubits of photons 1-4 and
qubits 5, 6 are the spatial (path) qubits of photons 1 and 4.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .statevec import (
    CZ,
    H,
    KET_0,
    KET_1,
    KET_MINUS,
    KET_PLUS,
    Ket,
    ObservableExpr,
    apply_gate,
    expectation,
    fidelity_with,
    permute,
    product_ket,
)

LC6_LABELS: tuple[int, ...] = (5, 1, 3, 2, 4, 6)
LC6_SLOT = {label: slot for slot, label in enumerate(LC6_LABELS)}
C4_LABELS: tuple[int, ...] = (1, 2, 3, 4)
SPATIAL_LABELS = (5, 6)

_CONJ_H = {"I": ("I", 1), "X": ("Z", 1), "Z": ("X", 1), "Y": ("Y", -1)}


@dataclass(frozen=True)
class GraphSpec:
    n_vertices: int
    edges: frozenset = frozenset()
    dressings: Mapping[int, str] = field(default_factory=dict)

    def __post_init__(self):
        edges = set()
        for e in self.edges:
            a, b = (int(v) for v in e)
            if a == b:
                raise ValueError(f"self-loop on vertex {a}")
            for v in (a, b):
                if not 0 <= v < self.n_vertices:
                    raise ValueError(f"vertex {v} out of range")
            edges.add(frozenset((a, b)))
        object.__setattr__(self, "edges", frozenset(edges))
        dressings = {}
        for v, lab in dict(self.dressings).items():
            v = int(v)
            if not 0 <= v < self.n_vertices:
                raise ValueError(f"dressing on vertex {v} out of range")
            if lab not in ("I", "H"):
                raise ValueError(f"unsupported dressing {lab!r} (use 'I' or 'H')")
            if lab == "H":
                dressings[v] = "H"
        object.__setattr__(self, "dressings", dressings)

    def neighbors(self, v: int) -> list[int]:
        return sorted(u for e in self.edges if v in e for u in e if u != v)

    def to_json(self) -> str:
        return json.dumps(
            {
                "n": self.n_vertices,
                "edges": sorted(sorted(e) for e in self.edges),
                "dressings": {str(v): lab for v, lab in sorted(self.dressings.items())},
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "GraphSpec":
        doc = json.loads(text)
        extra = set(doc) - {"n", "edges", "dressings"}
        if extra:
            raise ValueError(f"unknown graph fields: {sorted(extra)}")
        return cls(
            int(doc["n"]),
            frozenset(tuple(e) for e in doc.get("edges", [])),
            {int(v): lab for v, lab in doc.get("dressings", {}).items()},
        )


def chain(n: int, dressings: Mapping[int, str] | None = None) -> GraphSpec:
    """Linear cluster 0-1-...-(n-1)."""
    return GraphSpec(n, frozenset((i, i + 1) for i in range(n - 1)), dressings or {})


def labelled_chain(order: Sequence[int], hadamards: Iterable[int] = ()) -> GraphSpec:
    """Chain through qubit labels ``order`` on the ``(5,1,3,2,4,6)`` register."""
    slots = [LC6_SLOT[lab] for lab in order]
    edges = frozenset(zip(slots[:-1], slots[1:]))
    return GraphSpec(len(LC6_LABELS), edges, {LC6_SLOT[lab]: "H" for lab in hadamards})


CANONICAL_LC6_GRAPH = labelled_chain((5, 1, 3, 2, 4, 6), hadamards=SPATIAL_LABELS)


@dataclass(frozen=True)
class PauliString:
    labels: str
    sign: int = 1

    def __post_init__(self):
        if set(self.labels) - set("IXYZ"):
            raise ValueError(f"bad Pauli labels {self.labels!r}")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def __str__(self) -> str:
        return ("-" if self.sign < 0 else "") + self.labels

    def to_observable(self) -> ObservableExpr:
        return ObservableExpr(len(self.labels), ((float(self.sign), tuple(self.labels)),))


def stabilizers(spec: GraphSpec) -> list[PauliString]:
    """Generator ``g``: X on vertex ``g``, Z on its neighbours, then H-dressed."""
    gens = []
    for g in range(spec.n_vertices):
        labels = ["I"] * spec.n_vertices
        labels[g] = "X"
        for u in spec.neighbors(g):
            labels[u] = "Z"
        sign = 1
        for v in spec.dressings:
            labels[v], s = _CONJ_H[labels[v]]
            sign *= s
        gens.append(PauliString("".join(labels), sign))
    return gens


def build_graph_state(spec: GraphSpec) -> Ket:
    n = spec.n_vertices
    state = product_ket(*([KET_PLUS] * n))
    for e in sorted(sorted(e) for e in spec.edges):
        state = apply_gate(state, e, CZ)
    for v in sorted(spec.dressings):
        state = apply_gate(state, [v], H)
    return state


def build_c4() -> Ket:
    """Four-photon polarization cluster in register order (1, 2, 3, 4)."""
    h, v, p, m = KET_0, KET_1, KET_PLUS, KET_MINUS
    vec = (
        np.kron(np.kron(p, h), np.kron(h, p))
        + np.kron(np.kron(p, v), np.kron(h, m))
        + np.kron(np.kron(m, h), np.kron(v, p))
        - np.kron(np.kron(m, v), np.kron(v, m))
    ) / 2
    return Ket(vec)


def pbs_expand(state: Ket, pol_qubit: int, insert_position: int) -> Ket:
    """Copy a polarization qubit's computational value onto a new path qubit.

    ``a|H> + b|V>  ->  a|H H'> + b|V V'>``.  The new qubit sits at
    ``insert_position`` of the enlarged register.
    """
    n = state.n_qubits
    if not 0 <= pol_qubit < n:
        raise IndexError(f"qubit {pol_qubit} out of range")
    if not 0 <= insert_position <= n:
        raise IndexError(f"insert position {insert_position} out of range")
    t = state.tensor()
    out = np.zeros((2,) * n + (2,), dtype=complex)
    for b in (0, 1):
        idx = [slice(None)] * (n + 1)
        idx[pol_qubit] = b
        idx[n] = b
        src = [slice(None)] * n
        src[pol_qubit] = b
        out[tuple(idx)] = t[tuple(src)]
    out = np.moveaxis(out, n, insert_position)
    return Ket(out.reshape(-1))


def build_lc6() -> Ket:
    """Six-qubit hyper-entangled state in register order (5, 1, 3, 2, 4, 6)."""
    state = build_c4()  # (1, 2, 3, 4)
    state = pbs_expand(state, 0, 0)  # (5, 1, 2, 3, 4)
    state = pbs_expand(state, 4, 5)  # (5, 1, 2, 3, 4, 6)
    return permute(state, [0, 1, 3, 2, 4, 5])


@dataclass
class ChainReport:
    overlap: float
    stabilizer_values: dict[str, float]
    passed: bool

    def to_dict(self) -> dict:
        return {
            "overlap": self.overlap,
            "stabilizers": self.stabilizer_values,
            "passed": self.passed,
        }


def assert_lc6_is_dressed_chain(spec: GraphSpec | None = None) -> ChainReport:
    """Compare the built resource state with a (dressed) graph state.

    Passes iff the squared overlap is at least 1 - 1e-10.  Stabilizer values are
    the generators of ``spec`` evaluated on the built state.
    """
    spec = CANONICAL_LC6_GRAPH if spec is None else spec
    built = build_lc6()
    overlap = fidelity_with(build_graph_state(spec), built)
    values = {str(g): expectation(built, g.to_observable()) for g in stabilizers(spec)}
    return ChainReport(overlap, values, overlap >= 1 - 1e-10)
