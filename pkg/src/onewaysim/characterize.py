"""Figures of merit: the fidelity-bound observable, truth-table fidelities,
process-fidelity and concurrence bounds, and the quantum-parallelism test."""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .graph import LC6_LABELS, LC6_SLOT, build_lc6
from .mbqc import Angles, input_encoding
from .statevec import (
    KET_0,
    KET_1,
    KET_L,
    KET_MINUS,
    KET_PLUS,
    KET_R,
    ObservableExpr,
    State,
    Ket,
    expectation,
    p_minus,
    p_plus,
)

N6 = len(LC6_LABELS)
WITNESS_PREFACTOR = 1 / 32
GME_THRESHOLD = 0.5
PARALLELISM_THRESHOLD = 2 / 3

# Row-by-row order of the measured settings, with each term's weight inside the
# braces of the witness (multiply by WITNESS_PREFACTOR for the operator weight).
TABLE1_LAYOUT: tuple[tuple[str, int], ...] = (
    ("X5Y1Y3I2X4X6", 1),
    ("X5Y1Y3I2Y4Y6", -1),
    ("X5Y1X3X2Y4X6", 1),
    ("X5Y1X3X2X4Y6", 1),
    ("Y5X1Y3I2X4X6", 1),
    ("Y5X1Y3I2Y4Y6", -1),
    ("Y5X1X3X2Y4X6", 1),
    ("Y5X1X3X2X4Y6", 1),
    ("P-51X3Z2P+46", 4),
    ("P-51Y3Y2P-46", 4),
    ("P-51X3I2X4X6", 2),
    ("P-51Y3X2Y4X6", -2),
    ("P-51X3I2Y4Y6", -2),
    ("P-51Y3X2X4Y6", -2),
    ("X5Y1Y3Z2P+46", 2),
    ("X5Y1X3Y2P-46", -2),
    ("Y5X1Y3Z2P+46", 2),
    ("Y5X1X3Y2P-46", -2),
)

_TOKEN = re.compile(r"P([+-])(\d)(\d)|([IXYZ])(\d)")


def parse_setting(label: str) -> ObservableExpr:
    """Observable for a setting label such as ``X5Y1Y3I2X4X6`` or ``P-51X3Z2P+46``.

    Digits are qubit labels of the six-qubit register; ``P+ij``/``P-ij`` are
    ``|00><00| +- |11><11|`` on qubits ``i, j``.  Qubits not mentioned carry the
    identity.
    """
    obs = ObservableExpr.identity(N6)
    seen: set[int] = set()
    pos = 0
    for m in _TOKEN.finditer(label):
        if m.start() != pos:
            break
        pos = m.end()
        if m.group(1):
            i, j = int(m.group(2)), int(m.group(3))
            qubits = (i, j)
            block = (p_plus if m.group(1) == "+" else p_minus)(N6, _slot(i, label), _slot(j, label))
        else:
            qubits = (int(m.group(5)),)
            block = ObservableExpr.term(N6, {_slot(qubits[0], label): m.group(4)})
        if seen & set(qubits):
            raise ValueError(f"qubit repeated in setting {label!r}")
        seen.update(qubits)
        obs = obs * block
    if pos != len(label) or not label:
        raise ValueError(f"cannot parse setting label {label!r}")
    return obs


def _slot(qubit: int, label: str) -> int:
    try:
        return LC6_SLOT[qubit]
    except KeyError:
        raise ValueError(f"unknown qubit {qubit} in setting {label!r}") from None


def _t(factors: str) -> ObservableExpr:
    return parse_setting(factors)


def witness_b() -> ObservableExpr:
    """Fidelity-bound observable B for the six-qubit state, assembled from its
    printed grouping (18 settings, P blocks expanded into projector factors)."""
    pm51 = p_minus(N6, LC6_SLOT[5], LC6_SLOT[1])
    pp46 = p_plus(N6, LC6_SLOT[4], LC6_SLOT[6])
    pm46 = p_minus(N6, LC6_SLOT[4], LC6_SLOT[6])
    first = 4 * (pm51 * _t("X3Z2") * pp46 + pm51 * _t("Y3Y2") * pm46)
    second = 2 * (pm51 * (_t("X3X4X6") - _t("Y3X2Y4X6") - _t("X3Y4Y6") - _t("Y3X2X4Y6")))
    inner = 2 * (_t("Y3Z2") * pp46 - _t("X3Y2") * pm46) + (
        _t("Y3X4X6") - _t("Y3Y4Y6") + _t("X3X2X4Y6") + _t("X3X2Y4X6")
    )
    third = (_t("X5Y1") + _t("Y5X1")) * inner
    return WITNESS_PREFACTOR * (first + second + third)


@dataclass(frozen=True)
class TableSetting:
    label: str
    observable: ObservableExpr
    weight: float  # coefficient of this setting in B


def table1_settings() -> list[TableSetting]:
    return [
        TableSetting(label, parse_setting(label), coef * WITNESS_PREFACTOR)
        for label, coef in TABLE1_LAYOUT
    ]


@lru_cache(maxsize=None)
def ideal_setting_values() -> dict[str, float]:
    """Expectation of each setting on the ideal resource state (each is +-1)."""
    lc6 = build_lc6()
    return {s.label: expectation(lc6, s.observable) for s in table1_settings()}


@dataclass(frozen=True)
class SettingValue:
    label: str
    value: float
    sigma: float = 0.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError(f"negative sigma for {self.label}")
        if abs(self.value) > 1 + 3 * self.sigma + 1e-12:
            raise ValueError(f"value {self.value} of {self.label} is outside [-1, 1]")

    @property
    def observable(self) -> ObservableExpr:
        return parse_setting(self.label)


def load_table1() -> list[SettingValue]:
    """Bundled measured values of the 18 settings."""
    doc = json.loads(resources.files("onewaysim").joinpath("data/table1.json").read_text())
    return [SettingValue(s["label"], s["value"], s["sigma"]) for s in doc["settings"]]


def load_gate_fidelities() -> dict[str, tuple[float, float]]:
    """Bundled measured (value, sigma) of F_zz, F_xx and F_xz."""
    doc = json.loads(resources.files("onewaysim").joinpath("data/gate_fidelities.json").read_text())
    return {k: (doc[k]["value"], doc[k]["sigma"]) for k in ("f_zz", "f_xx", "f_xz")}


def _by_label(values: Iterable[SettingValue]) -> dict[str, SettingValue]:
    out: dict[str, SettingValue] = {}
    for v in values:
        if v.label in out:
            raise ValueError(f"duplicate setting {v.label}")
        out[v.label] = v
    return out


def fidelity_lower_bound(values: Iterable[SettingValue]) -> tuple[float, float]:
    """tr(B rho) from measured settings and its Gaussian-propagated sigma."""
    table = _by_label(values)
    missing = [lab for lab, _ in TABLE1_LAYOUT if lab not in table]
    if missing:
        raise ValueError(f"missing settings: {', '.join(missing)}")
    extra = set(table) - {lab for lab, _ in TABLE1_LAYOUT}
    if extra:
        raise ValueError(f"unknown settings: {', '.join(sorted(extra))}")
    bound = 0.0
    var = 0.0
    for lab, coef in TABLE1_LAYOUT:
        w = coef * WITNESS_PREFACTOR
        bound += w * table[lab].value
        var += (w * table[lab].sigma) ** 2
    return bound, math.sqrt(var)


@dataclass(frozen=True)
class Verdict:
    passed: bool
    value: float
    threshold: float

    @property
    def margin(self) -> float:
        return self.value - self.threshold

    def to_dict(self) -> dict:
        return {"passed": self.passed, "value": self.value, "threshold": self.threshold, "margin": self.margin}


def gme_check(fidelity_bound: float) -> Verdict:
    """Genuine six-qubit entanglement is certified when the bound exceeds 1/2."""
    return Verdict(fidelity_bound > GME_THRESHOLD, fidelity_bound, GME_THRESHOLD)


# Truth tables: inputs are (control, target); outputs (control, target).
_STATES = {"H": KET_0, "V": KET_1, "+": KET_PLUS, "-": KET_MINUS, "R": KET_R, "L": KET_L}
_INPUT_BASIS = {"H": ("Z", 0), "V": ("Z", 1), "+": ("X", 0), "-": ("X", 1)}

TRUTH_TABLES = {
    "ZZ": {
        "inputs": ("HH", "HV", "VH", "VV"),
        "outputs": ("HH", "HV", "VH", "VV"),
        "events": (("HH", "HH"), ("HV", "HV"), ("VV", "VH"), ("VH", "VV")),
    },
    "XX": {
        "inputs": ("++", "+-", "-+", "--"),
        "outputs": ("++", "+-", "-+", "--"),
        "events": (("++", "++"), ("--", "+-"), ("-+", "-+"), ("+-", "--")),
    },
    "XZ": {
        "inputs": ("+H", "+V", "-H", "-V"),
        "outputs": ("RR", "RL", "LR", "LL"),
        "events": (
            ("RL", "+H"), ("LR", "+H"), ("RR", "+V"), ("LL", "+V"),
            ("RR", "-H"), ("LL", "-H"), ("RL", "-V"), ("LR", "-V"),
        ),
    },
}

GateRunner = Callable[[Angles], State]


def outcome_probability(state: State, output: str) -> float:
    """Born probability of the product outcome ``output`` (e.g. ``"RL"``)."""
    vec = np.kron(_STATES[output[0]], _STATES[output[1]])
    if isinstance(state, Ket):
        return float(abs(np.vdot(vec, state.amplitudes)) ** 2)
    return float(np.vdot(vec, state.matrix @ vec).real)


def truth_table(gate: GateRunner, spec: str) -> dict[str, dict[str, float]]:
    """P(output | input) for every input/output pair of one truth table."""
    table = TRUTH_TABLES[spec]
    out = {}
    for inp in table["inputs"]:
        state = gate(input_encoding(_INPUT_BASIS[inp[0]], _INPUT_BASIS[inp[1]]))
        out[inp] = {o: outcome_probability(state, o) for o in table["outputs"]}
    return out


def truth_table_fidelity(gate: GateRunner, spec: str) -> float:
    """F_zz, F_xx or F_xz: one quarter of the summed event probabilities."""
    if spec not in TRUTH_TABLES:
        raise ValueError(f"unknown truth table {spec!r}; expected ZZ, XX or XZ")
    probs = truth_table(gate, spec)
    return sum(probs[inp][out] for out, inp in TRUTH_TABLES[spec]["events"]) / 4


@dataclass(frozen=True)
class Clipped:
    """A bound floored at 0, together with the unclipped arithmetic value."""

    value: float
    raw: float


@dataclass(frozen=True)
class ProcessBounds:
    lower: float
    upper: float
    lower_raw: float

    def __iter__(self):
        return iter((self.lower, self.upper))


def process_bounds(f_zz: float, f_xx: float) -> ProcessBounds:
    """F_zz + F_xx - 1 <= F_process <= min(F_zz, F_xx)."""
    raw = f_zz + f_xx - 1
    return ProcessBounds(max(raw, 0.0), min(f_zz, f_xx), raw)


def concurrence_bound(f_zz: float, f_xx: float) -> Clipped:
    """Lower bound 2(F_zz + F_xx) - 3 on the concurrence the gate can generate."""
    raw = 2 * (f_zz + f_xx) - 3
    return Clipped(max(raw, 0.0), raw)


def parallelism(f_zz: float, f_xx: float, f_xz: float) -> tuple[float, Verdict]:
    avg = (f_zz + f_xx + f_xz) / 3
    return avg, Verdict(avg > PARALLELISM_THRESHOLD, avg, PARALLELISM_THRESHOLD)


@dataclass
class GateScore:
    f_zz: float
    f_xx: float
    f_xz: float
    process_lower: float
    process_upper: float
    process_lower_raw: float
    concurrence_lower: float
    concurrence_lower_raw: float
    parallel_avg: float
    parallel_pass: bool
    sigmas: dict[str, float] | None = None

    def to_dict(self) -> dict:
        doc = {
            "f_zz": self.f_zz,
            "f_xx": self.f_xx,
            "f_xz": self.f_xz,
            "process_lower": self.process_lower,
            "process_lower_raw": self.process_lower_raw,
            "process_upper": self.process_upper,
            "concurrence_lower": self.concurrence_lower,
            "concurrence_lower_raw": self.concurrence_lower_raw,
            "parallel_avg": self.parallel_avg,
            "parallel_pass": self.parallel_pass,
        }
        if self.sigmas is not None:
            doc["sigmas"] = self.sigmas
        return doc


def score_fidelities(
    f_zz: float, f_xx: float, f_xz: float, sigmas: Sequence[float] | None = None
) -> GateScore:
    """Derived figures from the three truth-table fidelities.

    With ``sigmas`` for (F_zz, F_xx, F_xz), independent errors are propagated to
    every derived quantity.
    """
    bounds = process_bounds(f_zz, f_xx)
    conc = concurrence_bound(f_zz, f_xx)
    avg, verdict = parallelism(f_zz, f_xx, f_xz)
    errs = None
    if sigmas is not None:
        s_zz, s_xx, s_xz = sigmas
        errs = {
            "process_lower": math.hypot(s_zz, s_xx),
            "process_upper": s_zz if f_zz <= f_xx else s_xx,
            "concurrence_lower": 2 * math.hypot(s_zz, s_xx),
            "parallel_avg": math.sqrt(s_zz**2 + s_xx**2 + s_xz**2) / 3,
        }
    return GateScore(
        f_zz, f_xx, f_xz,
        bounds.lower, bounds.upper, bounds.lower_raw,
        conc.value, conc.raw,
        avg, verdict.passed, errs,
    )


def score_gate(gate: GateRunner) -> GateScore:
    return score_fidelities(*(truth_table_fidelity(gate, s) for s in ("ZZ", "XX", "XZ")))


def bar_chart_rows(gate: GateRunner) -> list[tuple[str, str, str, float]]:
    """(panel, input, output, probability) rows, 16 per truth table."""
    rows = []
    for spec in ("ZZ", "XX", "XZ"):
        for inp, probs in truth_table(gate, spec).items():
            for out, p in probs.items():
                rows.append((spec, inp, out, p))
    return rows


def measured_gate_score() -> GateScore:
    """Derived figures from the bundled measured fidelities."""
    fids = load_gate_fidelities()
    vals = [fids[k][0] for k in ("f_zz", "f_xx", "f_xz")]
    sig = [fids[k][1] for k in ("f_zz", "f_xx", "f_xz")]
    return score_fidelities(*vals, sigmas=sig)


def setting_weights() -> Mapping[str, float]:
    return {lab: coef * WITNESS_PREFACTOR for lab, coef in TABLE1_LAYOUT}
