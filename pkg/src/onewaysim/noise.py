"""Noise models for the resource state, white-noise fitting and synthetic
coincidence counts."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .characterize import SettingValue, ideal_setting_values, parse_setting
from .counts import CountTable
from .graph import LC6_SLOT, SPATIAL_LABELS
from .statevec import (
    I2,
    KET_0,
    KET_1,
    KET_MINUS,
    KET_PLUS,
    KET_L,
    KET_R,
    X,
    Y,
    Z,
    DensityOp,
    ObservableExpr,
    State,
    apply_gate,
    as_density,
)

DEFAULT_EVENTS = 400

Rates = float | Mapping[int, float]


def _rates(spec: Rates, n: int) -> dict[int, float]:
    if isinstance(spec, Mapping):
        return {int(q): float(r) for q, r in spec.items() if r}
    return {q: float(spec) for q in range(n)} if spec else {}


@dataclass(frozen=True)
class NoiseModel:
    """Noise applied to a pure state.

    ``white_p`` weights the channelled state against the maximally mixed
    state.  ``dephase`` (phase-flip probability, at most 0.5) and ``depol``
    (depolarizing weight) are either one rate for every qubit or a mapping from
    register slot to rate.
    """

    white_p: float = 1.0
    dephase: Rates = field(default_factory=dict)
    depol: Rates = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.white_p <= 1:
            raise ValueError(f"white_p={self.white_p} outside [0, 1]")
        for name, hi in (("dephase", 0.5), ("depol", 1.0)):
            spec = getattr(self, name)
            vals = spec.values() if isinstance(spec, Mapping) else [spec]
            for r in vals:
                if not 0 <= r <= hi:
                    raise ValueError(f"{name} rate {r} outside [0, {hi}]")

    @classmethod
    def from_string(cls, text: str) -> "NoiseModel":
        """Parse ``white_p=0.6,dephase=0.05,depol=0.01``.

        A bare ``dephase`` rate applies to the two spatial qubits of the
        six-qubit register; ``depol`` applies to every qubit.
        """
        fields = {}
        for part in filter(None, (p.strip() for p in text.split(","))):
            key, sep, val = part.partition("=")
            if not sep:
                raise ValueError(f"expected key=value in noise spec, got {part!r}")
            fields[key.strip()] = float(val)
        unknown = set(fields) - {"white_p", "dephase", "depol"}
        if unknown:
            raise ValueError(f"unknown noise fields: {sorted(unknown)}")
        dephase = fields.get("dephase", 0.0)
        return cls(
            white_p=fields.get("white_p", 1.0),
            dephase={LC6_SLOT[lab]: dephase for lab in SPATIAL_LABELS} if dephase else {},
            depol=fields.get("depol") or {},
        )

    def to_dict(self) -> dict:
        def enc(spec):
            if isinstance(spec, Mapping):
                return {str(q): r for q, r in sorted(spec.items())}
            return spec

        return {"white_p": self.white_p, "dephase": enc(self.dephase), "depol": enc(self.depol)}

    @classmethod
    def from_dict(cls, doc: Mapping) -> "NoiseModel":
        def dec(spec):
            if isinstance(spec, Mapping):
                return {int(q): float(r) for q, r in spec.items()}
            return float(spec)

        extra = set(doc) - {"white_p", "dephase", "depol"}
        if extra:
            raise ValueError(f"unknown noise fields: {sorted(extra)}")
        return cls(
            float(doc.get("white_p", 1.0)), dec(doc.get("dephase", {})), dec(doc.get("depol", {}))
        )


def _phase_flip(rho: DensityOp, q: int, r: float) -> DensityOp:
    flipped = apply_gate(rho, [q], Z)
    return DensityOp((1 - r) * rho.matrix + r * flipped.matrix)


def _depolarize(rho: DensityOp, q: int, r: float) -> DensityOp:
    # I/2 (x) tr_q(rho) = (rho + X rho X + Y rho Y + Z rho Z) / 4
    twirl = sum(apply_gate(rho, [q], P).matrix for P in (I2, X, Y, Z)) / 4
    return DensityOp((1 - r) * rho.matrix + r * twirl)


def apply_model(state: State, model: NoiseModel) -> DensityOp:
    rho = as_density(state)
    n = rho.n_qubits
    for q, r in sorted(_rates(model.dephase, n).items()):
        rho = _phase_flip(rho, q, r)
    for q, r in sorted(_rates(model.depol, n).items()):
        rho = _depolarize(rho, q, r)
    dim = 2**n
    return DensityOp(model.white_p * rho.matrix + (1 - model.white_p) * np.eye(dim) / dim)


def fit_white_noise(values: Iterable[SettingValue]) -> float:
    """Least-squares white-noise weight: mean of value times ideal sign."""
    ideal = ideal_setting_values()
    values = list(values)
    if not values:
        raise ValueError("no setting values to fit")
    return float(np.mean([v.value * np.sign(ideal[v.label]) for v in values]))


# Rows are the bras of the +1 (bit 0) and -1 (bit 1) eigenvectors.
_BASIS_ROTATION = {
    "X": np.array([KET_PLUS.conj(), KET_MINUS.conj()]),
    "Y": np.array([KET_R.conj(), KET_L.conj()]),
    "Z": np.array([KET_0, KET_1]),
}


def outcome_probabilities(rho: State, obs: ObservableExpr) -> np.ndarray:
    """Born probabilities of the 2^n outcome strings of ``obs``'s local measurement."""
    bases = obs.measurement_bases()
    rho = as_density(rho)
    for q, b in enumerate(bases):
        if b is not None and b != "Z":
            rho = apply_gate(rho, [q], _BASIS_ROTATION[b])
    probs = np.clip(np.diag(rho.matrix).real, 0, None)
    return probs / probs.sum()


def simulate_counts(
    rho: State,
    setting: str | ObservableExpr,
    n_events: int = DEFAULT_EVENTS,
    seed: int | np.random.Generator | None = None,
    label: str | None = None,
    duration_s: float | None = None,
) -> CountTable:
    """Poisson(n_events) detection events spread multinomially over outcomes."""
    if isinstance(setting, str):
        label = setting if label is None else label
        setting = parse_setting(setting)
    if label is None:
        raise ValueError("a label is required for an observable setting")
    probs = outcome_probabilities(rho, setting)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    total = rng.poisson(n_events)
    draws = rng.multinomial(total, probs)
    n = setting.n_qubits
    counts = {format(i, f"0{n}b"): int(c) for i, c in enumerate(draws) if c}
    return CountTable(label, n, counts, duration_s)


def expected_sigma(value: float, n_events: int = DEFAULT_EVENTS) -> float:
    """Poissonian error bar of a +-1 setting with mean ``value`` after ``n_events``."""
    return math.sqrt((1 - value**2) / n_events)
