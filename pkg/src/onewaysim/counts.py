"""Coincidence-count files: parsing, expectation values with Poissonian error
bars, and the pipeline from raw counts to the fidelity bound."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import jsonschema

from .characterize import (
    TABLE1_LAYOUT,
    SettingValue,
    Verdict,
    fidelity_lower_bound,
    gme_check,
    parse_setting,
    setting_weights,
)
from .statevec import ObservableExpr

COUNTS_SCHEMA = {
    "type": "object",
    "required": ["settings"],
    "additionalProperties": False,
    "properties": {
        "settings": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["label", "k", "counts"],
                "additionalProperties": False,
                "properties": {
                    "label": {"type": "string", "minLength": 1},
                    "k": {"type": "integer", "minimum": 1},
                    "duration_s": {"type": "number", "exclusiveMinimum": 0},
                    "counts": {
                        "type": "object",
                        "propertyNames": {"pattern": "^[01]+$"},
                        "additionalProperties": {"type": "integer", "minimum": 0},
                    },
                },
            },
        }
    },
}


class CountsError(ValueError):
    """Invalid count document or inconsistent set of settings."""


@dataclass(frozen=True)
class CountTable:
    """Coincidence counts of one setting, keyed by k-bit outcome strings.

    Bit ``i`` belongs to the i-th qubit of the six-qubit register order
    (5, 1, 3, 2, 4, 6); 0 is the +1 eigenstate of the local measurement.
    """

    label: str
    k: int
    counts: Mapping[str, int] = field(default_factory=dict)
    duration_s: float | None = None

    def __post_init__(self):
        for key, n in self.counts.items():
            if len(key) != self.k or set(key) - {"0", "1"}:
                raise CountsError(f"{self.label}: outcome {key!r} is not a {self.k}-bit string")
            if n < 0:
                raise CountsError(f"{self.label}: negative count for {key!r}")

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    def to_dict(self) -> dict:
        doc = {"label": self.label, "k": self.k, "counts": dict(self.counts)}
        if self.duration_s is not None:
            doc["duration_s"] = self.duration_s
        return doc


def _location(path) -> str:
    loc = "$"
    for p in path:
        loc += f"[{p}]" if isinstance(p, int) else f".{p}"
    return loc


def parse_counts(document) -> list[CountTable]:
    """Validate a count document (dict or JSON text) and return its tables."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise CountsError(f"malformed JSON: {exc}") from None
    validator = jsonschema.Draft202012Validator(COUNTS_SCHEMA)
    errors = sorted(validator.iter_errors(document), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        raise CountsError(f"{_location(err.absolute_path)}: {err.message}")
    tables = []
    for i, entry in enumerate(document["settings"]):
        for key in entry["counts"]:
            if len(key) != entry["k"]:
                raise CountsError(
                    f"$.settings[{i}].counts: key {key!r} has length {len(key)}, expected k={entry['k']}"
                )
        tables.append(
            CountTable(entry["label"], entry["k"], dict(entry["counts"]), entry.get("duration_s"))
        )
    return tables


def dump_counts(tables: Iterable[CountTable]) -> dict:
    return {"settings": [t.to_dict() for t in tables]}


_EIGEN = {"I": (1, 1), "X": (1, -1), "Y": (1, -1), "Z": (1, -1), "P0": (1, 0), "P1": (0, 1)}


def parity_map(obs: ObservableExpr) -> dict[str, float]:
    """Value of ``obs`` for each outcome string of its local-basis measurement.

    Qubits whose factors are all identities are still listed (as Z outcomes)
    so keys always have ``obs.n_qubits`` bits.
    """
    obs.measurement_bases()  # raises for settings that are not locally measurable
    n = obs.n_qubits
    out = {}
    for idx in range(2**n):
        bits = format(idx, f"0{n}b")
        val = 0.0
        for coef, labels in obs.terms:
            prod = coef
            for lab, b in zip(labels, bits):
                prod *= _EIGEN[lab][int(b)]
                if prod == 0:
                    break
            val += prod
        out[bits] = val
    return out


def expectation_from_counts(table: CountTable, parity: Mapping[str, float]) -> tuple[float, float]:
    """Mean parity and its error, treating each outcome count as Poissonian.

    sigma = sqrt((1 - E^2) / N), exact to first order for +-1 parities; for
    parities that vanish on some outcomes (projector settings) it is an upper
    bound on the first-order error.
    """
    total = table.total
    if total <= 0:
        raise CountsError(f"{table.label}: no counts")
    acc = 0.0
    for key, n in table.counts.items():
        if n == 0:
            continue
        if key not in parity:
            raise CountsError(f"{table.label}: no parity defined for outcome {key!r}")
        acc += parity[key] * n
    e = acc / total
    return e, math.sqrt(max(1 - e * e, 0.0) / total)


@dataclass
class FidelityReport:
    rows: list[tuple[str, float, float, float]]  # label, value, sigma, weight
    bound: float
    sigma: float
    verdict: Verdict

    def to_dict(self) -> dict:
        return {
            "settings": [
                {"label": lab, "value": v, "sigma": s, "weight": w} for lab, v, s, w in self.rows
            ],
            "fidelity_bound": self.bound,
            "sigma": self.sigma,
            "gme": self.verdict.to_dict(),
        }

    def to_text(self) -> str:
        lines = [f"{'setting':<16}{'value':>11}{'sigma':>11}{'weight':>11}"]
        for lab, v, s, w in self.rows:
            lines.append(f"{lab:<16}{v:>11.6f}{s:>11.6f}{w:>11.6f}")
        lines.append(f"fidelity bound  {self.bound:.6f} +- {self.sigma:.6f}")
        status = "PASS" if self.verdict.passed else "FAIL"
        lines.append(f"GME (> 0.5)     {status} (margin {self.verdict.margin:+.6f})")
        return "\n".join(lines)


def values_from_tables(tables: Iterable[CountTable]) -> list[SettingValue]:
    """Convert count tables for the 18 witness settings into setting values."""
    known = {lab for lab, _ in TABLE1_LAYOUT}
    seen: dict[str, CountTable] = {}
    for t in tables:
        if t.label not in known:
            raise CountsError(f"unknown setting label {t.label!r}")
        if t.label in seen:
            raise CountsError(f"duplicate setting label {t.label!r}")
        seen[t.label] = t
    missing = [lab for lab, _ in TABLE1_LAYOUT if lab not in seen]
    if missing:
        raise CountsError(f"missing settings: {', '.join(missing)}")
    values = []
    for lab, _ in TABLE1_LAYOUT:
        e, s = expectation_from_counts(seen[lab], parity_map(parse_setting(lab)))
        values.append(SettingValue(lab, e, s))
    return values


def table1_pipeline(documents) -> FidelityReport:
    """Counts for the 18 settings (one or several documents) to fidelity bound and GME verdict."""
    if isinstance(documents, (dict, str, bytes)):
        documents = [documents]
    tables = [t for doc in documents for t in parse_counts(doc)]
    values = values_from_tables(tables)
    bound, sigma = fidelity_lower_bound(values)
    weights = setting_weights()
    rows = [(v.label, v.value, v.sigma, weights[v.label]) for v in values]
    return FidelityReport(rows, bound, sigma, gme_check(bound))
