"""Command-line interface: ``onewaysim {state,demo,characterize,fit,ingest,synth}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .characterize import (
    TABLE1_LAYOUT,
    TRUTH_TABLES,
    bar_chart_rows,
    fidelity_lower_bound,
    gme_check,
    ideal_setting_values,
    load_table1,
    outcome_probability,
    measured_gate_score,
    parse_setting,
    score_gate,
    witness_b,
)
from .counts import CountsError, dump_counts, parse_counts, table1_pipeline, values_from_tables
from .graph import CANONICAL_LC6_GRAPH, assert_lc6_is_dressed_chain, build_lc6, stabilizers
from .mbqc import (
    INPUT_NAMES,
    MODES,
    Angles,
    cnot_runner,
    compensate_h,
    input_encoding,
    reference_circuit,
    run_cnot,
)
from .noise import DEFAULT_EVENTS, NoiseModel, apply_model, fit_white_noise, simulate_counts
from .statevec import Ket, expectation, fidelity_with

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_VALIDATION = 2
EXIT_NO_GME = 3
DECIMALS = 6


@dataclass
class Report:
    doc: dict
    text: list[str] = field(default_factory=list)
    csv_header: list[str] = field(default_factory=list)
    csv_rows: list[list] = field(default_factory=list)
    exit_code: int = EXIT_OK


def _round(obj):
    if isinstance(obj, float):
        return round(obj, DECIMALS) + 0.0
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    return obj


def _fmt(x) -> str:
    return f"{x:.{DECIMALS}f}" if isinstance(x, float) else str(x)


def render(report: Report, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(_round(report.doc), indent=2, sort_keys=True) + "\n"
    if fmt == "text":
        return "\n".join(report.text) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(report.csv_header)
    for row in report.csv_rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _resource(noise: NoiseModel | None):
    lc6 = build_lc6()
    return lc6 if noise is None else apply_model(lc6, noise)


def cmd_state(args) -> Report:
    noise = args.noise
    state = _resource(noise)
    chain = assert_lc6_is_dressed_chain()
    ideal = ideal_setting_values()
    settings = []
    for label, _ in TABLE1_LAYOUT:
        settings.append(
            {"label": label, "ideal": ideal[label], "value": expectation(state, parse_setting(label))}
        )
    witness = expectation(state, witness_b())
    fidelity = fidelity_with(build_lc6(), state) if noise is not None else 1.0
    verdict = gme_check(witness)
    doc = {
        "command": "state",
        "seed": args.seed,
        "noise": noise.to_dict() if noise else None,
        "chain_overlap": chain.overlap,
        "chain_passed": chain.passed,
        "stabilizers": {
            str(g): expectation(state, g.to_observable()) for g in stabilizers(CANONICAL_LC6_GRAPH)
        },
        "settings": settings,
        "witness": witness,
        "fidelity": fidelity,
        "gme": verdict.to_dict(),
    }
    text = [
        f"seed {args.seed}",
        f"dressed-chain overlap  {chain.overlap:.6f} ({'PASS' if chain.passed else 'FAIL'})",
        "stabilizers:",
    ]
    text += [f"  {g:<8}{v:>+11.6f}" for g, v in doc["stabilizers"].items()]
    text.append(f"{'setting':<16}{'ideal':>11}{'value':>11}")
    text += [f"{s['label']:<16}{s['ideal']:>+11.6f}{s['value']:>+11.6f}" for s in settings]
    text.append(f"witness tr(B rho)      {witness:.6f}")
    text.append(f"fidelity               {fidelity:.6f}")
    text.append(f"GME (> 0.5)            {'PASS' if verdict.passed else 'FAIL'}")
    rows = [[s["label"], s["ideal"], s["value"]] for s in settings]
    report = Report(doc, text, ["setting", "ideal", "value"], rows)
    if args.require_gme and not verdict.passed:
        report.exit_code = EXIT_NO_GME
    return report


def _parse_angles(text: str) -> Angles:
    parts = [eval_angle(p) for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError("--angles needs four comma-separated values: alpha,beta,alpha',beta'")
    return Angles(*parts)


def eval_angle(token: str) -> float:
    """Parse a float or a multiple of pi such as ``pi/2``, ``-pi``, ``0.25pi``."""
    t = token.strip().lower().replace(" ", "").replace("*", "")
    if "pi" not in t:
        return float(t)
    num, _, den = t.partition("/")
    coef = num.replace("pi", "")
    scale = {"": 1.0, "+": 1.0, "-": -1.0}[coef] if coef in ("", "+", "-") else float(coef)
    return scale * np.pi / (float(den) if den else 1.0)


def _input_pair(text: str) -> tuple[tuple[str, int], tuple[str, int]]:
    lookup = {name: basis for basis, name in INPUT_NAMES.items()}
    if len(text) != 2 or any(c not in lookup for c in text):
        raise ValueError(f"--input must be two of H, V, +, - (control then target), got {text!r}")
    return lookup[text[0]], lookup[text[1]]


def cmd_demo(args) -> Report:
    rng = np.random.default_rng(args.seed)
    if args.input:
        control, target = _input_pair(args.input)
        angles = input_encoding(control, target)
    elif args.angles:
        angles = _parse_angles(args.angles)
    else:
        angles = Angles(*rng.uniform(0, 2 * np.pi, 4))
    resource = _resource(args.noise)
    out, record = run_cnot(angles, args.mode, rng, resource)
    ref = reference_circuit(angles)
    fid = fidelity_with(ref, out)
    doc = {
        "command": "demo",
        "seed": args.seed,
        "mode": args.mode,
        "noise": args.noise.to_dict() if args.noise else None,
        "angles": angles.to_dict(),
        "record": record.to_dict(),
        "fidelity": fid,
    }
    text = [
        f"seed {args.seed}  mode {args.mode}",
        "angles  " + "  ".join(f"{k}={v:.6f}" for k, v in angles.to_dict().items()),
        f"outcomes (5,1,6,4)  {record.outcome_string}  branch probability {record.probability:.6f}",
    ]
    if record.acceptance is not None:
        text.append(f"acceptance probability  {record.acceptance:.6f}")
    if record.correction is not None:
        c = record.correction
        text.append(
            f"correction  {''.join(c.paulis)} on (2,3); flips beta={c.flip_beta} beta'={c.flip_beta_prime}"
        )
    rows = []
    if isinstance(out, Ket):
        amps = out.amplitudes
        doc["output"] = [[float(a.real), float(a.imag)] for a in amps]
        text.append("output (qubits 2,3):")
        for i, a in enumerate(amps):
            basis = format(i, "02b")
            text.append(f"  |{basis}>  {a.real:+.6f} {a.imag:+.6f}i")
            rows.append([basis, float(a.real), float(a.imag), float(abs(a) ** 2)])
    else:
        probs = np.diag(out.matrix).real
        doc["output_populations"] = [float(p) for p in probs]
        for i, p in enumerate(probs):
            rows.append([format(i, "02b"), float("nan"), float("nan"), float(p)])
    text.append(f"fidelity vs reference circuit  {fid:.6f}")
    if args.input:
        row = _truth_row(args.input, compensate_h(out))
        doc["truth_table_row"] = row
        text.append(f"truth-table row  {row}")
    return Report(doc, text, ["basis", "re", "im", "probability"], rows)


def _truth_row(inp: str, state) -> str:
    # Truth tables are keyed by (control, target) input bases.
    kind = "".join("Z" if c in "HV" else "X" for c in inp)
    outputs = TRUTH_TABLES.get(kind, TRUTH_TABLES["ZZ"])["outputs"]
    hits = [o for o in outputs if outcome_probability(state, o) > 1e-9]
    return f"{inp} -> {'|'.join(hits)}"


def cmd_characterize(args) -> Report:
    if args.measured_values:
        score = measured_gate_score()
        doc = {"command": "characterize", "seed": args.seed, "source": "measured", "score": score.to_dict()}
        bars = []
    else:
        gate = cnot_runner(args.mode, _resource(args.noise))
        score = score_gate(gate)
        bars = bar_chart_rows(gate)
        doc = {
            "command": "characterize",
            "seed": args.seed,
            "source": "simulation",
            "mode": args.mode,
            "noise": args.noise.to_dict() if args.noise else None,
            "score": score.to_dict(),
            "bars": [{"panel": p, "input": i, "output": o, "probability": v} for p, i, o, v in bars],
        }
    s = score
    text = [
        f"seed {args.seed}",
        f"F_zz {s.f_zz:.6f}   F_xx {s.f_xx:.6f}   F_xz {s.f_xz:.6f}",
        f"process fidelity in [{s.process_lower:.6f}, {s.process_upper:.6f}] (raw lower {s.process_lower_raw:.6f})",
        f"concurrence >= {s.concurrence_lower:.6f} (raw {s.concurrence_lower_raw:.6f})",
        f"parallelism avg {s.parallel_avg:.6f} ({'PASS' if s.parallel_pass else 'FAIL'}, threshold 2/3)",
    ]
    if s.sigmas:
        text.append("sigmas  " + "  ".join(f"{k}={v:.6f}" for k, v in s.sigmas.items()))
    if bars:
        text.append(f"{'panel':<6}{'input':<7}{'output':<8}{'probability':>12}")
        text += [f"{p:<6}{i:<7}{o:<8}{v:>12.6f}" for p, i, o, v in bars]
    if bars:
        header, rows = ["panel", "input", "output", "probability"], [list(b) for b in bars]
    else:
        header = ["quantity", "value"]
        rows = [[k, v] for k, v in s.to_dict().items() if not isinstance(v, dict)]
    return Report(doc, text, header, rows)


def _load_documents(paths) -> list[dict]:
    docs = []
    for p in paths:
        try:
            docs.append(json.loads(Path(p).read_text()))
        except json.JSONDecodeError as exc:
            raise CountsError(f"{p}: malformed JSON: {exc}") from None
    return docs


def cmd_fit(args) -> Report:
    if args.counts:
        tables = [t for doc in _load_documents(args.counts) for t in parse_counts(doc)]
        values = values_from_tables(tables)
        source = "counts"
    else:
        values = load_table1()
        source = "bundled"
    p_hat = fit_white_noise(values)
    bound, sigma = fidelity_lower_bound(values)
    doc = {
        "command": "fit",
        "seed": args.seed,
        "source": source,
        "white_p": p_hat,
        "fidelity_bound": bound,
        "sigma": sigma,
    }
    text = [
        f"seed {args.seed}  source {source}",
        f"white-noise weight p  {p_hat:.6f}",
        f"fidelity bound        {bound:.6f} +- {sigma:.6f}",
    ]
    rows = [["white_p", p_hat], ["fidelity_bound", bound], ["sigma", sigma]]
    return Report(doc, text, ["quantity", "value"], rows)


def cmd_ingest(args) -> Report:
    report = table1_pipeline(_load_documents(args.files))
    doc = {"command": "ingest", "seed": args.seed, **report.to_dict()}
    rows = [[lab, v, s, w] for lab, v, s, w in report.rows]
    out = Report(doc, [f"seed {args.seed}", report.to_text()], ["setting", "value", "sigma", "weight"], rows)
    if args.require_gme and not report.verdict.passed:
        out.exit_code = EXIT_NO_GME
    return out


def cmd_synth(args) -> Report:
    rho = _resource(args.noise)
    rng = np.random.default_rng(args.seed)
    tables = [
        simulate_counts(rho, label, args.events, rng, duration_s=400.0) for label, _ in TABLE1_LAYOUT
    ]
    doc = dump_counts(tables)
    text = [json.dumps(doc, sort_keys=True)]
    rows = [[t.label, t.total] for t in tables]
    return Report(doc, text, ["setting", "total"], rows)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="random seed (default: $ONEWAYSIM_SEED or 0)")
    common.add_argument("--noise", type=NoiseModel.from_string, default=None,
                        help="white_p=..[,dephase=..][,depol=..]")
    common.add_argument("--mode", choices=MODES, default="feedforward")
    common.add_argument("--format", choices=("json", "text", "csv"), default="text")
    common.add_argument("--out", type=Path, default=None, help="write output to PATH")
    common.add_argument("--require-gme", action="store_true",
                        help="exit with status 3 if the fidelity bound does not exceed 1/2")

    parser = argparse.ArgumentParser(prog="onewaysim", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", parents=[common], help="build and verify the six-qubit state")
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("demo", parents=[common], help="run the one-way CNOT pattern once")
    p.add_argument("--angles", help="alpha,beta,alpha',beta' (radians or multiples of pi)")
    p.add_argument("--input", help="encoded logical input, e.g. VH (control, target)")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("characterize", parents=[common], help="truth tables and gate bounds")
    p.add_argument("--measured-values", action="store_true", help="use the bundled measured fidelities")
    p.set_defaults(func=cmd_characterize)

    p = sub.add_parser("fit", parents=[common], help="fit the white-noise model")
    p.add_argument("--counts", nargs="*", default=None, help="count files (default: bundled values)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("ingest", parents=[common], help="fidelity bound from coincidence counts")
    p.add_argument("files", nargs="+")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", parents=[common], help="write synthetic count files")
    p.add_argument("--events", type=int, default=DEFAULT_EVENTS, help="mean events per setting")
    p.set_defaults(func=cmd_synth)
    return parser


def resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    env = os.environ.get("ONEWAYSIM_SEED")
    return int(env) if env else 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.seed = resolve_seed(args.seed)
    except ValueError:
        print("error: ONEWAYSIM_SEED must be an integer", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        report = args.func(args)
    except (CountsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {exc!r}", file=sys.stderr)
        return EXIT_INTERNAL
    text = render(report, args.format)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
