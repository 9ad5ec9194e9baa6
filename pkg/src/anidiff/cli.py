"""Command-line surface.

Exit codes: 0 success, 2 usage/config error, 3 blowup or CFL abort,
4 gate refusal (obstructed assignment without allow_bad), 1 check failure.
All floating-point output is printed with 17 significant digits so reruns
are byte-comparable.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checkpoint import write_checkpoint
from .config import ConfigError, build_state, fmt_float, load_config
from .diagnostics import Recorder, energy_ledger, regularity_report, twin_run
from .indexsets import (
    enumerate_good_mhd,
    enumerate_good_ns,
    explain_bad,
    is_bad_mhd,
    is_bad_ns,
    MhdAssignment,
    NsAssignment,
)
from .norms import EXACT_CHECKS, SUITE_CHECK_IDS, run_lemma_suite, suite_ratios
from .solver import BlowupError, CflError, GateRefusalError, check_assignment_gate, run
from .spectral import Grid

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_BLOWUP = 3
EXIT_GATE = 4


def _fmt(value) -> str:
    if isinstance(value, float):
        return fmt_float(value)
    return str(value)


def _write_rows(stream, fieldnames, rows):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(fieldnames)
    for row in rows:
        writer.writerow([_fmt(row.get(name, "")) for name in fieldnames])


# ---------------------------------------------------------------------------
# classify
# ---------------------------------------------------------------------------

def cmd_classify(args) -> int:
    out = sys.stdout
    rows = []
    if args.mhd:
        header = ["i1", "i2", "i3", "j1", "j2", "j3", "good", "clauses"]
        from itertools import product

        for labels in product((1, 2, 3), repeat=6):
            a = MhdAssignment.from_labels(*labels)
            good = not is_bad_mhd(a)
            rows.append((labels, good, explain_bad(a)))
    else:
        from itertools import product

        header = ["i1", "i2", "i3", "good", "clauses"]
        for labels in product((1, 2, 3), repeat=3):
            a = NsAssignment(*labels)
            good = not is_bad_ns(a)
            rows.append((labels, good, explain_bad(a)))
    if args.only_good:
        rows = [r for r in rows if r[1]]
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(header)
    for labels, good, clauses in rows:
        writer.writerow(
            list(labels) + [int(good), "; ".join(str(c) for c in clauses)]
        )
    n_good = sum(1 for r in rows if r[1])
    out.write(f"# good={n_good}\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# simulate
# ---------------------------------------------------------------------------

def _flush_outputs(outdir: Path, cfg, recorder, state, status: str):
    outdir.mkdir(parents=True, exist_ok=True)
    diag_path = outdir / cfg.outputs.diagnostics
    fieldnames = [
        "t", "E_u", "E_b", "D_u", "D_b", "ledger_residual",
        "div_u_max", "div_b_max", "H1_u", "H1_b",
    ]
    with open(diag_path, "w", newline="") as fh:
        _write_rows(fh, fieldnames, recorder.rows)

    led = energy_ledger(state, recorder.acc)
    rep = regularity_report(state, recorder.acc)
    summary = {
        "status": status,
        "mode": cfg.mode,
        "t_final": state.t,
        "steps": state.step,
        "energy_u": led.kinetic,
        "energy_b": led.magnetic,
        "dissipated_u": led.dissipated_u,
        "dissipated_b": led.dissipated_b,
        "ledger_residual": led.residual,
        "sup_h1_u": rep.sup_h1_u,
        "sup_h1_b": rep.sup_h1_b,
        "max_div_u": max((r["div_u_max"] for r in recorder.rows), default=0.0),
        "max_div_b": max((r["div_b_max"] for r in recorder.rows), default=0.0),
        "regularity_integrals": {
            f"{f}{k}_axis{j}": list(pair) for (f, k, j), pair in sorted(rep.integrals.items())
        },
        "extra_regularity": {
            f"{f}{l}_dir{k}_order9_4": v for (f, k, l), v in sorted(rep.extra.items())
        },
    }
    with open(outdir / cfg.outputs.summary, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return diag_path


def _checkpoint_fields(state):
    fields = [c.coeffs for c in state.u.components]
    if state.is_mhd:
        fields += [c.coeffs for c in state.b.components]
    return fields


def cmd_simulate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    allow_bad = cfg.allow_bad or args.allow_bad
    try:
        check_assignment_gate(cfg.assignment, cfg.params, allow_bad=allow_bad)
    except GateRefusalError as exc:
        print(f"gate refusal: {exc}", file=sys.stderr)
        return EXIT_GATE

    try:
        state = build_state(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    outdir = Path(cfg.outputs.directory)
    recorder = Recorder(sample_every=cfg.outputs.diagnostics_every)
    hooks = [recorder]
    if cfg.outputs.checkpoint_every > 0:
        every = cfg.outputs.checkpoint_every

        def checkpoint_hook(s):
            if s.step % every == 0:
                outdir.mkdir(parents=True, exist_ok=True)
                write_checkpoint(
                    outdir / f"step_{s.step:08d}.ckpt",
                    s.grid.shape, s.grid.box_length, s.t, _checkpoint_fields(s),
                )

        hooks.append(checkpoint_hook)

    status = "completed"
    code = EXIT_OK
    try:
        state = run(state, cfg.stepping, hooks=hooks)
    except (BlowupError, CflError) as exc:
        print(f"aborted: {exc}", file=sys.stderr)
        status = "aborted"
        code = EXIT_BLOWUP
    diag_path = _flush_outputs(outdir, cfg, recorder, state, status)
    if code == EXIT_OK:
        outdir.mkdir(parents=True, exist_ok=True)
        write_checkpoint(
            outdir / cfg.outputs.checkpoint,
            state.grid.shape, state.grid.box_length, state.t, _checkpoint_fields(state),
        )
    if args.figures:
        from .plotting import render_diagnostics

        for p in render_diagnostics(diag_path, outdir):
            print(f"figure: {p}")
    print(f"{status}: t={fmt_float(state.t)} steps={state.step}")
    return code


# ---------------------------------------------------------------------------
# verify-lemmas
# ---------------------------------------------------------------------------

def cmd_verify_lemmas(args) -> int:
    grid = Grid.cube(args.grid)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    ratios, seeds = suite_ratios(args.seed, args.corpus_size, grid, base_n=args.base_n)
    reports = run_lemma_suite(args.seed, args.corpus_size, grid, base_n=args.base_n)

    csv_path = outdir / "lemma_ratios.csv"
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["lemma_id", "seed", "ratio"])
        for cid in SUITE_CHECK_IDS:
            for seed, ratio in zip(seeds, ratios[cid]):
                writer.writerow([cid, seed, fmt_float(ratio)])

    jsonl_path = outdir / "lemma_summary.jsonl"
    failed = False
    with open(jsonl_path, "w") as fh:
        for rep in reports:
            bound = rep.exact_bound()
            ok = rep.failures == 0 and (bound is None or rep.max_ratio <= bound)
            failed = failed or not ok
            fh.write(
                json.dumps(
                    {
                        "lemma_id": rep.lemma_id,
                        "corpus_size": rep.corpus_size,
                        "max_ratio": rep.max_ratio,
                        "ratio_median": rep.ratio_median,
                        "ratio_q90": rep.ratio_q90,
                        "failures": rep.failures,
                        "hard_bound": bound,
                        "pass": ok,
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    for rep in reports:
        print(f"{rep.lemma_id}: max_ratio={fmt_float(rep.max_ratio)} failures={rep.failures}")
    if args.figures:
        from .plotting import render_lemmas

        for p in render_lemmas(csv_path, outdir):
            print(f"figure: {p}")
    return EXIT_CHECK_FAILED if failed else EXIT_OK


# ---------------------------------------------------------------------------
# twin-run
# ---------------------------------------------------------------------------

def cmd_twin_run(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        check_assignment_gate(cfg.assignment, cfg.params, allow_bad=cfg.allow_bad or args.allow_bad)
    except GateRefusalError as exc:
        print(f"gate refusal: {exc}", file=sys.stderr)
        return EXIT_GATE
    try:
        state = build_state(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    report = twin_run(state, cfg.stepping, args.amplitude, seed=args.seed)

    outdir = Path(cfg.outputs.directory)
    outdir.mkdir(parents=True, exist_ok=True)
    rate_key = "rate_A" if report.mode == "ns" else "rate_B"
    fieldnames = [
        "t", "E_u", "E_b", "D_u", "D_b", "ledger_residual", "div_u_max",
        "div_b_max", "H1_u", "H1_b", rate_key, "diff_l2", "gronwall_bound",
    ]
    csv_path = outdir / "twin_run.csv"
    with open(csv_path, "w", newline="") as fh:
        _write_rows(fh, fieldnames, report.rows)
    summary = {
        "mode": report.mode,
        "amplitude": report.amplitude,
        "perturbation_seed": report.seed,
        "u0_norm": report.u0_norm,
        "fitted_c": report.fitted_c,
        "fit_window_samples": report.fit_window,
        "envelope_pass": report.envelope_pass,
        "envelope_margin": report.envelope_margin,
        "determinism_pass": report.determinism_pass,
        "completed": report.completed,
        "gates": [list(g) for g in report.gates],
        "lambda94_integrals": {
            f"{f}{l}_dir{k}": v for (f, k, l), v in sorted(report.lambda94_integrals.items())
        },
    }
    with open(outdir / "twin_summary.json", "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if args.figures:
        from .plotting import render_twin

        for p in render_twin(csv_path, outdir):
            print(f"figure: {p}")
    if not report.completed:
        print("aborted: blowup during twin run", file=sys.stderr)
        return EXIT_BLOWUP
    print(
        f"twin run {report.mode}: amplitude={fmt_float(report.amplitude)} "
        f"fitted_c={fmt_float(report.fitted_c)} pass={report.passed}"
    )
    return EXIT_OK if report.passed else EXIT_CHECK_FAILED


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def cmd_report(args) -> int:
    from .plotting import render_auto

    try:
        written = render_auto(args.input, args.out)
    except (ValueError, OSError, KeyError) as exc:
        print(f"report error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for p in written:
        print(f"figure: {p}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="anidiff",
        description=(
            "Pseudo-spectral simulator and verification harness for 3D "
            "Navier-Stokes/MHD with per-component anisotropic fractional "
            "hyper-dissipation"
        ),
    )
    parser.add_argument("--version", action="version", version=f"anidiff {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="emit the good/bad assignment taxonomy as CSV")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--ns", action="store_true", help="velocity-only assignments (27)")
    group.add_argument("--mhd", action="store_true", help="coupled assignments (729)")
    p.add_argument("--only-good", action="store_true", help="emit only unobstructed rows")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("simulate", help="integrate a configured run")
    p.add_argument("config", help="path to the run configuration")
    p.add_argument("--allow-bad", action="store_true",
                   help="override the good-assignment gate")
    p.add_argument("--figures", action="store_true",
                   help="render PNG figures next to the CSV output")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify-lemmas", help="run the inequality corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--corpus-size", type=int, default=100)
    p.add_argument("--grid", type=int, default=16, help="evaluation grid size per axis")
    p.add_argument("--base-n", type=int, default=16,
                   help="reference lattice that defines the corpus functions")
    p.add_argument("--output-dir", default="lemma_out")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=cmd_verify_lemmas)

    p = sub.add_parser("twin-run", help="uniqueness probe: perturbed twin simulation")
    p.add_argument("config")
    p.add_argument("--amplitude", type=float, default=1e-8,
                   help="relative L2 size of the initial perturbation")
    p.add_argument("--seed", type=int, default=0, help="perturbation seed")
    p.add_argument("--allow-bad", action="store_true")
    p.add_argument("--figures", action="store_true")
    p.set_defaults(func=cmd_twin_run)

    p = sub.add_parser("report", help="render figures from an output file")
    p.add_argument("input", help="diagnostics/twin/lemma CSV")
    p.add_argument("--out", default=None, help="figure directory (default: beside input)")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
