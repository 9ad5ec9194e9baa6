"""Figure rendering for the delimited outputs.

Every renderer takes a CSV (or JSON-lines) produced by the CLI and writes PNG
files next to it; the data files remain the canonical record.
"""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

__all__ = ["render_diagnostics", "render_twin", "render_lemmas", "render_auto"]


def _read_csv(path):
    with open(path, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        rows = list(reader)
    cols = {}
    for name in reader.fieldnames or []:
        vals = []
        for row in rows:
            raw = row.get(name, "")
            try:
                vals.append(float(raw))
            except (TypeError, ValueError):
                vals.append(float("nan"))
        cols[name] = vals
    return cols


def _save(fig, outdir: Path, name: str) -> Path:
    outdir.mkdir(parents=True, exist_ok=True)
    path = outdir / name
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
    return path


def render_diagnostics(csv_path, outdir=None) -> list[Path]:
    """Energy/dissipation ledger, residual, divergence, and H1 series."""
    csv_path = Path(csv_path)
    outdir = Path(outdir) if outdir else csv_path.parent
    cols = _read_csv(csv_path)
    t = cols["t"]
    written = []

    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.plot(t, cols["E_u"], label="energy (u)")
    if any(v > 0 for v in cols["E_b"]):
        ax.plot(t, cols["E_b"], label="energy (b)")
    ax.plot(t, cols["D_u"], "--", label="dissipated (u)")
    if any(v > 0 for v in cols["D_b"]):
        ax.plot(t, cols["D_b"], "--", label="dissipated (b)")
    total = [
        eu + eb + du + db
        for eu, eb, du, db in zip(cols["E_u"], cols["E_b"], cols["D_u"], cols["D_b"])
    ]
    ax.plot(t, total, "k:", label="energy + dissipated")
    ax.set_xlabel("t")
    ax.set_ylabel("squared L2 norms")
    ax.legend(fontsize=8)
    written.append(_save(fig, outdir, "energy_ledger.png"))

    fig, axes = plt.subplots(1, 3, figsize=(12.0, 3.4))
    axes[0].semilogy(t[1:], [max(v, 1e-18) for v in cols["ledger_residual"][1:]])
    axes[0].set_title("ledger residual")
    axes[1].semilogy(t, [max(v, 1e-18) for v in cols["div_u_max"]], label="u")
    if any(v > 0 for v in cols["div_b_max"]):
        axes[1].semilogy(t, [max(v, 1e-18) for v in cols["div_b_max"]], label="b")
        axes[1].legend(fontsize=8)
    axes[1].set_title("divergence defect")
    axes[2].plot(t, cols["H1_u"], label="u")
    if any(v > 0 for v in cols["H1_b"]):
        axes[2].plot(t, cols["H1_b"], label="b")
        axes[2].legend(fontsize=8)
    axes[2].set_title("squared H1 seminorm")
    for ax in axes:
        ax.set_xlabel("t")
    written.append(_save(fig, outdir, "diagnostics.png"))
    return written


def render_twin(csv_path, outdir=None) -> list[Path]:
    """Perturbation growth against the fitted Gronwall envelope."""
    csv_path = Path(csv_path)
    outdir = Path(outdir) if outdir else csv_path.parent
    cols = _read_csv(csv_path)
    t = cols["t"]
    rate_key = "rate_A" if "rate_A" in cols else "rate_B"
    written = []

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 3.8))
    ax1.semilogy(t, [max(v, 1e-300) for v in cols["diff_l2"]], label="|difference|")
    ax1.semilogy(t, [max(v, 1e-300) for v in cols["gronwall_bound"]], "--",
                 label="fitted envelope")
    ax1.semilogy(t, [max(10 * v, 1e-300) for v in cols["gronwall_bound"]], ":",
                 label="10x envelope")
    ax1.set_xlabel("t")
    ax1.legend(fontsize=8)
    ax1.set_title("twin-run separation")
    ax2.plot(t, cols[rate_key])
    ax2.set_xlabel("t")
    ax2.set_title(f"rate function {rate_key[-1]}(t)")
    written.append(_save(fig, outdir, "twin_run.png"))
    return written


def render_lemmas(ratios_csv, outdir=None) -> list[Path]:
    """Per-check ratio scatter from the verification corpus CSV."""
    ratios_csv = Path(ratios_csv)
    outdir = Path(outdir) if outdir else ratios_csv.parent
    by_check: dict[str, list[float]] = {}
    with open(ratios_csv, newline="") as fh:
        for row in csv.DictReader(fh):
            by_check.setdefault(row["lemma_id"], []).append(float(row["ratio"]))
    names = sorted(by_check)
    fig, ax = plt.subplots(figsize=(7.2, 4.0))
    for i, name in enumerate(names):
        vals = by_check[name]
        ax.scatter([i] * len(vals), vals, s=8, alpha=0.5)
        ax.scatter([i], [max(vals)], marker="_", s=400, color="k")
    ax.axhline(1.0, color="r", lw=0.8, ls="--")
    ax.set_xticks(range(len(names)))
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_yscale("log")
    ax.set_ylabel("LHS / RHS (constant stripped)")
    return [_save(fig, outdir, "lemma_ratios.png")]


def render_auto(path, outdir=None) -> list[Path]:
    """Dispatch on the file's header."""
    path = Path(path)
    if path.suffix == ".jsonl":
        raise ValueError("render the ratios CSV, not the JSON-lines summary")
    with open(path, newline="") as fh:
        header = fh.readline()
    if "lemma_id" in header:
        return render_lemmas(path, outdir)
    if "diff_l2" in header:
        return render_twin(path, outdir)
    if "ledger_residual" in header:
        return render_diagnostics(path, outdir)
    raise ValueError(f"unrecognized report file: {path}")
