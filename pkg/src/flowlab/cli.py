"""Scenario runner: ``run``, ``validate``, ``sweep`` and ``report``.

    python3 -m flowlab.cli run scenarios/l1m1.json --out runs/l1m1
    python3 -m flowlab.cli validate scenarios/l3.json
    python3 -m flowlab.cli sweep scenarios/l1.json --grids 32,64,128
    python3 -m flowlab.cli report runs/l1m1 --svg

Output directories default to ``$FLOWLAB_OUT/<scenario stem>`` (or
``./flowlab_runs/<stem>``) when neither ``--out`` nor the scenario's
``outputs.directory`` is given.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import bundles, stability
from .flow import FlowBreakdown, classify_limit, run as run_flow
from .metrics import (check_metric, degree, hermitian_defect, mean_curvature, pointwise_norm,
                      save_snapshot)
from .principal import c0_constant, curvature_relation_residual, sl2
from .scenario import Scenario, ScenarioError, load

log = logging.getLogger("flowlab")

EXIT_OK, EXIT_INPUT, EXIT_BREAKDOWN = 0, 1, 2
ENV_OUT = "FLOWLAB_OUT"


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INPUT


def _load(path: str) -> Scenario | None:
    try:
        return load(path)
    except ScenarioError as exc:
        _fail(f"{path}: {exc}")
    except OSError as exc:
        _fail(str(exc))
    return None


def _out_dir(scn: Scenario, scenario_path: str, out: str | None) -> Path:
    if out:
        return Path(out)
    if scn.directory:
        return Path(scn.directory)
    root = Path(os.environ.get(ENV_OUT, "flowlab_runs"))
    return root / Path(scenario_path).stem


def _oracle(scn: Scenario, vol: float) -> tuple[float | None, str | None]:
    try:
        c = stability.bundle_class(scn.bundle)
    except (KeyError, ValueError):
        return None, None
    return stability.predicted_flow_infimum(c, vol), stability.is_semistable(c).certificate


# ---------------------------------------------------------------- run

def cmd_run(scenario_path: str, out: str | None = None) -> int:
    scn = _load(scenario_path)
    if scn is None:
        return EXIT_INPUT
    try:
        h0 = scn.initial(base_dir=Path(scenario_path).parent)
        lam = scn.einstein_constant(h0)
    except (ValueError, OSError) as exc:
        return _fail(str(exc))
    out_dir = _out_dir(scn, scenario_path, out)
    out_dir.mkdir(parents=True, exist_ok=True)

    predicted, certificate = _oracle(scn, h0.domain.vol)
    summary = {
        "lambda": lam,
        "c0": c0_constant(sl2()) if scn.group and scn.group["name"] == "SL2" else None,
        "oracle_prediction": predicted,
        "certificate": certificate,
        "scenario": scn.to_dict(),
    }
    status = EXIT_OK
    try:
        h, diag = run_flow(h0, lam, scn.flow)
    except FlowBreakdown as exc:
        log.error("%s", exc)
        h, diag, status = exc.last_good, exc.diagnostics, EXIT_BREAKDOWN
        summary["error"] = str(exc)

    diag.to_csv(out_dir / "diagnostics.csv")
    save_snapshot(h, out_dir / "final_metric")
    summary.update(
        final_sup_dev=diag.final_sup_dev,
        classification=("breakdown" if status == EXIT_BREAKDOWN
                        else classify_limit(diag, predicted or 0.0)),
        terminated_by=diag.terminated_by,
        steps=int(diag.records[-1]["step"]) if diag.records else 0,
        wall_time=diag.wall_time,
    )
    (out_dir / "summary.json").write_text(json.dumps(summary, indent=2, allow_nan=True))
    print(f"{summary['classification']}: sup_dev {diag.final_sup_dev:.4e} after "
          f"{summary['steps']} steps ({diag.terminated_by}); wrote {out_dir}")
    if scn.emit_svg:
        cmd_report(str(out_dir), svg=True, quiet=True)
    return status


# ---------------------------------------------------------------- validate

def validation_rows(scn: Scenario, base_dir: Path | None = None) -> list[tuple[str, bool, str]]:
    """``(check, passed, detail)`` rows; later checks are skipped if geometry fails."""
    rows = []
    try:
        dom = scn.domain()
        rows.append(("geometry", True, f"tau={scn.tau}, N={dom.N}, vol={dom.vol:g}"))
    except ValueError as exc:
        return [("geometry", False, str(exc))]
    b = scn.build_bundle()
    coc = bundles.validate_cocycle(b)
    rows.append(("cocycle", coc < 1e-10, f"relative residual {coc:.2e}"))
    h = scn.initial(base_dir=base_dir)
    chk = check_metric(h)
    rows.append(("seam", chk["seam"] <= 10 * chk["seam_reference"] + 1e-10,
                 f"{chk['seam']:.2e} (reference {chk['seam_reference']:.2e})"))
    herm_tol = 1e-12 * max(1.0, float(np.max(np.abs(h.values))))
    rows.append(("hermiticity", chk["hermiticity"] < herm_tol, f"{chk['hermiticity']:.2e}"))
    rows.append(("positivity", chk["min_eigenvalue"] > 0, f"min eigenvalue {chk['min_eigenvalue']:.3e}"))
    deg = degree(b, h).degree
    rows.append(("degree", abs(deg - round(deg)) < 1e-6, f"{deg:.10f}"))
    return rows


def cmd_validate(scenario_path: str) -> int:
    scn = _load(scenario_path)
    if scn is None:
        return EXIT_INPUT
    rows = validation_rows(scn, Path(scenario_path).parent)
    width = max(len(r[0]) for r in rows)
    for name, ok, detail in rows:
        print(f"{name:<{width}}  {'PASS' if ok else 'FAIL'}  {detail}")
    return EXIT_OK if all(ok for _, ok, _ in rows) else EXIT_INPUT


# ---------------------------------------------------------------- sweep

SWEEP_COLUMNS = ("N", "curvature_residual", "curvature_order", "relation_residual",
                 "relation_order", "hermitian_defect")


def _exact_curvature(scn: Scenario, vol: float) -> np.ndarray | None:
    """Diagonal ``2 pi d_i / vol`` for canonical metrics on sums of line bundles."""
    if scn.initial_metric["kind"] != "canonical":
        return None
    try:
        c = stability.bundle_class(scn.bundle)
    except (KeyError, ValueError):
        return None
    if c.tag != "LineSum":
        return None
    return np.diag(2 * np.pi / vol * np.array(c.degrees, dtype=float)).astype(complex)


def _orders(ns: list[int], errs: list[float]) -> list[float]:
    out = [math.nan]
    for i in range(1, len(ns)):
        a, b = errs[i - 1], errs[i]
        if a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b):
            out.append(math.log(a / b) / math.log(ns[i] / ns[i - 1]))
        else:
            out.append(math.nan)
    return out


def sweep_table(scn: Scenario, grids: list[int]) -> list[dict]:
    if scn.initial_metric["kind"] == "snapshot":
        raise ValueError("a snapshot initial metric is tied to one grid and cannot be swept")
    rows = []
    for n in grids:
        h = scn.initial(N=n)
        k = mean_curvature(h)
        exact = _exact_curvature(scn, h.domain.vol)
        curv = math.nan
        if exact is not None:
            curv = float(np.max(pointwise_norm(k - exact.reshape(exact.shape + (1, 1)), h.values)))
        rel = math.nan
        if h.rank == 2 and np.max(np.abs(np.linalg.det(np.moveaxis(h.values, (0, 1), (-2, -1))) - 1)) < 1e-8:
            rel = curvature_relation_residual(h)
        rows.append({"N": n, "curvature_residual": curv, "relation_residual": rel,
                     "hermitian_defect": hermitian_defect(h)})
    ns = [r["N"] for r in rows]
    for key, okey in (("curvature_residual", "curvature_order"), ("relation_residual", "relation_order")):
        for r, o in zip(rows, _orders(ns, [r[key] for r in rows])):
            r[okey] = o
    return rows


def cmd_sweep(scenario_path: str, grids: list[int], out: str | None = None) -> int:
    scn = _load(scenario_path)
    if scn is None:
        return EXIT_INPUT
    try:
        rows = sweep_table(scn, grids)
    except ValueError as exc:
        return _fail(str(exc))
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=SWEEP_COLUMNS)
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if isinstance(r[k], float) and math.isnan(r[k]) else r[k])
                        for k in SWEEP_COLUMNS})
    finally:
        if out:
            fh.close()
    return EXIT_OK


# ---------------------------------------------------------------- report

def read_diagnostics(path: Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if not rows:
        raise ValueError(f"{path} has no records")
    return {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}


def render_svg(data: dict[str, np.ndarray], path: Path, title: str = "") -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax1, ax2) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    t = data["time"]
    sup = data["sup_dev"]
    if np.all(sup > 0):
        ax1.semilogy(t, sup, color="C0")
    else:
        ax1.plot(t, sup, color="C0")
    ax1.set_ylabel("sup |K - lam|")
    ax1.set_title(title)
    ax2.plot(t, data["min_eig"], color="C1")
    ax2.set_ylabel("min eig of h0^-1 h")
    ax2.set_xlabel("t")
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_report(run_dir: str, svg: bool = False, quiet: bool = False) -> int:
    """Write ``report.txt``; also ``report.svg`` with ``svg`` or when the run asked for it."""
    d = Path(run_dir)
    csv_path = d / "diagnostics.csv"
    if not csv_path.is_file():
        return _fail(f"{d} contains no diagnostics.csv")
    try:
        data = read_diagnostics(csv_path)
    except ValueError as exc:
        return _fail(str(exc))
    summary = {}
    if (d / "summary.json").is_file():
        summary = json.loads((d / "summary.json").read_text())
    lines = [
        f"run directory   {d}",
        f"samples         {len(data['step'])} (last step {int(data['step'][-1])}, t = {data['time'][-1]:.6g})",
        f"sup deviation   {data['sup_dev'][0]:.4e} -> {data['sup_dev'][-1]:.4e}",
        f"min eigenvalue  {data['min_eig'][-1]:.4e}",
        f"condition no.   {data['cond'][-1]:.4e}",
        f"det drift       {np.max(np.abs(data['det_drift'])):.2e} (max)",
    ]
    for key in ("lambda", "c0", "classification", "oracle_prediction", "certificate",
                "terminated_by", "wall_time"):
        if key in summary:
            lines.append(f"{key:<15} {summary[key]}")
    text = "\n".join(lines) + "\n"
    (d / "report.txt").write_text(text)
    if not quiet:
        print(text, end="")
    if svg or summary.get("scenario", {}).get("outputs", {}).get("emit_svg", False):
        render_svg(data, d / "report.svg", title=summary.get("classification", ""))
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def _grids(text: str) -> list[int]:
    try:
        return [int(g) for g in text.split(",") if g.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="flowlab", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="flow a scenario and write diagnostics")
    r.add_argument("scenario")
    r.add_argument("--out", default=None)

    v = sub.add_parser("validate", help="check a scenario's bundle and initial metric")
    v.add_argument("scenario")

    s = sub.add_parser("sweep", help="curvature residuals under grid refinement")
    s.add_argument("scenario")
    s.add_argument("--grids", type=_grids, default=[32, 64, 128])
    s.add_argument("--out", default=None, help="CSV path (default: stdout)")

    rep = sub.add_parser("report", help="summarize a run directory")
    rep.add_argument("run_dir")
    rep.add_argument("--svg", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "run":
        return cmd_run(args.scenario, args.out)
    if args.command == "validate":
        return cmd_validate(args.scenario)
    if args.command == "sweep":
        return cmd_sweep(args.scenario, args.grids, args.out)
    return cmd_report(args.run_dir, svg=args.svg)


if __name__ == "__main__":
    sys.exit(main())
