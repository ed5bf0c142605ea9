"""Command-line front end.

Subcommands: ``simulate`` (model + data files), ``fit`` (graph from a data
CSV), ``evaluate`` (F-score between graph files), ``diagnose`` (recovery
constants of a model file) and ``experiment`` (replicated benchmark grids,
one CSV row per method/setting/replication).

Every run writes a ``manifest.json`` echoing the configuration, seed,
timestamps, output paths and library version.  Exit codes: 0 success,
2 invalid input, 3 solver non-convergence, 4 I/O failure.  Set ``EG_LOG``
to a level name (DEBUG, INFO, ...) for diagnostics on stderr.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .baselines_diagnostics import (
    confusion_counts,
    emtp2_check,
    extremal_mst,
    f_score,
    gl_diagnostics,
    ns_diagnostics,
)
from .eglearn import (
    default_rho_grid,
    eglearn_path,
    is_connected,
    select_ic,
    sparsest_connected,
)
from .errors import ConvergenceError, InputError
from .experiments import run_experiment
from .hr_model import (
    graph_from_json,
    graph_to_json,
    load_json,
    matrix_from_json,
    matrix_to_json,
    precision_from_gamma,
    save_json,
)
from .simulate import (
    barabasi_albert,
    block_model_gamma,
    laplacian_gamma,
    positive_offdiag_fraction,
    sample_maxstable_hr,
    sample_mpd_hr,
)
from .tail_data import default_k, empirical_variogram, read_data_csv, write_data_csv

log = logging.getLogger("extgraph")


def _now():
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_manifest(out_dir, command, config, seed, started, outputs):
    manifest = {
        "command": command,
        "config": config,
        "seed": seed,
        "started": started,
        "finished": _now(),
        "outputs": sorted(str(p) for p in outputs),
        "version": __version__,
    }
    path = Path(out_dir) / "manifest.json"
    save_json(manifest, path)
    return path


def _parse_model(spec):
    parts = spec.split(":")
    kind = parts[0].lower()
    if kind == "ba" and len(parts) == 3:
        return {"family": "ba", "d": int(parts[1]), "q": int(parts[2])}
    if kind == "bm" and len(parts) == 4:
        return {"family": "bm", "n_c": int(parts[1]), "n_n": int(parts[2]),
                "alpha": float(parts[3])}
    raise InputError(f"cannot parse model spec {spec!r}; expected ba:d:q or "
                     "bm:n_c:n_n:alpha", reason="model-spec")


def _parse_grid(spec):
    try:
        lo, hi, count = spec.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError as exc:
        raise InputError(f"cannot parse grid {spec!r}; expected lo:hi:count",
                         reason="grid") from exc
    if not 0 < lo < hi or count < 2:
        raise InputError("grid needs 0 < lo < hi and count >= 2", reason="grid")
    return np.geomspace(lo, hi, count)


def _parse_bounds(spec):
    try:
        lo, hi = spec.split(":")
        return float(lo), float(hi)
    except ValueError as exc:
        raise InputError(f"cannot parse bounds {spec!r}; expected lo:hi",
                         reason="bounds") from exc


def _ensure_out(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(args):
    started = _now()
    out = _ensure_out(args.out)
    model = _parse_model(args.model)
    if model["family"] == "ba":
        graph = barabasi_albert(model["d"], model["q"], args.seed)
        gamma, theta = laplacian_gamma(graph, seed=args.seed)
    else:
        gamma, graph = block_model_gamma(model["n_c"], model["n_n"],
                                         model["alpha"], args.seed)
        theta = precision_from_gamma(gamma)
    sampler = sample_mpd_hr if args.kind == "mpd" else sample_maxstable_hr
    data = sampler(gamma, args.n, args.seed)

    model_path = out / "model.json"
    save_json({
        "model": model,
        "seed": args.seed,
        "gamma": matrix_to_json(gamma),
        "theta": matrix_to_json(theta),
        "graph": graph_to_json(graph),
    }, model_path)
    data_path = out / "data.csv"
    write_data_csv(data, data_path)
    manifest = _write_manifest(out, "simulate", vars(args), args.seed, started,
                               [model_path, data_path])
    log.info("simulate: wrote %s", manifest)
    return 0


def cmd_fit(args):
    started = _now()
    out = _ensure_out(args.out)
    data = read_data_csv(args.data)
    n, d = data.shape
    k = default_k(n) if args.k is None else int(args.k)
    if not 1 <= k < n:
        raise InputError(f"k must satisfy 1 <= k < n, got k={k}, n={n}",
                         reason="k")
    ev = empirical_variogram(data, k=k)
    outputs = []
    variogram_path = out / "variogram.json"
    save_json(matrix_to_json(ev.pooled), variogram_path)
    outputs.append(variogram_path)

    if args.method == "mst":
        graph = extremal_mst(ev.pooled)
        selection = {"rule": "mst"}
    else:
        base = args.method.split("-")[1]
        if d < 3:
            raise InputError("majority voting needs d >= 3", reason="dim")
        grid = (default_rho_grid(ev.pooled, base=base) if args.rho_grid is None
                else _parse_grid(args.rho_grid))
        path = eglearn_path(ev.pooled, base, grid)
        path_rows = [{"rho": float(r), "density": float(dens),
                      "connected": bool(conn), "edges": graph_to_json(g)["edges"]}
                     for r, dens, conn, g in zip(path.rhos, path.densities,
                                                 path.connected, path.graphs)]
        path_path = out / "path.json"
        save_json(path_rows, path_path)
        outputs.append(path_path)

        ic = None if args.ic == "none" else args.ic
        if ic is not None:
            if base != "ns":
                raise InputError("information criteria require eglearn-ns",
                                 reason="method")
            report = select_ic(ev.pooled, grid, ic, k)
            graph = report.graph
            ic_path = out / "ic.json"
            save_json({
                "criterion": report.criterion,
                "rho_grid": [float(r) for r in report.rho_grid],
                "selected": np.where(np.isnan(report.selected), None,
                                     report.selected).tolist(),
                "graph": graph_to_json(report.graph),
                "connected": is_connected(report.graph),
            }, ic_path)
            outputs.append(ic_path)
            selection = {"rule": "ic", "criterion": ic}
        else:
            graph = sparsest_connected(path)
            if graph is None:
                graph = path.graphs[0]
                selection = {"rule": "densest-fallback",
                             "note": "no connected graph in the path"}
            else:
                selection = {"rule": "sparsest-connected"}

    graph_path = out / "graph.json"
    payload = graph_to_json(graph)
    payload["selection"] = selection
    payload["k"] = k
    payload["n"] = n
    save_json(payload, graph_path)
    outputs.append(graph_path)
    _write_manifest(out, "fit", vars(args), args.seed, started, outputs)
    return 0


def cmd_evaluate(args):
    started = _now()
    true_graph = graph_from_json(load_json(args.true_graph))
    est_graph = graph_from_json(load_json(args.est_graph))
    result = {"f_score": f_score(true_graph, est_graph)}
    result.update(confusion_counts(true_graph, est_graph))
    print(json.dumps(result, indent=2))
    if args.out:
        out = _ensure_out(args.out)
        result_path = out / "evaluation.json"
        save_json(result, result_path)
        _write_manifest(out, "evaluate", vars(args), None, started,
                        [result_path])
    return 0


def cmd_diagnose(args):
    started = _now()
    out = _ensure_out(args.out)
    bundle = load_json(args.model)
    gamma = matrix_from_json(bundle["gamma"])
    graph = graph_from_json(bundle["graph"])
    bounds = _parse_bounds(args.rho_bounds)
    theta = precision_from_gamma(gamma)
    ns = ns_diagnostics(gamma, graph, bounds)
    gl = gl_diagnostics(gamma, graph, bounds)
    payload = {
        "ns": ns.to_json(),
        "gl": gl.to_json(),
        "emtp2": emtp2_check(theta),
        "positive_offdiag_fraction": positive_offdiag_fraction(theta),
    }
    diag_path = out / "diagnostics.json"
    save_json(payload, diag_path)
    _write_manifest(out, "diagnose", vars(args), None, started, [diag_path])
    return 0


def cmd_experiment(args):
    started = _now()
    out = _ensure_out(args.out)
    rows = run_experiment(args.preset, args.reps, args.seed, jobs=args.jobs)
    fields = ["preset", "model", "param", "k_ratio", "d", "k", "n", "rep",
              "method", "fscore", "density", "connected", "rho", "error"]
    csv_path = out / "results.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, restval="")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    _write_manifest(out, "experiment", vars(args), args.seed, started,
                    [csv_path])
    return 0


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="extgraph",
        description="Learn extremal graphical structures from multivariate "
                    "tail data.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a random model and a sample")
    p.add_argument("--model", required=True,
                   help="ba:d:q or bm:n_c:n_n:alpha")
    p.add_argument("--n", type=int, required=True, help="sample size")
    p.add_argument("--kind", choices=["max-stable", "mpd"],
                   default="max-stable")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="estimate a graph from a data CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, default=None,
                   help="number of exceedances; default floor(n^0.7)")
    p.add_argument("--method", default="eglearn-ns",
                   choices=["eglearn-ns", "eglearn-gl", "mst"])
    p.add_argument("--rho-grid", default=None, help="lo:hi:count (geometric)")
    p.add_argument("--ic", default="bic",
                   choices=["aic", "bic", "mbic", "none"],
                   help="tuning criterion for eglearn-ns")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("evaluate", help="F-score between two graph files")
    p.add_argument("--true-graph", required=True)
    p.add_argument("--est-graph", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("diagnose", help="recovery constants of a model file")
    p.add_argument("--model", required=True, help="model.json from simulate")
    p.add_argument("--rho-bounds", default="0:0", help="lo:hi penalty window")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("experiment", help="replicated benchmark grid")
    p.add_argument("--preset", required=True)
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None):
    level = os.environ.get("EG_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        log.error("invalid input: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        log.error("solver failure: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        print(f"error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
