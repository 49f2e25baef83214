"""Command-line pipeline: describe, fit, summarize, compare and simulate.

Each command writes its outputs atomically into one directory together with a
``manifest.json`` recording the inputs (with sha256 hashes), the settings, the
outputs and timestamps. Exit codes: 0 success, 1 diagnostics check failed
(``--strict-diagnostics``), 2 data error, 64 usage error, 70 internal error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import os
import sys
import tempfile
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analysis import (
    DEFAULT_GRID,
    bayesian_r_squared,
    coefficient_difference,
    counterfactual_exec_curve,
    intervene_on_cover,
    posterior_predictive_check,
    prior_predictive_mutation_score,
    summarize_coefficients,
    table_csv,
)
from .dag import adjustment_sets, backdoor_paths, enumerate_paths, is_blocked, parse_edge_list
from .data import SUMMARY_COLUMNS, load_csv, preprocess, summarize, summary_rows
from .errors import DataError, GraphError, ManifestMismatch, MutcauseError, SamplerError, UnknownFamily, UnknownProject
from .model import MODEL_IDS, ModelSpec, make_model
from .reference import TABLES, lookup
from .sampler import ChainConfig
from .samples import FORMAT_VERSION, PosteriorSamples, run_chains
from .scm import ScmConfig, generate_raw, generate_transformed

EXIT_OK, EXIT_DIAGNOSTICS, EXIT_DATA, EXIT_USAGE, EXIT_INTERNAL = 0, 1, 2, 64, 70
OUT_ENV = "MUTCAUSE_OUT"

log = logging.getLogger("mutcause")


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse exits 2 by default; usage errors are 64 here
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


# --- files and manifests -------------------------------------------------------------------


def sha256(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, allow_nan=False, default=_jsonable) + "\n"


def _clean(obj):
    """Non-finite floats become null, since JSON has no NaN."""
    if isinstance(obj, float):
        return obj if np.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


class Run:
    """Output directory of one command; writes files atomically and the manifest last."""

    def __init__(self, command: str, out: Path, settings: dict):
        self.command = command
        self.out = out
        self.settings = settings
        self.inputs: list[dict] = []
        self.outputs: list[dict] = []
        self.started = _now()

    def add_input(self, path: str | os.PathLike, role: str = "input") -> str:
        digest = sha256(path)
        self.inputs.append({"role": role, "path": str(path), "sha256": digest})
        return digest

    def write(self, name: str, text: str) -> Path:
        path = self.out / name
        write_atomic(path, text)
        self.outputs.append({"path": name, "sha256": hashlib.sha256(text.encode("utf-8")).hexdigest()})
        return path

    def write_json(self, name: str, payload: dict) -> Path:
        return self.write(name, _json({"format_version": FORMAT_VERSION, "manifest": "manifest.json", **payload}))

    def finish(self) -> dict:
        manifest = {
            "format_version": FORMAT_VERSION,
            "tool": "mutcause",
            "version": __version__,
            "command": self.command,
            "settings": self.settings,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "timestamps": {"started": self.started, "finished": _now()},
        }
        write_atomic(self.out / "manifest.json", _json(manifest))
        return manifest


def _out_dir(args, default_name: str) -> Path:
    if args.out:
        return Path(args.out)
    return Path(os.environ.get(OUT_ENV, "mutcause-out")) / default_name


# --- fit artifacts ------------------------------------------------------------------------


class Fit:
    def __init__(self, path: str | os.PathLike):
        self.dir = Path(path)
        manifest_path = self.dir / "manifest.json"
        if not manifest_path.is_file():
            raise ManifestMismatch(f"{self.dir}: no manifest.json; expected the output directory of 'mutcause fit'")
        self.manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        if self.manifest.get("command") != "fit":
            raise ManifestMismatch(f"{self.dir}: manifest was written by {self.manifest.get('command')!r}, not 'fit'")
        recorded = {o["path"]: o["sha256"] for o in self.manifest["outputs"]}
        for name in ("draws.csv", "spec.json"):
            if name not in recorded or sha256(self.dir / name) != recorded[name]:
                raise ManifestMismatch(f"{self.dir / name} does not match the hash recorded in its manifest")
        self.spec = ModelSpec.from_json((self.dir / "spec.json").read_text(encoding="utf-8"))
        self.samples = PosteriorSamples.from_csv((self.dir / "draws.csv").read_text(encoding="utf-8"), self.spec)

    @property
    def data_hash(self) -> str:
        return next(i["sha256"] for i in self.manifest["inputs"] if i["role"] == "data")

    @property
    def lenient(self) -> bool:
        return bool(self.manifest["settings"].get("lenient", False))

    def load_data(self, path: str, run: Run | None = None):
        digest = sha256(path)
        if digest != self.data_hash:
            raise ManifestMismatch(f"{path} is not the dataset this fit was produced from (sha256 differs)")
        if run is not None:
            run.add_input(path, "data")
        return preprocess(load_csv(path, lenient=self.lenient))


def _same_data(*fits: Fit) -> None:
    hashes = {f.data_hash for f in fits}
    if len(hashes) > 1:
        raise ManifestMismatch("the fits were produced from different datasets: " + ", ".join(str(f.dir) for f in fits))


# --- formatting ---------------------------------------------------------------------------


def _text_table(rows: Sequence[dict], columns: Sequence[str]) -> str:
    cells = [[str(c) for c in columns]] + [[str(r[c]) for c in columns] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(columns))]
    lines = ["  ".join(v.rjust(w) if i else v.ljust(w) for i, (v, w) in enumerate(zip(row, widths))) for row in cells]
    return "\n".join(lines)


def _csv(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def _parse_grid(text: str | None) -> list[float]:
    if text is None:
        return list(DEFAULT_GRID)
    try:
        if ":" in text:
            start, stop, num = text.split(":")
            n = int(num)
            if n < 1:
                raise ValueError
            return [float(v) for v in np.linspace(float(start), float(stop), n)]
        values = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--grid expects 'start:stop:count' or a comma-separated list, got {text!r}") from None
    if not values:
        raise UsageError("--grid is empty")
    return values


def _level(value: str) -> float:
    v = float(value)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError("level must lie in (0, 1)")
    return v


def _positive_int(value: str) -> int:
    v = int(value)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_int(value: str) -> int:
    v = int(value)
    if v < 0:
        raise argparse.ArgumentTypeError("must be a non-negative integer")
    return v


# --- commands ----------------------------------------------------------------------------


def cmd_describe(args) -> int:
    run = Run("describe", _out_dir(args, "describe"), {"lenient": args.lenient})
    run.add_input(args.input, "data")
    ds = load_csv(args.input, lenient=args.lenient)
    rows = summary_rows(summarize(ds))
    run.write("describe.csv", _csv(rows, SUMMARY_COLUMNS))
    run.write_json("describe.json", {"columns": list(SUMMARY_COLUMNS), "rows": rows, "violations": list(ds.violations)})
    run.finish()
    display = [{k: (f"{v:.2f}" if isinstance(v, float) else v) for k, v in r.items()} for r in rows]
    print(_text_table(display, SUMMARY_COLUMNS))
    return EXIT_OK


def _chain_config(args) -> ChainConfig:
    try:
        return ChainConfig(
            warmup=args.warmup,
            samples=args.samples,
            chains=args.chains,
            target_accept=args.target_accept,
            seed=args.seed,
            metric=args.metric,
            n_jobs=args.jobs,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _fit_one(input_path: str, model: str, cfg: ChainConfig, out: Path, lenient: bool, rhat_max: float | None):
    """Fit one model and write its artifacts; returns (samples, exit code)."""
    run = Run("fit", out, {"model": model, "lenient": lenient, "chain_config": cfg.to_dict()})
    run.add_input(input_path, "data")
    data = preprocess(load_csv(input_path, lenient=lenient))
    spec = make_model(model, data.projects)
    run.write("spec.json", spec.to_json() + "\n")
    try:
        samples = run_chains(spec, data, cfg)
    except SamplerError as exc:
        run.write_json("error.json", {"error": type(exc).__name__, "message": str(exc), "model": model, "chain_config": cfg.to_dict()})
        run.finish()
        raise
    run.write("draws.csv", samples.to_csv())
    run.write("diagnostics.json", samples.diagnostics_json() + "\n")
    run.finish()
    worst = float(np.nanmax(samples.rhat))
    log.info("%s: max R-hat %.4f, min ESS %.0f, divergences %d", model, worst, np.nanmin(samples.ess), int(samples.divergences.sum()))
    code = EXIT_OK
    if rhat_max is not None and not worst < rhat_max:
        print(f"{model}: R-hat {worst:.4f} exceeds {rhat_max}", file=sys.stderr)
        code = EXIT_DIAGNOSTICS
    return samples, code


def cmd_fit(args) -> int:
    cfg = _chain_config(args)
    out = _out_dir(args, f"fit-{args.model}")
    samples, code = _fit_one(args.input, args.model, cfg, out, args.lenient, args.rhat_max if args.strict_diagnostics else None)
    print(f"wrote {samples.n_iterations * samples.n_chains} draws of {len(samples.names)} parameters to {out / 'draws.csv'}")
    return code


def _table_payload(rows) -> dict:
    return {"columns": ["project", "mean", "se", "q025", "q975"], "rows": [r.row() for r in rows]}


def _print_table(rows) -> None:
    print(_text_table([r.display() for r in rows], ["project", "mean", "se", "q025", "q975"]))


def cmd_summarize(args) -> int:
    fit = Fit(args.fit)
    run = Run("summarize", _out_dir(args, f"summary-{fit.spec.name}-{args.family}"), {"family": args.family})
    run.add_input(fit.dir / "manifest.json", "fit")
    rows = summarize_coefficients(fit.samples, args.family)
    run.write("summary.csv", table_csv(rows))
    run.write_json("summary.json", {"model": fit.spec.name, "family": args.family, **_table_payload(rows)})
    run.finish()
    _print_table(rows)
    return EXIT_OK


def cmd_diff(args) -> int:
    a, b = Fit(args.fit_a), Fit(args.fit_b)
    _same_data(a, b)
    family_b = args.family_b or args.family
    run = Run("diff", _out_dir(args, f"diff-{a.spec.name}-{b.spec.name}"), {"family": args.family, "family_b": family_b})
    run.add_input(a.dir / "manifest.json", "fit_a")
    run.add_input(b.dir / "manifest.json", "fit_b")
    rows = coefficient_difference(a.samples, b.samples, args.family, family_b)
    run.write("diff.csv", table_csv(rows))
    run.write_json("diff.json", {"a": a.spec.name, "b": b.spec.name, "family": args.family, "family_b": family_b, **_table_payload(rows)})
    run.finish()
    _print_table(rows)
    return EXIT_OK


def cmd_counterfactual(args) -> int:
    grid = _parse_grid(args.grid)
    fit = Fit(args.fit)
    nc = Fit(args.noncausal) if args.noncausal else None
    if nc:
        _same_data(fit, nc)
    settings = {"project": args.project, "grid": grid, "cover_fixed": args.cover_fixed, "level": args.level, "intervene": args.intervene, "seed": args.seed}
    run = Run("counterfactual", _out_dir(args, f"counterfactual-{args.project}"), settings)
    run.add_input(fit.dir / "manifest.json", "fit")
    if args.intervene == "cover":
        if not fit.spec.has_exec_submodel:
            raise UsageError("--intervene cover needs a fit with the Exec sub-model (rq3)")
        curve = intervene_on_cover(fit.samples, args.project, grid, seed=args.seed, level=args.level)
    else:
        if nc:
            run.add_input(nc.dir / "manifest.json", "noncausal_fit")
        curve = counterfactual_exec_curve(fit.samples, nc.samples if nc else None, args.project, grid, args.cover_fixed, args.level)
    text = curve.to_csv()
    run.write("curve.csv", text)
    band = lambda b: None if b is None else {"mean": b.mean, "lo": b.lo, "hi": b.hi, "median": b.median}  # noqa: E731
    run.write_json(
        "curve.json",
        {"project": curve.project, "variable": curve.variable, "level": curve.level, "grid": curve.grid, "causal": band(curve.causal), "noncausal": band(curve.noncausal)},
    )
    run.finish()
    sys.stdout.write(text)
    return EXIT_OK


def cmd_ppc(args) -> int:
    fit = Fit(args.fit)
    run = Run("ppc", _out_dir(args, f"ppc-{fit.spec.name}"), {"level": args.level})
    run.add_input(fit.dir / "manifest.json", "fit")
    data = fit.load_data(args.input, run)
    rows = posterior_predictive_check(fit.spec, fit.samples, data, args.level)
    cols = ["project", "mean", "lo", "hi", "observed"]
    run.write("ppc.csv", _csv([r.row() for r in rows], cols))
    run.write_json("ppc.json", {"model": fit.spec.name, "level": args.level, "rows": [r.row() for r in rows]})
    run.finish()
    print(_text_table([{k: (f"{v:.3f}" if isinstance(v, float) else v) for k, v in r.row().items()} for r in rows], cols))
    return EXIT_OK


def cmd_prior_check(args) -> int:
    settings = {"model": args.model, "sims": args.sims, "seed": args.seed, "bins": args.bins, "lenient": args.lenient}
    run = Run("prior-check", _out_dir(args, f"prior-check-{args.model}"), settings)
    run.add_input(args.input, "data")
    data = preprocess(load_csv(args.input, lenient=args.lenient))
    spec = make_model(args.model, data.projects)
    hist = prior_predictive_mutation_score(spec, data, args.sims, args.seed, args.bins)
    run.write("prior_predictive.csv", _csv(hist.rows(), ["bin_lo", "bin_hi", "count"]))
    extreme = float(np.mean((hist.values < 0.1) | (hist.values > 0.9)))
    run.write_json("prior_predictive.json", {"model": args.model, "sims": args.sims, "scores": hist.values, "fraction_extreme": extreme})
    run.finish()
    print(_text_table([{k: (f"{v:.2f}" if isinstance(v, float) else v) for k, v in r.items()} for r in hist.rows()], ["bin_lo", "bin_hi", "count"]))
    print(f"fraction of simulated mutation scores below 0.1 or above 0.9: {extreme:.3f}")
    return EXIT_OK


def cmd_r2(args) -> int:
    fit = Fit(args.fit)
    run = Run("r2", _out_dir(args, f"r2-{fit.spec.name}"), {"level": args.level})
    run.add_input(fit.dir / "manifest.json", "fit")
    data = fit.load_data(args.input, run)
    r2 = bayesian_r_squared(fit.spec, fit.samples, data, args.level)
    run.write_json("r2.json", {"model": fit.spec.name, "level": args.level, **r2.to_dict()})
    run.finish()
    print(f"Bayesian R-squared ({fit.spec.name}): mean {r2.mean:.3f}, {args.level:.0%} interval [{r2.lo:.3f}, {r2.hi:.3f}]")
    return EXIT_OK


def dag_report(text: str, treatment: str, outcome: str) -> dict:
    dag = parse_edge_list(text)
    if treatment == outcome:
        raise UsageError("--treatment and --outcome must differ")
    for name in (treatment, outcome):
        if name not in dag.nodes:
            raise UsageError(f"node {name!r} is not in the graph; nodes: {', '.join(sorted(dag.nodes))}")
    paths = enumerate_paths(dag, treatment, outcome)
    backdoor = backdoor_paths(dag, treatment, outcome)
    sets = adjustment_sets(dag, treatment, outcome)
    return {
        "format_version": FORMAT_VERSION,
        "treatment": treatment,
        "outcome": outcome,
        "paths": [str(p) for p in paths],
        "backdoor_paths": [{"path": str(p), "open_unconditionally": not is_blocked(dag, p)} for p in backdoor],
        "adjustment_sets": [sorted(s.nodes) for s in sets],
        "minimal_adjustment_sets": [sorted(s.nodes) for s in sets if s.minimal],
        "descendants_of_treatment": sorted(dag.descendants(treatment)),
    }


def cmd_dag(args) -> int:
    report = dag_report(Path(args.edges).read_text(encoding="utf-8"), args.treatment, args.outcome)
    if args.out:
        run = Run("dag", Path(args.out), {"treatment": args.treatment, "outcome": args.outcome})
        run.add_input(args.edges, "edges")
        run.write("dag.json", _json(report))
        run.finish()
    if args.json:
        sys.stdout.write(_json(report))
        return EXIT_OK
    fmt = lambda s: "{" + ", ".join(s) + "}"  # noqa: E731
    print(f"paths from {args.treatment} to {args.outcome}:")
    for p in report["paths"]:
        print(f"  {p}")
    print("back-door paths:")
    for p in report["backdoor_paths"]:
        print(f"  {p['path']}" + ("  (open)" if p["open_unconditionally"] else "  (blocked)"))
    if not report["backdoor_paths"]:
        print("  none")
    print("sufficient adjustment sets: " + ", ".join(fmt(s) for s in report["adjustment_sets"]))
    print("minimal adjustment sets: " + ", ".join(fmt(s) for s in report["minimal_adjustment_sets"]))
    if report["descendants_of_treatment"]:
        print(f"never adjust for (descendants of {args.treatment}): " + ", ".join(report["descendants_of_treatment"]))
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        cfg = ScmConfig.from_json(Path(args.config).read_text(encoding="utf-8"))
    except (KeyError, TypeError, ValueError) as exc:
        from .errors import ConfigError

        raise ConfigError(f"{args.config}: invalid simulation config: {exc}") from None
    if args.seed is not None:
        cfg = ScmConfig(cfg.projects, cfg.mutants, args.seed, cfg.raw_law)
    run = Run("simulate", _out_dir(args, "simulate"), {"transformed": args.transformed, "seed": cfg.seed})
    run.add_input(args.config, "config")
    if args.transformed:
        data, _ = generate_transformed(cfg)
        rows = [
            {"project": data.projects[p], "mutant_id": f"m{i:06d}", "exec_z": repr(float(e)), "cover_z": repr(float(c)), "killed": int(k)}
            for i, (p, e, c, k) in enumerate(zip(data.project_index, data.exec_z, data.cover_z, data.killed))
        ]
        run.write("data.csv", _csv(rows, ["project", "mutant_id", "exec_z", "cover_z", "killed"]))
        n = len(data)
    else:
        ds = generate_raw(cfg)
        run.write("data.csv", ds.to_csv())
        n = len(ds)
    run.write("truth.json", cfg.truth_json() + "\n")
    run.finish()
    print(f"wrote {n} records for {len(cfg.projects)} projects to {run.out / 'data.csv'}")
    return EXIT_OK


PIPELINE_TABLES = (
    ("table2", "rq1", None, "RQ1 beta: association of Exec"),
    ("table3", "rq2", None, "RQ2 beta: causal effect of Exec"),
    ("table4", "rq1", "rq2", "RQ1 beta - RQ2 beta"),
    ("table5", "rq4", None, "RQ4 beta: causal association of Cover"),
    ("table6", "rq4", "rq2", "RQ4 beta - RQ2 beta"),
)


def cmd_pipeline(args) -> int:
    cfg = _chain_config(args)
    out = _out_dir(args, "pipeline")
    run = Run("pipeline", out, {"lenient": args.lenient, "chain_config": cfg.to_dict()})
    run.add_input(args.input, "data")
    ds = load_csv(args.input, lenient=args.lenient)
    rows = summary_rows(summarize(ds))
    run.write("table1.csv", _csv(rows, SUMMARY_COLUMNS))
    fits, code = {}, EXIT_OK
    for model in MODEL_IDS:
        print(f"fitting {model} ...", file=sys.stderr)
        fits[model], c = _fit_one(args.input, model, cfg, out / model, args.lenient, args.rhat_max if args.strict_diagnostics else None)
        code = max(code, c)
    comparison = []
    for name, model_a, model_b, title in PIPELINE_TABLES:
        if model_b:
            table = coefficient_difference(fits[model_a], fits[model_b], "beta")
        else:
            table = summarize_coefficients(fits[model_a], "beta")
        run.write(f"{name}.csv", table_csv(table))
        run.write_json(f"{name}.json", {"title": title, **_table_payload(table)})
        print(f"\n{name}: {title}")
        _print_table(table)
        for r in table:
            ref = lookup(name, r.project)
            if ref:
                comparison.append({"table": name, "project": r.project, "mean": r.mean, "published_mean": ref[0], "difference": r.mean - ref[0]})
    r2 = bayesian_r_squared(fits["rq1"].spec, fits["rq1"], preprocess(ds))
    run.write_json("r2_rq1.json", r2.to_dict())
    run.write("comparison.csv", _csv(comparison, ["table", "project", "mean", "published_mean", "difference"]))
    run.write_json("comparison.json", {"note": "agreement is reported, not asserted", "rows": comparison})
    run.finish()
    if comparison:
        print("\ncomparison with published means (reported, not asserted):")
        print(_text_table([{k: (f"{v:.2f}" if isinstance(v, float) else v) for k, v in c.items()} for c in comparison], ["table", "project", "mean", "published_mean", "difference"]))
    else:
        print(f"\nno project matches a published subject ({', '.join(sorted(TABLES['table2']))}); nothing to compare")
    return code


# --- parser ------------------------------------------------------------------------------------


def _add_chain_flags(p: argparse.ArgumentParser) -> None:
    d = ChainConfig()
    p.add_argument("--chains", type=_positive_int, default=d.chains)
    p.add_argument("--warmup", type=_nonneg_int, default=d.warmup)
    p.add_argument("--samples", type=_positive_int, default=d.samples)
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--target-accept", type=float, default=d.target_accept)
    p.add_argument("--metric", choices=("dense", "diag"), default=d.metric)
    p.add_argument("--jobs", type=_positive_int, default=1, help="run chains in this many processes")
    p.add_argument("--strict-diagnostics", action="store_true", help="exit 1 when any R-hat reaches --rhat-max")
    p.add_argument("--rhat-max", type=float, default=1.01)
    p.add_argument("--lenient", action="store_true", help="keep records that violate exec >= cover, with a warning")


def build_parser() -> Parser:
    parser = Parser(prog="mutcause", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mutcause {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    def command(name: str, help: str, out: bool = True) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help, description=help)
        if out:
            p.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./mutcause-out, plus a per-command name)")
        return p

    p = command("describe", "per-project descriptive statistics of a mutation CSV")
    p.add_argument("input")
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_describe)

    p = command("fit", "sample the posterior of one model")
    p.add_argument("input")
    p.add_argument("--model", required=True, choices=MODEL_IDS)
    _add_chain_flags(p)
    p.set_defaults(func=cmd_fit)

    p = command("summarize", "per-project summary of one coefficient family")
    p.add_argument("fit", help="output directory of 'mutcause fit'")
    p.add_argument("--family", default="beta")
    p.set_defaults(func=cmd_summarize)

    p = command("diff", "summary of the draw-wise difference between two fits")
    p.add_argument("fit_a")
    p.add_argument("fit_b")
    p.add_argument("--family", default="beta")
    p.add_argument("--family-b", help="family in the second fit (default: same as --family)")
    p.set_defaults(func=cmd_diff)

    p = command("counterfactual", "kill probability along an intervened covariate")
    p.add_argument("fit", help="fit of the adjusted model (rq3 or rq2)")
    p.add_argument("--project", required=True)
    p.add_argument("--noncausal", help="fit of the unadjusted model (rq1) for the companion curve")
    p.add_argument("--grid", help="'start:stop:count' or comma-separated values (default -2:2:41)")
    p.add_argument("--cover-fixed", type=float, default=0.0)
    p.add_argument("--level", type=_level, default=0.95)
    p.add_argument("--intervene", choices=("exec", "cover"), default="exec")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_counterfactual)

    p = command("ppc", "posterior predictive check of per-project mutation scores")
    p.add_argument("fit")
    p.add_argument("input", help="the CSV the fit was produced from")
    p.add_argument("--level", type=_level, default=0.95)
    p.set_defaults(func=cmd_ppc)

    p = command("prior-check", "prior predictive distribution of the mutation score")
    p.add_argument("input")
    p.add_argument("--model", required=True, choices=MODEL_IDS)
    p.add_argument("--sims", type=_positive_int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bins", type=_positive_int, default=20)
    p.add_argument("--lenient", action="store_true")
    p.set_defaults(func=cmd_prior_check)

    p = command("r2", "Bayesian R-squared of a fit")
    p.add_argument("fit")
    p.add_argument("input")
    p.add_argument("--level", type=_level, default=0.95)
    p.set_defaults(func=cmd_r2)

    p = command("dag", "back-door paths and adjustment sets of a causal graph", out=False)
    p.add_argument("edges", help="edge-list file: one 'A -> B' per line, '#' comments")
    p.add_argument("--treatment", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--json", action="store_true", help="print the report as JSON")
    p.add_argument("--out", help="also write dag.json and a manifest here")
    p.set_defaults(func=cmd_dag)

    p = command("simulate", "generate synthetic data from a structural causal model config")
    p.add_argument("config", help="JSON simulation config")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--transformed", action="store_true", help="write model-scale values instead of raw counts")
    p.set_defaults(func=cmd_simulate)

    p = command("pipeline", "describe, fit rq1-rq4 and write the five coefficient tables")
    p.add_argument("input")
    _add_chain_flags(p)
    p.set_defaults(func=cmd_pipeline)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help / --version exit 0, errors 64
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"mutcause {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (UnknownProject, UnknownFamily) as exc:
        print(f"mutcause {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, GraphError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"mutcause {args.command}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (SamplerError, MutcauseError) as exc:
        print(f"mutcause {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # pragma: no cover - last-resort guard
        log.exception("internal error")
        print(f"mutcause {args.command}: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
