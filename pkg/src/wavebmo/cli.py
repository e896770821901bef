"""Command line entry point: ``wavebmo <subcommand> [options]``.

Exit status is 0 exactly when every assertion of the run passed.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .corpus import array_corpus, function_corpus
from .dyadic import Interval, read_gridfunction, write_gridfunction
from .errors import DomainError
from .experiments import (ConfigError, ExperimentConfig, RunReport, bmo_family, run_property_suite,
                          run_theorem_a, run_theorem_b)
from .growth import eta_model
from .norms import CoefficientArray, bmo_norm, carleson_norm, jn_p_norm


def _config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.exact_threshold is not None:
        updates["exact_threshold"] = args.exact_threshold
    if args.mc_samples is not None:
        updates["mc_samples"] = args.mc_samples
    return cfg.replace(**updates)


def _write_csv(path: Path, rows: list[dict]) -> None:
    fields: list[str] = []
    for r in rows:
        fields.extend(k for k in r if k not in fields)
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(v) if isinstance(v, float) else v for k, v in r.items()})


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True, default=str) + "\n")


def _write_dat(path: Path, rep: RunReport, key: str) -> None:
    """gnuplot blocks, one per refinement level: ``index ratio``."""
    with open(path, "w") as fh:
        fh.write(f"# {rep.kind}: case index vs ratio, one block per {key}\n")
        for level in sorted({r[key] for r in rep.rows}, reverse=key == "min_scale"):
            fh.write(f"# {key} = {level}\n")
            for r in rep.rows:
                if r[key] == level:
                    fh.write(f"{r['index']} {r['ratio']!r}\n")
            fh.write("\n\n")


def _emit(rep: RunReport, out: Path, cfg: ExperimentConfig, dat_key: str | None = None) -> int:
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / f"{rep.kind}.csv", rep.rows)
    _write_json(out / f"{rep.kind}.json", {"config": cfg.to_dict(), "summary": rep.summary})
    if dat_key:
        _write_dat(out / f"{rep.kind}.dat", rep, dat_key)
    status = "PASS" if rep.passed else "FAIL"
    print(f"{rep.kind}: {status}  " + json.dumps({k: v for k, v in rep.summary.items() if k != "results"},
                                                   sort_keys=True, default=str))
    return 0 if rep.passed else 1


def cmd_gen_corpus(args) -> int:
    cfg = _config(args)
    out = Path(args.out)
    (out / "functions").mkdir(parents=True, exist_ok=True)
    (out / "arrays").mkdir(parents=True, exist_ok=True)
    grid = cfg.grid()
    psi = cfg.wavelet_model()
    manifest = {"config": cfg.to_dict(), "functions": [], "arrays": []}
    for i, case in enumerate(function_corpus(cfg.seed, psi, cfg.n_steps, cfg.n_sums, dim=cfg.dim)):
        name = f"{i:03d}.gf"
        write_gridfunction(out / "functions" / name, case.sample(grid, cfg.space))
        manifest["functions"].append({"file": f"functions/{name}", "case": case.name})
    I0 = cfg.reporting_interval()
    for i, case in enumerate(array_corpus(cfg.seed, cfg.n_arrays, Interval(I0.left / 2, I0.right / 2), cfg.space)):
        name = f"{i:03d}.json"
        _write_json(out / "arrays" / name, case.build(cfg.min_scale).to_json())
        manifest["arrays"].append({"file": f"arrays/{name}", "case": case.name})
    _write_json(out / "corpus.json", manifest)
    print(f"wrote {len(manifest['functions'])} functions and {len(manifest['arrays'])} arrays to {out}")
    return 0


def cmd_theorem_a(args) -> int:
    cfg = _config(args)
    return _emit(run_theorem_a(cfg), Path(args.out), cfg, "L")


def cmd_theorem_b(args) -> int:
    cfg = _config(args)
    return _emit(run_theorem_b(cfg), Path(args.out), cfg, "min_scale")


def cmd_properties(args) -> int:
    cfg = _config(args)
    return _emit(run_property_suite(cfg), Path(args.out), cfg)


def cmd_norms(args) -> int:
    cfg = _config(args)
    path = Path(args.input)
    grid = cfg.grid()
    w = cfg.weight_model(grid)
    rho = cfg.growth_model()
    if args.eta:
        rho = eta_model(rho, cfg.q)
    if path.suffix == ".json":
        a = CoefficientArray.from_json(json.loads(path.read_text()))
        rep = carleson_norm(a, w, rho, args.p or cfg.p, min_scale=cfg.min_scale,
                            exact_threshold=cfg.exact_threshold, mc_samples=cfg.mc_samples, seed=cfg.seed)
        result = {"carleson": rep.to_json()}
    else:
        f = read_gridfunction(path)
        if f.grid != grid:
            raise ConfigError("input grid does not match the configured window and resolution")
        fam = bmo_family(grid.window, cfg.bmo_points, cfg.min_scale)
        result = {"bmo": bmo_norm(f, w, rho, fam).to_json()}
        if args.p:
            result["jn"] = jn_p_norm(f, w, rho, args.p, fam).to_json()
    text = json.dumps(result, indent=2, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / f"norms-{path.stem}.json").write_text(text + "\n")
    return 0


def cmd_report(args) -> int:
    out = Path(args.out)
    summaries = sorted(out.glob("*.json"))
    ok = True
    found = 0
    for path in summaries:
        data = json.loads(path.read_text())
        if "summary" not in data:
            continue
        found += 1
        s = data["summary"]
        passed = bool(s.get("passed"))
        ok &= passed
        headline = s.get("headline", "")
        print(f"{path.stem:<12} {'PASS' if passed else 'FAIL'}  headline={headline}")
    if not found:
        print(f"no run summaries in {out}", file=sys.stderr)
        return 1
    return 0 if ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wavebmo", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON experiment configuration")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default="results", help="output directory")
    common.add_argument("--exact-threshold", type=int, default=None,
                        help="largest number of signs enumerated exactly")
    common.add_argument("--mc-samples", type=int, default=None, help="Monte Carlo sample size")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("gen-corpus", parents=[common], help="write the corpus to disk").set_defaults(fn=cmd_gen_corpus)
    sub.add_parser("theorem-a", parents=[common], help="Carleson vs BMO on the function corpus").set_defaults(fn=cmd_theorem_a)
    sub.add_parser("theorem-b", parents=[common], help="BMO vs Carleson on the array corpus").set_defaults(fn=cmd_theorem_b)
    sub.add_parser("properties", parents=[common], help="run the property suite").set_defaults(fn=cmd_properties)
    pn = sub.add_parser("norms", parents=[common], help="norms of one grid function or coefficient file")
    pn.add_argument("input", help=".gf/.csv grid function or .json coefficient array")
    pn.add_argument("--p", type=float, default=None, help="exponent (jn variant or Carleson)")
    pn.add_argument("--eta", action="store_true", help="use the eta transform of the growth function")
    pn.set_defaults(fn=cmd_norms)
    sub.add_parser("report", parents=[common], help="summarize the runs found in --out").set_defaults(fn=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (DomainError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
