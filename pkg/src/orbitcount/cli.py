"""Command-line entry point: ``orbitcount census|sweep|lefschetz <scenario>``."""

import argparse
from dataclasses import replace
from importlib import resources
import logging
from pathlib import Path
import sys
import warnings

from . import census as cz
from .config import load_scenario, parse_scenario
from .errors import ConfigError, IncompleteCensus, NonIntegerWeight, OrbitCountError
from .homotopy import HomotopySweep
from .lefschetz import lefschetz_report
from .report import build_report, census_body, dumps, sweep_csv

log = logging.getLogger("orbitcount")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCOMPLETE = 2
EXIT_VERDICT_FAIL = 3


def packaged_scenarios():
    root = resources.files("orbitcount") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def resolve_scenario(ref):
    """Load ``ref`` as a path, falling back to the packaged scenario of that name."""
    path = Path(ref)
    if path.exists():
        return load_scenario(path)
    name = ref[:-5] if ref.endswith(".yaml") else ref
    res = resources.files("orbitcount") / "scenarios" / f"{name}.yaml"
    if res.is_file():
        return parse_scenario(res.read_text(encoding="utf-8"), source=f"<packaged:{name}>")
    raise ConfigError(f"no scenario file {ref!r} and no packaged scenario of that name "
                      f"(packaged: {', '.join(packaged_scenarios())})")


def _emit(args, scenario, report, csv_text=None):
    text = dumps(report)
    if args.out is None:
        sys.stdout.write(text)
        return
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    json_name = scenario.outputs.get("json", f"{scenario.name}.{scenario.kind}.json")
    (out / json_name).write_text(text, encoding="utf-8")
    log.info("wrote %s", out / json_name)
    if csv_text is not None:
        csv_name = scenario.outputs.get("csv", f"{scenario.name}.{scenario.kind}.csv")
        (out / csv_name).write_text(csv_text, encoding="utf-8")
        log.info("wrote %s", out / csv_name)


def _expect(scenario, kind):
    if scenario.kind != kind:
        raise ConfigError(f"{scenario.source}: scenario kind is {scenario.kind!r}, "
                          f"not {kind!r}; run `orbitcount {scenario.kind}` instead")


def _with_degree_max(scenario, args):
    if args.degree_max is not None and scenario.window is not None:
        scenario.window = replace(scenario.window, degree_max=args.degree_max)
    return scenario


def run_census(args):
    sc = _with_degree_max(resolve_scenario(args.scenario), args)
    _expect(sc, "census")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", IncompleteCensus)
        census = cz.build_census(sc.field, sc.t, sc.window, per_dim=sc.per_dim,
                                 transient=sc.transient, opts=sc.integrator, dmax=sc.dmax,
                                 tol_root=sc.tol_root, n_jobs=args.jobs)
    incomplete = [w for w in caught if issubclass(w.category, IncompleteCensus)]
    for w in caught:
        if w not in incomplete:
            warnings.warn_explicit(w.message, w.category, w.filename, w.lineno)
    body = census_body(census, suspension=sc.field.is_suspension)
    body["incomplete"] = bool(incomplete)
    _emit(args, sc, build_report("census", sc, body, meta=not args.no_meta))
    log.info("%s: %d ghost(s), %d orbit record(s), total weight %d", sc.name,
             len(census.ghosts), len(census.orbits), census.total_weight)
    if incomplete:
        log.warning("%s", incomplete[0].message)
        return EXIT_INCOMPLETE
    return EXIT_OK


def run_sweep(args):
    sc = _with_degree_max(resolve_scenario(args.scenario), args)
    _expect(sc, "sweep")
    w = sc.window
    est = HomotopySweep(s_max=w.s_max, region=w.region, degree_max=w.degree_max,
                        t_grid=sc.t_grid, n_checkpoints=sc.n_checkpoints,
                        tol=sc.integrator.tol, tol_event=sc.tol_event, tol_margin=sc.tol_margin,
                        per_dim=sc.per_dim, transient=sc.transient, dmax=sc.dmax,
                        tol_root=sc.tol_root, n_jobs=args.jobs)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IncompleteCensus)
        est.fit(sc.family)
    rep = est.report_
    body = rep.to_dict()
    _emit(args, sc, build_report("sweep", sc, body, meta=not args.no_meta), sweep_csv(rep))
    log.info("%s: verdict %s, %d event(s)", sc.name, est.verdict_, len(rep.events))
    return EXIT_OK if rep.passed else EXIT_VERDICT_FAIL


def run_lefschetz(args):
    sc = resolve_scenario(args.scenario)
    _expect(sc, "lefschetz")
    d_max = args.degree_max if args.degree_max is not None else sc.d_max
    sc.d_max = d_max
    body = lefschetz_report(sc.homology, d_max, sc.discrete_map)
    _emit(args, sc, build_report("lefschetz", sc, body, meta=not args.no_meta))
    log.info("%s: weights %s", sc.name, body["weights"])
    if "oracle_agrees" in body and not body["oracle_agrees"]:
        log.warning("brute-force orbit count disagrees with the Moebius weights")
    return EXIT_OK


COMMANDS = {"census": run_census, "sweep": run_sweep, "lefschetz": run_lefschetz}


def build_parser():
    p = argparse.ArgumentParser(
        prog="orbitcount",
        description="Weighted counts of ghost and periodic orbits, homotopy sweeps and "
                    "Lefschetz/Moebius tables from declarative scenario files.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (("census", "weighted census of one field"),
                            ("sweep", "homotopy sweep and invariance audit"),
                            ("lefschetz", "Lefschetz numbers and Moebius weights")):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("scenario", help="scenario YAML file or packaged scenario name")
        sp.add_argument("--jobs", type=int, default=1, help="worker cap (default 1)")
        sp.add_argument("--no-meta", action="store_true",
                        help="omit timestamps and environment details for byte-identical reports")
        sp.add_argument("--degree-max", type=int, default=None,
                        help="degree cutoff (census/sweep) or d_max (lefschetz)")
        sp.add_argument("--out", default=None, help="output directory (default: JSON to stdout)")
    lp = sub.add_parser("list", help="list packaged scenarios")
    lp.set_defaults(scenario=None)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="orbitcount: %(message)s", stream=sys.stderr)
    if args.command == "list":
        print("\n".join(packaged_scenarios()))
        return EXIT_OK
    if args.jobs < 1:
        print("orbitcount: --jobs must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    if args.degree_max is not None and args.degree_max < 1:
        print("orbitcount: --degree-max must be at least 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return COMMANDS[args.command](args)
    except NonIntegerWeight as exc:
        print(f"orbitcount: NonIntegerWeight: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ConfigError as exc:
        print(f"orbitcount: configuration error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (OrbitCountError, ValueError, OSError) as exc:
        print(f"orbitcount: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
