"""
Command line entry point: ``fractal-nerves <subcommand> [options]``.

Every subcommand writes its outputs and a manifest.json into --out.
"""
import argparse
import hashlib
import json
import logging
import os
import platform
import sys
from importlib import metadata

import numpy as np

from . import __version__, catalog
from .config import TrialConfig, default_cell_budget, merge_options
from .errors import BudgetExceededError, ConfigError, NerveError
from .experiments import emit, growth_rate_fit, run_trials, sample_system, summary
from .homology import betti, exact_sequence_audit, rank_recursion_check
from .nerve import VERDICT_MODES, NerveTower, connectivity_report
from .render import raster_2d, write_ppm
from .resource import SystemResource, dumps
from .system import TAIL_KINDS, GridIFS, trial_rng
from .verify import run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_BUDGET = 2
EXIT_VERIFICATION = 3


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def _subdivision(text):
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"--n expects comma separated integers, got {text!r}")


def build_parser():
    parser = ArgumentParser(prog="fractal-nerves", description="Nerves and homology of non-autonomous grid systems.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    def trial_options(sub):
        sub.add_argument("--config", help="TrialConfig JSON file")
        sub.add_argument("--seed", type=int)
        sub.add_argument("--kmax", type=int)
        sub.add_argument("--trials", type=int)
        sub.add_argument("--threads", type=int)
        sub.add_argument("--d", type=int)
        sub.add_argument("--n", type=_subdivision)
        sub.add_argument("--r", type=int)
        sub.add_argument("--tail", choices=sorted(TAIL_KINDS))
        sub.add_argument("--verdict-mode", choices=sorted(VERDICT_MODES))
        sub.add_argument("--check-homology", action="store_const", const=True, help="cross-check graph homology by SNF")

    def system_options(sub):
        sub.add_argument("--system", required=True, help="catalog name or system JSON file")
        sub.add_argument("--verdict-mode", choices=sorted(VERDICT_MODES), default="exact")
        sub.add_argument("--maxdim", type=int)

    commands = {
        "gen": "sample a random system and write it as JSON",
        "nerve": "write N_{j,k} as JSON and DOT",
        "homology": "Betti numbers of N_{j,k} with recursion and exactness audits",
        "components": "component partition of N_{j,k} and the connectivity report",
        "percolate": "run Monte Carlo trials",
        "render": "write a PPM image of a depth-m approximation",
        "verify": "run the self-check suite",
    }
    subs = {}
    for name, help_text in commands.items():
        sub = subs[name] = subparsers.add_parser(name, help=help_text)
        sub.add_argument("--out", default="out", help="output directory")

    trial_options(subs["gen"])
    subs["gen"].add_argument("--trial", type=int, default=0, help="trial index whose system to write")
    trial_options(subs["percolate"])
    for name in ("nerve", "homology", "components"):
        system_options(subs[name])
        subs[name].add_argument("--j", type=int, default=1)
        subs[name].add_argument("--k", type=int, default=2)
    subs["components"].add_argument("--kmax", type=int, help="also report connectivity of N_{1,k} up to kmax")
    subs["render"].add_argument("--system", required=True, help="catalog name or system JSON file")
    subs["render"].add_argument("--m", type=int, default=2, help="depth")
    subs["render"].add_argument("--pixels", type=int, default=243)
    return parser


def load_system(name_or_path):
    if os.path.exists(name_or_path):
        return SystemResource.from_file(name_or_path).load()
    return catalog.load(name_or_path)


def trial_config(args):
    base = TrialConfig.from_file(args.config) if args.config else None
    overrides = {
        "seed": args.seed,
        "kmax": args.kmax,
        "trials": args.trials,
        "threads": args.threads,
        "d": args.d,
        "n": args.n,
        "r": args.r,
        "tail": args.tail,
        "verdict_mode": args.verdict_mode,
        "check_homology": args.check_homology,
        "out": args.out,
    }
    if args.n is not None and args.d is None:
        overrides["d"] = len(args.n)
    return merge_options(TrialConfig, base, overrides)


def _write_json(path, data):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _hash(data):
    return hashlib.sha256(json.dumps(data, sort_keys=True).encode("utf-8")).hexdigest()


def write_manifest(out_dir, command, argv, config_hash, seed=None, outputs=()):
    manifest = {
        "command": command,
        "argv": list(argv),
        "config_hash": config_hash,
        "seed": seed,
        "outputs": sorted(os.path.basename(path) for path in outputs),
        "versions": {
            "fractal_nerves": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "attrs": metadata.version("attrs"),
        },
    }
    return _write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _tower(args, system):
    return NerveTower(system, maxdim=args.maxdim, verdict_mode=args.verdict_mode, cell_budget=default_cell_budget())


def _system_hash(args, system, **extra):
    return _hash(dict(extra, system=system.to_json(), verdict_mode=args.verdict_mode, maxdim=args.maxdim))


def cmd_gen(args):
    config = trial_config(args)
    ifs = sample_system(config, trial_rng(config.seed, args.trial))
    path = os.path.join(args.out, "system.json")
    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps(ifs))
    print(path)
    return [path], config.config_hash(), config.seed


def cmd_nerve(args):
    system = load_system(args.system)
    nerve = _tower(args, system).nerve(args.j, args.k)
    stem = os.path.join(args.out, f"nerve_{args.j}_{args.k}")
    json_path = _write_json(stem + ".json", nerve.to_json())
    dot_path = stem + ".dot"
    with open(dot_path, "w", encoding="utf-8") as f:
        f.write(nerve.to_dot())
    print(f"vertices: {len(nerve.vertices)}  simplices: {[nerve.count(q) for q in range(nerve.dimension + 1)]}")
    return [json_path, dot_path], _system_hash(args, system, j=args.j, k=args.k), None


def cmd_homology(args):
    system = load_system(args.system)
    tower = _tower(args, system)
    report = betti(tower.nerve(args.j, args.k))
    data = {"betti": report.to_json()}
    if isinstance(system, GridIFS) and system.d == 2 and args.k > args.j + 1:
        recursion = rank_recursion_check(system, args.j, args.k, tower)
        data["recursion"] = {
            "lhs": recursion.lhs,
            "rhs": recursion.rhs,
            "cross_edges": recursion.cross_edges,
            "hypothesis_holds": recursion.hypothesis_holds,
            "holds": recursion.holds,
        }
    if args.k > args.j + 1:
        m, _ = tower.subcomplex_M(args.j, args.j + 1, args.k)
        audit = exact_sequence_audit(tower.nerve(args.j, args.k), m)
        data["exact_sequence"] = {"terms": [list(term) for term in audit.terms], "ok": audit.ok}
    path = _write_json(os.path.join(args.out, f"homology_{args.j}_{args.k}.json"), data)
    print("betti:", " ".join(str(b) for b in report.betti))
    return [path], _system_hash(args, system, j=args.j, k=args.k), None


def cmd_components(args):
    system = load_system(args.system)
    tower = _tower(args, system)
    partition = tower.components(args.j, args.k)
    data = {"j": args.j, "k": args.k, "count": partition.count, "labels": list(partition.labels)}
    if args.kmax is not None:
        data["connectivity"] = connectivity_report(system, args.kmax, tower).to_json()
    path = _write_json(os.path.join(args.out, f"components_{args.j}_{args.k}.json"), data)
    print(f"components: {partition.count}")
    return [path], _system_hash(args, system, j=args.j, k=args.k, kmax=args.kmax), None


def cmd_percolate(args):
    config = trial_config(args)
    records = run_trials(config)
    csv_path, json_path = emit(records, args.out, config)
    fit = growth_rate_fit(records, (max(2, config.kmax - 2), config.kmax))
    fit_path = _write_json(os.path.join(args.out, "growth.json"), fit.to_json())
    final = [row for row in summary(records)["per_k"] if row["k"] == config.kmax]
    if final:
        print(f"connected: {final[0]['connected']}  mean betti1: {final[0]['mean_betti1']}")
    return [csv_path, json_path, fit_path], config.config_hash(), config.seed


def cmd_render(args):
    system = load_system(args.system)
    path = write_ppm(raster_2d(system, args.m, args.pixels), os.path.join(args.out, f"render_{args.m}.ppm"))
    print(path)
    return [path], _hash({"system": system.to_json(), "m": args.m, "pixels": args.pixels}), None


def cmd_verify(args):
    report = run_suite()
    path = _write_json(os.path.join(args.out, "verify.json"), report.to_json())
    for result in report.results:
        print(f"{result.name}: {'ok' if result.passed else 'FAILED ' + result.detail}")
    return [path], _hash({"suite": [result.name for result in report.results]}), None, report.passed


COMMANDS = {
    "gen": cmd_gen,
    "nerve": cmd_nerve,
    "homology": cmd_homology,
    "components": cmd_components,
    "percolate": cmd_percolate,
    "render": cmd_render,
    "verify": cmd_verify,
}


def cli_main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = build_parser().parse_args(argv)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=[logging.WARNING, logging.INFO, logging.DEBUG][min(args.verbose, 2)])
    try:
        os.makedirs(args.out, exist_ok=True)
        outputs, config_hash, seed, *rest = COMMANDS[args.command](args)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetExceededError as e:
        print(f"budget exceeded: {e.message}", file=sys.stderr)
        return EXIT_BUDGET
    except NerveError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    write_manifest(args.out, args.command, argv, config_hash, seed=seed, outputs=outputs)
    if rest and not rest[0]:
        return EXIT_VERIFICATION
    return EXIT_OK


def main():
    sys.exit(cli_main())
