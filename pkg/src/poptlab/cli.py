"""Command-line interface.

Exit codes: 0 claim verified / member, 1 claim falsified / not a member,
2 usage or IO error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import __version__
from .catalog import s8, s24, table1_measurement, table2_measurement
from .cones import PoptSearchConfig, StateClass, classify_state, is_popt
from .decomposition import Prop1Decomposition, prop1_decompose, verify_prop1
from .distinguish import verify_family
from .errors import NonUnitTraceError, NotPOPTError, PoptlabError
from .game import BUILTIN_STRATEGIES, GameSpec, simulate
from .operators import operator_from_json, operator_to_json

EXIT_OK, EXIT_FALSIFIED, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    # floats use repr, the shortest string that round-trips exactly
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent if str(path.parent) else ".", prefix=".tmp-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def digest(inputs) -> str:
    return hashlib.sha256(dumps(inputs).encode()).hexdigest()


def run_report(command: str, inputs, passed: bool, details, started: float | None) -> dict:
    return {
        "command": command,
        "inputsDigest": digest(inputs),
        "pass": bool(passed),
        "details": details,
        "wallTimeMs": None if started is None else int(1000 * (time.perf_counter() - started)),
    }


def _emit(report: dict, out: str | None) -> None:
    text = dumps(report)
    if out:
        write_atomic(Path(out), text)
    else:
        sys.stdout.write(text)


def _read_operator(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read operator from {path}: {exc}") from exc
    try:
        return operator_from_json(obj)
    except PoptlabError as exc:
        raise UsageError(f"invalid operator in {path}: {exc}") from exc


def _config(args) -> PoptSearchConfig:
    return PoptSearchConfig(restarts=args.restarts, membership_tol=args.popt_tol, seed=args.seed)


def cmd_verify_tables(args) -> int:
    started = time.perf_counter() if args.timing else None
    if args.which == 1:
        states, lookup = s8(), table1_measurement
    else:
        states, lookup = s24(), table2_measurement
    cert = verify_family(states, lookup, tol=args.tol)
    details = cert.to_json()
    details["table"] = args.which
    report = run_report("verify tables", {"which": args.which, "tol": args.tol},
                        cert.complete, details, started)
    _emit(report, args.json)
    print(f"table {args.which}: {cert.passed_pairs}/{len(cert.per_pair) + len(cert.failures)} pairs pass, "
          f"max deviation {cert.max_deviation:.3e}", file=sys.stderr)
    return EXIT_OK if cert.complete else EXIT_FALSIFIED


def cmd_popt_check(args) -> int:
    started = time.perf_counter() if args.timing else None
    path = args.input_flag or args.input
    if not path:
        raise UsageError("popt-check needs an operator file")
    w = _read_operator(path)
    cfg = _config(args)
    member, report = is_popt(w, cfg)
    try:
        cls = classify_state(w, cfg).value
    except NonUnitTraceError:
        cls = None
    details = {"class": cls, "popt": report.to_json(), "trace": w.trace()}
    inputs = {"operator": operator_to_json(w), "config": cfg.__dict__}
    _emit(run_report("popt-check", inputs, member, details, started), args.out)
    return EXIT_OK if member else EXIT_FALSIFIED


def cmd_decompose(args) -> int:
    started = time.perf_counter() if args.timing else None
    w = _read_operator(args.input)
    cfg = _config(args)
    inputs = {"operator": operator_to_json(w), "config": cfg.__dict__}
    stored = args.verify if isinstance(args.verify, str) else None
    if stored:
        try:
            with open(stored, encoding="utf-8") as fh:
                d = Prop1Decomposition.from_json(json.load(fh))
        except (OSError, json.JSONDecodeError, KeyError, TypeError, PoptlabError) as exc:
            raise UsageError(f"cannot read decomposition {stored}: {exc}") from exc
    else:
        try:
            d = prop1_decompose(w, cfg)
        except NonUnitTraceError as exc:
            raise UsageError(str(exc)) from exc
        except NotPOPTError as exc:
            _, rep = is_popt(w, cfg)
            details = {"error": str(exc), "witness": rep.to_json()}
            _emit(run_report("decompose", inputs, False, details, started), args.report)
            return EXIT_FALSIFIED
        if args.out:
            write_atomic(Path(args.out), dumps(d.to_json()))
    details = {"trivialBranch": bool(np.allclose(d.p_b_perp.data, 0))}
    passed = True
    if args.verify:
        v = verify_prop1(w, d, cfg)
        details["verification"] = v.to_json()
        passed = v.passed
    else:
        details["reconstructionResidual"] = float(np.linalg.norm(d.reconstruct().data - w.data))
    _emit(run_report("decompose", inputs, passed, details, started), args.report)
    return EXIT_OK if passed else EXIT_FALSIFIED


def cmd_game(args) -> int:
    started = time.perf_counter() if args.timing else None
    try:
        strategy = BUILTIN_STRATEGIES[args.strategy](args.n)
        spec = GameSpec(args.n)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    result = simulate(strategy, spec, args.rounds, args.seed)
    inputs = {"strategy": args.strategy, "n": args.n, "rounds": args.rounds, "seed": args.seed}
    perfect = abs(result.exact_win_prob - 1.0) <= 1e-12
    report = run_report("game run", inputs, perfect, result.to_json(), started)
    if args.json:
        _emit(report, None)
    else:
        print(f"{args.strategy} n={args.n}: exact {result.exact_win_prob:.12f}, "
              f"empirical {result.empirical_win_rate:.6f} over {args.rounds} rounds")
    return EXIT_OK if perfect else EXIT_FALSIFIED


def cmd_catalog_export(args) -> int:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create {out}: {exc}") from exc
    states = s8() if args.set == "s8" else s24()
    cfg = _config(args)
    manifest = []
    try:
        for k, (label, w) in enumerate(states.items()):
            name = f"{k:02d}_{label}.json"
            write_atomic(out / name, dumps(operator_to_json(w)))
            manifest.append({"label": str(label), "file": name, "class": classify_state(w, cfg).value})
        write_atomic(out / "manifest.json", dumps({"set": args.set, "states": manifest}))
    except OSError as exc:
        raise UsageError(f"cannot write to {out}: {exc}") from exc
    ok = all(m["class"] != StateClass.NOT_A_STATE.value for m in manifest)
    print(f"wrote {len(manifest)} states to {out}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FALSIFIED


def _default_seed() -> int:
    env = os.environ.get("POPTLAB_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tol", type=float, default=1e-9, help="distinguishability tolerance")
    common.add_argument("--popt-tol", type=float, default=1e-9, help="POPT membership tolerance")
    common.add_argument("--restarts", type=int, default=64)
    common.add_argument("--seed", type=int, default=_default_seed(),
                        help="master seed (falls back to $POPTLAB_SEED, then 0)")
    common.add_argument("--timing", action="store_true", help="record wall time in reports")

    p = argparse.ArgumentParser(prog="poptlab", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    verify = sub.add_parser("verify", help="verify distinguishability tables")
    vsub = verify.add_subparsers(dest="what", required=True)
    tables = vsub.add_parser("tables", parents=[common])
    tables.add_argument("--which", type=int, choices=(1, 2), required=True)
    tables.add_argument("--json", metavar="PATH", help="write the pairwise certificate here")
    tables.set_defaults(func=cmd_verify_tables)

    popt = sub.add_parser("popt-check", parents=[common], help="classify an operator")
    popt.add_argument("input", nargs="?", metavar="STATE_JSON")
    popt.add_argument("--in", dest="input_flag", metavar="STATE_JSON")
    popt.add_argument("--out", metavar="PATH")
    popt.set_defaults(func=cmd_popt_check)

    dec = sub.add_parser("decompose", parents=[common], help="positive-unital-map decomposition")
    dec.add_argument("--in", dest="input", required=True, metavar="STATE_JSON")
    dec.add_argument("--out", metavar="PATH", help="write all intermediates here")
    dec.add_argument("--verify", nargs="?", const=True, default=False, metavar="DECOMP_JSON",
                     help="run the verification checks, on a stored decomposition if a path is given")
    dec.add_argument("--report", metavar="PATH")
    dec.set_defaults(func=cmd_decompose)

    game = sub.add_parser("game", help="pairwise-distinguishability game")
    gsub = game.add_subparsers(dest="what", required=True)
    run = gsub.add_parser("run", parents=[common])
    run.add_argument("--strategy", choices=sorted(BUILTIN_STRATEGIES), required=True)
    run.add_argument("--n", type=int, default=8)
    run.add_argument("--rounds", type=int, default=100000)
    run.add_argument("--json", action="store_true")
    run.set_defaults(func=cmd_game)

    cat = sub.add_parser("catalog", help="named state families")
    csub = cat.add_subparsers(dest="what", required=True)
    export = csub.add_parser("export", parents=[common])
    export.add_argument("--set", choices=("s8", "s24"), required=True)
    export.add_argument("--out", required=True, metavar="DIR")
    export.set_defaults(func=cmd_catalog_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, PoptlabError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
