"""Command-line entry point: ``awilab <subcommand> [config.toml] [flags]``."""
from __future__ import annotations

import argparse
import copy
import importlib.resources
import logging
import platform
import sys
import time
from pathlib import Path

import numpy as np
import scipy

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
import tomli_w

from . import __version__
from .experiments import (ArrivalScenario, Scenario, cancellation_scan, desk_model_check,
                          eps_sweep, lambda_sweep, local_descent, multi_arrival_demo,
                          objective_scan, penalty_limit_check, remainder_effect,
                          sigma_coupling_sweep)
from .filter import filter_diagnostics, solve_filter
from .forward import ArrivalSet, RemainderSpec
from .medium import Geometry, as_medium
from .objectives import j_awi, j_fwi, j_mswi
from .signal import pulse_width, scale_wavelet

log = logging.getLogger("awilab")

SUBCOMMANDS = ("generate", "filter", "objective", "sweep-lambda", "sweep-sigma", "remainder",
               "penalty-limit", "scan", "descent", "multi-arrival", "selftest")
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC, EXIT_USAGE = 0, 2, 3, 64


class ConfigError(ValueError):
    pass


def bundled_scenario() -> Path:
    return Path(str(importlib.resources.files("awilab") / "scenarios" / "constant.toml"))


def load_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError("config file not found: %s" % path)
    with open(path, "rb") as fh:
        cfg = tomllib.load(fh)
    cfg.pop("run", None)
    cfg["_base"] = str(path.resolve().parent)
    return cfg


def apply_overrides(cfg: dict, pairs) -> dict:
    """``key.sub=value`` overrides; values parse as TOML scalars/arrays when possible."""
    cfg = copy.deepcopy(cfg)
    for item in pairs:
        if "=" not in item:
            raise ConfigError("override %r is not of the form key=value" % item)
        key, raw = item.split("=", 1)
        try:
            value = tomllib.loads("v = %s" % raw)["v"]
        except tomllib.TOMLDecodeError:
            value = raw
        node = cfg
        *parents, leaf = key.strip().split(".")
        for p in parents:
            node = node.setdefault(p, {})
        node[leaf] = value
    return cfg


def _resolve(cfg, rel) -> Path:
    p = Path(rel)
    return p if p.is_absolute() else Path(cfg.get("_base", ".")) / p


def _medium(cfg, key):
    spec = dict(cfg.get(key) or {})
    if not spec:
        raise ConfigError("missing [%s] table" % key)
    if spec.get("kind") == "grid":
        f = _resolve(cfg, spec.get("file", ""))
        if not f.is_file():
            raise ConfigError("medium file not found: %s" % f)
        spec["file"] = str(f)
    return as_medium(spec)


def _geometry(cfg) -> Geometry:
    g = cfg.get("geometry") or {}
    if "file" in g:
        f = _resolve(cfg, g["file"])
        if not f.is_file():
            raise ConfigError("geometry file not found: %s" % f)
        return Geometry.from_csv(f)
    if "pairs" in g:
        return Geometry(tuple(((p[0], p[1]), (p[2], p[3])) for p in g["pairs"]))
    raise ConfigError("[geometry] needs 'file' or 'pairs'")


def _remainder(spec):
    return RemainderSpec(**spec) if spec else None


def build_scenario(cfg) -> Scenario:
    w = cfg.get("wavelet", {})
    sw = cfg.get("sweep", {})
    lambdas = tuple(float(x) for x in sw.get("lambdas", [2.0 ** -k for k in range(7)]))
    if any(not 0 < lam <= 1 for lam in lambdas):
        raise ConfigError("lambda values must lie in (0, 1]: %r" % (lambdas,))
    r = sw.get("r")
    if r is not None and not r > 0:
        raise ConfigError("r must be positive, got %r" % r)
    return Scenario(
        medium=_medium(cfg, "medium"), medium_star=_medium(cfg, "medium_star"),
        geometry=_geometry(cfg), kind=w.get("kind", "ricker"), dt=float(w.get("dt", 1e-3)),
        t_max=float(w.get("t_max", 24.0)), half_support=float(w.get("half_support", 8.0)),
        lambdas=lambdas, r=r, eps_r=float(sw.get("eps_r", 1e-2)),
        remainder=_remainder(cfg.get("remainder")),
        remainder_star=_remainder(cfg.get("remainder_star")),
        amplitude_model=cfg.get("amplitude_model", "unit"),
        seed=int(cfg.get("seed", 0)), threads=int(cfg.get("threads", 1)))


def build_arrivals(cfg) -> ArrivalScenario:
    a = cfg.get("arrivals") or {}
    w = cfg.get("wavelet", {})
    kw = dict(kind=w.get("kind", "ricker"), dt=float(w.get("dt", 1e-3)),
              t_max=float(w.get("t_max", 24.0)), half_support=float(w.get("half_support", 8.0)))
    if "predicted" in a:
        kw["predicted"] = ArrivalSet(tuple(tuple(x) for x in a["predicted"]))
    if "observed" in a:
        kw["observed"] = ArrivalSet(tuple(tuple(x) for x in a["observed"]))
    return ArrivalScenario(**kw)


def _lam(cfg, section, sc) -> float:
    lam = float(cfg.get(section, {}).get("lambda", min(sc.lambdas)))
    if not 0 < lam <= 1:
        raise ConfigError("[%s] lambda must lie in (0, 1]" % section)
    return lam


# ------------------------------------------------------------- subcommands

def cmd_generate(cfg, out):
    sc = build_scenario(cfg)
    lam = _lam(cfg, "generate", sc)
    pred, obs = sc.gathers(lam)
    pred.to_csv(out / "predicted.csv")
    obs.to_csv(out / "observed.csv")
    sc.geometry.to_csv(out / "geometry.csv")
    return ["predicted.csv", "observed.csv", "geometry.csv"]


def cmd_filter(cfg, out):
    sc = build_scenario(cfg)
    lam = _lam(cfg, "filter", sc)
    pred, obs = sc.gathers(lam)
    files = []
    for pid in pred.ids:
        u = solve_filter(pred[pid], obs[pid], sc.r_value * lam)
        name = "filter_%s.csv" % pid
        u.to_csv(out / name, filter_diagnostics(u, pred[pid], obs[pid]))
        files.append(name)
    return files


def cmd_objective(cfg, out):
    sc = build_scenario(cfg)
    lam = _lam(cfg, "objective", sc)
    pred, obs = sc.gathers(lam)
    r = sc.r_value
    j_fwi(pred, obs).to_csv(out / "fwi.csv")
    j_awi(pred, obs, r * lam, lam, r).to_csv(out / "awi.csv")
    j_mswi(pred, obs, r * lam, lam, r).to_csv(out / "mswi.csv")
    return ["fwi.csv", "awi.csv", "mswi.csv"]


def cmd_sweep_lambda(cfg, out):
    lambda_sweep(build_scenario(cfg)).to_csv(out / "sweep_lambda.csv")
    return ["sweep_lambda.csv"]


def cmd_sweep_sigma(cfg, out):
    sc = build_scenario(cfg)
    lam = _lam(cfg, "sigma", sc)
    sig = cfg.get("sigma", {}).get("sigmas")
    sigma_coupling_sweep(sc, lam, sig).to_csv(out / "sweep_sigma.csv")
    return ["sweep_sigma.csv"]


def cmd_remainder(cfg, out):
    sc = build_scenario(cfg)
    if sc.remainder is None and sc.remainder_star is None:
        raise ConfigError("remainder run needs [remainder] and/or [remainder_star]")
    remainder_effect(sc).to_csv(out / "remainder.csv")
    return ["remainder.csv"]


def cmd_penalty_limit(cfg, out):
    sc = build_scenario(cfg)
    pen = cfg.get("penalty", {})
    lam = _lam(cfg, "penalty", sc)
    alphas = pen.get("alphas", [1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
    desk_model_check(sc.seed, pen.get("desk_alphas", [1e-1, 1e-2, 1e-3])).to_csv(out / "desk_model.csv")
    penalty_limit_check(sc, lam, alphas, pen.get("eps")).to_csv(out / "penalty_limit.csv")
    eps_sweep(sc, lam, pen.get("epsilons")).to_csv(out / "eps_sweep.csv")
    return ["desk_model.csv", "penalty_limit.csv", "eps_sweep.csv"]


def cmd_scan(cfg, out):
    sc = build_scenario(cfg)
    s = cfg.get("scan", {})
    grid = np.linspace(s.get("min", 0.9), s.get("max", 1.1), int(s.get("n", 201)))
    objective_scan(sc, s.get("parameter", "velocity"), grid, _lam(cfg, "scan", sc)).to_csv(out / "scan.csv")
    return ["scan.csv"]


def cmd_descent(cfg, out):
    sc = build_scenario(cfg)
    d = cfg.get("descent", {})
    files = []
    for kind in d.get("kinds", ["awi", "fwi"]):
        res = local_descent(kind, sc, float(d.get("start", 0.92)), d.get("parameter", "velocity"),
                            _lam(cfg, "descent", sc), max_iter=int(d.get("max_iter", 100)))
        res.to_csv(out / ("descent_%s.csv" % kind))
        files.append("descent_%s.csv" % kind)
    return files


def cmd_multi_arrival(cfg, out):
    am = build_arrivals(cfg)
    a = cfg.get("arrivals", {})
    table = multi_arrival_demo(am, a.get("lambdas"))
    table.to_csv(out / "multi_arrival.csv")
    lam = float(a.get("cancellation_lambda", 1 / 16))
    width = pulse_width(scale_wavelet(am.mother, lam).trace)
    mism = a.get("mismatches") or [f * width for f in (0.1, 0.25, 0.5, 1, 2, 4)] + [am.mismatch]
    cancellation_scan(am, lam, mism).to_csv(out / "cancellation.csv")
    return ["multi_arrival.csv", "cancellation.csv"]


def cmd_selftest(cfg, out):
    from .selftest import run_checks
    results = run_checks()
    with open(out / "selftest.csv", "w") as fh:
        fh.write("check,passed,detail\n")
        for name, ok, detail in results:
            fh.write("%s,%s,%s\n" % (name, ok, detail))
            log.info("%-28s %s  %s", name, "PASS" if ok else "FAIL", detail)
    if not all(ok for _, ok, _ in results):
        raise ArithmeticError("selftest failures: %s" % ", ".join(n for n, ok, _ in results if not ok))
    return ["selftest.csv"]


COMMANDS = {name: globals()["cmd_" + name.replace("-", "_")] for name in SUBCOMMANDS}


def write_manifest(out: Path, subcommand, cfg, files, elapsed) -> None:
    """The config echo (directly reusable as a config) plus a [run] table."""
    echo = {k: v for k, v in cfg.items() if not k.startswith("_")}
    echo = _absolutize(echo, cfg)
    echo["run"] = {"subcommand": subcommand, "awilab": __version__, "python": platform.python_version(),
                   "numpy": np.__version__, "scipy": scipy.__version__,
                   "seconds": round(elapsed, 3), "outputs": files}
    with open(out / "manifest.toml", "wb") as fh:
        tomli_w.dump(echo, fh)


def _absolutize(echo, cfg):
    echo = copy.deepcopy(echo)
    for key in ("geometry", "medium", "medium_star"):
        sec = echo.get(key)
        if isinstance(sec, dict) and "file" in sec:
            sec["file"] = str(_resolve(cfg, sec["file"]).resolve())
    return echo


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="awilab", description="Waveform-misfit verification harnesses.")
    ap.add_argument("subcommand", choices=SUBCOMMANDS)
    ap.add_argument("config", nargs="?", help="scenario TOML (default: bundled constant-media scenario)")
    ap.add_argument("--out", help="output directory (config key 'out')")
    ap.add_argument("--seed", type=int, help="random seed (config key 'seed')")
    ap.add_argument("--threads", type=int, help="worker threads (config key 'threads')")
    ap.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                    help="override any config key, e.g. --set sweep.r=0.02")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    if not argv or argv[0] not in SUBCOMMANDS:
        if argv and argv[0] in ("-h", "--help"):
            ap.print_help()
            return EXIT_OK
        ap.print_usage(sys.stderr)
        print("awilab: unknown subcommand %r; choose from %s"
              % (argv[0] if argv else "", ", ".join(SUBCOMMANDS)), file=sys.stderr)
        return EXIT_USAGE
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config or bundled_scenario())
        flags = {"out": args.out, "seed": args.seed, "threads": args.threads}
        cfg.update({k: v for k, v in flags.items() if v is not None})
        cfg = apply_overrides(cfg, args.set)
        out = Path(cfg.get("out", "out"))
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        files = COMMANDS[args.subcommand](cfg, out)
        write_manifest(out, args.subcommand, cfg, files, time.perf_counter() - t0)
    except ArithmeticError as exc:
        print("awilab: numerical failure: %s" % exc, file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, TypeError, KeyError, OSError, tomllib.TOMLDecodeError) as exc:
        print("awilab: invalid input: %s" % exc, file=sys.stderr)
        return EXIT_INVALID
    for f in files:
        print(out / f)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
