"""Command-line front end: INI-style config in, CSV + JSON metadata out.

Subcommands: bound, floors, search, tin, sampr, selftest.
Exit codes: 0 ok, 2 config error, 3 infeasible target, 4 numerical failure.

All output files are deterministic functions of (config, seed); volatile
information such as wall time is printed to stdout instead of being
written into the artifacts.
"""

import argparse
import configparser
import json
import math
import os
import sys
import time
from dataclasses import asdict

from . import activity, bound_core, sa_mpr, search, tin

SCHEMA_LINE = "# schema=1"

_ALLOWED_KEYS = {
    "model": {"kind", "mean", "ka"},
    "channel": {"n", "k_bits"},
    "bound": {
        "radius_lower", "radius_upper", "estimator", "xi_candidates",
        "mc_samples", "q_t_max", "q_ka_max", "grid", "refine", "prune_rel",
        "tail_count", "q_floor", "pmf_threshold", "pprime_ratios", "breakdown",
    },
    "targets": {"eps_md", "eps_fa"},
    "sweep": {"ebn0_db_grid", "bracket_db", "mean_grid"},
    "tin": {"s", "mc_samples"},
    "sampr": {"slots_grid", "radius_grid", "slot_index_coding"},
}

_REQUIRED = {"model": ("kind",), "channel": ("n", "k_bits")}


class ConfigError(Exception):
    pass


def _parse_bool(raw, where):
    if raw.lower() in ("true", "yes", "1"):
        return True
    if raw.lower() in ("false", "no", "0"):
        return False
    raise ConfigError(f"{where}: expected a boolean, got {raw!r}")


def _parse_floats(raw):
    return tuple(float(x) for x in raw.replace(",", " ").split())


def load_config(path):
    """Parse and validate the run configuration; unknown keys rejected."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    read = cp.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    cfg = {}
    for section in cp.sections():
        if section not in _ALLOWED_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in cp[section]:
            if key not in _ALLOWED_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
        cfg[section] = dict(cp[section])
    for section, keys in _REQUIRED.items():
        if section not in cfg:
            raise ConfigError(f"missing required section [{section}]")
        for key in keys:
            if key not in cfg[section]:
                raise ConfigError(f"missing required field {key!r} in [{section}]")
    return cfg


def _model_from(cfg):
    m = cfg["model"]
    kind = m["kind"]
    if kind == "poisson":
        if "mean" not in m:
            raise ConfigError("poisson model needs 'mean' in [model]")
        return activity.poisson(float(m["mean"]))
    if kind == "deterministic":
        if "ka" not in m:
            raise ConfigError("deterministic model needs 'ka' in [model]")
        return activity.deterministic(int(m["ka"]))
    raise ConfigError(f"unknown model kind {kind!r}")


def _settings_from(cfg, seed, threads):
    ch = cfg["channel"]
    b = cfg.get("bound", {})
    try:
        n = int(ch["n"])
        k_bits = float(ch["k_bits"])
    except ValueError as exc:
        raise ConfigError(f"[channel]: {exc}") from None
    kw = dict(n=n, log_M=k_bits * math.log(2), seed=seed, threads=threads)
    for key, cast in (
        ("radius_lower", int), ("radius_upper", int), ("estimator", str),
        ("xi_candidates", str), ("mc_samples", int), ("q_t_max", int),
        ("q_ka_max", int), ("grid", int), ("prune_rel", float),
        ("tail_count", int), ("q_floor", float),
    ):
        if key in b:
            try:
                kw[key] = cast(b[key])
            except ValueError as exc:
                raise ConfigError(f"[bound] {key}: {exc}") from None
    if "refine" in b:
        kw["refine"] = _parse_bool(b["refine"], "[bound] refine")
    try:
        settings = bound_core.BoundSettings(**kw)
    except ValueError as exc:
        raise ConfigError(f"[bound]: {exc}") from None
    extras = {
        "k_bits": k_bits,
        "pmf_threshold": float(b.get("pmf_threshold", 1e-9)),
        "pprime_ratios": _parse_floats(b.get("pprime_ratios", "0.95 0.9")),
        "breakdown": _parse_bool(b.get("breakdown", "false"), "[bound] breakdown"),
    }
    return settings, extras


def _targets_from(cfg):
    t = cfg.get("targets", {})
    try:
        return search.Targets(float(t.get("eps_md", 0.1)), float(t.get("eps_fa", 0.1)))
    except ValueError as exc:
        raise ConfigError(f"[targets]: {exc}") from None


def _write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SCHEMA_LINE + "\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _fmt(v):
    if isinstance(v, float):
        return format(v, ".12g")
    return str(v)


def _write_metadata(path, command, cfg, settings, extras, results):
    resolved = asdict(settings)
    resolved.pop("threads", None)  # volatile: results never depend on it
    meta = {
        "command": command,
        "config": cfg,
        "resolved_settings": resolved,
        "resolved_extras": {k: list(v) if isinstance(v, tuple) else v
                            for k, v in extras.items()},
        "results": results,
        "schema": 1,
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_bound(cfg, settings, extras, out_dir):
    model = _model_from(cfg)
    sweep = cfg.get("sweep", {})
    if "ebn0_db_grid" not in sweep:
        raise ConfigError("bound command needs 'ebn0_db_grid' in [sweep]")
    grid = _parse_floats(sweep["ebn0_db_grid"])
    window = activity.truncation_bounds_pmf(model, extras["pmf_threshold"])
    ratio = extras["pprime_ratios"][0]
    rows = bound_core.md_fa_curve(model, window, extras["k_bits"], grid, ratio, settings)
    _write_csv(os.path.join(out_dir, "curve.csv"),
               ("ebn0_db", "eps_md", "eps_fa", "floor_md", "floor_fa"), rows)
    if extras["breakdown"]:
        for db in grid:
            p = bound_core.ebn0_db_to_power(db, extras["k_bits"], settings.n)
            res = bound_core.eval_theorem1(model, window, p, ratio * p, settings,
                                           breakdown=True)
            _write_csv(
                os.path.join(out_dir, f"breakdown_{_fmt(float(db))}db.csv"),
                ("ka", "ka_prime", "t", "t_prime", "p", "q", "xi",
                 "weight_md", "weight_fa", "contribution_md", "contribution_fa"),
                [(r.ka, r.ka_prime, r.t, r.t_prime, r.p, r.q, r.xi,
                  r.weight_md, r.weight_fa, r.contribution_md, r.contribution_fa)
                 for r in res.breakdown],
            )
    return {"window": [window.k_lower, window.k_upper],
            "pprime_ratio": ratio,
            "points": len(rows)}


def cmd_floors(cfg, settings, extras, out_dir):
    model = _model_from(cfg)
    window = activity.truncation_bounds_pmf(model, extras["pmf_threshold"])
    from dataclasses import replace
    fl = bound_core.eval_floors(model, window,
                                replace(settings, xi_candidates="true-ka"))
    _write_csv(os.path.join(out_dir, "floors.csv"),
               ("k_lower", "k_upper", "floor_md", "floor_fa"),
               [(window.k_lower, window.k_upper, fl.eps_md, fl.eps_fa)])
    return {"floor_md": fl.eps_md, "floor_fa": fl.eps_fa}


def _sweep_models(cfg):
    sweep = cfg.get("sweep", {})
    if "mean_grid" in sweep:
        return [(mu, activity.poisson(mu)) for mu in _parse_floats(sweep["mean_grid"])]
    model = _model_from(cfg)
    label = model.mean if model.kind == "poisson" else model.ka
    return [(label, model)]


def _bracket_from(cfg):
    sweep = cfg.get("sweep", {})
    br = _parse_floats(sweep.get("bracket_db", "-2 20"))
    if len(br) != 2 or br[0] >= br[1]:
        raise ConfigError("[sweep] bracket_db must be 'lo hi' with lo < hi")
    return br


def cmd_search(cfg, settings, extras, out_dir):
    targets = _targets_from(cfg)
    bracket = _bracket_from(cfg)
    rows = []
    for label, model in _sweep_models(cfg):
        best = None
        for ratio in extras["pprime_ratios"]:
            db = search.required_ebn0(
                "theorem1", model, extras["k_bits"], targets, settings,
                p_prime_ratios=(ratio,), bracket=bracket)
            if best is None or db < best[0]:
                best = (db, ratio)
        rows.append((float(label), best[0], settings.radius_lower,
                     settings.radius_upper, best[1]))
    _write_csv(os.path.join(out_dir, "search.csv"),
               ("e_ka", "required_ebn0_db", "radius_lower", "radius_upper",
                "pprime_ratio"), rows)
    return {"rows": len(rows)}


def cmd_tin(cfg, settings, extras, out_dir):
    targets = _targets_from(cfg)
    bracket = _bracket_from(cfg)
    t = cfg.get("tin", {})
    s_key = t.get("s", "optimize")
    tin_s = "optimize" if s_key == "optimize" else float(s_key)
    rows = []
    s_stars = {}
    for label, model in _sweep_models(cfg):
        best = None
        for ratio in extras["pprime_ratios"]:
            db = search.required_ebn0(
                "tin", model, extras["k_bits"], targets, settings,
                p_prime_ratios=(ratio,), bracket=bracket, tin_s=tin_s)
            if best is None or db < best[0]:
                best = (db, ratio)
        p = bound_core.ebn0_db_to_power(best[0], extras["k_bits"], settings.n)
        window = activity.truncation_bounds_pmf(model, extras["pmf_threshold"])
        res = tin.eval_tin(model, window, p, best[1] * p, settings, s=tin_s)
        rows.append((float(label), best[0], best[1]))
        s_stars[str(label)] = res.s
    _write_csv(os.path.join(out_dir, "tin.csv"),
               ("e_ka", "required_ebn0_db", "pprime_ratio"), rows)
    return {"rows": len(rows), "s_opt": s_stars}


def cmd_sampr(cfg, settings, extras, out_dir):
    targets = _targets_from(cfg)
    bracket = _bracket_from(cfg)
    model = _model_from(cfg)
    sp = cfg.get("sampr", {})
    slots_grid = [int(x) for x in _parse_floats(sp.get("slots_grid", "4 8 16"))]
    radius_grid = [
        tuple(int(v) for v in pair.split(":"))
        for pair in sp.get("radius_grid", "0:0").split()
    ]
    index_coding = _parse_bool(sp.get("slot_index_coding", "true"),
                               "[sampr] slot_index_coding")
    from dataclasses import replace
    rows = []
    best = None
    for L in slots_grid:
        cfg_slot = sa_mpr.SlottedConfig(slots=L, slot_index_coding=index_coding)
        for rl, ru in radius_grid:
            s = replace(settings, radius_lower=rl, radius_upper=ru)
            try:
                db = search.required_ebn0(
                    "sa_mpr", model, extras["k_bits"], targets, s,
                    p_prime_ratios=extras["pprime_ratios"], bracket=bracket,
                    slotted=cfg_slot)
            except (search.TargetBelowFloor, search.InfeasibleBracket):
                continue
            rows.append((L, rl, ru, db))
            if best is None or db < best[3]:
                best = (L, rl, ru, db)
    if best is None:
        raise search.TargetBelowFloor("no slot/radius combination meets the targets")
    _write_csv(os.path.join(out_dir, "sampr.csv"),
               ("slots", "radius_lower", "radius_upper", "required_ebn0_db"),
               rows)
    return {"best_slots": best[0], "best_radius": [best[1], best[2]],
            "required_ebn0_db": best[3]}


def cmd_selftest(cfg, settings, extras, out_dir):
    """Small deterministic end-to-end exercise of every module."""
    model = activity.deterministic(2)
    s = bound_core.BoundSettings(n=200, log_M=8 * math.log(2),
                                 seed=settings.seed, threads=1)
    res = bound_core.eval_corollary1(2, 0.5, 0.45, s)
    assert res.eps_md == res.eps_fa, "known-Ka symmetry violated"
    pois = activity.poisson(4.0)
    w = activity.truncation_bounds_pmf(pois)
    fl = bound_core.eval_floors(pois, w, bound_core.BoundSettings(
        n=200, log_M=8 * math.log(2), radius_lower=1, radius_upper=1,
        xi_candidates="true-ka"))
    assert 0 <= fl.eps_md <= 1 and 0 <= fl.eps_fa <= 1
    thin = sa_mpr.per_slot_pmf(pois, 2)
    assert abs(thin.mean - 2.0) < 1e-12
    eta, _ = tin.eta_mc(2, 200, 8 * math.log(2), 0.45, 1.0, 2000, seed=settings.seed)
    assert 0 <= eta <= 1
    _write_csv(os.path.join(out_dir, "selftest.csv"),
               ("check", "value"),
               [("corollary_eps", res.eps_md), ("floor_md", fl.eps_md),
                ("floor_fa", fl.eps_fa), ("eta", eta)])
    return {"ok": True}


_COMMANDS = {
    "bound": cmd_bound,
    "floors": cmd_floors,
    "search": cmd_search,
    "tin": cmd_tin,
    "sampr": cmd_sampr,
    "selftest": cmd_selftest,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="uma-bounds",
        description="Finite-blocklength achievability bounds for unsourced "
                    "multiple access with a random unknown number of users.",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=False, help="path to INI config")
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    args = parser.parse_args(argv)

    started = time.time()
    try:
        if args.command == "selftest" and not args.config:
            cfg = {"model": {"kind": "deterministic", "ka": "2"},
                   "channel": {"n": "200", "k_bits": "8"}}
        else:
            if not args.config:
                raise ConfigError("--config is required for this command")
            cfg = load_config(args.config)
        settings, extras = _settings_from(cfg, args.seed, args.threads)
        os.makedirs(args.out, exist_ok=True)
        results = _COMMANDS[args.command](cfg, settings, extras, args.out)
        _write_metadata(os.path.join(args.out, "metadata.json"),
                        args.command, cfg, settings, extras, results)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except search.TargetBelowFloor as exc:
        print(f"infeasible target: {exc}", file=sys.stderr)
        return 3
    except (search.InfeasibleBracket, ValueError, ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4
    print(f"{args.command}: done in {time.time() - started:.1f} s "
          f"(outputs in {args.out})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
