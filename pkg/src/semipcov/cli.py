"""Command-line interface: ``semipcov {fit,simulate,predict,coherence,compare}``.

Each command reads a JSON config; flags override the matching keys. Every
JSON report embeds the resolved config and seed. Exit codes: 0 success,
2 config error, 3 data error, 4 numerical failure.
"""

import argparse
import copy
import json
import logging
import os
import sys
from itertools import combinations

import numpy as np

from .covariance import CovarianceError
from .dataset import DataFormatError, read_csv, standardize, substream, write_csv
from .inference import ParamCodec, fit, name_matches
from .modelfile import VARIANTS, ModelSpecError, model_from_dict, model_to_dict
from .predict import NMSE_DEFINITION, PredictiveDistribution, cokrige, score_by_component
from .simulate import grid_locations, simulate_grf

log = logging.getLogger("semipcov")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------

def load_config(path):
    """Parse a JSON config, reporting syntax errors with line and column."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}:1: top level must be an object")
    base = os.path.dirname(os.path.abspath(path))
    cfg.setdefault("_base_dir", base)
    return cfg


def _parse_fix(items):
    out = {}
    for item in items or []:
        name, eq, value = item.partition("=")
        if not name:
            raise ConfigError(f"--fix {item!r}: expected PARAM=VALUE")
        if eq:
            try:
                out[name] = float(value)
            except ValueError:
                raise ConfigError(f"--fix {item!r}: {value!r} is not a number") from None
        else:
            out[name] = None
    return out


def resolve_config(args):
    """Merge the JSON config with command-line overrides."""
    cfg = load_config(args.config) if args.config else {"_base_dir": os.getcwd()}
    cfg = copy.deepcopy(cfg)
    model = cfg.setdefault("model", {})
    if not isinstance(model, dict):
        raise ConfigError("model: expected an object")
    if getattr(args, "model", None):
        model["variant"] = args.model
    for flag, key in (("delta_knot", "delta_knot"), ("omega_t", "omega_t"), ("m", "m")):
        v = getattr(args, flag, None)
        if v is not None:
            model[key] = v
            if key == "delta_knot":
                model.pop("K", None)
    if args.seed is not None:
        cfg["seed"] = args.seed
    cfg.setdefault("seed", 0)
    if args.out is not None:
        cfg["out"] = args.out
    cfg.setdefault("out", ".")
    fixed = cfg.get("fix", {})
    if isinstance(fixed, list):
        fixed = dict.fromkeys(fixed)
    if not isinstance(fixed, dict):
        raise ConfigError("fix: expected a list of names or an object of name: value")
    fixed.update(_parse_fix(getattr(args, "fix", None)))
    cfg["fix"] = fixed
    if args.threads is not None:
        cfg["threads"] = args.threads
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed: integer required")
    return cfg


def _path(cfg, p):
    return p if os.path.isabs(p) else os.path.join(cfg["_base_dir"], p)


def _echo(cfg):
    return {k: v for k, v in cfg.items() if not k.startswith("_")}


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=False)
        fh.write("\n")


def _read_data(cfg, key="data"):
    if key not in cfg:
        raise ConfigError(f"{key}: data path missing")
    try:
        return read_csv(_path(cfg, cfg[key]))
    except OSError as exc:
        raise DataError(f"{cfg[key]}: {exc.strerror}") from None
    except DataFormatError as exc:
        raise DataError(str(exc)) from None


def _locations(cfg):
    spec = cfg.get("locations")
    if spec is None:
        raise ConfigError("locations: missing")
    if isinstance(spec, str):
        return _read_data(dict(cfg, _loc=spec), "_loc").locations
    if "grid" in spec:
        n1, n2 = (spec["grid"] * 2)[:2] if len(spec["grid"]) == 1 else spec["grid"]
        return grid_locations(int(n1), int(n2), float(spec.get("spacing", 1.0)),
                              float(spec.get("origin", 1.0)))
    if "uniform" in spec:
        lo, hi = spec.get("box", [0.0, 1.0])
        rng = substream(cfg["seed"], "locations")
        return rng.uniform(lo, hi, size=(int(spec["uniform"]), int(spec.get("d", 2))))
    raise ConfigError("locations: expected a CSV path, {grid: [n1, n2]} or {uniform: n, box: [lo, hi]}")


def _model(cfg, p=None, key="model"):
    try:
        return model_from_dict(cfg[key], p)
    except ModelSpecError as exc:
        raise ConfigError(str(exc)) from None


def _fixed(cfg):
    return {k: v for k, v in cfg["fix"].items() if v is not None}, [k for k, v in cfg["fix"].items()]


def _fit_opts(cfg):
    opts = dict(cfg.get("optimizer", {}))
    allowed = {"n_restarts", "max_evals", "fatol", "xatol", "simplex_step", "restart_scale",
               "staged", "init"}
    bad = set(opts) - allowed
    if bad:
        raise ConfigError(f"optimizer: unknown option(s) {sorted(bad)}")
    return opts


def _run_fit(cfg, data):
    template = _model(cfg, data.p)
    values, names = _fixed(cfg)
    try:
        codec = ParamCodec(template, fixed=names, coherence=cfg.get("coherence"))
    except KeyError as exc:
        raise ConfigError(f"fix: {exc.args[0]}") from None
    if values:
        template = codec._set(template, {n: values[f] for f in values
                                         for n in codec.names if name_matches(n, f)})
    return fit(template, data, fixed=names, coherence=cfg.get("coherence"),
               seed=cfg["seed"], **_fit_opts(cfg))


def _fit_report(cfg, res):
    rep = res.to_dict()
    rep.update(seed=cfg["seed"], config=_echo(cfg))
    return rep


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_fit(cfg):
    data = _read_data(cfg)
    if cfg.get("standardize", False):
        data, _, _ = standardize(data)
    res = _run_fit(cfg, data)
    out = cfg["out"]
    _write_json(os.path.join(out, "fit.json"), _fit_report(cfg, res))
    _write_json(os.path.join(out, "model.json"), model_to_dict(res.model))
    log.info("fit: loglik %.4f, %d free parameters, %d evaluations", res.loglik, res.n_params, res.n_evals)
    return res


def cmd_simulate(cfg):
    model = _model(cfg)
    loc = _locations(cfg)
    n_reps = int(cfg.get("n_reps", 1))
    dtype = np.float32 if cfg.get("precision", "double") == "single" else np.float64
    names = cfg.get("names")
    sims = simulate_grf(model, loc, n_reps, cfg["seed"], dtype=dtype,
                        max_dim=int(cfg.get("max_dim", 5000)), names=names)
    files = []
    for r, ds in enumerate(sims, start=1):
        name = f"sim_{r}.csv"
        write_csv(ds, os.path.join(cfg["out"], name))
        files.append(name)
    _write_json(os.path.join(cfg["out"], "simulate.json"),
                {"files": files, "n": len(loc), "p": model.p, "seed": cfg["seed"], "config": _echo(cfg)})
    return files


def split_indices(n, cfg):
    """Seeded train/test split from ``split.n_test`` or ``split.test_fraction``."""
    split = cfg.get("split", {})
    if "n_test" in split:
        n_test = int(split["n_test"])
    else:
        n_test = int(round(float(split.get("test_fraction", 0.2)) * n))
    if not 0 < n_test < n:
        raise ConfigError(f"split: need 0 < n_test < {n}, got {n_test}")
    perm = substream(cfg["seed"], "split").permutation(n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


def cmd_predict(cfg):
    data = _read_data(cfg)
    tr_idx, te_idx = split_indices(data.n, cfg)
    train, test = data.subset(tr_idx), data.subset(te_idx)
    mean = np.zeros(data.p)
    sd = np.ones(data.p)
    if cfg.get("standardize", True):
        train, mean, sd = standardize(train)
    res = _run_fit(cfg, train)
    pred = cokrige(res.model, train, test.locations)
    comp = pred.component
    actual = test.obs[pred.location, comp]
    mu_out = pred.mean * sd[comp] + mean[comp]
    sd_out = pred.sd * sd[comp]
    destd = cfg.get("destandardize", True)
    if destd:
        y, mu_s, sd_s = actual, mu_out, sd_out
    else:
        y, mu_s, sd_s = (actual - mean[comp]) / sd[comp], pred.mean, pred.sd
    keep = ~np.isnan(y)
    scored = PredictiveDistribution(mu_s[keep], sd_s[keep], pred.location[keep], comp[keep])
    reports = score_by_component(scored, y[keep])
    out = cfg["out"]
    with open(os.path.join(out, "predictions.csv"), "w", encoding="utf-8") as fh:
        fh.write(",".join([f"x{c + 1}" for c in range(data.d)] + ["component", "mean", "sd", "actual"]) + "\n")
        for q, c, m, s, a in zip(pred.location, comp, mu_out, sd_out, actual):
            row = [repr(float(v)) for v in test.locations[q]]
            row += [data.names[c], repr(float(m)), repr(float(s)), "" if np.isnan(a) else repr(float(a))]
            fh.write(",".join(row) + "\n")
    scores = {"pooled": reports["pooled"].to_dict(),
              "components": {data.names[c]: reports[c].to_dict() for c in reports if c != "pooled"},
              "n_train": int(train.n), "n_test": int(test.n), "units": "data" if destd else "standardized",
              "nmse_definition": NMSE_DEFINITION, "fit": res.to_dict(),
              "seed": cfg["seed"], "config": _echo(cfg)}
    _write_json(os.path.join(out, "scores.json"), scores)
    _write_json(os.path.join(out, "model.json"), model_to_dict(res.model))
    return scores


def cmd_coherence(cfg):
    if "model_file" in cfg:
        try:
            with open(_path(cfg, cfg["model_file"]), encoding="utf-8") as fh:
                spec = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"model_file: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{cfg['model_file']}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
        model = _model({"model": spec})
    else:
        model = _model(cfg)
    og = cfg.get("omega", {})
    w_max = float(og.get("max", getattr(getattr(model, "grid", None), "omega_t", 5.0)))
    n = int(og.get("n", 101))
    w = np.linspace(float(og.get("min", 0.0)), w_max, n)
    pairs = list(combinations(range(model.p), 2))
    cols = [model.coherence(i, j, w) for i, j in pairs]
    with open(os.path.join(cfg["out"], "coherence.csv"), "w", encoding="utf-8") as fh:
        fh.write(",".join(["omega"] + [f"gamma_{i + 1}_{j + 1}" for i, j in pairs]) + "\n")
        for r in range(n):
            fh.write(",".join(repr(float(v)) for v in [w[r]] + [c[r] for c in cols]) + "\n")
    rep = {"variant": model.variant, "pairs": [f"{i + 1}_{j + 1}" for i, j in pairs],
           "seed": cfg["seed"], "config": _echo(cfg)}
    if model.variant == "semiparam":
        md = model_to_dict(model)
        rep.update(coefficients=md["coefficients"], knot_indices=md["knot_indices"],
                   n_coefficients=len(md["knot_indices"]))
    _write_json(os.path.join(cfg["out"], "coherence.json"), rep)
    return rep


def cmd_compare(cfg, candidates):
    """Fit every candidate config on the same data; rank by AIC."""
    rows = []
    for c in candidates:
        sub = copy.deepcopy(c)
        sub["seed"] = cfg["seed"] if "seed" not in c or cfg.get("_seed_flag") else c["seed"]
        sub.setdefault("fix", {})
        if isinstance(sub["fix"], list):
            sub["fix"] = dict.fromkeys(sub["fix"])
        sub["out"] = cfg["out"]
        data = _read_data(sub)
        if sub.get("standardize", False):
            data, _, _ = standardize(data)
        res = _run_fit(sub, data)
        rows.append({"name": sub.get("name", sub["model"].get("variant", "semiparam")),
                     "variant": res.model.variant, "n_params": res.n_params,
                     "loglik": res.loglik, "aic": res.aic, "converged": res.converged,
                     "config": _echo(sub)})
    rows.sort(key=lambda r: r["aic"])
    rep = {"ranking": rows, "seed": cfg["seed"], "config": _echo(cfg)}
    _write_json(os.path.join(cfg["out"], "compare.json"), rep)
    return rep


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="semipcov", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model_flags=True):
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--threads", type=int, help="cap on BLAS/LAPACK threads")
        p.add_argument("-v", "--verbose", action="store_true")
        if model_flags:
            p.add_argument("--model", choices=VARIANTS)
            p.add_argument("--delta-knot", type=float, dest="delta_knot")
            p.add_argument("--omega-t", type=float, dest="omega_t")
            p.add_argument("--m", type=int)
            p.add_argument("--fix", action="append", metavar="PARAM=VALUE",
                           help="hold a parameter (or group such as nu) fixed; repeatable")

    for name in ("fit", "simulate", "predict", "coherence"):
        common(sub.add_parser(name))
    p = sub.add_parser("compare")
    common(p)
    p.add_argument("configs", nargs="+", help="candidate configs")
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
        os.makedirs(cfg["out"], exist_ok=True)
        limits = None
        if cfg.get("threads"):
            from threadpoolctl import threadpool_limits
            limits = threadpool_limits(limits=int(cfg["threads"]))
        try:
            if args.command == "compare":
                cfg["_seed_flag"] = args.seed is not None
                cands = [load_config(c) for c in args.configs]
                for c in cands:
                    c.setdefault("model", {})
                cmd_compare(cfg, cands)
            else:
                {"fit": cmd_fit, "simulate": cmd_simulate, "predict": cmd_predict,
                 "coherence": cmd_coherence}[args.command](cfg)
        finally:
            if limits is not None:
                limits.restore_original_limits()
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, DataFormatError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (CovarianceError, MemoryError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        # remaining value errors come from inconsistent settings
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
