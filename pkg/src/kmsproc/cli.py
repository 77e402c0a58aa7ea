"""Command line front end: ``verify``, ``green``, ``sample`` and ``report``.

Exit status: 0 when every check passes, 1 when a mathematical check fails,
2 for usage or configuration errors.
"""
from __future__ import annotations

import argparse
import hashlib
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from . import process as P
from . import quasifree as Q
from .config import DEFAULT_TOLERANCES, RunConfig, eval_time, load_config, parse_float, parse_vector
from .errors import ConfigParse, KMSError, QuadratureModelUnsupported
from .report import run_suite, to_json

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _u64(text: str) -> int:
    v = int(text)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kmsproc", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"kmsproc {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("verify", "run the invariant suite and write a JSON report"),
        ("green", "tabulate Euclidean Green functions as CSV"),
        ("sample", "sample thermal-process paths as CSV plus a JSON sidecar"),
        ("report", "verify, tabulate and render figures into a directory"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", required=True, help="sectioned key-value configuration file")
        sp.add_argument("--out", help="output path (directory for 'report')")
        sp.add_argument("--seed", type=_u64, help="random seed (unsigned 64-bit)")
        sp.add_argument("--beta", type=parse_float, help="inverse temperature, float or inf")
        sp.add_argument("--modes", type=int, help="Fourier modes of the sampler")
        sp.add_argument("--samples", type=int, help="number of sampled paths")
        sp.add_argument("--tolerance", action="append", default=[], metavar="NAME=VALUE", help="override a tolerance")
    return p


# --------------------------------------------------------------------------
# manifest
# --------------------------------------------------------------------------


def _config_digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def make_manifest(args, cfg: RunConfig, outputs: list) -> dict:
    man = {
        "command": args.command,
        "config": str(args.config),
        "config_sha256": _config_digest(args.config),
        "outputs": [str(o) for o in outputs],
        "seed": _seed(args, cfg),
        "beta": cfg.beta,
        "modes": args.modes,
        "samples": args.samples,
        "tolerances": cfg.tolerances,
        "version": __version__,
    }
    man["digest"] = hashlib.sha256(to_json(man).encode()).hexdigest()
    return man


def _seed(args, cfg: RunConfig) -> int:
    if args.seed is not None:
        return args.seed
    try:
        return int(cfg.sampler.get("seed", cfg.checks.get("seed", "0")))
    except ValueError:
        raise ConfigParse("seed must be an integer") from None


def _apply_overrides(args, cfg: RunConfig) -> RunConfig:
    if args.beta is not None:
        if not args.beta > 0:
            raise UsageError("--beta must be positive")
        cfg.beta = args.beta
    for item in args.tolerance:
        name, sep, value = item.partition("=")
        if not sep or name not in DEFAULT_TOLERANCES:
            raise UsageError(f"bad --tolerance {item!r}; names: {', '.join(DEFAULT_TOLERANCES)}")
        cfg.tolerances[name] = parse_float(value)
    return cfg


def _write(path, text: str):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, newline="\n")


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def cmd_verify(args, cfg: RunConfig) -> int:
    ctx = cfg.build()
    rep = run_suite(ctx, cfg.tolerances, seed=_seed(args, cfg))
    doc = {"manifest": make_manifest(args, cfg, [args.out or "-"]), **rep.as_dict()}
    _write(args.out, to_json(doc) + "\n")
    for r in rep.results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status} {r.check_name}: residual={r.residual:.3g} tol={r.tolerance:.3g}", file=sys.stderr)
    return EXIT_OK if rep.all_passed else EXIT_FAIL


def _fmt(x) -> str:
    return format(float(x), ".17g")


def green_rows(ctx, cfg: RunConfig):
    """Yield ``(times, value, cross_check, error)`` for the configured word and scan."""
    g = cfg.green
    if "letters" not in g or "times" not in g:
        raise ConfigParse("[green] needs 'letters' and 'times'")
    beta = ctx.beta
    vecs = tuple(parse_vector(ctx, t) for t in g["letters"].split(";"))
    tokens = [t.strip() for t in g["times"].split(",")]
    if len(tokens) != len(vecs):
        raise ConfigParse("[green] letters and times differ in length")
    kind = g.get("kind", "euclid")
    scan = [None]
    if "*" in tokens:
        try:
            lo, hi, n = g.get("scan", "0:beta:33").split(":")
            scan = np.linspace(eval_time(lo, beta), eval_time(hi, beta), int(n))
        except ValueError:
            raise ConfigParse("[green] scan must be start:stop:count") from None
    for x in scan:
        times = tuple(x if t == "*" else eval_time(t, beta) for t in tokens)
        try:
            if kind == "real":
                if len(vecs) != 2:
                    raise ConfigParse("real-time Green function takes two letters")
                val, cross = Q.green2_real(ctx, vecs[0], vecs[1], times[1] - times[0]), float("nan")
            elif kind == "euclid":
                word = Q.EuclideanWord(vecs, times)
                val = Q.multi_green_euclid(ctx, word)
                cross = abs(P.char_functional(ctx, word) - val) if word.is_real() else float("nan")
            else:
                raise ConfigParse(f"unknown [green] kind {kind!r}")
            yield times, val, cross, ""
        except ConfigParse:
            raise
        except KMSError as exc:
            yield times, complex(math.nan, math.nan), math.nan, f"{type(exc).__name__}: {exc}".replace(",", ";")


def cmd_green(args, cfg: RunConfig) -> int:
    ctx = cfg.build()
    rows = list(green_rows(ctx, cfg))
    n = len(rows[0][0]) if rows else 0
    man = make_manifest(args, cfg, [args.out or "-"])
    lines = [f"# manifest={man['digest']}", ",".join([f"s_{i + 1}" for i in range(n)] + ["re", "im", "cross_check_absdiff", "error"])]
    for times, val, cross, err in rows:
        lines.append(",".join([_fmt(t) for t in times] + [_fmt(val.real), _fmt(val.imag), _fmt(cross), err]))
    _write(args.out, "\n".join(lines) + "\n")
    return EXIT_OK


def _sampler_settings(args, cfg: RunConfig) -> dict:
    s = cfg.sampler
    try:
        out = {
            "samples": args.samples if args.samples is not None else int(s.get("samples", "1000")),
            "modes": args.modes if args.modes is not None else int(s.get("modes", "512")),
            "grid": int(s.get("grid", "64")),
            "workers": int(s.get("workers", "1")),
            "seed": _seed(args, cfg),
        }
    except ValueError:
        raise ConfigParse("[sampler] values must be integers") from None
    if out["samples"] < 0 or out["modes"] < 0 or out["grid"] < 1:
        raise UsageError("samples >= 0, modes >= 0 and grid >= 1 required")
    return out


def covariance_table(ctx, ens, n_lags: int = 8):
    """Empirical vs exact covariance of the first coordinate at ``n_lags`` lags."""
    M = ens.grid_size
    lags = sorted(set(int(k) for k in np.linspace(0, M // 2, n_lags)))
    f = ens.coords[0]
    rows = []
    bias = P.truncation_bound(ctx, f, ens.n_modes)
    for lag in lags:
        est, se = P.empirical_covariance(ens, 0, 0, lag)
        exact = P.cov_pair(ctx, f, f, 0.0, ens.times[lag])
        z = (abs(est - exact) - bias) / se if se > 0 else float("nan")
        rows.append({"lag": lag, "s": float(ens.times[lag]), "estimate": est, "se": se, "exact": exact, "z": max(z, 0.0)})
    return rows


def _sample(args, cfg: RunConfig, ctx):
    st = _sampler_settings(args, cfg)
    coords = [parse_vector(ctx, t) for t in cfg.sampler.get("coords", "e0").split(";")]
    ens = P.sample_paths(ctx, st["grid"], coords, st["samples"], st["modes"], st["seed"], workers=st["workers"])
    return ens, coords


def cmd_sample(args, cfg: RunConfig) -> int:
    if args.out is None:
        raise UsageError("sample needs --out")
    ctx = cfg.build()
    if ctx.model.kind != "matrix":
        raise QuadratureModelUnsupported("sampling needs a matrix model")
    ens, coords = _sample(args, cfg, ctx)
    out = Path(args.out)
    side = out.with_name(out.name + ".json")
    man = make_manifest(args, cfg, [out, side])
    ens.write_csv(out, comment=f"manifest={man['digest']}")
    meta = {
        "manifest": man,
        **ens.metadata(),
        "model_hash": ctx.meta.get("hash", ""),
        "truncation_bias": [P.truncation_bias(ctx, f, ens.n_modes) for f in coords],
        "truncation_bound": [P.truncation_bound(ctx, f, ens.n_modes) for f in coords],
    }
    status = EXIT_OK
    if ens.n_samples > 1:
        table = covariance_table(ctx, ens)
        meta["covariance"] = table
        for row in table:
            print(f"lag={row['lag']} est={row['estimate']:.6g} se={row['se']:.2g} exact={row['exact']:.6g} z={row['z']:.2f}")
        if any(row["z"] > 4 for row in table):
            status = EXIT_FAIL
    side.write_text(to_json(meta) + "\n", newline="\n")
    return status


def cmd_report(args, cfg: RunConfig) -> int:
    from . import plotting

    if args.out is None:
        raise UsageError("report needs --out DIR")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    ctx = cfg.build()
    rep = run_suite(ctx, cfg.tolerances, seed=_seed(args, cfg))
    files = [out / "report.json", out / "kernel.csv", out / "kernel.png", out / "checks.png"]
    sampling = ctx.model.kind == "matrix" and not ctx.is_ground
    if sampling:
        files += [out / "covariance.csv", out / "covariance.png"]
    man = make_manifest(args, cfg, files)
    (out / "report.json").write_text(to_json({"manifest": man, **rep.as_dict()}) + "\n", newline="\n")

    f = parse_vector(ctx, cfg.sampler.get("coords", "e0").split(";")[0]) if ctx.model.kind == "matrix" else ctx.model.gaussian(1.0, 1.0)
    span = 5.0 if ctx.is_ground else ctx.beta
    s = np.linspace(0.0, span, 129)
    S = np.array([Q.S_kernel(ctx, f, f, x).real for x in s])
    lines = [f"# manifest={man['digest']}", "s,S"] + [f"{_fmt(a)},{_fmt(b)}" for a, b in zip(s, S)]
    (out / "kernel.csv").write_text("\n".join(lines) + "\n", newline="\n")
    plotting.plot_kernel(s, S, out / "kernel.png", title=ctx.model_id)
    plotting.plot_checks(
        [r.check_name for r in rep.results],
        [r.residual if math.isfinite(r.residual) else 1.0 for r in rep.results],
        [r.tolerance for r in rep.results],
        out / "checks.png",
        title=ctx.model_id,
    )
    if sampling:
        if args.samples is None and "samples" not in cfg.sampler:
            args.samples = 20000
        ens, _ = _sample(args, cfg, ctx)
        if ens.n_samples > 1:
            table = covariance_table(ctx, ens, n_lags=16)
            keys = ["lag", "s", "estimate", "se", "exact", "z"]
            lines = [f"# manifest={man['digest']}", ",".join(keys)]
            lines += [",".join(str(r[k]) if k == "lag" else _fmt(r[k]) for k in keys) for r in table]
            (out / "covariance.csv").write_text("\n".join(lines) + "\n", newline="\n")
            plotting.plot_covariance(
                [r["s"] for r in table],
                [r["estimate"] for r in table],
                [r["se"] for r in table],
                [r["exact"] for r in table],
                out / "covariance.png",
                title=ctx.model_id,
            )
    return EXIT_OK if rep.all_passed else EXIT_FAIL


COMMANDS = {"verify": cmd_verify, "green": cmd_green, "sample": cmd_sample, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        cfg = _apply_overrides(args, load_config(args.config))
        return COMMANDS[args.command](args, cfg)
    except (ConfigParse, UsageError, QuadratureModelUnsupported) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KMSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
