"""Command-line interface.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 I/O error.

Every command that writes files also writes ``<out>.manifest.json`` holding
its parameters; ``kriging-nn replay <manifest>`` reruns it and reproduces
the CSV outputs byte for byte.  ``KRIGING_NN_OUT_DIR`` prefixes relative
output paths.
"""

from __future__ import annotations

import argparse
import configparser
import datetime as _dt
import json
import os
import re
import sys
from importlib import metadata

import numpy as np

from . import io
from .depth import DepthMethod, rank_test
from .ensemble import parse_grid
from .errors import NumericalError, ValidationError
from .experiments import CASES, gp_vs_mlp
from .gp import GPModel, MeanFunction, Observations, predict, sample_prior
from .kernels import Kernel, audit_positive_definite, eval_kernel
from .mlp import MLPPriorConfig, TransferFunction, limit_kernel, mc_kernel, sample_paths
from .plot import write_svg

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3
OUT_DIR_ENV = "KRIGING_NN_OUT_DIR"

KERNELS = (
    "linear", "nn", "se", "nonstat-se", "arccos1", "arccos2",
    "white", "arcsine-limit", "halfwidth-se", "sigmoid",
)
TRANSFERS = ("linear", "erf", "cos", "bump", "heaviside", "relu")

# per-command defaults; options default to None so config files can fill gaps
DEFAULTS = {
    "kernel": "se", "sigma": 1.0, "sigma_g": 1.0, "sigma_a": 1.0, "weight_var": 1.0,
    "slope": 1.0, "offset": 1.0, "dim": 1, "mean": 0.0, "noise": 0.0,
    "transfer": "cos", "hidden": 20, "output_var": 1.0, "bias": False,
    "grid": "-3:3:100", "n_paths": 10, "n_mc": 100000, "method": "bd",
    "alpha": 0.05, "n_points": 3, "trials": 100, "case": "se", "reps": 1,
}


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        # let "--grid -3:3:100" parse as a value, like a negative number
        self._negative_number_matcher = re.compile(r"^-\d+$|^-\d*\.\d+$|^-[\d.]+:[-\d.:]+$")

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


# -- argument groups ------------------------------------------------------


def _kernel_opts(p):
    g = p.add_argument_group("kernel")
    g.add_argument("--kernel", choices=KERNELS)
    g.add_argument("--sigma", type=float, help="squared-exponential length scale")
    g.add_argument("--sigma-g", type=float, help="bump width (nonstat-se, halfwidth-se)")
    g.add_argument("--sigma-a", type=float, help="weight spread (nonstat-se)")
    g.add_argument("--weight-var", type=float, help="weight covariance is weight_var * I")
    g.add_argument("--slope", type=float)
    g.add_argument("--offset", type=float)
    g.add_argument("--dim", type=int, help="input dimension")


def _transfer_opts(p):
    g = p.add_argument_group("network")
    g.add_argument("--transfer", choices=TRANSFERS)
    g.add_argument("--hidden", type=int, help="hidden units L")
    g.add_argument("--output-var", type=float, help="total output variance c (b_j ~ N(0, c/L))")
    g.add_argument("--bias", action="store_const", const=True, help="include the b0 term")
    g.add_argument("--sigma", type=float)
    g.add_argument("--sigma-g", type=float)
    g.add_argument("--sigma-a", type=float)
    g.add_argument("--weight-var", type=float)
    g.add_argument("--dim", type=int)


def build_kernel(a) -> Kernel:
    d = a.dim
    cov = a.weight_var * np.eye(d)
    name = a.kernel
    if name == "linear":
        return Kernel.linear(cov)
    if name == "nn":
        return Kernel.neural_net(cov)
    if name == "se":
        return Kernel.squared_exponential(a.sigma, d)
    if name == "nonstat-se":
        return Kernel.nonstat_se(a.sigma_g, a.sigma_a, d)
    if name == "arccos1":
        return Kernel.arc_cosine_i(d)
    if name == "arccos2":
        return Kernel.arc_cosine_ii(d)
    if name == "white":
        return Kernel.white_noise(d)
    if name == "arcsine-limit":
        return Kernel.normalized_arcsine(cov)
    if name == "halfwidth-se":
        return Kernel.half_width_se(a.sigma_g, d)
    return Kernel.sigmoid_tanh(a.slope, a.offset, d)


def build_transfer(a) -> TransferFunction:
    d = a.dim
    name = a.transfer
    if name == "linear":
        return TransferFunction.linear(a.weight_var * np.eye(d))
    if name == "erf":
        return TransferFunction.erf(a.weight_var * np.eye(d))
    if name == "cos":
        return TransferFunction.cosine(a.sigma, d)
    if name == "bump":
        return TransferFunction.bump(a.sigma_g, a.sigma_a, d)
    if name == "heaviside":
        return TransferFunction.heaviside(d)
    return TransferFunction.relu(d)


def _out_path(path: str) -> str:
    base = os.environ.get(OUT_DIR_ENV)
    if base and not os.path.isabs(path):
        path = os.path.join(base, path)
    io.ensure_parent(path)
    return path


def _write_manifest(args, outputs: list[str]) -> str:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "workers", "config")}
    manifest = {
        "tool": "kriging-nn",
        "version": _version(),
        "command": args.command,
        "params": params,
        "outputs": outputs,
        "created": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    path = outputs[0] + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


# -- commands -------------------------------------------------------------


def cmd_sample(a) -> int:
    if a.n_paths < 1:
        raise ValidationError("--n-paths must be >= 1")
    grid = parse_grid(a.grid)
    if a.kind == "gp":
        model = GPModel(MeanFunction.constant(a.mean), build_kernel(a), 0.0)
        ens = sample_prior(model, grid, a.n_paths, a.seed, a.workers)
        title = f"GP prior, {a.kernel} kernel"
    else:
        cfg = MLPPriorConfig(build_transfer(a), a.hidden, a.output_var, bool(a.bias))
        ens = sample_paths(cfg, grid, a.n_paths, a.seed, a.workers)
        title = f"MLP prior, {a.transfer} transfer, {a.hidden} hidden units"
    out = _out_path(a.out)
    io.write_ensemble(out, ens)
    svg = _out_path(a.svg) if a.svg else os.path.splitext(out)[0] + ".svg"
    write_svg(svg, ens, title)
    _write_manifest(a, [out, svg])
    print(f"wrote {ens.n_paths} paths on {ens.n_grid} grid points to {out} and {svg}")
    return EXIT_OK


def cmd_krige(a) -> int:
    pts, vals = io.read_observations(a.obs)
    obs = Observations(pts, vals)
    a.dim = obs.points.shape[1]
    targets = io.read_points(a.targets)
    model = GPModel(MeanFunction.constant(a.mean), build_kernel(a), a.noise)
    preds = predict(model, obs, targets)
    out = _out_path(a.out)
    io.write_predictions(out, preds)
    _write_manifest(a, [out])
    n_clamped = sum(p.clamped for p in preds)
    if n_clamped:
        print(f"warning: {n_clamped} variances clamped to 0", file=sys.stderr)
    print(f"wrote {len(preds)} predictions to {out}")
    return EXIT_OK


def cmd_estimate_kernel(a) -> int:
    pairs = io.read_points(a.pairs)
    if pairs.shape[1] % 2:
        raise ValidationError(f"{a.pairs}: pair rows need an even number of columns")
    a.dim = pairs.shape[1] // 2
    transfer = build_transfer(a)
    kern, ratio = limit_kernel(transfer)
    d = a.dim
    head = [*(f"x{i + 1}" for i in range(d)), *(f"xp{i + 1}" for i in range(d)),
            "value", "std_error", "n_mc", "closed_form", "abs_err"]
    lines = [",".join(head)]
    worst = 0.0
    for row in pairs:
        x, xp = row[:d], row[d:]
        est = mc_kernel(transfer, x, xp, a.n_mc, a.seed, a.workers)
        closed = ratio * eval_kernel(kern, x, xp)
        err = abs(est.value - closed)
        worst = max(worst, err / est.std_error if est.std_error > 0 else 0.0)
        lines.append(",".join([*(io.fmt(v) for v in row), est.csv_row(), io.fmt(closed), io.fmt(err)]))
    out = _out_path(a.out)
    io._write_lines(out, lines)
    _write_manifest(a, [out])
    print(f"{len(pairs)} pairs, closed form {kern.family.value} x {ratio:g}; "
          f"largest |error| = {worst:.2f} standard errors")
    return EXIT_OK


def cmd_compare(a) -> int:
    ga = io.read_ensemble(a.group_a)
    gb = io.read_ensemble(a.group_b)
    res = rank_test(ga, gb, a.method, a.workers)
    out = _out_path(a.out)
    io._write_lines(out, ["statistic,p_value,m1,m2,method", res.csv_row()])
    outputs = [out]
    if a.depths_out:
        dpath = _out_path(a.depths_out)
        m1 = res.group_sizes[0]
        io._write_lines(
            dpath,
            ["index,group,depth"]
            + [f"{i},{'A' if i < m1 else 'B'},{io.fmt(v)}" for i, v in enumerate(res.depths.values)],
        )
        outputs.append(dpath)
    _write_manifest(a, outputs)
    verdict = "reject" if res.p_value < a.alpha else "accept"
    flag = " (degenerate: depths do not separate the groups)" if res.degenerate else ""
    print(f"p = {res.p_value:.4g}; {verdict} H0 at alpha = {a.alpha}{flag}")
    return EXIT_OK


def cmd_audit_pd(a) -> int:
    if a.dim is None:
        a.dim = 1
    kern = build_kernel(a)
    rep = audit_positive_definite(kern, a.n_points, a.dim, a.trials, a.seed)
    status = "NOT positive semidefinite" if rep.is_violated else "no violation found"
    print(f"{kern!r}: {status}; min eigenvalue {rep.min_eigenvalue:.6g} "
          f"(trial {rep.witness_trial} of {rep.n_trials})")
    outputs = []
    if a.witness_out:
        w = _out_path(a.witness_out)
        io.write_points(w, rep.witness_points)
        outputs.append(w)
        _write_manifest(a, outputs)
    return EXIT_OK


def cmd_experiment(a) -> int:
    grid = parse_grid(a.grid)
    lines = ["rep,statistic,p_value,m1,m2,method,reject"]
    rejects = 0
    for r in range(a.reps):
        res = gp_vs_mlp(a.case, a.seed, r, a.n_paths, a.hidden, grid, a.method, a.workers)
        rej = res.p_value < a.alpha
        rejects += rej
        lines.append(f"{r},{res.csv_row()},{int(rej)}")
    out = _out_path(a.out)
    io._write_lines(out, lines)
    _write_manifest(a, [out])
    print(f"{a.case}: {a.n_paths} GP vs {a.n_paths} MLP paths (L = {a.hidden}); "
          f"rejected H0 in {rejects}/{a.reps} runs at alpha = {a.alpha}")
    return EXIT_OK


def cmd_replay(a) -> int:
    with open(a.manifest, encoding="utf-8") as fh:
        try:
            man = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{a.manifest}: not a manifest ({exc})") from None
    if man.get("command") not in COMMANDS or not isinstance(man.get("params"), dict):
        raise ValidationError(f"{a.manifest}: missing or unknown command")
    params = dict(man["params"])
    if a.out_dir:
        for key in ("out", "svg", "depths_out", "witness_out"):
            if params.get(key):
                params[key] = os.path.join(a.out_dir, os.path.basename(params[key]))
    ns = argparse.Namespace(**params, workers=a.workers, config=None)
    ns.func = COMMANDS[man["command"]]
    return ns.func(ns)


COMMANDS = {
    "sample": cmd_sample,
    "krige": cmd_krige,
    "estimate-kernel": cmd_estimate_kernel,
    "compare": cmd_compare,
    "audit-pd": cmd_audit_pd,
    "experiment": cmd_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="kriging-nn", description=__doc__.split("\n")[0])
    p.add_argument("--workers", type=int, default=1, help="threads for sampling and depth (default 1)")
    p.add_argument("--version", action="version", version=_version())
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sample", help="draw GP or random-network sample paths")
    s.add_argument("kind", choices=("gp", "mlp"))
    s.add_argument("--config", help="key = value file; command-line flags win")
    _kernel_opts(s)
    s.add_argument("--transfer", choices=TRANSFERS)
    s.add_argument("--hidden", type=int)
    s.add_argument("--output-var", type=float)
    s.add_argument("--bias", action="store_const", const=True)
    s.add_argument("--mean", type=float, help="constant GP mean")
    s.add_argument("--grid", help="lo:hi:count, endpoints included")
    s.add_argument("--n-paths", type=int)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--svg", help="SVG path (default: --out with .svg)")

    k = sub.add_parser("krige", help="Simple Kriging / GP posterior at target points")
    k.add_argument("--config")
    k.add_argument("--obs", required=True, help="CSV rows x1,...,xd,y")
    k.add_argument("--targets", required=True, help="CSV rows x1,...,xd")
    _kernel_opts(k)
    k.add_argument("--noise", type=float, help="observation noise variance")
    k.add_argument("--mean", type=float, help="known constant mean")
    k.add_argument("--out", required=True)

    e = sub.add_parser("estimate-kernel", help="Monte Carlo E[h(x)h(x')] against the closed form")
    e.add_argument("--config")
    e.add_argument("--pairs", required=True, help="CSV rows x1,...,xd,x'1,...,x'd")
    _transfer_opts(e)
    e.add_argument("--n-mc", type=int)
    e.add_argument("--seed", type=int, required=True)
    e.add_argument("--out", required=True)

    c = sub.add_parser("compare", help="depth-based rank test between two ensembles")
    c.add_argument("--config")
    c.add_argument("--group-a", required=True)
    c.add_argument("--group-b", required=True)
    c.add_argument("--method", choices=[m.value for m in DepthMethod])
    c.add_argument("--alpha", type=float)
    c.add_argument("--out", required=True)
    c.add_argument("--depths-out")

    d = sub.add_parser("audit-pd", help="search for a non-PSD Gram matrix")
    d.add_argument("--config")
    _kernel_opts(d)
    d.add_argument("--n-points", type=int)
    d.add_argument("--trials", type=int)
    d.add_argument("--seed", type=int, required=True)
    d.add_argument("--witness-out")

    x = sub.add_parser("experiment", help="repeated GP-vs-network rank tests")
    x.add_argument("--config")
    x.add_argument("--case", choices=CASES)
    x.add_argument("--n-paths", type=int)
    x.add_argument("--hidden", type=int)
    x.add_argument("--reps", type=int)
    x.add_argument("--grid")
    x.add_argument("--method", choices=[m.value for m in DepthMethod])
    x.add_argument("--alpha", type=float)
    x.add_argument("--seed", type=int, required=True)
    x.add_argument("--out", required=True)

    r = sub.add_parser("replay", help="rerun a command from its manifest")
    r.add_argument("manifest")
    r.add_argument("--out-dir", help="write outputs here instead of the recorded paths")

    for name, sp in sub.choices.items():
        sp.set_defaults(func=COMMANDS.get(name, cmd_replay))
    return p


def _read_config(path) -> dict:
    cp = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        cp.read_string("[config]\n" + text)
    except configparser.Error as exc:
        raise ValidationError(f"{path}: {exc}") from None
    return {k.replace("-", "_"): v for k, v in cp["config"].items()}


def _apply_defaults(a, parser) -> None:
    cfg = _read_config(a.config) if getattr(a, "config", None) else {}
    for key, default in DEFAULTS.items():
        if not hasattr(a, key) or getattr(a, key) is not None:
            continue
        if key in cfg:
            raw = cfg.pop(key)
            try:
                if isinstance(default, bool):
                    val = raw.strip().lower() in ("1", "true", "yes", "on")
                else:
                    val = type(default)(raw)
            except ValueError:
                raise ValidationError(f"config: bad value for {key}: {raw!r}") from None
            setattr(a, key, val)
        else:
            setattr(a, key, default)
    unknown = sorted(k for k in cfg if k not in DEFAULTS)
    if unknown:
        raise ValidationError(f"config: unknown keys {unknown}")


def main(argv=None) -> int:
    parser = build_parser()
    a = parser.parse_args(argv)
    try:
        if a.command != "replay":
            _apply_defaults(a, parser)
            if a.workers < 1:
                raise ValidationError("--workers must be >= 1")
        return a.func(a)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
