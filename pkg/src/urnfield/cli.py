"""Command-line interface.

Subcommands: solve, simulate, compare, residual, diagnostics, closed-form,
atoms, table.  Structured artifacts are JSON, tabular/plot data is CSV.  Every
run writes a manifest (<out>.manifest.json) echoing the full parameters, and
every output file references the manifest that produced it, so a run can be
reproduced byte-for-byte from its manifest via --config.

Exit codes: 0 success, 2 validation/usage error, 3 non-convergence or
truncation.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__, boundary, closed_forms, params, solver, urn
from .dist import DEFAULT_K, QuantileDist
from .errors import TruncationError, UrnFieldError

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NONCONVERGED = 3


def _canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _params_sha(p: dict) -> str:
    return hashlib.sha256(_canonical_json(p).encode()).hexdigest()[:16]


class _Run:
    """Collects parameters and outputs of one CLI invocation."""

    def __init__(self, command: str, argv: list[str], run_params: dict):
        self.command = command
        self.argv = argv
        self.params = run_params
        self.outputs: list[str] = []
        self.t0 = time.time()

    def manifest_ref(self, out_path: str) -> dict:
        return {"path": out_path + ".manifest.json",
                "params_sha256": _params_sha(self.params)}

    def write_json(self, out_path: str, payload: dict) -> None:
        payload = dict(payload)
        payload["manifest"] = self.manifest_ref(out_path)
        with open(out_path, "w") as fh:
            fh.write(_canonical_json(payload))
        self.outputs.append(out_path)
        self._write_manifest(out_path)

    def write_csv(self, out_path: str, text: str) -> None:
        ref = self.manifest_ref(out_path)
        with open(out_path, "w") as fh:
            fh.write(f"# manifest: {ref['path']} params_sha256={ref['params_sha256']}\n")
            fh.write(text)
        self.outputs.append(out_path)
        self._write_manifest(out_path)

    def _write_manifest(self, out_path: str) -> None:
        manifest = {
            "command": self.command,
            "argv": self.argv,
            "params": self.params,
            "seed": self.params.get("seed"),
            "versions": {"urnfield": __version__, "numpy": np.__version__,
                         "python": sys.version.split()[0]},
            "wall_clock_s": round(time.time() - self.t0, 3),
            "outputs": self.outputs,
        }
        with open(out_path + ".manifest.json", "w") as fh:
            fh.write(json.dumps(manifest, sort_keys=True, indent=1))


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    with open(path) as fh:
        cfg = json.load(fh)
    # accept a plain parameter dict or a manifest with a "params" key
    return cfg.get("params", cfg) if isinstance(cfg, dict) else {}


def _merge_config(args: argparse.Namespace, parser_defaults: dict, config: dict) -> None:
    """Fill parameters from a config file; explicit flags win."""
    for key, value in config.items():
        if hasattr(args, key) and getattr(args, key) == parser_defaults.get(key):
            setattr(args, key, value)


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is None:
        seed = int(np.random.SeedSequence().entropy % (2 ** 63))
        print(f"seed: {seed} (generated)")
        args.seed = seed
    return args.seed


def _pair_from_args(args) -> params.ReinforcementPair:
    mu = params.parse_dist_spec(args.mu, beta=args.beta, K=args.K)
    nu = params.parse_dist_spec(args.nu, beta=args.beta, K=args.K)
    pair = params.validate(mu, nu, beta=args.beta, m0=args.m0)
    if args.dilute is not None:
        pair = params.dilute(pair, args.dilute)
    return pair


def _add_pair_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mu", required=True, help="reinforcement spec for the black color")
    p.add_argument("--nu", required=True, help="reinforcement spec for the white color")
    p.add_argument("--beta", type=float, default=1.0, help="support bound of the reinforcements")
    p.add_argument("--m0", type=float, default=None, help="lower mean bound (default: half the mean)")
    p.add_argument("--dilute", type=float, default=None,
                   help="replace the pair by its dilution with this fraction")
    p.add_argument("--K", type=int, default=DEFAULT_K, help="quantile grid resolution")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON file with parameter defaults (flags win)")
    p.add_argument("--threads", type=int, default=None, help="cap solver parallelism")
    p.add_argument("--seed", type=int, default=None)


def _load_field(path: str) -> solver.SolutionField:
    with open(path) as fh:
        return solver.SolutionField.from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------

def _cmd_solve(args, argv) -> int:
    pair = _pair_from_args(args)
    phi = boundary.parse_boundary_spec(args.boundary, T=args.My, K=args.K)
    run = _Run("solve", argv, _echo(args))
    fld = solver.solve(pair, phi, Mx=args.Mx, My=args.My,
                       x_star_max=args.x_star_max, tol_iter=args.tol_iter,
                       max_iters=args.max_iters, init=args.init)
    fld.meta.update({"mu": args.mu, "nu": args.nu, "beta": args.beta,
                     "boundary": args.boundary, "seed": args.seed})
    run.write_json(args.out, fld.to_dict())
    print(f"solve: iterations={fld.meta['iterations']} "
          f"final_update={fld.meta['final_update']:.3e} "
          f"converged={fld.meta['converged']} -> {args.out}")
    return EXIT_OK if fld.meta["converged"] else EXIT_NONCONVERGED


def _cmd_simulate(args, argv) -> int:
    pair = _pair_from_args(args)
    _resolve_seed(args)
    run = _Run("simulate", argv, _echo(args))
    cfg = urn.RunConfig(seed=args.seed, eps=args.eps, max_steps=args.max_steps,
                        replicates=args.replicates)
    result = urn.estimate_limit_law(args.x, args.y, pair, cfg, K=args.K)
    run.write_json(args.out, result.to_dict())
    print(f"simulate: replicates={result.replicates} truncated={result.truncated} "
          f"bias_bound={result.bias_bound} -> {args.out}")
    return EXIT_OK if result.truncated == 0 else EXIT_NONCONVERGED


def _cmd_compare(args, argv) -> int:
    f1 = _load_field(args.field_a)
    f2 = _load_field(args.field_b)
    run = _Run("compare", argv, _echo(args))
    lines = ["n,d_n"]
    n_max = args.n or int(f1.x_star_max)
    for n in range(1, n_max + 1):
        lines.append(f"{n},{solver.field_distance(f1, f2, n)!r}")
    d = solver.field_distance(f1, f2)
    lines.append(f"d,{d!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        run.write_csv(args.out, text)
    print(text, end="")
    return EXIT_OK


def _cmd_residual(args, argv) -> int:
    fld = _load_field(args.field)
    pair = _pair_from_args(args)
    r = solver.residual(fld, pair)
    print(f"residual: {r!r}")
    return EXIT_OK


def _cmd_diagnostics(args, argv) -> int:
    pair = _pair_from_args(args)
    _resolve_seed(args)
    run = _Run("diagnostics", argv, _echo(args))
    cfg = urn.RunConfig(seed=args.seed, eps=args.eps, max_steps=args.max_steps,
                        replicates=args.replicates)
    report = urn.diagnostics_bounds_check(pair, urn.UrnState(args.x, args.y), cfg)
    run.write_csv(args.out, report.to_csv())
    print(report.to_csv(), end="")
    print(f"all_passed={report.all_passed} -> {args.out}")
    return EXIT_OK if report.all_passed else EXIT_NONCONVERGED


def _cmd_closed_form(args, argv) -> int:
    kv = dict(part.split("=", 1) for part in args.params.split(",")) if args.params else {}
    p = {k: float(v) for k, v in kv.items()}
    run = _Run("closed-form", argv, _echo(args))
    if args.family == "beta":
        d = closed_forms.beta_quantile_dist(p["a"], p["b"], K=args.K)
    elif args.family == "kumaraswamy":
        d = closed_forms.kumaraswamy_dist(p["gamma"], p["x"], p["y"], K=args.K)
    elif args.family == "scaled-bernoulli":
        d = closed_forms.scaled_bernoulli_solution(p["kmu"], p["knu"], p["x"], p["y"], K=args.K)
    else:
        raise UrnFieldError(f"unknown family {args.family!r}")
    run.write_json(args.out, d.to_dict())
    print(f"closed-form {args.family} -> {args.out}")
    return EXIT_OK


def _cmd_atoms(args, argv) -> int:
    fld = _load_field(args.field)
    run = _Run("atoms", argv, _echo(args))
    from .dist import largest_atom
    lines = ["i,j,x_star,y_star,location,mass_estimate"]
    for i in range(fld.Mx):
        for j in range(fld.My):
            rep = largest_atom(fld.node(i, j), tol=args.tol)
            lines.append(f"{i},{j},{fld.xs[i]!r},{fld.ys[j]!r},"
                         f"{rep.location!r},{rep.mass_estimate!r}")
    run.write_csv(args.out, "\n".join(lines) + "\n")
    print(f"atoms -> {args.out}")
    return EXIT_OK


def _cmd_table(args, argv) -> int:
    fld = _load_field(args.field)
    run = _Run("table", argv, _echo(args))
    qlevels = [0.1, 0.25, 0.5, 0.75, 0.9]
    zs = [0.1, 0.25, 0.5, 0.75, 0.9]
    header = (["x", "y", "x_star", "y_star"]
              + [f"q{int(100 * u)}" for u in qlevels]
              + [f"F({z})" for z in zs])
    lines = [",".join(header)]
    for i in range(1, fld.Mx):
        for j in range(fld.My):
            x, y = fld.node_xy(i, j)
            node = fld.node(i, j)
            row = [f"{x!r}", f"{y!r}", f"{fld.xs[i]!r}", f"{fld.ys[j]!r}"]
            row += [f"{node.quantile(u)!r}" for u in qlevels]
            row += [f"{node.cdf(z)!r}" for z in zs]
            lines.append(",".join(row))
    run.write_csv(args.out, "\n".join(lines) + "\n")
    print(f"table -> {args.out}")
    return EXIT_OK


def _echo(args) -> dict:
    skip = {"config", "func"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="urnfield",
                                 description="reinforced-urn solution fields")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="deterministic fixed-point solve")
    _add_pair_flags(p)
    p.add_argument("--boundary", default="delta")
    p.add_argument("--Mx", type=int, default=solver.DEFAULT_MX)
    p.add_argument("--My", type=int, default=solver.DEFAULT_MY)
    p.add_argument("--x-star-max", dest="x_star_max", type=float,
                   default=solver.DEFAULT_X_STAR_MAX)
    p.add_argument("--tol-iter", dest="tol_iter", type=float,
                   default=solver.DEFAULT_TOL_ITER)
    p.add_argument("--max-iters", dest="max_iters", type=int,
                   default=solver.DEFAULT_MAX_ITERS)
    p.add_argument("--init", choices=["boundary", "constant0"], default="boundary")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("simulate", help="Monte Carlo limit-law estimate")
    _add_pair_flags(p)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.05)
    p.add_argument("--replicates", type=int, default=10_000)
    p.add_argument("--max-steps", dest="max_steps", type=int, default=None)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("compare", help="d_n and d between two field files")
    p.add_argument("field_a")
    p.add_argument("field_b")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--out", default=None)
    _add_common(p)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("residual", help="operator residual of a field file")
    p.add_argument("field")
    _add_pair_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_residual)

    p = sub.add_parser("diagnostics", help="martingale bound checks")
    _add_pair_flags(p)
    p.add_argument("--x", type=float, required=True)
    p.add_argument("--y", type=float, required=True)
    p.add_argument("--eps", type=float, default=0.1)
    p.add_argument("--replicates", type=int, default=10_000)
    p.add_argument("--max-steps", dest="max_steps", type=int, default=None)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_diagnostics)

    p = sub.add_parser("closed-form", help="reference distribution")
    p.add_argument("--family", required=True,
                   choices=["beta", "kumaraswamy", "scaled-bernoulli"])
    p.add_argument("--params", default="", help="comma-separated key=value")
    p.add_argument("--K", type=int, default=DEFAULT_K)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_closed_form)

    p = sub.add_parser("atoms", help="largest-atom report per node")
    p.add_argument("field")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_atoms)

    p = sub.add_parser("table", help="plot-ready CSV of a field file")
    p.add_argument("field")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=_cmd_table)

    return ap


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    if args.config:
        defaults = {a.dest: a.default
                    for a in ap._subparsers._group_actions[0].choices[args.command]._actions}
        _merge_config(args, defaults, _load_config(args.config))
    if args.threads:
        import numba
        numba.set_num_threads(max(1, args.threads))
    try:
        return args.func(args, argv)
    except TruncationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGED
    except UrnFieldError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
