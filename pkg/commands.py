"""Flask CLI commands: ``flask --app app <command>``.

Machine-readable output (JSON or CSV) goes to stdout or ``--out``; status
lines go to stderr.
"""
import csv
import json
import sys
from functools import wraps

import click
import numpy as np

import applications
from almost_concavity import KINDS, resolve_remainder, tightness_table
from bound_catalog import BOUNDS, OPERATOR_ARGS, evaluate_bound
from config import Config
from entropies import QUANTITIES, evaluate_quantity, to_base
from errors import PreconditionError, RelEntError
from harness import list_checks, run_campaign
from models import BasisPair, CampaignConfig, SAMPLERS, SolverConfig, SubsystemLayout
from payloads import load_json_file, load_operator_file
from sampling import mub_qubit_pair, rotated_basis_pair

LABELS = ("A", "B", "C")
FORMATS = click.Choice(["json", "csv"])
LOG_BASES = click.Choice(["e", "2"])


def cli_errors(f):
    """Turn library errors into click errors (exit status 1)."""

    @wraps(f)
    def decorated_function(*args, **kwargs):
        try:
            return f(*args, **kwargs)
        except RelEntError as err:
            raise click.ClickException(f"{type(err).__name__}: {err.message}")
    return decorated_function


def _parse_dims(ctx, param, value):
    if value is None:
        return None
    try:
        dims = tuple(int(d) for d in str(value).split(",") if d.strip())
    except ValueError:
        raise click.BadParameter("expected comma-separated integers, e.g. 2,3")
    if not dims or any(d < 1 for d in dims):
        raise click.BadParameter("dimensions must be positive")
    return dims


def _layout(dims, labels=LABELS):
    if dims is None:
        return None
    if len(dims) > len(labels):
        raise PreconditionError(f"At most {len(labels)} subsystems are supported, got {len(dims)}")
    return SubsystemLayout(tuple(labels[:len(dims)]), dims)


def seed_option(f):
    """--seed for every seeded command; unset means CAMPAIGN_SEED (or the solver config's seed)."""
    return click.option("--seed", type=int, default=None, show_default=str(Config.CAMPAIGN_SEED),
                        help="Master seed.")(f)


def trials_option(f):
    return click.option("--trials", type=click.IntRange(min=1), default=Config.CAMPAIGN_TRIALS,
                        show_default=True, help="Number of seeded trials.")(f)


def _seed(seed):
    return Config.CAMPAIGN_SEED if seed is None else seed


def _emit_json(payload, out=None):
    text = json.dumps(payload, indent=2, sort_keys=True)
    if out:
        with open(out, "w") as handle:
            handle.write(text + "\n")
        click.echo(f"✅ Wrote {out}", err=True)
    else:
        click.echo(text)


def _emit_csv(header, rows, out=None):
    handle = open(out, "w", newline="") if out else sys.stdout
    try:
        writer = csv.writer(handle)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if out:
            handle.close()
            click.echo(f"✅ Wrote {out}", err=True)


def _in_base(values, base, keys):
    return {k: (to_base(v, base) if k in keys and v is not None else v) for k, v in values.items()}


def register_commands(app):
    @app.cli.command("entropy")
    @click.argument("quantity", type=click.Choice(sorted(QUANTITIES)))
    @click.option("--rho", "rho_path", required=True, type=click.Path(exists=True), help="First state (JSON).")
    @click.option("--sigma", "sigma_path", type=click.Path(exists=True), help="Second state (JSON).")
    @click.option("--dims", callback=_parse_dims, help="Factor dimensions, e.g. 2,2.")
    @click.option("--log-base", default=Config.LOG_BASE, type=LOG_BASES, show_default=True)
    @click.option("--out", type=click.Path(), help="Write JSON here instead of stdout.")
    @cli_errors
    def entropy_command(quantity, rho_path, sigma_path, dims, log_base, out):
        """Compute an entropic quantity for operator files."""
        rho = load_operator_file(rho_path)
        sigma = load_operator_file(sigma_path) if sigma_path else None
        layout = _layout(dims)
        if layout is not None:
            layout.check(rho.dim)
        value = evaluate_quantity(quantity, rho, sigma, layout)
        payload = value.to_dict()
        if value.finite:
            payload["value"] = to_base(value.value, log_base)
        payload.update({"quantity": quantity, "log_base": log_base})
        _emit_json(payload, out)

    @app.cli.command("remainder")
    @click.argument("kind", type=click.Choice(KINDS))
    @click.option("--rho1", required=True, type=click.Path(exists=True))
    @click.option("--sigma1", required=True, type=click.Path(exists=True))
    @click.option("--rho2", required=True, type=click.Path(exists=True))
    @click.option("--sigma2", required=True, type=click.Path(exists=True))
    @click.option("--points", default=41, show_default=True, help="Uniform p-grid size.")
    @click.option("--general", is_flag=True, help="Skip the special-case shortcuts.")
    @click.option("--marginal-reference", callback=_parse_dims, metavar="DIMS",
                  help="Factor dims d_A,d_B,... when each sigma is (rho)_A tensored with the identity; checked.")
    @click.option("--format", "fmt", default="csv", type=FORMATS, show_default=True)
    @click.option("--out", type=click.Path())
    @cli_errors
    def remainder_command(kind, rho1, sigma1, rho2, sigma2, points, general, marginal_reference, fmt, out):
        """Emit the remainder f(p) over a p-grid."""
        layout = _layout(marginal_reference)
        # rho_A (x) 1 has trace d_B: second arguments stay unnormalized for the marginal form
        normalized = layout is None
        states = [
            load_operator_file(rho1),
            load_operator_file(sigma1, state=normalized),
            load_operator_file(rho2),
            load_operator_file(sigma2, state=normalized),
        ]
        remainder = resolve_remainder(kind, *states, marginal_reference=layout, general=general)
        p_grid = np.linspace(0.0, 1.0, points)
        if fmt == "json":
            _emit_json(remainder.to_dict(p_grid), out)
        else:
            _emit_csv(["p", "f"], [[float(p), float(remainder(p))] for p in p_grid], out)

    @app.cli.command("bound")
    @click.argument("name", type=click.Choice(sorted(BOUNDS)))
    @click.option("--arg", "pairs", multiple=True, metavar="KEY=VALUE",
                  help="Bound argument; operator arguments take a JSON file path.")
    @click.option("--out", type=click.Path())
    @cli_errors
    def bound_command(name, pairs, out):
        """Evaluate a catalog bound."""
        args = {}
        for pair in pairs:
            key, sep, value = pair.partition("=")
            if not sep:
                raise click.BadParameter(f"expected KEY=VALUE, got '{pair}'", param_hint="--arg")
            if key in OPERATOR_ARGS:
                args[key] = load_operator_file(value)
            else:
                try:
                    args[key] = float(value)
                except ValueError:
                    raise click.BadParameter(f"'{key}' must be a number", param_hint="--arg")
        _emit_json(evaluate_bound(name, **args), out)

    @app.cli.command("verify")
    @click.argument("check_name")
    @trials_option
    @seed_option
    @click.option("--dims", callback=_parse_dims, help="Dimensions; one per factor, or a cycle for one-factor checks.")
    @click.option("--tol", default=Config.REPORT_TOL, show_default=True)
    @click.option("--sampler", default="ginibre", type=click.Choice(SAMPLERS), show_default=True)
    @click.option("--rank", type=int, help="Rank for the ginibre_rank_k sampler.")
    @click.option("--floor", type=float, help="Eigenvalue floor m for the min_eig_floor sampler.")
    @click.option("--workers", default=Config.CAMPAIGN_WORKERS, show_default=True)
    @click.option("--out", default=Config.REPORT_DIR, show_default=True, type=click.Path())
    @click.option("--format", "fmt", default="json", type=FORMATS, show_default=True)
    @cli_errors
    def verify_command(check_name, trials, seed, dims, tol, sampler, rank, floor, workers, out, fmt):
        """Run a seeded verification campaign; exits 2 when a hard inequality fails."""
        cfg = CampaignConfig(
            check_name=check_name,
            dims=dims,
            trials=trials,
            seed=_seed(seed),
            tol=tol,
            sampler=sampler,
            rank=rank,
            floor=floor,
            workers=workers,
            out=out,
            fmt=fmt,
        )
        result = run_campaign(cfg)
        _emit_json(result.summary)
        status = "✅" if result.ok else "❌"
        click.echo(f"{status} {check_name}: {result.summary['passed']}/{result.summary['trials']} passed", err=True)
        if not result.ok:
            sys.exit(2)

    @app.cli.command("tightness")
    @click.option("--t", "t_values", multiple=True, type=float, help="Values of t (default 0.1, 0.25, 0.4).")
    @click.option("--points", default=41, show_default=True)
    @click.option("--tol", default=1e-9, show_default=True)
    @click.option("--log-base", default=Config.LOG_BASE, type=LOG_BASES, show_default=True)
    @click.option("--format", "fmt", default="json", type=FORMATS, show_default=True)
    @click.option("--out", type=click.Path())
    @cli_errors
    def tightness_command(t_values, points, tol, log_base, fmt, out):
        """Equality case of the Umegaki remainder over a (t, p) grid."""
        rows = tightness_table(t_values or (0.1, 0.25, 0.4), np.linspace(0.0, 1.0, points))
        rows = [_in_base(row, log_base, ("f", "deficit", "difference")) for row in rows]
        worst = max(row["difference"] for row in rows)
        if fmt == "csv":
            keys = ["t", "p", "f", "deficit", "difference"]
            _emit_csv(keys, [[row[k] for k in keys] for row in rows], out)
        else:
            _emit_json({"rows": rows, "max_difference": worst, "tol": tol, "log_base": log_base}, out)
        if worst > tol:
            click.echo(f"❌ max difference {worst:.3e} exceeds {tol:.1e}", err=True)
            sys.exit(2)

    @app.cli.command("uncertainty")
    @click.option("--rho", "rho_path", required=True, type=click.Path(exists=True), help="State on A (x) M (JSON).")
    @click.option("--dims", required=True, callback=_parse_dims, help="d_A,d_M")
    @click.option("--bases", "bases_path", type=click.Path(exists=True),
                  help="Basis pair (JSON); default: qubit MUBs, or a seeded rotated pair.")
    @seed_option
    @click.option("--log-base", default=Config.LOG_BASE, type=LOG_BASES, show_default=True)
    @click.option("--out", type=click.Path())
    @cli_errors
    def uncertainty_command(rho_path, dims, bases_path, seed, log_base, out):
        """Entropic uncertainty relation with quantum memory."""
        rho = load_operator_file(rho_path)
        layout = _layout(dims, ("A", "M"))
        layout.check(rho.dim)
        if bases_path:
            bases = BasisPair.from_dict(load_json_file(bases_path))
        elif dims[0] == 2:
            bases = mub_qubit_pair()
        else:
            bases = rotated_basis_pair(dims[0], _seed(seed))
        report = applications.check_uncertainty(rho, layout, bases)
        payload = report.to_dict()
        payload["details"] = _in_base(payload["details"], log_base, ("xi", "H_X_M", "H_Y_M", "H_A_M", "D_X", "D_Y"))
        payload["log_base"] = log_base
        _emit_json(payload, out)

    @app.cli.command("markov")
    @click.option("--rho", "rho_path", required=True, type=click.Path(exists=True), help="State on A (x) B (x) C (JSON).")
    @click.option("--dims", required=True, callback=_parse_dims, help="d_A,d_B,d_C")
    @click.option("--log-base", default=Config.LOG_BASE, type=LOG_BASES, show_default=True)
    @click.option("--out", type=click.Path())
    @cli_errors
    def markov_command(rho_path, dims, log_base, out):
        """Approximate Markov chain sandwich around I(A:C|B)."""
        rho = load_operator_file(rho_path)
        layout = _layout(dims)
        layout.check(rho.dim)
        lower, cmi, upper = applications.markov_sandwich(rho, layout)
        payload = _in_base({"lower": lower, "cmi": cmi, "upper": upper}, log_base, ("lower", "cmi", "upper"))
        payload["log_base"] = log_base
        _emit_json(payload, out)

    @app.cli.command("optimize")
    @click.option("--rho", "rho_path", required=True, type=click.Path(exists=True))
    @click.option("--dims", required=True, callback=_parse_dims, help="d_A,d_B")
    @click.option("--set", "set_name", default="conditional_reference", show_default=True,
                  type=click.Choice(["conditional_reference", "product"]))
    @click.option("--kind", default="umegaki", type=click.Choice(KINDS), show_default=True)
    @click.option("--config", "config_path", type=click.Path(exists=True), help="Solver settings (JSON).")
    @seed_option
    @click.option("--out", type=click.Path())
    @cli_errors
    def optimize_command(rho_path, dims, set_name, kind, config_path, seed, out):
        """Minimal divergence from a state to a parametrized state set."""
        settings = SolverConfig().to_dict()
        if config_path:
            settings.update(load_json_file(config_path))
        if seed is not None:
            settings["seed"] = seed
        solver = SolverConfig.from_dict(settings)

        rho = load_operator_file(rho_path)
        layout = _layout(dims, ("A", "B"))
        layout.check(rho.dim)
        if set_name == "product":
            C = applications.product_state_set(layout)
        else:
            C = applications.conditional_reference_set(layout)

        result = applications.optimized_divergence(rho, C, kind, solver)
        payload = result.to_dict()
        payload.update({
            "set": C.name,
            "kind": kind,
            "closed_form": C.closed_form(rho, kind) if C.closed_form else None,
            "solver": solver.to_dict(),
        })
        if not result.converged:
            click.echo("⚠️ Solver did not converge; reporting the best iterate", err=True)
        _emit_json(payload, out)

    @app.cli.command("list-checks")
    @click.option("--format", "fmt", default="json", type=FORMATS, show_default=True)
    def list_checks_command(fmt):
        """Enumerate the verification registry."""
        checks = list_checks()
        if fmt == "csv":
            _emit_csv(["name", "arity", "default_dims", "hard", "description"],
                      [[c["name"], c["arity"], " ".join(map(str, c["default_dims"])), c["hard"], c["description"]]
                       for c in checks])
        else:
            click.echo(json.dumps(checks, indent=2))

    return app