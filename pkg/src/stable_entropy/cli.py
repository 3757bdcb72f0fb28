"""Command-line front end: run experiments from config files, emit CSV/JSON.

Exit codes: 0 success, 2 configuration problem, 3 numerical failure; in
both failure cases the error is serialized to stderr as one JSON object.
All numbers are printed with 9 significant digits so identical configs and
seeds reproduce output files byte for byte.
"""

import json
import sys

import click
import numpy as np

from . import stable_law
from .convergence_lab import ExperimentConfig, rows_to_csv, run_convergence, zn_density
from .decomposition import decomposition_checks, modified_density, split
from .entropy_criteria import finiteness_diagnosis
from .errors import ConfigError, StableEntropyError
from .grid_density import log_interpolator, relative_entropy
from .mc_oracle import mc_relative_entropy, sample_zn
from .stable_law import StableLogDensity, StableParams

EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def _fail(exc: StableEntropyError):
    payload = {"error": type(exc).__name__, "message": str(exc)}
    click.echo(json.dumps(payload), err=True)
    sys.exit(EXIT_CONFIG if isinstance(exc, ConfigError) else EXIT_NUMERICAL)


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _params_options(fn):
    for deco in (
        click.option("--a", type=float, default=0.0, show_default=True),
        click.option("--c", type=float, required=True),
        click.option("--beta", type=float, default=0.0, show_default=True),
        click.option("--alpha", type=float, required=True),
    ):
        fn = deco(fn)
    return fn


@click.group()
def main():
    """Numerical lab for entropic convergence of i.i.d. sums to stable laws."""


@main.command("pdf")
@_params_options
@click.option("--x-min", type=float, required=True)
@click.option("--x-max", type=float, required=True)
@click.option("--points", type=int, required=True)
@click.option("--tol", type=float, default=1e-10, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def pdf_cmd(alpha, beta, c, a, x_min, x_max, points, tol, out):
    """Stable density values on a uniform grid, as CSV (x,value)."""
    try:
        params = StableParams(alpha, beta, c, a)
        if points < 1:
            raise ConfigError("--points must be >= 1")
        xs = np.array([x_min]) if points == 1 else np.linspace(x_min, x_max, points)
        vals = np.atleast_1d(stable_law.pdf(params, xs, tol=tol))
        lines = ["x,value"]
        lines += [f"{_fmt(x)},{_fmt(v)}" for x, v in zip(xs, vals)]
        _emit("\n".join(lines) + "\n", out)
    except StableEntropyError as exc:
        _fail(exc)


@main.command("sample")
@_params_options
@click.option("--count", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(), default=None)
def sample_cmd(alpha, beta, c, a, count, seed, out):
    """Deterministic stable variates, one per line."""
    try:
        params = StableParams(alpha, beta, c, a)
        draws = stable_law.sample(params, seed=seed, count=count)
        _emit("\n".join(_fmt(v) for v in draws) + "\n", out)
    except StableEntropyError as exc:
        _fail(exc)


@main.command("decompose")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--n", type=int, required=True)
@click.option("--s", type=float, default=1.0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
def decompose_cmd(config_path, n, s, out):
    """Split the configured source and report the closeness checks at n."""
    try:
        cfg = ExperimentConfig.from_json(config_path)
        model = cfg.source_model()
        source = model.make_grid(cfg.x_min, cfg.x_max, cfg.n_points)
        sp = split(source, cfg.split_b)
        a_n, b_n = model.normalizer.for_n(n)
        pair = modified_density(sp, n, a_n, b_n)
        report = decomposition_checks(sp, pair, s=s, t0=cfg.t0)
        payload = {
            "split": {"b": sp.b, "M": sp.bound},
            "eps_n": pair.small_mass,
            "checks": report.to_json(),
        }
        _emit(json.dumps(payload, indent=2) + "\n", out)
    except StableEntropyError as exc:
        _fail(exc)


@main.command("diagnose")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None)
def diagnose_cmd(config_path, out):
    """Finiteness diagnostics of the configured source against its target."""
    try:
        cfg = ExperimentConfig.from_json(config_path)
        model = cfg.source_model()
        source = model.make_grid(cfg.x_min, cfg.x_max, cfg.n_points)
        z1 = zn_density(source, 1, model.normalizer)
        report = finiteness_diagnosis(z1, cfg.target)
        _emit(json.dumps(report.to_json(), indent=2) + "\n", out)
    except StableEntropyError as exc:
        _fail(exc)


@main.command("converge")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None)
def converge_cmd(config_path, out):
    """Run the convergence experiment; one CSV row per n."""
    try:
        cfg = ExperimentConfig.from_json(config_path)
        rows = run_convergence(cfg)
        if out:
            rows_to_csv(rows, out)
        else:
            rows_to_csv(rows, sys.stdout)
    except StableEntropyError as exc:
        _fail(exc)


@main.command("crosscheck")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--samples", type=int, default=100000, show_default=True)
@click.option("--seed", type=int, default=None, help="overrides the config seed")
@click.option("--out", type=click.Path(), default=None)
def crosscheck_cmd(config_path, samples, seed, out):
    """Grid KL values against Monte-Carlo estimates, per n, as JSON."""
    try:
        cfg = ExperimentConfig.from_json(config_path)
        model = cfg.source_model()
        source = model.make_grid(cfg.x_min, cfg.x_max, cfg.n_points)
        ref = StableLogDensity(cfg.target)
        use_seed = cfg.seed if seed is None else seed
        entries = []
        for n in cfg.n_list:
            zn = zn_density(source, n, model.normalizer)
            grid_d = relative_entropy(zn, ref)
            draws = sample_zn(model.sampler, n, model.normalizer, samples, use_seed + n)
            est = mc_relative_entropy(draws, log_interpolator(zn), ref)
            entries.append(
                {
                    "n": n,
                    "grid_D": grid_d,
                    "mc_value": est.value,
                    "mc_std_error": est.std_error,
                    "within_3se": bool(abs(est.value - grid_d) <= 3.0 * est.std_error),
                }
            )
        payload = {"samples": samples, "seed": use_seed, "rows": entries}
        _emit(json.dumps(payload, indent=2) + "\n", out)
    except StableEntropyError as exc:
        _fail(exc)


if __name__ == "__main__":
    main()
