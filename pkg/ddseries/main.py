import io
import sys

from contextlib import contextmanager
from pathlib import Path
from typing import (
    Any,
    Callable,
    Iterator,
    Optional,
    TextIO,
)

import click

from pydantic import ValidationError

from . import logger
from .errors import (
    AccuracyError,
    DomainError,
    InconclusiveError,
)
from .parameters import RunParameters


@click.group()
@click.version_option(
    package_name="ddseries",
    message="ddseries: %(version)s",
)
@click.option("-v", "--verbose", count=True, help="Increase verbosity")
def cli(verbose: int):
    match verbose:
        case 0:
            logger.setup(logger.LogLevel.WARNING)
        case 1:
            logger.setup(logger.LogLevel.INFO)
        case n if n > 1:
            logger.setup(logger.LogLevel.DEBUG)


class ComplexType(click.ParamType):
    name = "complex"

    def convert(self, value: Any, param: Optional[click.Parameter], ctx: Optional[click.Context]) -> complex:
        if isinstance(value, complex):
            return value
        try:
            return complex(str(value).replace(" ", "").replace("i", "j"))
        except ValueError:
            self.fail(f"{value!r} is not a complex number", param, ctx)


COMPLEX = ComplexType()


def common_options(func: Callable) -> Callable:
    """Options honored by every subcommand"""
    options = (
        click.option("--tolerance", type=float, help="Target absolute tolerance"),
        click.option("--cutoff", type=int, help="Truncation of the d and m sums"),
        click.option("--threads", type=click.IntRange(min=1), help="Worker threads"),
        click.option("--seed", type=int, help="Seed of the random draws"),
        click.option("--out", type=click.Path(dir_okay=False, path_type=Path), help="Output data file"),
        click.option(
            "--config",
            type=click.Path(exists=True, dir_okay=False, path_type=Path),
            help="JSON or TOML configuration file",
        ),
        click.option("--cache", type=click.Path(dir_okay=False, path_type=Path), help="L-value cache file"),
    )
    for option in reversed(options):
        func = option(func)
    return func


def load_run(
    tolerance: Optional[float],
    cutoff: Optional[int],
    threads: Optional[int],
    seed: Optional[int],
    out: Optional[Path],
    config: Optional[Path],
    cache: Optional[Path],
) -> RunParameters:
    """Flags > configuration file > defaults"""
    from .parameters import load_parameters

    overrides: dict[str, Any] = {}
    if tolerance is not None:
        overrides["tolerance"] = tolerance
    if cutoff is not None:
        overrides["d_cutoff"] = overrides["m_cutoff"] = cutoff
    if threads is not None:
        overrides["threads"] = threads
    if seed is not None:
        overrides["seed"] = seed
    if out is not None:
        overrides["out"] = out
    if cache is not None:
        overrides["cache"] = cache
    return load_parameters(config=config, overrides=overrides)


@contextmanager
def output(params: RunParameters, subcommand: str, options: dict[str, Any]) -> Iterator[TextIO]:
    """Data stream of the run: the --out file plus its manifest, or stdout"""
    from .manifest import RunManifest, write_manifest

    watch = logger.Stopwatch()
    if params.out is None:
        buffer = io.StringIO()
        yield buffer
        click.echo(buffer.getvalue(), nl=False)
        return

    with params.out.open("w", newline="", encoding="utf-8") as fh:
        yield fh
    watch.stop()
    manifest = RunManifest(
        subcommand=subcommand,
        parameters=options,
        policy=params.policy,
        seed=params.seed,
        outputs=[str(params.out)],
        wall_time=round(watch.elapsed, 3),
    )
    write_manifest(manifest, params.out)
    click.echo(click.style(f"Output written to {params.out}", fg="green"), err=True)


def open_cache(params: RunParameters):
    from .cache import LValueCache

    return LValueCache(params.cache) if params.cache else None


def dump_json(data: dict[str, Any]) -> str:
    import json

    return json.dumps(data, indent=4)


def _character(conductor: int):
    from .arith import QuadChar

    return QuadChar.chi_tilde(conductor) if conductor > 1 else QuadChar.trivial()


#
# L-values
#
@cli.command("lvalue")
@click.option("--d0", type=int, required=True, help="Odd squarefree twist")
@click.option("--conductor", "chi_conductor", type=int, default=1, help="Odd conductor of χ")
@click.option("--psi", default="1", help="Mod 8 character: 1, -1, 2 or -2")
@click.option("--method", type=click.Choice(["afe", "hurwitz"]), default="afe")
@common_options
def lvalue(d0: int, chi_conductor: int, psi: str, method: str, **kwargs):
    """Central value L(1/2, χ_{d0}χψ)"""
    from .arith import Psi
    from .cache import LValueCache

    params = load_run(**kwargs)
    cache = open_cache(params) or LValueCache()
    record = cache.central_value(d0, _character(chi_conductor), Psi.parse(psi), params.policy, method)
    options = {"d0": d0, "conductor": chi_conductor, "psi": psi, "method": method}
    with output(params, "lvalue", options) as fh:
        v = record.value
        fh.write(dump_json({"re": v.real, "im": v.imag, "abs_error": v.abs_error}) + "\n")


#
# Double Dirichlet series
#
@cli.command("zvalue")
@click.option("--s", "s", type=COMPLEX, required=True)
@click.option("--w", "w", type=COMPLEX, required=True)
@click.option("--M", "M", type=int, default=1, help="Odd prime or 1")
@click.option("--N", "N", type=int, default=1, help="Odd prime or 1")
@click.option("--chi", "chi_conductor", type=int, default=1, help="Odd conductor of χ")
@click.option("--chi-prime", "chi_prime_conductor", type=int, default=1, help="Odd conductor of χ'")
@click.option(
    "--form",
    type=click.Choice(["direct", "swapped", "funceq"]),
    default="direct",
    help="Summation form",
)
@common_options
def zvalue(
    s: complex,
    w: complex,
    M: int,
    N: int,
    chi_conductor: int,
    chi_prime_conductor: int,
    form: str,
    **kwargs,
):
    """Z(s, w; χ, χ') in one of its summation forms"""
    from .zseries import ZPoint, funceq1_rhs, z_direct, z_swapped

    params = load_run(**kwargs)
    p = ZPoint(s, w, _character(chi_conductor), _character(chi_prime_conductor), M, N)
    match form:
        case "direct":
            value = z_direct(p, params.policy, cache=open_cache(params))
        case "swapped":
            value = z_swapped(p, params.policy)
        case _:
            value = funceq1_rhs(p, policy=params.policy)

    options = {
        "s": str(s),
        "w": str(w),
        "M": M,
        "N": N,
        "chi": chi_conductor,
        "chi_prime": chi_prime_conductor,
        "form": form,
    }
    with output(params, "zvalue", options) as fh:
        fh.write(dump_json({"re": value.real, "im": value.imag, "abs_error": value.abs_error}) + "\n")


#
# Verification
#
@cli.command("verify")
@click.option(
    "--suite",
    type=click.Choice(["reflection", "q-variant", "sum-switch", "funceq", "kfg", "reciprocity", "afe"]),
    required=True,
)
@click.option("--trials", type=click.IntRange(min=1), default=200, help="Random trials")
@common_options
def verify(suite: str, trials: int, **kwargs):
    """Run a verification suite"""
    from .verify import run_suite

    params = load_run(**kwargs)
    result = run_suite(suite, params.seed, trials, params.policy)  # type: ignore[arg-type]
    click.echo(result.summary())
    if params.out is not None:
        with output(params, "verify", {"suite": suite, "trials": trials}) as fh:
            data = {
                "suite": result.suite,
                "passed": result.passed,
                "total": result.total,
                "max_residual": result.max_residual,
                "winner": result.winner,
            }
            fh.write(dump_json(data) + "\n")
    if not result.ok:
        raise AccuracyError(f"Suite {suite} failed", result.max_residual)


#
# Non-vanishing
#
@cli.command("nonvanish")
@click.option("--nmax", type=click.IntRange(min=3), default=500, help="Largest prime N")
@click.option("--dmax", type=click.IntRange(min=1), default=1000, help="Largest d scanned per N")
@common_options
def nonvanish(nmax: int, dmax: int, **kwargs):
    """First d with L(1/2, χ_{dN}) certified nonzero, for primes N <= nmax"""
    from .moment import nonvanish_sweep, write_nonvanish_csv

    params = load_run(**kwargs)
    records = nonvanish_sweep(nmax, dmax, params.policy, open_cache(params))
    worst = max(r.D_of_N / r.N**0.6 for r in records)
    logger.notice("max D(N)/N^0.6 = %.4g over %d primes", worst, len(records))
    with output(params, "nonvanish", {"nmax": nmax, "dmax": dmax}) as fh:
        write_nonvanish_csv(records, fh)


#
# Moment
#
@cli.command("moment")
@click.option("--N", "N", type=int, default=3, help="Odd prime modulus")
@click.option("--grid", default="64,128,256,512,1024", help="Comma separated values of X")
@common_options
def moment(N: int, grid: str, **kwargs):
    """Fit S(X; χ) against the residue main term"""
    from .moment import fit_moment

    try:
        X_grid = [float(x) for x in grid.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"Invalid grid {grid!r}", param_hint="--grid")

    params = load_run(**kwargs)
    report = fit_moment(N, X_grid, params.policy, open_cache(params))
    dev_a, dev_b = report.relative_deviation
    click.echo(f"moment N={N}: a_N deviation {dev_a:.2%}, b_N deviation {dev_b:.2%}", err=True)
    with output(params, "moment", {"N": N, "grid": grid}) as fh:
        fh.write(report.model_dump_json(indent=4) + "\n")

    if not report.within_tolerance:
        raise AccuracyError(f"Moment fit for N = {N} is off the residue main term", max(dev_a, dev_b))


#
# Sieve
#
@cli.command("sieve")
@click.option(
    "--kind",
    type=click.Choice(["large-sieve", "bilinear", "growth", "fourth-moment"]),
    default="large-sieve",
)
@click.option("--P", "P", type=click.IntRange(min=1), default=500)
@click.option("--Q", "Q", type=click.IntRange(min=1), default=500)
@click.option("--draws", type=click.IntRange(min=1), default=100, help="Random coefficient draws")
@click.option("--kmax", type=click.IntRange(min=1), default=10, help="Largest k of P = Q = 2^k")
@click.option("--X", "X", type=click.IntRange(min=1), default=200, help="Range of the fourth moment")
@common_options
def sieve(kind: str, P: int, Q: int, draws: int, kmax: int, X: int, **kwargs):
    """Large sieve ratios, growth tables and fourth moments"""
    import numpy as np

    from . import sieve as ls

    params = load_run(**kwargs)
    options = {"kind": kind, "P": P, "Q": Q, "draws": draws, "kmax": kmax, "X": X}
    rng = np.random.default_rng(params.seed)
    threads = params.policy.threads

    match kind:
        case "growth":
            rows = ls.growth_table(range(1, kmax + 1), threads=threads)
            with output(params, "sieve", options) as fh:
                ls.write_growth_csv(rows, fh)
            return
        case "large-sieve":
            ratios = [
                ls.large_sieve_ratio(P, Q, ls.random_coefficients(Q, rng), threads=threads)
                for _ in range(draws)
            ]
        case "bilinear":
            ratios = [
                ls.bilinear_ratio(
                    P,
                    Q,
                    ls.random_coefficients(P, rng, squarefree=False, decay=0.5),
                    ls.random_coefficients(Q, rng, squarefree=False, decay=0.5),
                )
                for _ in range(draws)
            ]
        case _:
            from .arith import QuadChar

            ratios = [ls.fourth_moment_ratio(X, QuadChar.trivial(), 0.5, params.policy, open_cache(params))]

    data = {"kind": kind, "P": P, "Q": Q, "draws": len(ratios), "max_ratio": max(ratios)}
    with output(params, "sieve", options) as fh:
        fh.write(dump_json(data) + "\n")


def main():
    try:
        cli()
    except (DomainError, ValidationError) as err:
        click.echo(click.style(f"ERROR: {err}", fg="red"), err=True)
        sys.exit(2)
    except (AccuracyError, InconclusiveError) as err:
        click.echo(click.style(f"ERROR: {err}", fg="red"), err=True)
        sys.exit(3)
