"""
signlab command line.

    python run_signlab.py coeffs --form delta --limit 1000
    python run_signlab.py signchanges --form delta --power 2 --x0 16 --windows 8 --svg
    python run_signlab.py verify --suite gmf

Options can also come from a key=value file given with --config; flags on
the command line win over the file, the file wins over built-in defaults.
"""

import argparse
import json
import logging
import math
import os
import sys
from pathlib import Path
from typing import List, Literal, Optional, Sequence

# Add project root to sys.path to allow running as script
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from dotenv import dotenv_values
from pydantic import BaseModel, PositiveFloat, PositiveInt, ValidationError, field_validator
from rich.console import Console
from rich.table import Table

from src import config
from src.errors import SignLabError, UsageError
from src.tools.eigenforms import CATALOG, generate_coefficients
from src.tools.gmf import exponents_from_coefficients, roundtrip_check
from src.tools.reports import (
    coefficients_frame, exponents_frame, output_name, primesums_frame, signchanges_frame,
    write_fit, write_signchange_svg, write_table,
)
from src.tools.signlab import (
    DELTAS, SignSeries, TheoremConstants, cprime_series, fit_exponent, lambda_power_series,
    prime_sums, window_length, window_sign_change_scan,
)
from src.verify import VerifyLimits, Verifier

logger = logging.getLogger(__name__)
console = Console(stderr=True)

COMMANDS = ("coeffs", "gmf", "signchanges", "primesums", "fit", "verify")
CONFIG_KEYS = ("form", "limit", "power", "x0", "windows", "window_mode", "window_param",
               "out", "format", "cache_dir", "threads", "svg", "suite", "series")


class RunConfig(BaseModel):
    command: Literal["coeffs", "gmf", "signchanges", "primesums", "fit", "verify"]
    form: str = "delta"
    limit: Optional[PositiveInt] = None
    power: Literal[1, 2, 3, 4] = 2
    x0: PositiveFloat = 16.0
    windows: PositiveInt = 8
    window_mode: Literal["dyadic", "power", "subexp"] = "dyadic"
    window_param: Optional[float] = None
    series: Literal["lambda", "cprime"] = "lambda"
    out: str = "."
    format: Literal["csv", "json"] = "csv"
    cache_dir: str = config.CACHE_DIR
    threads: PositiveInt = max(1, config.DEFAULT_THREADS)
    svg: bool = False
    suite: Optional[List[str]] = None

    @field_validator("form")
    @classmethod
    def _known_form(cls, v: str) -> str:
        if v not in CATALOG:
            raise ValueError(f"unknown form '{v}', choose one of: {', '.join(CATALOG)}")
        return v

    @field_validator("suite", mode="before")
    @classmethod
    def _split_suites(cls, v):
        if isinstance(v, str):
            return [s.strip() for s in v.split(",") if s.strip()]
        return v

    def require_limit(self) -> int:
        if self.limit is None:
            raise UsageError(f"--limit is required for '{self.command}'")
        return self.limit

    def out_path(self, name: str) -> Path:
        return Path(self.out) / name


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="signlab",
        description="Exact eigenform coefficients and sign-change experiments",
    )
    parser.add_argument("command", choices=COMMANDS)
    opt = argparse.SUPPRESS
    parser.add_argument("--config", default=None, help="key=value file with defaults for the flags below")
    parser.add_argument("--form", default=opt, help=f"one of: {', '.join(CATALOG)}")
    parser.add_argument("--limit", type=int, default=opt)
    parser.add_argument("--power", type=int, default=opt, help="j in lambda(n^j)")
    parser.add_argument("--x0", type=float, default=opt)
    parser.add_argument("--windows", type=int, default=opt)
    parser.add_argument("--window-mode", dest="window_mode", default=opt,
                        help="dyadic (h = x), power (h = x^a) or subexp (h = x / exp(a sqrt(log x)))")
    parser.add_argument("--window-param", dest="window_param", type=float, default=opt,
                        help="a for the power and subexp window modes")
    parser.add_argument("--series", default=opt, help="lambda or cprime")
    parser.add_argument("--out", default=opt)
    parser.add_argument("--format", default=opt, help="csv or json")
    parser.add_argument("--cache-dir", dest="cache_dir", default=opt)
    parser.add_argument("--threads", type=int, default=opt)
    parser.add_argument("--svg", action="store_true", default=opt)
    parser.add_argument("--suite", default=opt, help="comma separated verify suites")
    parser.add_argument("--log-level", dest="log_level", default=config.LOG_LEVEL)
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    values = {}
    if args.config:
        if not os.path.exists(args.config):
            raise UsageError(f"Config file not found: {args.config}")
        file_values = dotenv_values(args.config)
        unknown = sorted(set(file_values) - set(CONFIG_KEYS))
        if unknown:
            raise UsageError(f"Unknown keys in {args.config}: {', '.join(unknown)}")
        values.update({k: v for k, v in file_values.items() if v is not None and v != ""})
    values.update({k: v for k, v in vars(args).items() if k in CONFIG_KEYS})
    values["command"] = args.command
    try:
        return RunConfig(**values)
    except ValidationError as e:
        problems = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
        raise UsageError(f"Invalid configuration: {problems}") from None


def cmd_coeffs(cfg: RunConfig) -> int:
    table = generate_coefficients(cfg.form, cfg.require_limit(), cache_dir=cfg.cache_dir)
    path = write_table(coefficients_frame(table), cfg.out_path(
        output_name("coeffs", cfg.form, table.limit, cfg.format)), cfg.format)
    console.print(f"[green]{cfg.form}[/green]: a(1..{table.limit:,}) -> {path}")
    return 0


def cmd_gmf(cfg: RunConfig) -> int:
    source = generate_coefficients(cfg.form, cfg.require_limit(), cache_dir=cfg.cache_dir)
    exp = exponents_from_coefficients(source)
    check = roundtrip_check(exp, source)
    path = write_table(exponents_frame(exp), cfg.out_path(
        output_name("gmf", cfg.form, exp.limit, cfg.format)), cfg.format)
    if not check.ok:
        console.print(f"[red]{cfg.form}[/red]: round trip fails first at n = {check.first_failure}")
        return 1
    console.print(f"[green]{cfg.form}[/green]: m(1..{exp.limit:,}) -> {path}")
    return 0


def _window_param(cfg: RunConfig) -> Optional[float]:
    if cfg.window_param is not None or cfg.window_mode != "power":
        return cfg.window_param
    if cfg.series == "lambda" and cfg.power in DELTAS:
        return TheoremConstants.for_power(cfg.power).window_exponent
    raise UsageError("--window-param is required for window mode 'power' without cataloged constants")


def _scan_extent(cfg: RunConfig, a: Optional[float]) -> int:
    last_x = cfg.x0 * 2 ** (cfg.windows - 1)
    needed = math.floor(last_x + window_length(last_x, cfg.window_mode, a))
    return max(needed, cfg.limit or 0, 2)


def _build_series(cfg: RunConfig, extent: int) -> SignSeries:
    table = generate_coefficients(cfg.form, extent, cache_dir=cfg.cache_dir)
    if cfg.series == "cprime":
        return cprime_series(exponents_from_coefficients(table), extent)
    return lambda_power_series(table, cfg.power, extent)


def _reference_exponent(cfg: RunConfig) -> Optional[float]:
    if cfg.series == "lambda" and cfg.power in DELTAS:
        return float(DELTAS[cfg.power])
    return None


def _scan(cfg: RunConfig):
    a = _window_param(cfg)
    extent = _scan_extent(cfg, a)
    series = _build_series(cfg, extent)
    reports = window_sign_change_scan(series, cfg.x0, cfg.windows, cfg.window_mode, a, cfg.threads)
    return series, extent, reports


def _power_tag(cfg: RunConfig) -> Optional[int]:
    return cfg.power if cfg.series == "lambda" else None


def cmd_signchanges(cfg: RunConfig) -> int:
    series, extent, reports = _scan(cfg)
    name = output_name("signchanges", cfg.form, extent, cfg.format, _power_tag(cfg))
    path = write_table(signchanges_frame(reports), cfg.out_path(name), cfg.format)
    if cfg.svg:
        svg_name = output_name("signchanges", cfg.form, extent, "svg", _power_tag(cfg))
        write_signchange_svg(reports, cfg.out_path(svg_name), series.label, _reference_exponent(cfg))
    empty = sum(r.count == 0 for r in reports)
    console.print(f"[green]{series.label}[/green]: {len(reports)} windows, {empty} without a sign change -> {path}")
    return 0


def cmd_fit(cfg: RunConfig) -> int:
    series, extent, reports = _scan(cfg)
    fit = fit_exponent([(r.x, r.count) for r in reports])
    name = output_name("fit", cfg.form, extent, "json", _power_tag(cfg))
    path = write_fit(fit, series.label, _reference_exponent(cfg), cfg.out_path(name))
    console.print(f"[green]{series.label}[/green]: slope {fit.slope:.4f} (residual {fit.residual:.3g}) -> {path}")
    return 0


def decade_grid(limit: int) -> List[int]:
    grid, x = [], 10
    while x <= limit:
        grid.append(x)
        x *= 10
    if not grid or grid[-1] != limit:
        grid.append(limit)
    return grid


def cmd_primesums(cfg: RunConfig) -> int:
    table = generate_coefficients(cfg.form, cfg.require_limit(), cache_dir=cfg.cache_dir)
    reports = [prime_sums(table, x) for x in decade_grid(table.limit)]
    path = write_table(primesums_frame(reports), cfg.out_path(
        output_name("primesums", cfg.form, table.limit, cfg.format)), cfg.format)
    last = reports[-1]
    console.print(f"[green]{cfg.form}[/green]: S2/x = {last.S2_over_x:.4f} at x = {table.limit:,} -> {path}")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    limits = VerifyLimits()
    if cfg.limit is not None:
        limits = VerifyLimits(level_one=cfg.limit, weight_two=cfg.limit, gmf=min(cfg.limit, limits.gmf))
    report = Verifier(cfg.cache_dir, limits).run(cfg.suite)

    path = cfg.out_path("verify.json")
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(report.to_dict(), f, indent=2)
        f.write("\n")

    table = Table(title="signlab verify")
    table.add_column("check")
    table.add_column("result")
    table.add_column("detail")
    for suite, checks in report.suites.items():
        for c in checks:
            table.add_row(f"{suite}.{c.name}", "[green]pass[/green]" if c.passed else "[red]FAIL[/red]", c.detail)
    console.print(table)
    console.print(f"{report.pass_count} passed, {report.fail_count} failed -> {path}")
    return 0 if report.ok else 1


HANDLERS = {
    "coeffs": cmd_coeffs,
    "gmf": cmd_gmf,
    "signchanges": cmd_signchanges,
    "primesums": cmd_primesums,
    "fit": cmd_fit,
    "verify": cmd_verify,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=getattr(logging, str(args.log_level).upper(), logging.INFO),
        format='%(asctime)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )
    try:
        cfg = load_config(args)
        return HANDLERS[cfg.command](cfg)
    except SignLabError as e:
        console.print(f"[red]error[/red]: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
