"""Command-line front end: identity suites, simulation, MC verification.

Usage:
    qbm --suite identities [--only wdw,bdb] [--out DIR] [--format json|csv]
    qbm --suite simulate --q 0.5 --t 1.0 --paths 4 --seed 7 [--wide]
    qbm --suite verify --paths 100000 --seed 2024
    qbm --suite all

Settings come from flags, then a key=value config file (--config), then the
QBM_SEED environment variable for the seed, then defaults.  Every run writes
manifest.json (config echo, seed, build identifier) into the output
directory; reruns with the same settings and build produce byte-identical
files.  Exit codes: 0 success, 1 verification failure, 2 configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__
from .measures import qgauss_density, support_halfwidth
from .process import GeometricGrid, simulate_batch, write_batch_csv
from .qcore import QContext
from .verify import (
    MC_CHECKS,
    kurtosis_ratio,
    oracle_EZ2,
    oracle_EZ4,
    reports_to_csv,
    run_convergence_suite,
    run_identity_suite,
    run_mc_suite,
    run_quadrature_suite,
)

__all__ = ["RunConfig", "ConfigError", "main", "cmd_identities", "cmd_simulate", "cmd_verify"]

DEFAULT_SEED = 2024
PLOT_QS = (0.2, 0.5, 0.8)

IDENTITY_NAMES = {
    "recurrence", "byparts", "antiderivative", "product-rule", "lemma-nabla",
    "lemma-A", "harmonicity", "wdw", "bdb", "x2-formula", "onestep-byparts",
    "def-vs-byparts", "ito-telescoping", "kurtosis-r0", "kurtosis-varies",
}
QUADRATURE_NAMES = {
    "normalization", "variance", "fourth-moment", "martingale", "cond-moments",
    "orthogonality", "chapman", "nabla-numeric", "delta-numeric",
}
MC_NAMES = set(MC_CHECKS) | {"isometry"}
CONVERGENCE_NAMES = {"ito-convergence", "sde-residual"}
VERIFY_NAMES = QUADRATURE_NAMES | MC_NAMES | CONVERGENCE_NAMES


class ConfigError(ValueError):
    """Invalid configuration; maps to exit code 2."""


@dataclass
class RunConfig:
    """Parsed settings for one CLI run; echoed into the manifest."""

    suite: str = "all"
    q: float = 0.5
    t: float = 1.0
    depth: int | None = None
    paths: int | None = None
    seed: int = DEFAULT_SEED
    out: str = "qbm_out"
    format: str = "json"
    only: str | None = None
    wide: bool = False
    z_threshold: float = 4.0

    def validate(self) -> None:
        if self.suite not in ("identities", "simulate", "verify", "all"):
            raise ConfigError(f"unknown suite {self.suite!r}")
        if not (0.0 < self.q < 1.0):
            raise ConfigError(f"q must lie in (0, 1), got {self.q}")
        if not self.t > 0.0:
            raise ConfigError(f"horizon t must be positive, got {self.t}")
        if self.depth is not None and self.depth < 1:
            raise ConfigError(f"depth must be at least 1, got {self.depth}")
        if self.paths is not None and self.paths < 1:
            raise ConfigError(f"paths must be at least 1, got {self.paths}")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"format must be json or csv, got {self.format!r}")
        if not self.z_threshold > 0.0:
            raise ConfigError(f"z-threshold must be positive, got {self.z_threshold}")
        for name in self.only_set() or ():
            if name not in IDENTITY_NAMES | VERIFY_NAMES:
                known = ", ".join(sorted(IDENTITY_NAMES | VERIFY_NAMES))
                raise ConfigError(f"unknown check {name!r}; known checks: {known}")

    def only_set(self) -> set[str] | None:
        if self.only is None or self.only.strip() == "":
            return None
        return {part.strip() for part in self.only.split(",") if part.strip()}


_BOOL_TRUE = {"1", "true", "yes", "on"}
_BOOL_FALSE = {"0", "false", "no", "off"}


def _parse_value(key: str, text: str):
    text = text.strip()
    try:
        if key in ("depth", "paths"):
            return int(text)
        if key == "seed":
            return int(text)
        if key in ("q", "t", "z_threshold"):
            return float(text)
        if key == "wide":
            low = text.lower()
            if low in _BOOL_TRUE:
                return True
            if low in _BOOL_FALSE:
                return False
            raise ValueError(text)
        return text
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {text!r}") from exc


def _read_config_file(path: str) -> dict:
    out: dict = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
                key, _, value = line.partition("=")
                key = key.strip().replace("-", "_")
                if key not in {f.name for f in fields(RunConfig)}:
                    raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
                out[key] = _parse_value(key, value)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return out


def build_config(argv: list[str] | None = None) -> RunConfig:
    parser = argparse.ArgumentParser(
        prog="qbm",
        description="Exact identity suites, path simulation, and Monte Carlo "
        "verification for q-Brownian motion calculus.",
    )
    parser.add_argument("--suite", choices=["identities", "simulate", "verify", "all"])
    parser.add_argument("--q", type=float, help="deformation parameter in (0, 1)")
    parser.add_argument("--t", type=float, help="time horizon")
    parser.add_argument("--depth", type=int, help="grid depth K (default: resolve from q)")
    parser.add_argument("--paths", type=int, help="number of simulated paths")
    parser.add_argument("--seed", type=int, help="base seed (fallback: QBM_SEED, then 2024)")
    parser.add_argument("--out", help="output directory (default qbm_out)")
    parser.add_argument("--format", choices=["json", "csv"], help="report file format")
    parser.add_argument("--only", help="comma-separated check names to run")
    parser.add_argument("--config", help="key=value config file; flags take precedence")
    parser.add_argument("--wide", action="store_true", default=None,
                        help="simulate: one wide CSV instead of per-path files")
    parser.add_argument("--z-threshold", type=float, dest="z_threshold",
                        help="MC pass threshold on |z| (default 4)")
    args = parser.parse_args(argv)

    settings: dict = {}
    env_seed = os.environ.get("QBM_SEED")
    if env_seed is not None:
        try:
            settings["seed"] = int(env_seed)
        except ValueError as exc:
            raise ConfigError(f"QBM_SEED must be an integer, got {env_seed!r}") from exc
    if args.config is not None:
        settings.update(_read_config_file(args.config))
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            settings[f.name] = value
    config = RunConfig(**settings)
    config.validate()
    return config


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _write_manifest(config: RunConfig, out_dir: str) -> None:
    manifest = {
        "build": f"qbm {__version__}",
        "config": asdict(config),
        "seed": config.seed,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_reports(reports, config: RunConfig, out_dir: str, stem: str) -> None:
    if config.format == "csv":
        with open(os.path.join(out_dir, stem + ".csv"), "w", encoding="utf-8") as fh:
            fh.write(reports_to_csv(reports))
    else:
        payload = [r.to_json_dict() for r in reports]
        with open(os.path.join(out_dir, stem + ".json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _summarize(reports, label: str) -> int:
    failures = [r for r in reports if not r.passed]
    for r in failures:
        detail = f"residual={r.residual!r}" if r.estimate is None else f"z={r.estimate.z:+.3f}"
        print(f"FAIL {r.name} {json.dumps(r.params, sort_keys=True, default=str)} {detail}")
    print(f"{label}: {len(reports) - len(failures)}/{len(reports)} checks passed")
    return 1 if failures else 0


def _write_density_curves(config: RunConfig, out_dir: str) -> None:
    """Plot-ready marginal density curves across q at the configured horizon."""
    t = config.t
    with open(os.path.join(out_dir, "density_curves.csv"), "w", encoding="utf-8") as fh:
        fh.write("q,t,y,density\n")
        for q in PLOT_QS:
            ctx = QContext.numeric(q)
            w = support_halfwidth(t, q)
            ys = np.linspace(-w, w, 201)
            dens = qgauss_density(ys, t, ctx)
            for y, d in zip(ys, dens):
                fh.write(f"{q!r},{t!r},{float(y)!r},{float(d)!r}\n")


def _write_kurtosis_table(out_dir: str) -> None:
    """Plot-ready moment-ratio table: E(Z^4)/E(Z^2)^2 against the exponent r."""
    with open(os.path.join(out_dir, "kurtosis_vs_r.csv"), "w", encoding="utf-8") as fh:
        fh.write("q,r,ez2,ez4,ratio\n")
        for q in PLOT_QS:
            for i in range(25):
                r = i / 8.0
                fh.write(
                    f"{q!r},{r!r},{float(oracle_EZ2(r, q))!r},"
                    f"{float(oracle_EZ4(r, q))!r},{float(kurtosis_ratio(r, q))!r}\n"
                )


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_identities(config: RunConfig) -> int:
    only = config.only_set()
    if only is not None:
        only = only & IDENTITY_NAMES
        if not only:
            print("identities: no matching checks selected")
            print("identities: 0/0 checks passed")
            return 0
    reports = run_identity_suite(only=only)
    _write_reports(reports, config, config.out, "identities")
    return _summarize(reports, "identities")


def cmd_simulate(config: RunConfig) -> int:
    n_paths = config.paths if config.paths is not None else 4
    grid = GeometricGrid.build(q=config.q, t=config.t, depth=config.depth)
    batch = simulate_batch(grid, n_paths=n_paths, base_seed=config.seed)
    names = write_batch_csv(batch, os.path.join(config.out, "paths"), wide=config.wide)
    print(f"simulate: wrote {len(names)} file(s) for {n_paths} path(s), K={grid.K}")
    return 0


def cmd_verify(config: RunConfig) -> int:
    only = config.only_set()
    n_paths = config.paths if config.paths is not None else 10**5
    reports = []
    if only is None or only & QUADRATURE_NAMES:
        reports += run_quadrature_suite(only=None if only is None else only & QUADRATURE_NAMES)
    if only is None or only & MC_NAMES:
        reports += run_mc_suite(
            n_paths=n_paths,
            seed=config.seed,
            threshold=config.z_threshold,
            only=None if only is None else only & MC_NAMES,
        )
    if only is None or only & CONVERGENCE_NAMES:
        reports += run_convergence_suite(
            seed=config.seed,
            only=None if only is None else only & CONVERGENCE_NAMES,
        )
    _write_reports(reports, config, config.out, "verify")
    _write_density_curves(config, config.out)
    _write_kurtosis_table(config.out)
    return _summarize(reports, "verify")


def main(argv: list[str] | None = None) -> int:
    try:
        config = build_config(argv)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    os.makedirs(config.out, exist_ok=True)
    _write_manifest(config, config.out)
    status = 0
    try:
        if config.suite in ("identities", "all"):
            status = max(status, cmd_identities(config))
        if config.suite in ("simulate", "all"):
            status = max(status, cmd_simulate(config))
        if config.suite in ("verify", "all"):
            status = max(status, cmd_verify(config))
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return status


if __name__ == "__main__":
    raise SystemExit(main())
