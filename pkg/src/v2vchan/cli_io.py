"""Command-line front end and curve file formats.

Exit codes: 0 success, 2 usage error, 3 quantity not available under the
chosen model, 4 output could not be written.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Sequence

from . import engine
from .engine import CurveSeries, ExperimentSpec, Metric, SpecError, StateMode
from .link_state import LinkState, ModelKind, NotAvailable
from .path_loss import read_oxygen_csv
from .scenario import Density, Scenario, default_mean_speed

log = logging.getLogger("v2vchan")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NOT_AVAILABLE = 3
EXIT_IO = 4

SEED_ENV = "V2V_SEED"


@dataclass(frozen=True)
class RunConfig:
    spec: ExperimentSpec = field(default_factory=ExperimentSpec)
    out: str | None = None
    format: str = "csv"
    verbosity: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.format not in ("csv", "json"):
            raise SpecError(f"unknown output format {self.format!r}")
        if self.workers < 1:
            raise SpecError("workers must be >= 1")

    def to_dict(self) -> dict[str, Any]:
        return {
            "spec": self.spec.to_dict(),
            "out": self.out,
            "format": self.format,
            "verbosity": self.verbosity,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "RunConfig":
        unknown = set(data) - {"spec", "out", "format", "verbosity", "workers"}
        if unknown:
            raise SpecError(f"unknown config keys: {', '.join(sorted(unknown))}")
        data = dict(data)
        if "spec" in data:
            data["spec"] = ExperimentSpec.from_dict(data["spec"])
        return cls(**data)


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _type_mix(text: str) -> dict[str, float]:
    mix = {}
    for item in text.split(","):
        kind, _, frac = item.partition("=")
        mix[kind.strip().lower()] = float(frac)
    return mix


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="v2vchan",
        description="Monte Carlo V2V mmWave channel curves (link-state probability, path loss, PRR).",
    )
    p.add_argument("--config", type=Path, help="JSON run configuration; flags override it")
    p.add_argument("--metric", choices=[m.value for m in Metric])
    p.add_argument("--model", choices=[m.value for m in ModelKind])
    p.add_argument("--scenario", choices=[s.value for s in Scenario])
    p.add_argument("--density", choices=[d.value for d in Density])
    p.add_argument("--state", choices=[s.value for s in StateMode])
    p.add_argument("--fc", type=float, help="carrier frequency [GHz]")
    p.add_argument("--bw", type=float, help="bandwidth [Hz]")
    p.add_argument("--n", type=int, help="array elements per vehicle")
    p.add_argument("--tx-power", type=float, help="transmit power [dBm]")
    p.add_argument("--nf", type=float, help="noise figure [dB]")
    p.add_argument("--threshold", type=float, help="SNR reception threshold [dB]")
    p.add_argument("--speed", type=float, help="mean vehicle speed [m/s]")
    p.add_argument("--type-mix", type=_type_mix, help="e.g. type2=0.5,type3=0.5")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--dmin", type=float)
    p.add_argument("--dmax", type=float)
    grid = p.add_mutually_exclusive_group()
    grid.add_argument("--points", type=int, help="grid points (prob, pathloss)")
    grid.add_argument("--bin", type=float, help="bin width [m] (prr)")
    p.add_argument("--zero-variance", action="store_true", default=None)
    p.add_argument("--oxygen-table", type=Path, help="freq_ghz,omega_db_per_km CSV")
    p.add_argument("--out", help="output file (default: stdout)")
    p.add_argument("--format", choices=["csv", "json"])
    p.add_argument("--workers", type=int)
    p.add_argument("-v", "--verbose", action="count", default=None)
    return p


def _load_config(parser, path: Path) -> RunConfig:
    try:
        with open(path) as fh:
            return RunConfig.from_dict(json.load(fh))
    except (OSError, json.JSONDecodeError, TypeError, ValueError) as exc:
        parser.error(f"bad config file {path}: {exc}")


def parse_args(argv: Sequence[str] | None = None) -> RunConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    base = _load_config(parser, ns.config) if ns.config else RunConfig()
    spec = base.spec
    sd = spec.to_dict()

    for flag, key in (
        ("metric", "metric"),
        ("model", "model"),
        ("scenario", "scenario"),
        ("state", "state"),
        ("trials", "trials_per_point"),
        ("dmin", "d_min"),
        ("dmax", "d_max"),
        ("points", "n_points"),
        ("bin", "bin_width"),
        ("zero_variance", "zero_variance"),
    ):
        if getattr(ns, flag) is not None:
            sd[key] = getattr(ns, flag)

    # metric-dependent default for the state selector
    if ns.state is None and not ns.config:
        sd["state"] = "los" if sd["metric"] == "prob" else "overall"

    if ns.seed is not None:
        sd["seed"] = ns.seed
    elif not ns.config and os.environ.get(SEED_ENV):
        try:
            sd["seed"] = int(os.environ[SEED_ENV])
        except ValueError:
            parser.error(f"{SEED_ENV} must be an integer")

    for flag, key in (
        ("fc", "carrier"),
        ("bw", "bandwidth"),
        ("n", "array_elements"),
        ("tx_power", "tx_power"),
        ("nf", "noise_figure"),
        ("threshold", "snr_threshold"),
    ):
        if getattr(ns, flag) is not None:
            sd["radio"][key] = getattr(ns, flag)

    if ns.scenario is not None and ns.speed is None and not ns.config:
        sd["traffic"]["mean_speed"] = default_mean_speed(ns.scenario)
    if ns.speed is not None:
        sd["traffic"]["mean_speed"] = ns.speed
    if ns.density is not None:
        sd["traffic"]["density"] = ns.density
    if ns.type_mix is not None:
        sd["traffic"]["type_mix"] = ns.type_mix

    if ns.oxygen_table is not None:
        try:
            table = read_oxygen_csv(ns.oxygen_table)
        except (OSError, ValueError, KeyError) as exc:
            parser.error(f"bad oxygen table {ns.oxygen_table}: {exc}")
        sd["oxygen_table"] = [list(r) for r in zip(table.freq_ghz, table.omega_db_per_km)]

    if sd["metric"] == "prob" and sd["state"] == "overall":
        parser.error("--metric prob needs --state los, nlosv or nlos")

    try:
        spec = ExperimentSpec.from_dict(sd)
        return replace(
            base,
            spec=spec,
            out=ns.out if ns.out is not None else base.out,
            format=ns.format or base.format,
            verbosity=ns.verbose if ns.verbose is not None else base.verbosity,
            workers=ns.workers if ns.workers is not None else base.workers,
        )
    except (TypeError, ValueError) as exc:
        parser.error(str(exc))


def _g(x: float) -> str:
    return f"{x:.6g}"


def render_csv(series: CurveSeries) -> str:
    lines = [f"# spec: {canonical_json(series.metadata)}", "d_m,value,stderr,n_trials"]
    for p in series.points:
        lines.append(f"{_g(p.d)},{_g(p.value)},{_g(p.stderr)},{p.n_trials}")
    return "\n".join(lines) + "\n"


def render_json(series: CurveSeries) -> str:
    return json.dumps(series.to_dict(), sort_keys=True, indent=2) + "\n"


def write_curve(series: CurveSeries, path, fmt: str = "csv") -> None:
    """Write ``series`` atomically (temp file in the target directory + rename)."""
    text = render_csv(series) if fmt == "csv" else render_json(series)
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_curve_json(path) -> CurveSeries:
    with open(path) as fh:
        return CurveSeries.from_dict(json.load(fh))


def _select(config: RunConfig):
    result = engine.run_experiment(config.spec, workers=config.workers)
    if isinstance(result, dict):
        state = LinkState.from_label(config.spec.state.value)
        if state not in result:
            raise NotAvailable(
                f"{config.spec.model.value} model has no closed-form {state.label} probability"
            )
        return result[state]
    return result


def run_main(config: RunConfig) -> int:
    logging.basicConfig(
        level=logging.WARNING - 10 * min(config.verbosity, 2),
        format="%(levelname)s %(message)s",
    )
    try:
        series = _select(config)
    except NotAvailable as exc:
        log.error("not available: %s", exc)
        return EXIT_NOT_AVAILABLE
    except SpecError as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    log.info("%s: %d points", series.metric, len(series.points))
    if config.out is None:
        sys.stdout.write(render_csv(series) if config.format == "csv" else render_json(series))
        return EXIT_OK
    try:
        write_curve(series, config.out, config.format)
    except OSError as exc:
        log.error("cannot write %s: %s", config.out, exc)
        return EXIT_IO
    return EXIT_OK


def main(argv: Sequence[str] | None = None) -> int:
    try:
        config = parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    return run_main(config)


if __name__ == "__main__":
    sys.exit(main())
