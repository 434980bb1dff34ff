"""Command-line driver.

    ballistic simulate --p 0.25 --n 1000 --seed 7 --out fates.jsonl
    ballistic density --p 0.5 --n 100000 --replicas 8 --times 1,10,100
    ballistic sweep --grid 0.15,0.25,0.35 --n 100000 --replicas 50
    ballistic explore --p 0.4 --n 10000
    ballistic oracle-check --n 12 --instances 1000
    ballistic render --p 0.25 --n 500 --out picture.svg

Settings may also come from a JSON document (``--config``); flags override it.
``--dump-config`` writes the effective settings back out in the same form.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import explore as ex
from . import stats
from .engine import ExactTie, check_outcome, resolve_fast, resolve_oracle
from .model import Domain, ParticleSystem, Seed, SpeedLaw, sample_system, three_speed, uniform_interval
from .svg import render_svg

log = logging.getLogger("ballistic")

COMMANDS = ("simulate", "density", "sweep", "explore", "oracle-check", "render")
FORMATS = {
    "simulate": ("jsonl", "svg"),
    "density": ("csv",),
    "sweep": ("csv",),
    "explore": ("csv",),
    "oracle-check": ("csv",),
    "render": ("svg",),
}
DEFAULT_P = 0.25
DEFAULT_GRID = (0.15, 0.20, 0.25, 0.30, 0.35)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str = "simulate"
    p: float | None = None
    law_file: str | None = None
    domain: str = "full"
    n: int = 1000
    seed: int = 0
    replicas: int = 16
    times: list[float] | None = None
    horizon: float | None = None
    grid: list[float] | None = None
    parallelism: int = 1
    instances: int = 1000
    max_steps: int | None = None
    out: str | None = None
    format: str | None = None

    def validate(self) -> "RunConfig":
        if self.command not in COMMANDS:
            raise UsageError(f"command: unknown command {self.command!r}")
        if self.p is not None and self.law_file is not None:
            raise UsageError("p: conflicts with law_file; give one law source")
        if self.p is not None and not 0 <= self.p <= 1:
            raise UsageError(f"p: must lie in [0, 1], got {self.p}")
        if self.domain not in ("full", "half"):
            raise UsageError(f"domain: must be 'full' or 'half', got {self.domain!r}")
        for key in ("n", "replicas", "parallelism", "instances"):
            if getattr(self, key) < 1:
                raise UsageError(f"{key}: must be a positive integer")
        if self.seed < 0:
            raise UsageError("seed: must be nonnegative")
        if self.format is not None and self.format not in FORMATS[self.command]:
            raise UsageError(f"format: {self.command} writes {'/'.join(FORMATS[self.command])}, "
                             f"not {self.format!r}")
        if self.times is not None and (not self.times or
                                       any(b <= a for a, b in zip(self.times, self.times[1:]))):
            raise UsageError("times: must be a nonempty increasing list")
        if self.grid is not None and (not self.grid or
                                      any(b <= a for a, b in zip(self.grid, self.grid[1:]))):
            raise UsageError("grid: must be a nonempty increasing list")
        if self.command == "oracle-check" and self.n < 2:
            raise UsageError("n: oracle-check needs n >= 2")
        return self

    @property
    def output_format(self) -> str:
        return self.format or FORMATS[self.command][0]

    @property
    def output_path(self) -> Path:
        if self.out is not None:
            return Path(self.out)
        return Path(f"{self.command}.{self.output_format}")

    def law(self) -> SpeedLaw:
        if self.law_file is not None:
            try:
                doc = json.loads(Path(self.law_file).read_text())
                return SpeedLaw.from_dict(doc)
            except (OSError, ValueError, TypeError) as err:
                raise UsageError(f"law_file: {err}") from err
        return three_speed(DEFAULT_P if self.p is None else self.p)

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), indent=2, sort_keys=True) + "\n"


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    d = RunConfig()
    parser = _Parser(prog="ballistic", description=__doc__.split("\n\n")[0],
                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("command", nargs="?", choices=COMMANDS,
                        help="what to run (may come from --config)")
    parser.add_argument("--config", help="JSON settings document; flags override it")
    parser.add_argument("--dump-config", metavar="PATH",
                        help="write the effective settings as JSON and continue")
    parser.add_argument("--p", type=float,
                        help=f"mass at speed 0 of the symmetric three-speed law (default {DEFAULT_P})")
    parser.add_argument("--law-file", help="JSON law: {\"atoms\": [[v, w], ...]} or "
                                           "{\"uniform\": [lo, hi]}")
    parser.add_argument("--domain", choices=("full", "half"),
                        help=f"full-line Palm or half-line sample (default {d.domain})")
    parser.add_argument("--n", type=int, help=f"particles per side (default {d.n})")
    parser.add_argument("--seed", type=int, help=f"master seed (default {d.seed})")
    parser.add_argument("--replicas", type=int, help=f"Monte Carlo replicas (default {d.replicas})")
    parser.add_argument("--times", type=_float_list,
                        help="comma-separated density times (default: geometric, 20 per decade)")
    parser.add_argument("--horizon", type=float,
                        help="survival or drawing horizon (default: origin-safe horizon)")
    parser.add_argument("--grid", type=_float_list,
                        help="comma-separated p values for sweep (default 0.15,...,0.35)")
    parser.add_argument("--parallelism", type=int, help=f"worker processes (default {d.parallelism})")
    parser.add_argument("--instances", type=int,
                        help=f"random instances for oracle-check (default {d.instances})")
    parser.add_argument("--max-steps", type=int, help="cap on exploration steps (default none)")
    parser.add_argument("--out", help="output path (default <command>.<format>)")
    parser.add_argument("--format", choices=("csv", "jsonl", "svg"),
                        help="output format (default depends on the command)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def parse_config(argv: list[str] | None = None) -> RunConfig:
    """Merge the optional JSON document with command-line flags."""
    args = build_parser().parse_args(argv)
    values: dict = {}
    if args.config:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as err:
            raise UsageError(f"config: cannot read {args.config}: {err}") from err
        if not isinstance(doc, dict):
            raise UsageError("config: document must be a JSON object")
        unknown = sorted(set(doc) - set(_FIELDS))
        if unknown:
            raise UsageError(f"{unknown[0]}: unknown configuration key")
        values.update(doc)
    flags = {k: v for k, v in vars(args).items()
             if k in _FIELDS and v is not None}
    if "p" in flags or "law_file" in flags:
        # the law is one setting: a flag replaces whatever the file chose
        values.pop("p", None)
        values.pop("law_file", None)
    values.update(flags)
    if args.command is None and "command" not in values:
        raise UsageError("command: no command given")
    try:
        config = RunConfig(**values)
    except TypeError as err:
        raise UsageError(f"config: {err}") from err
    for name, value in values.items():
        if name in ("n", "seed", "replicas", "parallelism", "instances", "max_steps"):
            if value is not None and not isinstance(value, int):
                raise UsageError(f"{name}: must be an integer")
    config.validate()
    if args.dump_config:
        Path(args.dump_config).write_text(config.to_json())
    if args.verbose:
        logging.basicConfig(level=logging.INFO, format="%(message)s")
    return config


# -- writers -----------------------------------------------------------------

def _num(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _csv(header: list[str], rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_num(c) for c in row])
    return buf.getvalue()


def fates_jsonl(sys: ParticleSystem, outcome) -> str:
    lines = []
    for k in range(len(sys)):
        partner = int(outcome.partner[k])
        alive = partner < 0
        record = {
            "index": k,
            "x": float(sys.positions[k]),
            "v": float(sys.speeds[k]),
            "fate": "alive" if alive else "annihilated",
            "partner": None if alive else partner,
            "t": None if alive else float(outcome.death_time[k]),
            "pos": None if alive else float(outcome.death_position[k]),
        }
        lines.append(json.dumps(record))
    return "".join(line + "\n" for line in lines)


def density_csv(curve: stats.DensityCurve) -> str:
    return _csv(["t", "class", "estimate", "stderr", "replicas"], curve.rows())


def sweep_csv(result: stats.SweepResult) -> str:
    return _csv(["p", "survival", "ci_lo", "ci_hi", "exponent", "exp_stderr"], result.rows())


def trace_csv(trace: ex.ExplorationTrace) -> str:
    rows = zip(range(len(trace)), trace.locations, trace.eps, trace.eps_tilde,
               trace.partial_sums)
    return _csv(["n", "location", "eps", "eps_tilde", "partial_sum"], rows)


# -- commands ----------------------------------------------------------------

def _simulate(cfg: RunConfig) -> tuple[str, str]:
    law = cfg.law()
    system = sample_system(law, cfg.domain, cfg.n, Seed(cfg.seed))
    outcome = resolve_fast(system)
    survivors = int(np.count_nonzero(outcome.alive))
    origin = "alive" if outcome.partner[system.origin] < 0 else (
        f"annihilated at t={outcome.death_time[system.origin]:.6g}")
    summary = (f"{len(system)} particles, {len(outcome.order)} collisions, "
               f"{survivors} survivors; origin particle {origin}")
    if cfg.output_format == "svg":
        return render_svg(system, outcome, cfg.horizon), summary
    return fates_jsonl(system, outcome), summary


def _density(cfg: RunConfig) -> tuple[str, str]:
    law = cfg.law()
    times = cfg.times
    if times is None:
        t_hi = max(1.0, stats.default_horizon(cfg.n, max(law.v_max, 1e-12)) / 2)
        times = stats.geometric_times(1.0, t_hi)
    curve = stats.estimate_density(law, cfg.n, times, cfg.replicas, Seed(cfg.seed),
                                   parallelism=cfg.parallelism)
    last = ", ".join(f"c[{c:g}]={est[-1]:.5g}" for c, (est, _, _) in curve.per_class.items())
    return density_csv(curve), f"{curve.replicas} replicas; at t={curve.times[-1]:.6g}: {last}"


def _sweep(cfg: RunConfig) -> tuple[str, str]:
    grid = cfg.grid or list(DEFAULT_GRID)
    result = stats.sweep(grid, cfg.n, cfg.horizon, cfg.replicas, Seed(cfg.seed),
                         cfg.parallelism)
    lines = [f"p={pt.p:g}: survival {pt.survival.p_hat:.4g} "
             f"[{pt.survival.ci_lo:.4g}, {pt.survival.ci_hi:.4g}], "
             f"zero-class exponent {pt.exponent:.3f}" for pt in result.per_point]
    lines.append(f"smallest p with survival interval above 0: {result.crossover()}")
    return sweep_csv(result), "\n".join(lines)


def _explore(cfg: RunConfig) -> tuple[str, str]:
    law = cfg.law()
    system = sample_system(law, Domain.HALF, cfg.n, Seed(cfg.seed))
    trace = ex.explore(system, cfg.max_steps)
    final = trace.partial_sums[-1] if len(trace) else 0
    summary = (f"{len(trace)} steps up to location {trace.locations[-1]}; "
               f"final balance {final}; min partial sum "
               f"{min(trace.partial_sums, default=0)}"
               + ("; truncated: a +1 particle outlived the sample" if trace.incomplete else ""))
    return trace_csv(trace), summary


def _oracle_check(cfg: RunConfig) -> tuple[str, str, int]:
    laws = [three_speed(p / 10) for p in range(1, 10)] + [uniform_interval(-1, 1)]
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed)))
    rows = []
    mismatches = 0
    for k in range(cfg.instances):
        law = laws[k % len(laws)]
        size = int(rng.integers(1, cfg.n // 2 + 1)) if cfg.domain == "full" else \
            int(rng.integers(2, cfg.n + 1))
        system = sample_system(law, cfg.domain, size, Seed(cfg.seed, k + 1))
        try:
            fast = resolve_fast(system)
            slow = resolve_oracle(system)
            ok = (fast.same_matching(slow)
                  and np.allclose(fast.death_time, slow.death_time, rtol=1e-9, atol=0)
                  and not check_outcome(system, fast))
        except ExactTie:
            ok = True  # both resolvers refuse the same measure-zero input
        mismatches += not ok
        rows.append((k, len(system), int(ok)))
    summary = f"{cfg.instances} instances, {mismatches} mismatches"
    return _csv(["instance", "particles", "match"], rows), summary, int(mismatches > 0)


def run(cfg: RunConfig) -> int:
    started = time.perf_counter()
    status = 0
    if cfg.command in ("simulate", "render"):
        body, summary = _simulate(cfg)
    elif cfg.command == "density":
        body, summary = _density(cfg)
    elif cfg.command == "sweep":
        body, summary = _sweep(cfg)
    elif cfg.command == "explore":
        body, summary = _explore(cfg)
    else:
        body, summary, status = _oracle_check(cfg)
    path = cfg.output_path
    path.write_text(body)
    print(summary)
    print(f"wrote {path} ({time.perf_counter() - started:.2f}s)")
    return status


def main(argv: list[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except UsageError as err:
        print(f"ballistic: error: {err}", file=sys.stderr)
        return 2
    try:
        return run(cfg)
    except UsageError as err:
        print(f"ballistic: error: {err}", file=sys.stderr)
        return 2
    except (ExactTie, ValueError, LookupError, OSError) as err:
        print(f"ballistic: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
