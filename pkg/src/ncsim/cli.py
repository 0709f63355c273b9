"""Batch experiment runner writing one CSV row per configuration.

Subcommands: ``simulate``, ``sweep-n``, ``sweep-power``, ``compare``, ``bound``.
Settings come from defaults, then ``--config`` (JSON), then flags; the seed
falls back to ``$NCSIM_SEED`` when neither the flags nor the config give one.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from .bounds import BoundError, expected_stopping_bound
from .engine import PROTOCOLS, SimConfig, normalize_protocol, run_experiment
from .radio import (
    ChannelParams,
    TopologyError,
    build_reception_matrix,
    classify_connectivity,
    dbm_to_watts,
    make_topology,
)

log = logging.getLogger("ncsim")

COLUMNS = [
    "topology", "N", "d", "power_w", "noise_w", "z_db", "eta", "q", "protocol", "trials",
    "mean_slots", "std_slots", "ci95_lo", "ci95_hi", "bound_slots", "bound_degenerate",
    "connectivity_class", "seed",
]
COMPARE_COLUMNS = COLUMNS + ["ratio"]

DEFAULT_POWER_W = 20e-6


class SpecError(ValueError):
    pass


@dataclass
class ExperimentSpec:
    topology: str = "line"
    d: float = 30.0
    sizes: list = field(default_factory=lambda: [30])
    positions: str | None = None
    power_w: list = field(default_factory=lambda: [DEFAULT_POWER_W])
    noise: float = 4e-14
    z_db: float = 45.0
    eta: float = 2.0
    q: int = 8
    r: int = 4
    trials: int = 200
    seed: int | None = None
    protocols: list = field(default_factory=lambda: list(PROTOCOLS))
    max_slots: int | None = None
    out: str | None = None
    trace: bool = False
    verbose: bool = False

    def validate(self) -> "ExperimentSpec":
        if self.topology not in ("line", "grid", "file"):
            raise SpecError(f"unknown topology {self.topology!r}")
        if self.topology == "file":
            if not self.positions:
                raise SpecError("file topology needs a positions path")
            if not Path(self.positions).is_file():
                raise SpecError(f"positions file {self.positions} is not readable")
        elif not self.sizes:
            raise SpecError("sizes list is empty")
        if not self.power_w:
            raise SpecError("power list is empty")
        if not self.protocols:
            raise SpecError("no protocol selected")
        try:
            self.sizes = [_parse_size(s, self.topology) for s in self.sizes] if self.topology != "file" else [None]
            self.protocols = [normalize_protocol(p) for p in self.protocols]
            self.power_w = [float(p) for p in self.power_w]
            ChannelParams(self.power_w[0], self.noise, self.z_db, self.eta)
            SimConfig(q=self.q, r=self.r, trials=self.trials, seed=self.seed or 0, max_slots=self.max_slots)
        except (ValueError, TypeError) as exc:
            raise SpecError(str(exc)) from exc
        if any(p <= 0 for p in self.power_w):
            raise SpecError("transmit powers must be positive")
        if self.d <= 0:
            raise SpecError(f"spacing must be positive, got {self.d}")
        if self.seed is None:
            self.seed = 0
        if not 0 <= self.seed < 2**64:
            raise SpecError(f"seed must be an unsigned 64-bit integer, got {self.seed}")
        return self

    def channel(self, power_w: float) -> ChannelParams:
        return ChannelParams(power_w, self.noise, self.z_db, self.eta)

    def sim_config(self, protocol: str) -> SimConfig:
        return SimConfig(
            q=self.q, r=self.r, protocol=protocol, trials=self.trials, seed=self.seed,
            max_slots=self.max_slots, record_trace=self.trace,
        )

    def positions_for(self, size):
        if self.topology == "file":
            return make_topology("file", self.positions)
        return make_topology(self.topology, size, self.d)


def _parse_size(value, topology: str):
    if topology == "grid":
        if isinstance(value, str):
            parts = value.lower().split("x")
        elif isinstance(value, (list, tuple)):
            parts = list(value)
        else:
            parts = [value, value]
        if len(parts) != 2:
            raise SpecError(f"grid size {value!r} must look like MxN")
        m, n = int(parts[0]), int(parts[1])
        if m < 1 or n < 1:
            raise SpecError(f"grid size {value!r} must be positive")
        return (m, n)
    n = int(value)
    if n < 1:
        raise SpecError(f"network size must be >= 1, got {n}")
    return n


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


@dataclass
class RunReport:
    rows: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    traces: list = field(default_factory=list)


def _bound_cells(matrix) -> tuple[float | None, bool]:
    try:
        res = expected_stopping_bound(matrix)
    except BoundError as exc:
        log.warning("bound unavailable: %s", exc)
        return None, True
    return (None if res.degenerate else res.value), res.degenerate


def _configurations(spec: ExperimentSpec, vary: str):
    """Yield (size, power) pairs in spec order."""
    if vary == "power":
        for p in spec.power_w:
            yield spec.sizes[0], p
    else:
        for s in spec.sizes:
            yield s, spec.power_w[0]


def _simulate_rows(spec: ExperimentSpec, vary: str, report: RunReport) -> None:
    for size, power in _configurations(spec, vary):
        positions = spec.positions_for(size)
        matrix = build_reception_matrix(positions, spec.channel(power))
        n = matrix.n
        bound, degenerate = _bound_cells(matrix)
        conn = classify_connectivity(matrix).value
        for protocol in spec.protocols:
            cfg = spec.sim_config(protocol)
            log.info("running %s N=%d P=%.3g W (%d trials)", protocol, n, power, cfg.trials)
            summary = run_experiment(matrix, cfg)
            lo, hi = summary.confidence_95
            row = {
                "topology": spec.topology, "N": n, "d": float(spec.d), "power_w": float(power),
                "noise_w": float(spec.noise), "z_db": float(spec.z_db), "eta": float(spec.eta),
                "q": spec.q, "protocol": protocol, "trials": summary.trials,
                "mean_slots": summary.mean, "std_slots": summary.std_dev,
                "ci95_lo": lo, "ci95_hi": hi, "bound_slots": bound,
                "bound_degenerate": degenerate, "connectivity_class": conn, "seed": spec.seed,
            }
            report.rows.append(row)
            if summary.incomplete_count:
                report.failures.append(
                    f"{protocol} N={n} power_w={power!r}: {summary.incomplete_count}/{summary.trials} "
                    f"trials hit the slot cap"
                )
            if spec.trace and summary.results:
                for i, res in enumerate(summary.results):
                    report.traces.append({
                        "N": n, "power_w": power, "protocol": protocol, "trial": i,
                        "stopping_time": res.stopping_time, "completed": res.completed,
                        "dimension_trace": res.dimension_trace.tolist(),
                    })


def cmd_simulate(spec: ExperimentSpec) -> RunReport:
    report = RunReport()
    spec = _single(spec)
    _simulate_rows(spec, "size", report)
    return report


def _single(spec: ExperimentSpec) -> ExperimentSpec:
    return replace(spec, sizes=spec.sizes[:1], power_w=spec.power_w[:1])


def cmd_sweep_n(spec: ExperimentSpec) -> RunReport:
    report = RunReport()
    _simulate_rows(spec, "size", report)
    return report


def cmd_sweep_power(spec: ExperimentSpec) -> RunReport:
    if len(spec.sizes) != 1:
        raise SpecError("sweep-power needs exactly one network size")
    report = RunReport()
    _simulate_rows(spec, "power", report)
    return report


def cmd_compare(spec: ExperimentSpec) -> RunReport:
    if sorted(set(spec.protocols)) != sorted(PROTOCOLS):
        raise SpecError("compare needs both protocols enabled")
    report = RunReport()
    _simulate_rows(spec, "size", report)
    by_key: dict = {}
    for row in report.rows:
        by_key.setdefault((row["N"], row["power_w"]), {})[row["protocol"]] = row
    for pair in by_key.values():
        nc, base = pair["nc"]["mean_slots"], pair["random_selection"]["mean_slots"]
        ratio = base / nc if nc and not (math.isnan(nc) or math.isnan(base)) else math.nan
        for row in pair.values():
            row["ratio"] = ratio
    return report


def cmd_bound(spec: ExperimentSpec) -> RunReport:
    report = RunReport()
    for size, power in _configurations(spec, "power" if len(spec.power_w) > 1 else "size"):
        positions = spec.positions_for(size)
        matrix = build_reception_matrix(positions, spec.channel(power))
        result = expected_stopping_bound(matrix)  # BoundError propagates to an error exit
        if spec.verbose:
            for i, term in enumerate(result.per_i_terms, start=1):
                print(f"N={matrix.n} i={i} p={term.exact}", file=sys.stderr)
        report.rows.append({
            "topology": spec.topology, "N": matrix.n, "d": float(spec.d), "power_w": float(power),
            "noise_w": float(spec.noise), "z_db": float(spec.z_db), "eta": float(spec.eta),
            "q": spec.q, "protocol": "", "trials": 0, "mean_slots": None, "std_slots": None,
            "ci95_lo": None, "ci95_hi": None,
            "bound_slots": None if result.degenerate else result.value,
            "bound_degenerate": result.degenerate,
            "connectivity_class": classify_connectivity(matrix).value, "seed": spec.seed,
        })
    return report


COMMANDS = {
    "simulate": cmd_simulate,
    "sweep-n": cmd_sweep_n,
    "sweep-power": cmd_sweep_power,
    "compare": cmd_compare,
    "bound": cmd_bound,
}


def write_csv(rows, fh, columns=COLUMNS) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c)) for c in columns])


def parse_csv(text: str) -> list[dict]:
    """Parse rows written by :func:`write_csv` back into typed values."""
    ints = {"N", "q", "trials", "seed"}
    floats = {"d", "power_w", "noise_w", "z_db", "eta", "mean_slots", "std_slots",
              "ci95_lo", "ci95_hi", "bound_slots", "ratio"}
    out = []
    for raw in csv.DictReader(io.StringIO(text)):
        row = {}
        for k, v in raw.items():
            if k in ints:
                row[k] = int(v)
            elif k in floats:
                row[k] = float(v) if v != "" else None
            elif k == "bound_degenerate":
                row[k] = v == "true"
            else:
                row[k] = v
        out.append(row)
    return out


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ncsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment spec; flags override its fields")
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--out", help="CSV destination (default: stdout)")
        p.add_argument("--topology", choices=["line", "grid", "file"])
        p.add_argument("--positions", help="node_id,x,y CSV for --topology file")
        p.add_argument("--sizes", help="comma list of N (line) or MxN (grid)")
        p.add_argument("--d", type=float, help="node spacing in meters")
        p.add_argument("--power-dbm", help="comma list of transmit powers in dBm")
        p.add_argument("--power-w", help="comma list of transmit powers in watts")
        p.add_argument("--noise", type=float, help="noise power in watts")
        p.add_argument("--z-db", type=float, help="capture SNR threshold in dB")
        p.add_argument("--eta", type=float, help="path-loss exponent")
        p.add_argument("--q", type=int, help="field width in bits")
        p.add_argument("--r", type=int, help="payload symbols per packet")
        p.add_argument("--protocol", choices=["nc", "baseline", "both"])
        p.add_argument("--max-slots", type=int)
        p.add_argument("--trace", action="store_true", default=None,
                       help="write dimension traces to <out>.traces.jsonl")
        p.add_argument("-v", "--verbose", action="store_true", default=None)
    return parser


def spec_from_args(args: argparse.Namespace, environ=os.environ) -> ExperimentSpec:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise SpecError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(data, dict):
            raise SpecError("config must be a JSON object")
        if "power_dbm" in data:
            dbm = data.pop("power_dbm")
            data["power_w"] = [dbm_to_watts(float(v)) for v in (dbm if isinstance(dbm, list) else [dbm])]
        for key in ("sizes", "power_w", "protocols"):
            if key in data and not isinstance(data[key], list):
                data[key] = [data[key]]
        known = {f.name for f in fields(ExperimentSpec)}
        unknown = set(data) - known
        if unknown:
            raise SpecError(f"unknown config keys: {sorted(unknown)}")

    simple = {"seed": "seed", "trials": "trials", "out": "out", "topology": "topology",
              "positions": "positions", "d": "d", "noise": "noise", "z_db": "z_db", "eta": "eta",
              "q": "q", "r": "r", "max_slots": "max_slots", "trace": "trace", "verbose": "verbose"}
    for attr, key in simple.items():
        value = getattr(args, attr)
        if value is not None:
            data[key] = value
    if args.sizes:
        data["sizes"] = _csv_list(args.sizes)
    if args.power_dbm and args.power_w:
        raise SpecError("give transmit power in dBm or watts, not both")
    if args.power_dbm:
        data["power_w"] = [dbm_to_watts(float(v)) for v in _csv_list(args.power_dbm)]
    if args.power_w:
        data["power_w"] = [float(v) for v in _csv_list(args.power_w)]
    if args.protocol:
        data["protocols"] = list(PROTOCOLS) if args.protocol == "both" else [args.protocol]
    if data.get("seed") is None and environ.get("NCSIM_SEED"):
        try:
            data["seed"] = int(environ["NCSIM_SEED"])
        except ValueError as exc:
            raise SpecError(f"NCSIM_SEED must be an integer, got {environ['NCSIM_SEED']!r}") from exc
    return ExperimentSpec(**data).validate()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    try:
        spec = spec_from_args(args)
        report = COMMANDS[args.command](spec)
    except (SpecError, TopologyError, BoundError, ValueError) as exc:
        print(f"ncsim {args.command}: error: {exc}", file=sys.stderr)
        return 2

    columns = COMPARE_COLUMNS if args.command == "compare" else COLUMNS
    if spec.out:
        with open(spec.out, "w", newline="") as fh:
            write_csv(report.rows, fh, columns)
    else:
        write_csv(report.rows, sys.stdout, columns)
    if report.traces:
        sidecar = Path(f"{spec.out}.traces.jsonl" if spec.out else "ncsim.traces.jsonl")
        with sidecar.open("w") as fh:
            for rec in report.traces:
                fh.write(json.dumps(rec) + "\n")
    for failure in report.failures:
        print(f"incomplete: {failure}", file=sys.stderr)
    return 1 if report.failures else 0


if __name__ == "__main__":
    sys.exit(main())
