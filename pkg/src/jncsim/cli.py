"""Command-line front end: ``jncsim run|sweep|analytic|replay``.

Exit codes: 0 success, 2 bad arguments or input files, 3 slot budget exceeded
or divergent expectation.
"""

from __future__ import annotations

import argparse
import io
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .engine import (
    TABLE1_MATRIX,
    AggregateStats,
    Protocol,
    parse_matrix,
    load_matrix,
    replay_matrix,
    run_point,
)
from .errors import BudgetExceeded, ConfigError, DivergentExpectation, ParseError
from .protocols import dnc_expected_transmissions, overhead_bits
from .svg import line_chart
from .topology import NetworkConfig

CSV_HEADER = ("protocol,p,N,M,B,seed,trials,mean_retx,ci95,mean_tx_per_packet,"
              "slots_stage1,slots_stage2")
SWEEPABLE = ("p", "M", "N", "B")


def _num(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, int):
        return str(x)
    return f"{x:.12g}"


def csv_row(s: AggregateStats) -> str:
    c = s.config
    vals = [s.protocol.value, c.p, c.N, c.M, c.B, c.seed, s.trials, s.mean_retx, s.ci95,
            s.mean_tx_per_packet, s.mean_stage1, s.mean_stage2]
    return ",".join(_num(v) for v in vals)


def write_csv(stats: Sequence[AggregateStats], stream) -> None:
    stream.write(CSV_HEADER + "\n")
    for s in stats:
        stream.write(csv_row(s) + "\n")


@dataclass
class SweepSpec:
    param: str
    values: list
    fixed: dict
    protocols: list = field(default_factory=lambda: ["dnc", "jnc"])
    trials: int = 1000
    seed: int = 0
    series_m: Optional[list] = None  # extra series over M, as in the p sweep
    metric: str = "mean_retx"

    def configs(self) -> list[NetworkConfig]:
        if self.param not in SWEEPABLE:
            raise ConfigError(f"cannot sweep {self.param!r}; choose one of {SWEEPABLE}")
        if not self.values:
            raise ConfigError("sweep needs at least one value")
        if self.param in self.fixed:
            raise ConfigError(f"{self.param} is both swept and fixed")
        if self.series_m and self.param == "M":
            raise ConfigError("M cannot be swept and used as series at once")
        ms = self.series_m or [self.fixed.get("M")]
        out = []
        for v in self.values:
            for m in ms:
                kw = dict(self.fixed)
                if m is not None:
                    kw["M"] = m
                kw[self.param] = v
                missing = {"N", "M", "p", "B"} - kw.keys()
                if missing:
                    raise ConfigError(f"no value given for {sorted(missing)}")
                out.append(NetworkConfig(N=int(kw["N"]), M=int(kw["M"]), p=float(kw["p"]),
                                         B=int(kw["B"]), seed=self.seed))
        return out

    @classmethod
    def from_json(cls, text: str) -> "SweepSpec":
        data = json.loads(text)
        return cls(**data)


PRESETS = {
    "fig2": dict(param="p", values=[0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
                 fixed={"N": 5, "B": 20}, series_m=[2, 5]),
    "fig3": dict(param="M", values=list(range(1, 11)), fixed={"N": 10, "p": 0.1, "B": 20}),
    "fig4": dict(param="N", values=[2, 5, 10, 15, 20], fixed={"M": 2, "p": 0.1, "B": 20}),
    "fig5": dict(param="B", values=[10, 20, 40, 60, 80, 100],
                 fixed={"N": 5, "M": 2, "p": 0.1}, metric="mean_tx_per_packet"),
}


def run_sweep(spec: SweepSpec) -> list[AggregateStats]:
    protos = [Protocol.parse(p) for p in spec.protocols]
    out = []
    for cfg in spec.configs():
        for proto in protos:
            out.append(run_point(cfg, proto, spec.trials, spec.seed))
    return out


def sweep_svg(spec: SweepSpec, stats: Sequence[AggregateStats]) -> str:
    series: dict[str, list] = {}
    for s in stats:
        label = s.protocol.value.upper()
        if spec.series_m:
            label += f" M={s.config.M}"
        x = getattr(s.config, spec.param)
        y = getattr(s, spec.metric)
        err = s.ci95 if spec.metric == "mean_retx" else s.ci95 / (2 * s.config.B)
        series.setdefault(label, []).append((x, y, err))
    fixed = ", ".join(f"{k}={v}" for k, v in spec.fixed.items())
    ylabel = ("average retransmissions" if spec.metric == "mean_retx"
              else "transmissions per packet")
    return line_chart(series, title=f"{ylabel} vs {spec.param} ({fixed})",
                      xlabel=spec.param, ylabel=ylabel)


def _emit_csv(stats, out_path: Optional[str]):
    buf = io.StringIO()
    write_csv(stats, buf)
    if out_path:
        Path(out_path).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _say(args, msg: str):
    # keep stdout clean for CSV when no --out is given
    print(msg, file=sys.stdout if args.out else sys.stderr)


def _summary(s: AggregateStats) -> str:
    c = s.config
    return (f"{s.protocol.value:>3} N={c.N} M={c.M} p={c.p:.6g} B={c.B}: "
            f"retx {s.mean_retx:.6g} ± {s.ci95:.6g} (stage1 {s.mean_stage1:.6g}, "
            f"stage2 {s.mean_stage2:.6g}), tx/packet {s.mean_tx_per_packet:.6g}, "
            f"AP transmissions {s.mean_transmissions:.6g} over {s.trials} trials")


def cmd_run(args) -> int:
    cfg = NetworkConfig(N=args.n, M=args.m, p=args.p, B=args.b, seed=args.seed)
    stats = run_point(cfg, args.protocol, args.trials, args.seed)
    _emit_csv([stats], args.out)
    _say(args, _summary(stats))
    return 0


def cmd_sweep(args) -> int:
    if args.spec:
        spec = SweepSpec.from_json(Path(args.spec).read_text())
    elif args.preset:
        spec = SweepSpec(**PRESETS[args.preset])
    else:
        if not args.param:
            raise ConfigError("give --preset, --spec, or --param with --values")
        values = [float(v) if args.param == "p" else int(v)
                  for v in (args.values or "").split(",") if v.strip()]
        fixed = {k: v for k, v in (("N", args.n), ("M", args.m), ("p", args.p), ("B", args.b))
                 if v is not None and k != args.param}
        spec = SweepSpec(args.param, values, fixed)
    if args.protocols:
        spec.protocols = [p.strip() for p in args.protocols.split(",") if p.strip()]
    if args.trials is not None:
        spec.trials = args.trials
    if args.seed is not None:
        spec.seed = args.seed
    stats = run_sweep(spec)
    _emit_csv(stats, args.out)
    for s in stats:
        _say(args, _summary(s))
    if args.svg:
        Path(args.svg).write_text(sweep_svg(spec, stats))
    return 0


def cmd_analytic(args) -> int:
    ex = dnc_expected_transmissions(args.n, args.b, args.p)
    print(f"DNC (q=inf) expected transmissions per AP: {ex:.6g}")
    print(f"  per packet: {ex / args.b:.6g}   retransmissions: {ex - args.b:.6g}")
    print("packet overhead (bits):")
    print(f"  JNC       {overhead_bits('JNC', args.n)}")
    print(f"  XOR       {overhead_bits('XOR', args.n)}")
    for q in args.q:
        print(f"  DNC q={q:<4} {overhead_bits('DNC_Q', args.n, args.b, q)}")
    return 0


def cmd_replay(args) -> int:
    if args.matrix == "table1":
        matrix = parse_matrix(TABLE1_MATRIX)
    else:
        matrix = load_matrix(args.matrix)
    trace: list[str] = []
    res = replay_matrix(matrix, args.protocol, trace=trace)
    for i, line in enumerate(trace, 1):
        print(f"slot {i}: {line}")
    print(f"total retransmission slots: {res.retransmissions}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="jncsim", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    protos = [p.value for p in Protocol]

    run = sub.add_parser("run", help="simulate one configuration")
    run.add_argument("--n", type=int, default=5)
    run.add_argument("--m", type=int, default=2)
    run.add_argument("--p", type=float, default=0.1)
    run.add_argument("--b", type=int, default=20)
    run.add_argument("--protocol", choices=protos, default="jnc")
    run.add_argument("--trials", type=int, default=1000)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out")
    run.set_defaults(func=cmd_run)

    sw = sub.add_parser("sweep", help="sweep one parameter")
    sw.add_argument("--preset", choices=sorted(PRESETS))
    sw.add_argument("--spec", help="JSON file with SweepSpec fields")
    sw.add_argument("--param", choices=SWEEPABLE)
    sw.add_argument("--values", help="comma-separated values for --param")
    sw.add_argument("--n", type=int)
    sw.add_argument("--m", type=int)
    sw.add_argument("--p", type=float)
    sw.add_argument("--b", type=int)
    sw.add_argument("--protocols", help="comma-separated, e.g. dnc,jnc")
    sw.add_argument("--trials", type=int)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--out")
    sw.add_argument("--svg")
    sw.set_defaults(func=cmd_sweep)

    an = sub.add_parser("analytic", help="infinite-field DNC bound and overheads")
    an.add_argument("--n", type=int, required=True)
    an.add_argument("--b", type=int, required=True)
    an.add_argument("--p", type=float, required=True)
    an.add_argument("--q", type=int, nargs="*", default=[2, 16, 256])
    an.set_defaults(func=cmd_analytic)

    rp = sub.add_parser("replay", help="replay a reception matrix losslessly")
    rp.add_argument("matrix", help="matrix file, or 'table1' for the built-in example")
    rp.add_argument("--protocol", choices=protos, default="jnc")
    rp.set_defaults(func=cmd_replay)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (BudgetExceeded, DivergentExpectation) as exc:
        print(f"jncsim: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ParseError, ValueError, KeyError, TypeError, OSError) as exc:
        parser.print_usage(sys.stderr)
        print(f"jncsim: error: {exc}", file=sys.stderr)
        return 2

if __name__ == "__main__":
    sys.exit(main())
