"""Trial driver, Monte Carlo aggregation, and Table-style matrix replay."""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .coding import CodedPacket, JncPacket, mask_to_seqs
from .errors import BudgetExceeded, ConfigError, ParseError
from .protocols import (
    SLOT_BUDGET,
    Network,
    SlotOutcome,
    run_arq,
    run_dnc,
    run_jnccr,
)
from .topology import NetworkConfig, trial_rng


class Protocol(enum.Enum):
    ARQ = "arq"
    DNC_SIM = "dnc"
    JNC_CR = "jnc"

    @classmethod
    def parse(cls, value: Union[str, "Protocol"]) -> "Protocol":
        if isinstance(value, Protocol):
            return value
        v = value.strip().lower()
        for proto in cls:
            if v in (proto.value, proto.name.lower()):
                return proto
        raise ValueError(f"unknown protocol {value!r}")


@dataclass(frozen=True)
class TrialResult:
    initial_slots: int
    stage1_slots: int
    stage2_slots: int
    completed: bool
    transmissions: int = 0  # AP transmissions in the retransmission phase

    @property
    def retransmissions(self) -> int:
        return self.stage1_slots + self.stage2_slots

    def tx_per_packet(self, B: int) -> float:
        return (self.initial_slots + self.retransmissions) / (2 * B)


@dataclass(frozen=True)
class AggregateStats:
    protocol: Protocol
    config: NetworkConfig
    trials: int
    mean_retx: float
    ci95: float
    mean_tx_per_packet: float
    mean_stage1: float
    mean_stage2: float
    mean_transmissions: float


def initial_phase(net: Network, p: float, rng: np.random.Generator) -> int:
    """Uncoded batch: the APs alternate, sending B natives each (2B slots).

    Home receivers and the other AP's overlap receivers each catch every
    packet independently with probability 1-p.
    """
    q = 1.0 - p
    home_rx = rng.random((2 * net.N, net.B)) < q
    overheard = rng.random((2 * net.M, net.B)) < q
    net.seed_initial(home_rx, overheard)
    return 2 * net.B


def _retransmit(net: Network, protocol: Protocol, p: float, rng, on_slot=None,
                budget: int = SLOT_BUDGET) -> tuple[int, int, int]:
    if protocol is Protocol.JNC_CR:
        return run_jnccr(net, p, rng, on_slot, budget)
    if protocol is Protocol.DNC_SIM:
        slots = run_dnc(net, p, rng, on_slot, budget)
        return slots, 0, slots
    slots = run_arq(net, p, rng, on_slot, budget)
    return slots, 0, slots


def run_trial(cfg: NetworkConfig, protocol, rng: Optional[np.random.Generator] = None,
              trial: int = 0, budget: int = SLOT_BUDGET, net: Optional[Network] = None,
              on_slot=None) -> TrialResult:
    """One complete trial: uncoded batch, then retransmission until all decode.

    Without ``rng`` the stream is derived from ``cfg.seed ^ trial``, so every
    protocol sees the same uncoded-phase losses for a given trial index.
    """
    protocol = Protocol.parse(protocol)
    if cfg.p >= 1.0:
        raise BudgetExceeded("p = 1: no packet is ever delivered", context=cfg)
    if rng is None:
        rng = trial_rng(cfg.seed, trial)
    if net is None:
        net = Network.from_config(cfg)
    initial = initial_phase(net, cfg.p, rng)
    s1, s2, tx = _retransmit(net, protocol, cfg.p, rng, on_slot, budget)
    return TrialResult(initial, s1, s2, net.all_complete(net.receivers), tx)


def _trial_block(cfg: NetworkConfig, protocol: Protocol, seed: int, start: int, stop: int):
    out = np.empty((stop - start, 4), dtype=np.int64)
    for i, t in enumerate(range(start, stop)):
        res = run_trial(cfg, protocol, trial_rng(seed, t))
        if not res.completed:
            raise RuntimeError(f"trial {t} ended with undecoded packets")
        out[i] = (res.initial_slots, res.stage1_slots, res.stage2_slots, res.transmissions)
    return out


def worker_count() -> int:
    env = os.environ.get("JNCSIM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def aggregate(protocol: Protocol, cfg: NetworkConfig, rows: np.ndarray) -> AggregateStats:
    rows = np.asarray(rows, dtype=float)
    n = len(rows)
    retx = rows[:, 1] + rows[:, 2]
    ci = 1.96 * retx.std(ddof=1) / math.sqrt(n) if n > 1 else 0.0
    tpp = (rows[:, 0] + retx) / (2 * cfg.B)
    return AggregateStats(
        protocol=protocol, config=cfg, trials=n,
        mean_retx=float(retx.mean()), ci95=float(ci),
        mean_tx_per_packet=float(tpp.mean()),
        mean_stage1=float(rows[:, 1].mean()), mean_stage2=float(rows[:, 2].mean()),
        mean_transmissions=float(rows[:, 3].mean()),
    )


def run_point(cfg: NetworkConfig, protocol, trials: int, seed: Optional[int] = None,
              workers: Optional[int] = None) -> AggregateStats:
    """Run ``trials`` paired trials at one configuration and aggregate them."""
    protocol = Protocol.parse(protocol)
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    seed = cfg.seed if seed is None else seed
    cfg = replace(cfg, seed=seed)
    workers = worker_count() if workers is None else workers
    try:
        if workers <= 1 or trials < 2 * workers:
            rows = _trial_block(cfg, protocol, seed, 0, trials)
        else:
            edges = np.linspace(0, trials, workers + 1).astype(int)
            with ProcessPoolExecutor(workers) as pool:
                futs = [pool.submit(_trial_block, cfg, protocol, seed, int(a), int(b))
                        for a, b in zip(edges[:-1], edges[1:])]
                # reduce in trial-index order
                rows = np.vstack([f.result() for f in futs])
    except BudgetExceeded as exc:
        raise BudgetExceeded(f"{exc} at {protocol.value} {cfg}", context=cfg) from exc
    return aggregate(protocol, cfg, rows)


def run_experiment(grid: Iterable[NetworkConfig], protocols: Sequence, trials: int,
                   base_seed: int = 0, workers: Optional[int] = None) -> list[AggregateStats]:
    """Every grid point under every protocol; trial t always uses seed ^ t."""
    out = []
    for cfg in grid:
        for proto in protocols:
            out.append(run_point(cfg, proto, trials, base_seed, workers))
    return out


# ---------------------------------------------------------------------------
# Reception-matrix replay

@dataclass(frozen=True)
class ReceptionMatrix:
    """Per-receiver reception status before retransmission.

    ``rows[rid]`` holds 2B symbols: AP1's batch then AP2's batch, each one of
    '0' (received), '1' (lost) or '-' (out of range).
    """

    N: int
    M: int
    B: int
    rows: dict

    def network(self, record: bool = False) -> Network:
        net = Network(self.N, self.M, self.B, record=record)
        for r in net.receivers:
            syms = self.rows[r.id]
            for ap in (1, 2):
                part = syms[(ap - 1) * self.B: ap * self.B]
                row = np.array([s == "0" for s in part])
                net._load(r, ap, row)
        return net


def parse_matrix(text: str) -> ReceptionMatrix:
    lines = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            lines.append(line)
    if not lines:
        raise ParseError("empty matrix file")
    try:
        N, M, B = (int(x) for x in lines[0].split())
    except ValueError:
        raise ParseError(f"header must be 'N M B', got {lines[0]!r}") from None
    try:
        NetworkConfig(N=N, M=M, p=0.0, B=B)
    except ConfigError as exc:
        raise ParseError(str(exc)) from None
    if len(lines) - 1 != 2 * N:
        raise ParseError(f"expected {2 * N} receiver rows, got {len(lines) - 1}")
    rows = {}
    for line in lines[1:]:
        parts = line.split()
        try:
            rid = int(parts[0].lstrip("Rr"))
        except ValueError:
            raise ParseError(f"bad receiver id in {line!r}") from None
        if not 1 <= rid <= 2 * N or rid in rows:
            raise ParseError(f"receiver id {rid} out of range or repeated")
        syms = parts[1:]
        if len(syms) != 2 * B:
            raise ParseError(f"receiver {rid}: expected {2 * B} symbols, got {len(syms)}")
        home = 1 if rid <= N else 2
        overlap = (rid - (home - 1) * N) <= M
        for col, s in enumerate(syms):
            if s not in ("0", "1", "-"):
                raise ParseError(f"receiver {rid}: bad symbol {s!r}")
            reachable = overlap or (col // B + 1) == home
            if (s == "-") == reachable:
                raise ParseError(f"receiver {rid}, column {col + 1}: '-' must mark exactly "
                                 "the packets outside the receiver's range")
        rows[rid] = tuple(syms)
    return ReceptionMatrix(N, M, B, rows)


def load_matrix(path: Union[str, Path]) -> ReceptionMatrix:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from None
    return parse_matrix(text)


def packet_label(ap: int, seq: int, B: int) -> str:
    return f"c{(ap - 1) * B + seq}"


def coded_label(cp: CodedPacket, B: int) -> str:
    parts = [packet_label(cp.source_ap, s, B) for s in mask_to_seqs(cp.mask)]
    return "⊕".join(parts)


def describe_slot(out: SlotOutcome, B: int) -> str:
    if isinstance(out.payload, JncPacket):
        what = (f"({coded_label(out.payload.layer1, B)})⊙"
                f"({coded_label(out.payload.layer2, B)})")
    elif isinstance(out.payload, CodedPacket):
        what = coded_label(out.payload, B)
    else:
        what = "-"
    who = "+".join(f"AP{a}" for a in out.aps) or "none"
    gains = ", ".join(
        f"R{rid} got {','.join(packet_label(ap, s, B) for s in mask_to_seqs(mask))}"
        for rid, ap, mask in out.gains
    )
    stage = f"stage{out.stage}" if out.stage else "retx"
    return f"[{stage}] {out.kind} {who}: {what}" + (f" -> {gains}" if gains else "")


def replay_matrix(matrix: Union[ReceptionMatrix, str, Path], protocol,
                  trace: Optional[list] = None, seed: int = 0) -> TrialResult:
    """Retransmit from a fixed reception state over a lossless channel."""
    protocol = Protocol.parse(protocol)
    if not isinstance(matrix, ReceptionMatrix):
        matrix = load_matrix(matrix)
    net = matrix.network()
    hook = None
    if trace is not None:
        def hook(out):
            trace.append(describe_slot(out, matrix.B))
    s1, s2, tx = _retransmit(net, protocol, 0.0, trial_rng(seed, 0), hook)
    return TrialResult(0, s1, s2, net.all_complete(net.receivers), tx)


TABLE1_MATRIX = """\
# two APs, two receivers each, R1 and R3 in the overlap region
2 1 2
1 1 0 0 0
2 0 1 - -
3 0 0 0 1
4 - - 1 0
"""
