"""Retransmission schemes: ARQ, the infinite-field DNC baseline, and JNC-CR.

All schemes operate on a :class:`Network`, which holds every receiver's
:class:`~jncsim.coding.KnowledgeState`. Feedback is assumed perfect, so an AP's
view of its receivers is read straight from their knowledge.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np
from scipy import stats

from .coding import (
    CodedPacket,
    JncPacket,
    KnowledgeState,
    _xor_basis,
    _xor_basis_reduce,
    can_reconstruct,
    is_innovative,
    lowest_bit,
)
from .errors import BudgetExceeded, DivergentExpectation
from .topology import ReceiverProfile, build_topology, deliver_clean, deliver_collided, NetworkConfig

SLOT_BUDGET = 10**7


class Network:
    """Receivers of both APs and what each of them currently holds."""

    def __init__(self, N: int, M: int, B: int, record: bool = False):
        self.N, self.M, self.B = N, M, B
        self.full = (1 << B) - 1
        self.receivers = build_topology(NetworkConfig(N=N, M=M, p=0.0, B=B))
        self.by_id = {r.id: r for r in self.receivers}
        self.knowledge = {r.id: KnowledgeState() for r in self.receivers}
        self.home = {ap: [r for r in self.receivers if r.home_ap == ap] for ap in (1, 2)}
        self.overlap = [r for r in self.receivers if r.in_overlap]
        self.nonoverlap = [r for r in self.receivers if not r.in_overlap]
        self.home_overlap = {ap: [r for r in self.overlap if r.home_ap == ap] for ap in (1, 2)}
        # receivers within range of each AP: its own group plus the other group's overlap
        self.in_range = {
            ap: self.home[ap] + [r for r in self.overlap if r.home_ap != ap] for ap in (1, 2)
        }
        self.history: Optional[dict[int, list[CodedPacket]]] = (
            {r.id: [] for r in self.receivers} if record else None
        )

    @classmethod
    def from_config(cls, cfg: NetworkConfig, record: bool = False) -> "Network":
        return cls(cfg.N, cfg.M, cfg.B, record=record)

    def complete(self, r: ReceiverProfile) -> bool:
        return self.knowledge[r.id].known[r.home_ap] == self.full

    def all_complete(self, group: Sequence[ReceiverProfile]) -> bool:
        full = self.full
        kn = self.knowledge
        return all(kn[r.id].known[r.home_ap] == full for r in group)

    def ap_state(self, ap: int) -> "ApState":
        return ApState(ap, tuple(r.id for r in self.home[ap]),
                       tuple(r.id for r in self.overlap), self.B)

    def give(self, r: ReceiverProfile, cp: CodedPacket) -> int:
        if self.history is not None:
            self.history[r.id].append(cp)
        return self.knowledge[r.id].absorb(cp.source_ap, cp.mask)

    def seed_initial(self, home_rx: np.ndarray, overheard: np.ndarray):
        """Load per-receiver reception bitmaps from the uncoded batch phase.

        ``home_rx`` is ``(2N, B)`` over receivers in id order; ``overheard`` is
        ``(2M, B)`` over overlap receivers in id order, for the other AP's batch.
        """
        for r, row in zip(self.receivers, home_rx):
            self._load(r, r.home_ap, row)
        for r, row in zip(self.overlap, overheard):
            self._load(r, r.other_ap, row)

    def _load(self, r, ap, row):
        mask = int.from_bytes(np.packbits(row.astype(bool), bitorder="little").tobytes(), "little")
        self.knowledge[r.id].known[ap] |= mask
        if self.history is not None:
            seq = 1
            m = mask
            while m:
                if m & 1:
                    self.history[r.id].append(CodedPacket(ap, 1 << (seq - 1)))
                m >>= 1
                seq += 1


@dataclass(frozen=True)
class ApState:
    """One AP's view: which of its receivers hold which of its packets.

    The overlap part is shared by both APs through the superimposed ACK.
    """

    ap: int
    home: tuple[int, ...]
    overlap: tuple[int, ...]
    B: int

    def reception_matrix(self, knowledge: Mapping[int, KnowledgeState]) -> np.ndarray:
        return _bits(self.home, knowledge, self.ap, self.B)

    def overlap_matrix(self, knowledge: Mapping[int, KnowledgeState]) -> np.ndarray:
        """Rows: overlap receivers; columns: AP1's batch then AP2's batch."""
        return np.hstack([_bits(self.overlap, knowledge, ap, self.B) for ap in (1, 2)])


def _bits(rids, knowledge, ap, B):
    out = np.zeros((len(rids), B), dtype=bool)
    for i, rid in enumerate(rids):
        m = knowledge[rid].known[ap]
        for s in range(B):
            out[i, s] = m >> s & 1
    return out


def _unit_innovative(ks: KnowledgeState, ap: int, bit: int) -> bool:
    pending = ks.buffered(ap)
    if not pending:
        return True
    return _xor_basis_reduce(_xor_basis(pending), bit) != 0


def benefit_select(ap_state: ApState, knowledge: Mapping[int, KnowledgeState],
                   order: Optional[Sequence[int]] = None,
                   max_size: Optional[int] = None) -> Optional[CodedPacket]:
    """Greedy XOR coding set that every targeted receiver can decode at once.

    Receivers are visited in ``order`` (default: home receivers by id). A
    receiver for which the set already hides exactly one unknown native is
    targeted as is; otherwise its lowest-index missing native that no targeted
    receiver is missing gets added.
    """
    ap = ap_state.ap
    full = (1 << ap_state.B) - 1
    cap = max_size if max_size is not None else len(ap_state.home)
    coded = 0
    size = 0
    forbidden = 0  # union of missing sets of targeted receivers
    for rid in (order if order is not None else ap_state.home):
        ks = knowledge[rid]
        missing = full & ~ks.known[ap]
        if not missing:
            continue
        hit = coded & missing
        if hit:
            if not hit & (hit - 1) and _unit_innovative(ks, ap, hit):
                forbidden |= missing
            continue
        if size >= cap:
            continue
        options = missing & ~forbidden
        while options:
            bit = lowest_bit(options)
            options ^= bit
            if _unit_innovative(ks, ap, bit):
                coded |= bit
                size += 1
                forbidden |= missing
                break
    return CodedPacket(ap, coded) if coded else None


def innovative_count(cp: Optional[CodedPacket], group: Sequence[ReceiverProfile],
                     knowledge: Mapping[int, KnowledgeState]) -> int:
    if cp is None:
        return 0
    return sum(1 for r in group if is_innovative(knowledge[r.id], cp))


class DecisionKind(enum.Enum):
    COLLIDE = "collide"
    SOLO_XOR = "solo"


@dataclass(frozen=True)
class Decision:
    kind: DecisionKind
    payloads: tuple[CodedPacket, ...]
    solo_ap: Optional[int] = None
    collision_decoding: int = 0
    jnc_benefit: float = 0.0
    xor_benefit: float = 0.0


def can_anc_decode(home_ap: int, ks: KnowledgeState, cand1: CodedPacket,
                   cand2: CodedPacket) -> bool:
    """Whether a collision of the two candidates yields a useful home packet."""
    home, other = (cand1, cand2) if home_ap == 1 else (cand2, cand1)
    return (can_reconstruct(ks, other) and not can_reconstruct(ks, home)
            and is_innovative(ks, home))


def ancr_decide(cand1: Optional[CodedPacket], cand2: Optional[CodedPacket],
                overlap_knowledge: Mapping[ReceiverProfile, KnowledgeState],
                p: float, n1: int, n2: int) -> Decision:
    """Collide the two candidates or let one AP send alone.

    Collision pays off per overlap receiver that can strip one layer and learn
    from the other, discounted by (1-p)^2; a solo XOR pays off per receiver it
    is innovative for, discounted by (1-p). Collision needs a strict win.
    """
    if cand1 is None and cand2 is None:
        raise ValueError("no candidate packet to send")
    cd = 0
    if cand1 is not None and cand2 is not None:
        for r, ks in overlap_knowledge.items():
            if can_anc_decode(r.home_ap, ks, cand1, cand2):
                cd += 1
    jnc = cd * (1.0 - p) ** 2
    b1 = n1 * (1.0 - p) if cand1 is not None else None
    b2 = n2 * (1.0 - p) if cand2 is not None else None
    kind, solo = compare_benefits(jnc, b1, b2)
    xor = max(b for b in (b1, b2, 0.0) if b is not None)
    if kind is DecisionKind.COLLIDE:
        return Decision(kind, (cand1, cand2), None, cd, jnc, xor)
    payload = cand1 if solo == 1 else cand2
    return Decision(kind, (payload,), solo, cd, jnc, xor)


def compare_benefits(jnc: float, b1: Optional[float],
                     b2: Optional[float]) -> tuple[DecisionKind, Optional[int]]:
    """Threshold rule: collide on a strict win, else the better AP (AP1 on ties).

    ``None`` marks an AP with nothing to send; collision then is impossible.
    """
    if b1 is not None and b2 is not None and jnc > max(b1, b2):
        return DecisionKind.COLLIDE, None
    if b2 is None or (b1 is not None and b1 >= b2):
        return DecisionKind.SOLO_XOR, 1
    return DecisionKind.SOLO_XOR, 2


@dataclass
class SlotOutcome:
    """What happened in one retransmission slot (for traces and counters)."""

    stage: int
    kind: str
    aps: tuple[int, ...]
    payload: object = None
    gains: list[tuple[int, int, int]] = field(default_factory=list)  # (rid, ap, mask)

    @property
    def transmissions(self) -> int:
        return len(self.aps)


def _clean(net: Network, ap: int, cp: CodedPacket, targets, p, rng, out: SlotOutcome):
    if not targets:
        return
    got = deliver_clean(len(targets), p, rng)
    for r, ok in zip(targets, got):
        if ok:
            new = net.give(r, cp)
            if new:
                out.gains.append((r.id, ap, new))


def _collided(net: Network, jp: JncPacket, targets, p, rng, out: SlotOutcome):
    if not targets:
        return
    got = deliver_collided(targets, p, rng)
    for r, ok in zip(targets, got):
        if not ok:
            continue
        ks = net.knowledge[r.id]
        has1 = can_reconstruct(ks, jp.layer1)
        has2 = can_reconstruct(ks, jp.layer2)
        if has1 == has2:
            # both known: nothing to learn; neither: collision is discarded
            continue
        learned = jp.layer2 if has1 else jp.layer1
        new = net.give(r, learned)
        if new:
            out.gains.append((r.id, learned.source_ap, new))


def _stage1_order(net: Network, ap: int) -> list[int]:
    # non-overlap receivers first: stage 1 exists to finish them
    return ([r.id for r in net.home[ap] if not r.in_overlap]
            + [r.id for r in net.home[ap] if r.in_overlap])


def jnccr_stage1_slot(net: Network, p: float, rng: np.random.Generator) -> SlotOutcome:
    """Both APs pick XOR packets independently and send them at the same time."""
    cands = {ap: benefit_select(net.ap_state(ap), net.knowledge, _stage1_order(net, ap))
             for ap in (1, 2)}
    c1, c2 = cands[1], cands[2]
    if c1 is not None and c2 is not None:
        jp = JncPacket(c1, c2)
        out = SlotOutcome(1, "collide", (1, 2), jp)
        for ap in (1, 2):
            _clean(net, ap, cands[ap], [r for r in net.home[ap] if not r.in_overlap], p, rng, out)
        _collided(net, jp, net.overlap, p, rng, out)
        return out
    if c1 is None and c2 is None:
        return SlotOutcome(1, "idle", ())
    ap = 1 if c1 is not None else 2
    out = SlotOutcome(1, "solo", (ap,), cands[ap])
    _clean(net, ap, cands[ap], net.in_range[ap], p, rng, out)
    return out


def jnccr_stage2_slot(net: Network, p: float, rng: np.random.Generator) -> Optional[SlotOutcome]:
    """One cooperative slot for the overlap receivers; None once they are all done."""
    kn = net.knowledge
    cands = {}
    for ap in (1, 2):
        order = [r.id for r in net.home_overlap[ap]]
        cands[ap] = benefit_select(net.ap_state(ap), kn, order, max_size=net.M)
    c1, c2 = cands[1], cands[2]
    if c1 is None and c2 is None:
        return None
    n1 = innovative_count(c1, net.home_overlap[1], kn)
    n2 = innovative_count(c2, net.home_overlap[2], kn)
    decision = ancr_decide(c1, c2, {r: kn[r.id] for r in net.overlap}, p, n1, n2)
    if decision.kind is DecisionKind.COLLIDE:
        jp = JncPacket(c1, c2)
        out = SlotOutcome(2, "collide", (1, 2), jp)
        _collided(net, jp, net.overlap, p, rng, out)
        return out
    ap = decision.solo_ap
    out = SlotOutcome(2, "solo", (ap,), decision.payloads[0])
    # home non-overlap receivers are complete by now; only overlap listeners matter
    _clean(net, ap, decision.payloads[0], net.overlap, p, rng, out)
    return out


SlotHook = Optional[Callable[[SlotOutcome], None]]


def run_jnccr(net: Network, p: float, rng: np.random.Generator,
              on_slot: SlotHook = None, budget: int = SLOT_BUDGET) -> tuple[int, int, int]:
    """Run both JNC-CR stages to completion; returns (stage1, stage2, transmissions)."""
    s1 = s2 = tx = 0
    while not net.all_complete(net.nonoverlap):
        out = jnccr_stage1_slot(net, p, rng)
        s1 += 1
        tx += out.transmissions
        if on_slot:
            on_slot(out)
        if s1 > budget:
            raise BudgetExceeded(f"stage 1 exceeded {budget} slots")
    while True:
        out = jnccr_stage2_slot(net, p, rng)
        if out is None:
            break
        s2 += 1
        tx += out.transmissions
        if on_slot:
            on_slot(out)
        if s1 + s2 > budget:
            raise BudgetExceeded(f"stage 2 exceeded {budget} slots")
    return s1, s2, tx


def run_arq(net: Network, p: float, rng: np.random.Generator,
            on_slot: SlotHook = None, budget: int = SLOT_BUDGET) -> int:
    """Uncoded retransmission, alternating between APs.

    Each AP resends its lowest-index native still missing at some home
    receiver until all of them hold it.
    """
    full = net.full
    kn = net.knowledge
    slots = 0
    turn = 1
    while True:
        work = {}
        for ap in (1, 2):
            missing = 0
            for r in net.home[ap]:
                missing |= full & ~kn[r.id].known[ap]
            if missing:
                work[ap] = lowest_bit(missing)
        if not work:
            return slots
        ap = turn if turn in work else 3 - turn
        cp = CodedPacket(ap, work[ap])
        out = SlotOutcome(0, "arq", (ap,), cp)
        _clean(net, ap, cp, [r for r in net.home[ap] if kn[r.id].known[ap] & work[ap] == 0],
               p, rng, out)
        slots += 1
        turn = 3 - ap
        if on_slot:
            on_slot(out)
        if slots > budget:
            raise BudgetExceeded(f"ARQ exceeded {budget} slots")


def rlnc_slots(needed: np.ndarray, p: float, rng: np.random.Generator,
               budget: int = SLOT_BUDGET) -> int:
    """Slots until every receiver collects ``needed`` receptions (q = infinity)."""
    remaining = np.asarray(needed, dtype=np.int64).copy()
    slots = 0
    while remaining.any():
        got = deliver_clean(len(remaining), p, rng)
        remaining -= got & (remaining > 0)
        slots += 1
        if slots > budget:
            raise BudgetExceeded(f"RLNC exceeded {budget} slots")
    return slots


def run_dnc(net: Network, p: float, rng: np.random.Generator,
            on_slot: SlotHook = None, budget: int = SLOT_BUDGET) -> int:
    """Infinite-field random linear coding: every reception is innovative.

    The APs take turns; each keeps sending until its own receivers are done, so
    the total is the sum of the two per-AP slot counts.
    """
    total = 0
    for ap in (1, 2):
        needed = np.array([net.B - net.knowledge[r.id].known[ap].bit_count()
                           for r in net.home[ap]])
        slots = rlnc_slots(needed, p, rng, budget)
        total += slots
        for r in net.home[ap]:
            net.knowledge[r.id].known[ap] = net.full
        if on_slot and slots:
            on_slot(SlotOutcome(0, f"rlnc x{slots}", (ap,)))
    return total


def rlnc_inf_simulate(N: int, B: int, p: float, rng: np.random.Generator,
                      trials: Optional[int] = None):
    """Slots for one AP to deliver B packets to N receivers with q = infinity.

    With ``trials`` set, runs that many independent trials at once and
    returns an integer array.
    """
    if trials is None:
        return rlnc_slots(np.full(N, B), p, rng)
    if p >= 1.0:
        raise BudgetExceeded("p = 1: no reception ever succeeds")
    remaining = np.full((trials, N), B, dtype=np.int64)
    finish = np.zeros(trials, dtype=np.int64)
    active = np.ones(trials, dtype=bool)
    slot = 0
    while active.any():
        slot += 1
        idx = np.flatnonzero(active)
        got = rng.random((len(idx), N)) < 1.0 - p
        sub = remaining[idx]
        sub -= got & (sub > 0)
        remaining[idx] = sub
        done = ~sub.any(axis=1)
        finish[idx[done]] = slot
        active[idx[done]] = False
        if slot > SLOT_BUDGET:
            raise BudgetExceeded("RLNC simulation exceeded slot budget")
    return finish


def dnc_expected_transmissions(N: int, B: int, p: float, tol: float = 1e-12) -> float:
    """Expected slots for one AP to deliver B packets to N receivers, q = infinity.

    E[max_j T_j] = sum_{t>=0} P(max_j T_j > t) = sum_t 1 - F(t)^N, where F(t) is
    the chance of at least B successes in t Bernoulli(1-p) slots.
    """
    if N < 1 or B < 1:
        raise ValueError("N and B must be positive")
    if not 0.0 <= p < 1.0:
        raise DivergentExpectation(f"expected transmissions diverge at p={p}")
    if p == 0.0:
        return float(B)
    total = float(B)  # terms t < B are all exactly 1
    t0 = B
    chunk = max(64, 4 * B)
    while True:
        t = np.arange(t0, t0 + chunk)
        short = stats.binom.cdf(B - 1, t, 1.0 - p)  # P(T_j > t)
        with np.errstate(divide="ignore"):  # short == 1 gives log(0); term is then 1
            terms = -np.expm1(N * np.log1p(-short))
        below = np.flatnonzero(terms < tol)
        if len(below):
            total += float(terms[: below[0]].sum())
            return total
        total += float(terms.sum())
        t0 += chunk


def overhead_bits(scheme: str, N: int, B: Optional[int] = None, q: Optional[int] = None) -> int:
    """Header bits per coded packet for the JNC, XOR, and GF(q) DNC schemes."""
    scheme = scheme.upper()
    if N < 1:
        raise ValueError("N must be positive")
    if scheme == "JNC":
        return 128 + 2 * N
    if scheme == "XOR":
        return N
    if scheme in ("DNC_Q", "DNC"):
        if B is None or q is None or q < 2:
            raise ValueError("DNC_Q needs B and q >= 2")
        return math.ceil(B * math.log2(q) - 1e-9)
    raise ValueError(f"unknown scheme {scheme!r}")
