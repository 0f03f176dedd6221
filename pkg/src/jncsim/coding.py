"""XOR and collision (ANC) coding over symbolic packets.

Packets carry no payload. A coded packet is the set of native packets that
were XOR-ed together, stored as a bitmask over batch sequence numbers (bit
``seq - 1``). A collided packet is a pair of coded packets, one per AP.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import EmptyCombination, MixedSource, UnknownLayer

AP_INDICES = (1, 2)


@dataclass(frozen=True, order=True)
class PacketId:
    ap: int
    seq: int

    def __post_init__(self):
        if self.ap not in AP_INDICES:
            raise ValueError(f"ap must be 1 or 2, got {self.ap}")
        if self.seq < 1:
            raise ValueError(f"seq must be >= 1, got {self.seq}")

    @property
    def bit(self) -> int:
        return 1 << (self.seq - 1)


def mask_to_seqs(mask: int) -> list[int]:
    seqs = []
    seq = 1
    while mask:
        if mask & 1:
            seqs.append(seq)
        mask >>= 1
        seq += 1
    return seqs


def lowest_bit(mask: int) -> int:
    return mask & -mask


@dataclass(frozen=True)
class CodedPacket:
    """XOR of one or more native packets from a single AP."""

    source_ap: int
    mask: int

    def __post_init__(self):
        if self.source_ap not in AP_INDICES:
            raise MixedSource(f"invalid source AP {self.source_ap}")
        if self.mask <= 0:
            raise EmptyCombination("coded packet has no constituents")

    @property
    def constituents(self) -> frozenset[PacketId]:
        return frozenset(PacketId(self.source_ap, s) for s in mask_to_seqs(self.mask))

    @property
    def k(self) -> int:
        """Number of XOR-ed natives."""
        return self.mask.bit_count()

    def __xor__(self, other):
        if isinstance(other, CodedPacket):
            other_ap, other_mask = other.source_ap, other.mask
        else:
            other_cp = xor_combine(other)
            other_ap, other_mask = other_cp.source_ap, other_cp.mask
        if other_ap != self.source_ap:
            raise MixedSource("cannot XOR packets from different APs")
        return CodedPacket(self.source_ap, self.mask ^ other_mask)

    def __repr__(self):
        inner = "+".join(str(s) for s in mask_to_seqs(self.mask))
        return f"CodedPacket(AP{self.source_ap}:{{{inner}}})"


def xor_combine(ids: Iterable[PacketId]) -> CodedPacket:
    """XOR a nonempty set of same-AP natives into one coded packet.

    Duplicate ids cancel, as XOR is self-inverse.
    """
    ids = list(ids)
    if not ids:
        raise EmptyCombination("nothing to combine")
    aps = {pid.ap for pid in ids}
    if len(aps) > 1:
        raise MixedSource(f"ids span APs {sorted(aps)}")
    mask = 0
    for pid in ids:
        mask ^= pid.bit
    return CodedPacket(aps.pop(), mask)


@dataclass(frozen=True)
class JncPacket:
    """Collision of one AP1 coded packet with one AP2 coded packet."""

    layer1: CodedPacket
    layer2: CodedPacket

    def __post_init__(self):
        if self.layer1.source_ap != 1 or self.layer2.source_ap != 2:
            raise MixedSource("JncPacket layers must be (AP1, AP2)")

    @classmethod
    def collide(cls, a: CodedPacket, b: CodedPacket) -> "JncPacket":
        if a.source_ap == b.source_ap:
            raise MixedSource("colliding packets must come from different APs")
        return cls(a, b) if a.source_ap == 1 else cls(b, a)

    def layer(self, ap: int) -> CodedPacket:
        return self.layer1 if ap == 1 else self.layer2


def anc_decode(jp: JncPacket, known: CodedPacket) -> CodedPacket:
    """Strip a known layer from a collided packet and return the other."""
    if known == jp.layer1:
        return jp.layer2
    if known == jp.layer2:
        return jp.layer1
    raise UnknownLayer(f"{known!r} is not a layer of this collision")


def _xor_basis_reduce(basis: dict[int, int], v: int) -> int:
    while v:
        top = v.bit_length()
        row = basis.get(top)
        if row is None:
            return v
        v ^= row
    return 0


def _xor_basis(masks: Iterable[int]) -> dict[int, int]:
    basis: dict[int, int] = {}
    for m in masks:
        r = _xor_basis_reduce(basis, m)
        if r:
            basis[r.bit_length()] = r
    return basis


class KnowledgeState:
    """What one receiver holds: decoded natives plus undecoded coded packets.

    Decoded natives are kept per AP as bitmasks. Buffered packets are stored
    reduced against the decoded set, and any packet that becomes fully known is
    dropped.
    """

    __slots__ = ("known", "buffer")

    def __init__(self, decoded: Iterable[PacketId] = (), buffer: Iterable[CodedPacket] = ()):
        self.known = [0, 0, 0]
        self.buffer: list[CodedPacket] = []
        for pid in decoded:
            self.known[pid.ap] |= pid.bit
        for cp in buffer:
            self.absorb_mask(cp.source_ap, cp.mask)

    @classmethod
    def from_masks(cls, known1: int = 0, known2: int = 0) -> "KnowledgeState":
        ks = cls()
        ks.known[1] = known1
        ks.known[2] = known2
        return ks

    def copy(self) -> "KnowledgeState":
        ks = KnowledgeState.__new__(KnowledgeState)
        ks.known = list(self.known)
        ks.buffer = list(self.buffer)
        return ks

    @property
    def decoded(self) -> frozenset[PacketId]:
        return frozenset(
            PacketId(ap, s) for ap in AP_INDICES for s in mask_to_seqs(self.known[ap])
        )

    def buffered(self, ap: int) -> list[int]:
        return [cp.mask for cp in self.buffer if cp.source_ap == ap]

    def __eq__(self, other):
        if not isinstance(other, KnowledgeState):
            return NotImplemented
        return self.known == other.known and set(self.buffer) == set(other.buffer)

    def __repr__(self):
        return f"KnowledgeState(known={self.known[1:]}, buffer={self.buffer})"

    def absorb_mask(self, ap: int, mask: int) -> int:
        """Peeling decoder on bitmasks; returns the mask of newly decoded natives."""
        known = self.known[ap]
        rest = mask & ~known
        if not rest:
            return 0
        if rest & (rest - 1):
            cp = CodedPacket(ap, rest)
            if cp not in self.buffer:
                self.buffer.append(cp)
            return 0
        new = rest
        known |= rest
        changed = True
        while changed:
            changed = False
            kept = []
            for b in self.buffer:
                if b.source_ap != ap:
                    kept.append(b)
                    continue
                r = b.mask & ~known
                if not r:
                    continue
                if r & (r - 1):
                    kept.append(b if r == b.mask else CodedPacket(ap, r))
                else:
                    known |= r
                    new |= r
                    changed = True
            self.buffer = list(dict.fromkeys(kept))
        self.known[ap] = known
        return new

    def absorb(self, ap: int, mask: int) -> int:
        """Peel, then recover any native the buffer pins down by elimination.

        Peeling alone stalls on buffers such as {a+b, a+b+c}; a real receiver
        would still solve for c.
        """
        new = self.absorb_mask(ap, mask)
        pending = self.buffered(ap)
        if len(pending) < 2:
            return new
        basis = _xor_basis(pending)
        # reduce to RREF so single-bit rows expose the implied natives
        keys = sorted(basis)
        for i, ki in enumerate(keys):
            for kj in keys[i + 1:]:
                if basis[kj] >> (ki - 1) & 1:
                    basis[kj] ^= basis[ki]
        units = 0
        for row in basis.values():
            if not row & (row - 1):
                units |= row
        while units:
            bit = lowest_bit(units)
            units ^= bit
            new |= self.absorb_mask(ap, bit)
        return new


def can_reconstruct(ks: KnowledgeState, cp: CodedPacket) -> bool:
    return not (cp.mask & ~ks.known[cp.source_ap])


def absorb_and_peel(ks: KnowledgeState, cp: CodedPacket) -> set[PacketId]:
    """Add ``cp`` to the receiver's knowledge and peel to a fixpoint.

    Returns the natives decoded by this call. ``ks`` is updated in place.
    """
    new = ks.absorb_mask(cp.source_ap, cp.mask)
    return {PacketId(cp.source_ap, s) for s in mask_to_seqs(new)}


def is_innovative(ks: KnowledgeState, cp: CodedPacket) -> bool:
    """True iff ``cp`` lies outside the GF(2) span of everything ``ks`` holds."""
    rest = cp.mask & ~ks.known[cp.source_ap]
    if not rest:
        return False
    pending = ks.buffered(cp.source_ap)
    if not pending:
        return True
    return _xor_basis_reduce(_xor_basis(pending), rest) != 0


def gf2_decodable_set(received: Iterable[CodedPacket]) -> set[PacketId]:
    """Natives recoverable from ``received`` by full Gaussian elimination.

    Independent of the peeling decoder: builds a dense 0/1 matrix per AP and
    row-reduces it, then reads off rows that are unit vectors.
    """
    by_ap: dict[int, list[CodedPacket]] = {1: [], 2: []}
    for cp in received:
        by_ap[cp.source_ap].append(cp)
    out: set[PacketId] = set()
    for ap, packets in by_ap.items():
        if not packets:
            continue
        width = max(cp.mask.bit_length() for cp in packets)
        mat = np.zeros((len(packets), width), dtype=np.uint8)
        for i, cp in enumerate(packets):
            for s in mask_to_seqs(cp.mask):
                mat[i, s - 1] = 1
        rref = _gf2_rref(mat)
        for row in rref:
            nz = np.flatnonzero(row)
            if len(nz) == 1:
                out.add(PacketId(ap, int(nz[0]) + 1))
    return out


def _gf2_rref(mat: np.ndarray) -> np.ndarray:
    m = mat.copy()
    rows, cols = m.shape
    r = 0
    for c in range(cols):
        if r == rows:
            break
        pivots = np.flatnonzero(m[r:, c])
        if len(pivots) == 0:
            continue
        pr = r + pivots[0]
        if pr != r:
            m[[r, pr]] = m[[pr, r]]
        hit = np.flatnonzero(m[:, c])
        hit = hit[hit != r]
        m[hit] ^= m[r]
        r += 1
    return m[:r]
