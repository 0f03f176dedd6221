"""Hand-built network states shared by several test modules."""

import numpy as np

from jncsim.coding import KnowledgeState
from jncsim.engine import TABLE1_MATRIX, parse_matrix
from jncsim.protocols import Network, jnccr_stage1_slot
from jncsim.topology import deliver_clean


def set_known(net, rid, ap, seqs):
    mask = 0
    for s in seqs:
        mask |= 1 << (s - 1)
    net.knowledge[rid].known[ap] = mask


def table1_network():
    return parse_matrix(TABLE1_MATRIX).network()


def table1_stage2_network():
    """Table 1 after the non-overlap receivers R2 and R4 have finished."""
    net = table1_network()
    net.knowledge[2].known[1] = net.full
    net.knowledge[4].known[2] = net.full
    return net


class OpportunisticSetup:
    """AP1's overlap receiver R1 lacks c1; AP2 sends a k-packet XOR.

    AP2 has k non-overlap receivers, each missing a different one of its first
    k packets, so its coding set is exactly those k packets. R1 heard each of
    them in one earlier slot with probability 1-p, and everything else from
    AP2 is known to it.
    """

    def __init__(self, k):
        self.k = k
        self.net = Network(N=k + 1, M=1, B=k + 1)
        self.r1 = 1
        self.rival_nonoverlap = [k + 3 + j for j in range(k)]

    def reset(self):
        net, k = self.net, self.k
        for rid in net.knowledge:
            net.knowledge[rid] = KnowledgeState()
        for r in net.home[1]:
            net.knowledge[r.id].known[1] = net.full
        set_known(net, self.r1, 1, range(2, k + 2))
        for r in net.home[2]:
            net.knowledge[r.id].known[2] = net.full
        for j, rid in enumerate(self.rival_nonoverlap, start=1):
            set_known(net, rid, 2, [s for s in range(1, k + 2) if s != j])
        set_known(net, self.r1, 2, [k + 1])

    def trial(self, p, rng):
        """True if R1 decodes c1 in the single collided slot."""
        self.reset()
        ks = self.net.knowledge[self.r1]
        heard = deliver_clean(self.k, p, rng)
        for seq in np.flatnonzero(heard) + 1:
            ks.absorb(2, 1 << (int(seq) - 1))
        out = jnccr_stage1_slot(self.net, p, rng)
        assert out.kind == "collide" and out.payload.layer2.k == self.k
        return bool(ks.known[1] & 1)
