"""Event-driven simulator of a single-transceiver multi-channel MAC.

One control channel carries McRTS/McCTS handshakes under CSMA; the pair
then spends exactly T_d on the chosen data channel. Reception follows a
unit-disk, no-capture collision model. Every McRTS/McCTS is inspected for
multi-channel coordination (MCC) problems and the common neighbors able to
identify them.
"""

import heapq
import itertools
import random
from collections import deque
from typing import NamedTuple

import numpy as np

from dish.sim.config import IDEAL, MODEL_BASED, REAL, SATURATED
from dish.sim.topology import generate_topology

RTS, CTS, COOP = "McRTS", "McCTS", "COOP"
CHANNEL_CONFLICT, DEAF_TERMINAL = "channel-conflict", "deaf-terminal"
CONTROL = 0

# node states
IDLE, TX_RTS, WAIT_CTS, TX_CTS, TX_COOP, SLOT, DATA_TX, DATA_RX = range(8)
STATE_NAMES = ("IDLE", "TX_RTS", "WAIT_CTS", "TX_CTS", "TX_COOP", "SLOT", "DATA_TX", "DATA_RX")
_TRANSMITTING = (TX_RTS, TX_CTS, TX_COOP)

# timer kinds; the first three are pre-empted by carrier
T_NONE, T_CONTEND, T_BACKOFF, T_TABLE, T_CTS = range(5)

# cooperation-slot roles (real DISH)
TX_PRE_CTS, RX_PRE_CTS, RX_POST_CTS, TX_POST_CTS = range(4)


class SimulationInvariantError(AssertionError):
    pass


class UsageEntry(NamedTuple):
    TA: int
    RA: int
    CH: int
    until: float
    frame_id: int


class MccEvent(NamedTuple):
    time: float
    kind: str
    x: int
    y: int
    cooperative_nodes: frozenset
    frame: str

    @property
    def obtained(self):
        return len(self.cooperative_nodes) >= 1


class Frame:
    __slots__ = ("id", "kind", "tx", "ra", "ch", "duration", "start", "end", "hs", "mcc", "info")

    def __init__(self, fid, kind, tx, ra, ch, duration, hs, info=None):
        self.id = fid
        self.kind = kind
        self.tx = tx
        self.ra = ra
        self.ch = ch
        self.duration = duration
        self.hs = hs  # id of the McRTS opening this handshake
        self.mcc = ()
        self.info = info
        self.start = self.end = 0.0


class Session:
    """One visit of a transmitter/receiver pair to a data channel."""

    __slots__ = ("hs", "ch", "start", "tx", "rx", "collided", "left")

    def __init__(self, hs, ch, start):
        self.hs = hs
        self.ch = ch
        self.start = start
        self.tx = None
        self.rx = None
        self.collided = False
        self.left = 0


class Packet:
    __slots__ = ("arrival", "receiver", "attempts")

    def __init__(self, arrival, receiver):
        self.arrival = arrival
        self.receiver = receiver
        self.attempts = 0


class Node:
    __slots__ = (
        "id", "nbrs", "nbr_set", "channel", "state", "queue", "table", "energy", "busy_since",
        "rx", "rx_ok", "timer_gen", "timer_kind", "backoff_until", "peer", "hs_ch", "hs_id",
        "engagement", "watching", "slot_seen", "coop_info", "arrival_rng", "receiver_rng",
    )

    def __init__(self, nid, nbrs):
        self.id = nid
        self.nbrs = nbrs
        self.nbr_set = frozenset(nbrs)
        self.channel = CONTROL
        self.state = IDLE
        self.queue = deque()
        self.table = {}
        self.energy = 0
        self.busy_since = 0.0
        self.rx = None
        self.rx_ok = False
        self.timer_gen = 0
        self.timer_kind = T_NONE
        self.backoff_until = 0.0
        self.peer = -1
        self.hs_ch = 0
        self.hs_id = -1
        self.engagement = -1
        self.watching = False
        self.slot_seen = False
        self.coop_info = None

    @property
    def S_ctrl(self):
        return "BUSY" if self.energy > 0 else "FREE"

    @property
    def L_queue(self):
        return len(self.queue)

    def free_channels(self, now, data_channels):
        busy = set()
        stale = []
        for ta, e in self.table.items():
            if e.until > now:
                busy.add(e.CH)
            else:
                stale.append(ta)
        for ta in stale:
            del self.table[ta]
        return [c for c in range(1, data_channels + 1) if c not in busy]


class RunCounters:
    """Raw tallies of one run; turned into Metrics by ``metrics.collect_metrics``."""

    def __init__(self):
        self.arrived = 0
        self.delivered = 0
        self.delay_sum = 0.0
        self.delivered_bits = 0
        self.data_handshakes = 0
        self.data_failures = 0
        self.data_collisions = 0
        self.receiver_only = 0
        self.frames = {RTS: 0, CTS: 0, COOP: 0}
        self.mcc = {CHANNEL_CONFLICT: 0, DEAF_TERMINAL: 0}
        self.mcc_obtained = {CHANNEL_CONFLICT: 0, DEAF_TERMINAL: 0}
        self.end_time = 0.0


def _substreams(seed, replication):
    root = np.random.SeedSequence([int(seed) & (2**63 - 1), int(replication)])
    names = ("placement", "arrivals", "receivers", "channels", "timers")
    return dict(zip(names, root.spawn(len(names))))


def _int_seed(ss, k=2):
    words = ss.generate_state(k, dtype=np.uint32)
    return int(sum(int(w) << (32 * i) for i, w in enumerate(words)))


class Simulator:
    def __init__(self, config, nodeset=None, *, replication=0, trace=False, check=False,
                 keep_events=True):
        self.cfg = config
        streams = _substreams(config.seed, replication)
        if nodeset is None:
            nodeset = generate_topology(config, np.random.default_rng(streams["placement"]))
        self.nodeset = nodeset
        self.b = config.b
        self.T_d = config.T_d
        self.T_data = 8.0 * config.L / config.rate_data
        self.D = config.data_channels
        self.mode = config.dish_mode
        self.saturated = config.traffic_mode == SATURATED
        self.slot = self.b if self.mode == REAL else 0.0
        self.contend_min = self.slot
        self.rts_duration = 2 * self.slot + self.b + self.T_d
        self.cts_duration = self.slot + self.T_d
        self.cts_timeout = (config.cts_timeout_b * self.b) + self.slot

        self.nodes = [Node(i, nb) for i, nb in enumerate(nodeset.neighbors)]
        arr_base = _int_seed(streams["arrivals"])
        rcv_base = _int_seed(streams["receivers"])
        for nd in self.nodes:
            nd.arrival_rng = random.Random(arr_base + 7919 * nd.id)
            nd.receiver_rng = random.Random(rcv_base + 7919 * nd.id)
        self.rng_ch = random.Random(_int_seed(streams["channels"]))
        self.rng_timer = random.Random(_int_seed(streams["timers"]))

        self.now = 0.0
        self._heap = []
        self._seq = itertools.count()
        self._fid = itertools.count()
        self.on_channel = [set() for _ in range(self.D + 1)]
        self.active_sessions = [[] for _ in range(self.D + 1)]
        self.pending_sessions = {}
        self.counters = RunCounters()
        self.events = [] if keep_events else None
        self.tracing = trace
        self.trace = []
        self.check = check
        self.sessions_done = 0
        self.stopped_by = None

    # -- bookkeeping -------------------------------------------------------

    def schedule(self, t, fn, a=None, b=None):
        heapq.heappush(self._heap, (t, next(self._seq), fn, a, b))

    def _log(self, kind, node, *args):
        self.trace.append(" ".join([f"{self.now:.9f}", kind, str(node)] + [str(a) for a in args]))

    def _violation(self, msg):
        tail = "\n".join(self.trace[-20:])
        raise SimulationInvariantError(f"t={self.now:.9f}: {msg}\n{tail}")

    def _set_timer(self, nd, kind, delay):
        nd.timer_gen += 1
        nd.timer_kind = kind
        self.schedule(self.now + delay, self._on_timer, nd, nd.timer_gen)

    def _cancel_timer(self, nd):
        nd.timer_gen += 1
        nd.timer_kind = T_NONE

    # -- traffic -----------------------------------------------------------

    def _new_packet(self, nd, t):
        nb = nd.nbrs
        return Packet(t, nb[int(nd.receiver_rng.random() * len(nb))])

    def _on_arrival(self, nd, _):
        """Enqueue; an idle node on a free control channel contends at once."""
        self.counters.arrived += 1
        nd.queue.append(self._new_packet(nd, self.now))
        self.schedule(self.now + nd.arrival_rng.expovariate(self.cfg.lam), self._on_arrival, nd)
        if self.tracing:
            self._log("ARRIVE", nd.id, len(nd.queue))
        if nd.channel == CONTROL and nd.energy == 0 and nd.state == IDLE and len(nd.queue) == 1:
            self._attempt_rts(nd)

    def inject(self, t, node_id, receiver):
        """Schedule one extra packet for ``node_id``; arrivals are otherwise untouched."""
        self.schedule(t, self._on_injected, self.nodes[node_id], receiver)

    def _on_injected(self, nd, receiver):
        self.counters.arrived += 1
        nd.queue.append(Packet(self.now, receiver))
        if self.tracing:
            self._log("ARRIVE", nd.id, len(nd.queue))
        if nd.channel == CONTROL and nd.energy == 0 and nd.state == IDLE and len(nd.queue) == 1:
            self._attempt_rts(nd)

    # -- contention --------------------------------------------------------

    def _attempt_rts(self, nd):
        free = nd.free_channels(self.now, self.D)
        if free:
            ch = free[int(self.rng_ch.random() * len(free))]
            pkt = nd.queue[0]
            fid = next(self._fid)
            f = Frame(fid, RTS, nd.id, pkt.receiver, ch, self.rts_duration, fid)
            nd.peer = pkt.receiver
            nd.hs_ch = ch
            nd.hs_id = fid
            self._start_tx(nd, f)
        else:
            wait = min(e.until for e in nd.table.values()) - self.now
            self._set_timer(nd, T_TABLE, wait)

    def _check_queue(self, nd):
        if not nd.queue:
            return
        if nd.backoff_until > self.now:
            self._set_timer(nd, T_BACKOFF, nd.backoff_until - self.now)
            return
        self._set_timer(nd, T_CONTEND,
                        self.contend_min + self.rng_timer.random() * self.cfg.contention_b * self.b)

    def _idle_edge(self, nd):
        if (nd.channel == CONTROL and nd.energy == 0 and nd.state == IDLE
                and nd.timer_kind == T_NONE):
            self._check_queue(nd)

    def _on_timer(self, nd, gen):
        if gen != nd.timer_gen:
            return
        kind = nd.timer_kind
        nd.timer_kind = T_NONE
        if kind == T_CONTEND:
            self._attempt_rts(nd)
        elif kind == T_BACKOFF or kind == T_TABLE:
            self._check_queue(nd)
        elif kind == T_CTS:
            if self.tracing:
                self._log("CTS_TIMEOUT", nd.id, nd.hs_id)
            self._backoff(nd)

    def _backoff(self, nd):
        nd.state = IDLE
        nd.watching = False
        nd.backoff_until = self.now + self.rng_timer.random() * self.cfg.backoff_b * self.b
        self._idle_edge(nd)

    # -- control channel ---------------------------------------------------

    def _start_tx(self, nd, f):
        now = self.now
        if self.check:
            if nd.channel != CONTROL or nd.state in _TRANSMITTING:
                self._violation(f"node {nd.id} cannot transmit (channel {nd.channel}, "
                                f"state {STATE_NAMES[nd.state]})")
            if nd.energy > 0 and (f.kind == RTS or nd.busy_since < now):
                self._violation(f"node {nd.id} starts {f.kind} under carrier")
        f.start = now
        f.end = now + self.b
        nd.rx = None
        nd.watching = False
        if nd.timer_kind != T_NONE and nd.timer_kind != T_CTS:
            self._cancel_timer(nd)
        nd.state = TX_RTS if f.kind == RTS else TX_CTS if f.kind == CTS else TX_COOP
        nodes = self.nodes
        for w in nd.nbrs:
            u = nodes[w]
            e = u.energy
            u.energy = e + 1
            if e == 0:
                u.busy_since = now
            if u.channel != CONTROL:
                continue
            if u.watching:
                u.slot_seen = True
            if e == 0:
                if u.state not in _TRANSMITTING:
                    u.rx = f
                    u.rx_ok = True
                tk = u.timer_kind
                if tk == T_CONTEND or tk == T_BACKOFF or tk == T_TABLE:
                    self._cancel_timer(u)
            elif u.rx is not None:
                u.rx_ok = False
        if f.kind != COOP:
            f.mcc = self._detect_mcc(f, nd)
        self.counters.frames[f.kind] += 1
        if self.tracing:
            self._log("TX_START", nd.id, f.kind, f.id, f.ra, f.ch)
        self.schedule(f.end, self._end_tx, f)

    def _detect_mcc(self, f, y):
        """MCC problems created by y's frame: deaf addressee and/or neighbors already on f.ch."""
        found = []
        deaf = -1
        if f.kind == RTS:
            x = self.nodes[f.ra]
            if x.channel != CONTROL:
                deaf = x.id
                found.append((DEAF_TERMINAL, deaf, x.engagement))
        for xid in self.on_channel[f.ch]:
            if xid != deaf and xid in y.nbr_set:
                found.append((CHANNEL_CONFLICT, xid, self.nodes[xid].engagement))
        return found

    def _enumerate_cooperative(self, f, decoders):
        """Common neighbors that overheard x's engagement and then decoded y's frame."""
        out = []
        for kind, xid, eng in f.mcc:
            coop = []
            for v in decoders:
                if v.id == xid or xid not in v.nbr_set:
                    continue
                e = v.table.get(xid)
                if e is not None and e.frame_id == eng and e.until > f.start:
                    coop.append(v.id)
            ev = MccEvent(f.start, kind, xid, f.tx, frozenset(coop), f.kind)
            c = self.counters
            c.mcc[kind] += 1
            if coop:
                c.mcc_obtained[kind] += 1
            if self.events is not None:
                self.events.append(ev)
            if self.tracing:
                self._log("MCC", f.tx, kind, xid, len(coop))
            out.append((ev, eng))
        return out

    def _end_tx(self, f, _):
        now = self.now
        nodes = self.nodes
        nd = nodes[f.tx]
        decoders = []
        for w in nd.nbrs:
            u = nodes[w]
            u.energy -= 1
            if u.rx is f:
                u.rx = None
                if u.rx_ok:
                    decoders.append(u)
        if self.check:
            for u in decoders:
                if u.state in _TRANSMITTING or u.channel != CONTROL:
                    self._violation(f"node {u.id} decoded while not listening")
        if self.tracing:
            self._log("TX_END", nd.id, f.kind, f.id, len(decoders))

        if f.kind == COOP:
            nd.state = IDLE
            for u in decoders:
                if u.id == f.ra and u.watching:
                    u.coop_info = f.info
        else:
            entry_until = now + f.duration
            for u in decoders:
                u.table[nd.id] = UsageEntry(nd.id, f.ra, f.ch, entry_until, f.id)
            mcc = self._enumerate_cooperative(f, decoders) if f.mcc else ()
            obtained = [(ev, eng) for ev, eng in mcc if ev.cooperative_nodes]
            if f.kind == RTS:
                self._after_rts(f, nd, decoders, obtained)
            else:
                self._after_cts(f, nd, decoders, obtained)

        self._idle_edge(nd)
        for w in nd.nbrs:
            u = nodes[w]
            if u.energy == 0:
                self._idle_edge(u)

    def _learned_entry(self, ev, eng):
        """The usage entry a cooperative node holds for x, as shared with y."""
        best = None
        for vid in ev.cooperative_nodes:
            e = self.nodes[vid].table.get(ev.x)
            if e is not None and e.frame_id == eng and (best is None or e.until > best.until):
                best = e
        return best

    def _ideal_inform(self, nd, obtained):
        """Ideal DISH: y learns what its cooperative nodes know; returns (deaf, entries)."""
        deaf = False
        learned = []
        for ev, eng in obtained:
            e = self._learned_entry(ev, eng)
            if e is None:
                continue
            learned.append(e)
            nd.table[e.TA] = e
            if ev.kind == DEAF_TERMINAL:
                deaf = True
        return deaf, learned

    def _after_rts(self, f, nd, decoders, obtained):
        rx = self.nodes[f.ra]
        if obtained and self.mode == IDEAL:
            deaf, learned = self._ideal_inform(nd, obtained)
            nd.state = IDLE
            if self.tracing:
                self._log("IDEAL_ABORT", nd.id, "deaf" if deaf else "conflict")
            if deaf:
                until = max(e.until for e in learned if e.TA == f.ra)
                nd.backoff_until = until + self.rng_timer.random() * self.cfg.contention_b * self.b
            elif nd.energy == 0:
                self._attempt_rts(nd)
            return

        nd.state = WAIT_CTS
        self._set_timer(nd, T_CTS, self.cts_timeout)
        responds = rx in decoders and rx.state == IDLE

        if self.mode == REAL:
            senders = self._coop_senders(obtained, allow=rx if responds else None)
            self._open_slot(nd, f, TX_PRE_CTS)
            if responds and rx not in senders:
                rx.peer = nd.id
                rx.hs_id = f.id
                rx.hs_ch = f.ch
                rx.state = SLOT
                self._open_slot(rx, f, RX_PRE_CTS)
            self._send_coop(senders, f, obtained)
            return

        if responds:
            self._send_cts(rx, nd.id, f)

    def _send_cts(self, rx, tx_id, rts):
        rx.peer = tx_id
        rx.hs_id = rts.id
        rx.hs_ch = rts.ch
        g = Frame(next(self._fid), CTS, rx.id, tx_id, rts.ch, self.cts_duration, rts.id)
        self._start_tx(rx, g)

    def _after_cts(self, f, nd, decoders, obtained):
        tx = self.nodes[f.ra]
        tx_ok = (tx in decoders and tx.state == WAIT_CTS and tx.hs_id == f.hs
                 and tx.peer == nd.id)
        if obtained and self.mode == IDEAL:
            self._ideal_inform(nd, obtained)
            for ev, eng in obtained:
                e = self._learned_entry(ev, eng)
                if e is not None:
                    tx.table[e.TA] = e
            nd.state = IDLE
            if self.tracing:
                self._log("IDEAL_ABORT", nd.id, "conflict")
            return

        if tx_ok:
            self._cancel_timer(tx)
        if self.mode == REAL:
            senders = self._coop_senders(obtained)
            nd.state = SLOT
            self._open_slot(nd, f, RX_POST_CTS)
            if tx_ok:
                tx.state = SLOT
                self._open_slot(tx, f, TX_POST_CTS)
            self._send_coop(senders, f, obtained)
            return

        self._switch(nd, DATA_RX, f.ch, f.hs, f.id)
        if tx_ok:
            self._switch(tx, DATA_TX, f.ch, f.hs, f.hs)

    # -- real DISH cooperation slot ------------------------------------

    def _coop_senders(self, obtained, allow=None):
        senders = {}
        for ev, eng in obtained:
            for vid in sorted(ev.cooperative_nodes):
                v = self.nodes[vid]
                if vid in senders:
                    continue
                if v.state == IDLE or v is allow:
                    senders[vid] = (ev.kind, ev.x, eng)
        return senders

    def _open_slot(self, nd, f, role):
        nd.watching = True
        nd.slot_seen = nd.energy > 0
        nd.coop_info = None
        self.schedule(self.now + self.slot, self._slot_end, nd, (f, role))

    def _send_coop(self, senders, f, obtained):
        entries = {}
        for ev, eng in obtained:
            entries.setdefault(ev.x, (ev.kind, self._learned_entry(ev, eng)))
        for vid in sorted(senders):
            kind, xid, _ = senders[vid]
            v = self.nodes[vid]
            v.state = IDLE
            info = (kind, entries[xid][1])
            c = Frame(next(self._fid), COOP, vid, f.tx, 0, self.b, f.hs, info=info)
            self._start_tx(v, c)

    def _slot_end(self, nd, arg):
        f, role = arg
        seen = nd.slot_seen
        nd.watching = False
        info = nd.coop_info
        nd.coop_info = None
        if role == TX_PRE_CTS:
            if nd.state != WAIT_CTS or nd.hs_id != f.id or not seen:
                return
            self._cancel_timer(nd)
            self._real_abort(nd, info)
        elif role == RX_PRE_CTS:
            if nd.state != SLOT or nd.hs_id != f.id:
                return
            if seen:
                nd.state = IDLE
                self._idle_edge(nd)
            else:
                nd.state = IDLE
                self._send_cts(nd, f.tx, _RtsView(f))
        elif role == RX_POST_CTS:
            if nd.state != SLOT:
                return
            if seen:
                nd.state = IDLE
                self._idle_edge(nd)
            else:
                self._switch(nd, DATA_RX, f.ch, f.hs, f.id)
        elif role == TX_POST_CTS:
            if nd.state != SLOT:
                return
            if seen:
                self._real_abort(nd, info)
            else:
                self._switch(nd, DATA_TX, f.ch, f.hs, f.hs)

    def _real_abort(self, nd, info):
        if self.tracing:
            self._log("COOP_ABORT", nd.id, "decoded" if info else "energy")
        if info is None or info[1] is None:
            self._backoff(nd)
            return
        kind, entry = info
        nd.table[entry.TA] = entry
        nd.state = IDLE
        if kind == DEAF_TERMINAL:
            nd.backoff_until = entry.until + self.rng_timer.random() * self.cfg.contention_b * self.b
            self._idle_edge(nd)
        elif nd.energy == 0:
            self._attempt_rts(nd)

    # -- data channels -------------------------------------------------

    def _switch(self, nd, role, ch, hs, message_id):
        now = self.now
        nd.channel = ch
        nd.state = role
        nd.rx = None
        nd.watching = False
        nd.engagement = message_id
        self._cancel_timer(nd)
        self.on_channel[ch].add(nd.id)
        s = self.pending_sessions.get(hs)
        if s is None:
            s = Session(hs, ch, now)
            self.pending_sessions[hs] = s
            self.schedule(now, self._session_check, s)
        if role == DATA_TX:
            s.tx = nd.id
        else:
            s.rx = nd.id
        s.left += 1
        if self.tracing:
            self._log("SWITCH", nd.id, ch, "tx" if role == DATA_TX else "rx", hs)
        self.schedule(now + self.T_d, self._on_return, nd, s)

    def _interferes(self, src, dst):
        """Does src's DATA or ACK overlap, in time and range, what dst's parties receive?"""
        if dst.tx is None or dst.rx is None or src.tx is None:
            return False
        nodes = self.nodes
        split = self.T_data
        # emission windows: DATA from tx on [0, split), ACK from rx on [split, T_d)
        src_emit = [(src.start, src.start + split, src.tx)]
        if src.rx is not None:
            src_emit.append((src.start + split, src.start + self.T_d, src.rx))
        listen = ((dst.start, dst.start + split, dst.rx),
                  (dst.start + split, dst.start + self.T_d, dst.tx))
        for a0, a1, e in src_emit:
            nb = nodes[e].nbr_set
            for b0, b1, r in listen:
                if a0 < b1 and b0 < a1 and r in nb:
                    return True
        return False

    def _session_check(self, s, _):
        """A new data exchange collides with any overlapping one on the same channel in range."""
        del self.pending_sessions[s.hs]
        active = self.active_sessions[s.ch]
        for other in active:
            if self._interferes(other, s):
                s.collided = True
            if self._interferes(s, other):
                other.collided = True
        active.append(s)
        if s.tx is not None:
            self.counters.data_handshakes += 1
        else:
            self.counters.receiver_only += 1

    def _on_return(self, nd, s):
        c = self.counters
        nd.channel = CONTROL
        nd.state = IDLE
        self.on_channel[s.ch].discard(nd.id)
        s.left -= 1
        if s.left == 0:
            self.active_sessions[s.ch].remove(s)
        if self.tracing:
            self._log("RETURN", nd.id, s.ch, s.hs)
        if nd.id == s.tx:
            ok = s.rx is not None and not s.collided
            pkt = nd.queue[0]
            if ok:
                nd.queue.popleft()
                c.delivered += 1
                c.delivered_bits += 8 * self.cfg.L
                c.delay_sum += self.now - pkt.arrival
                nd.backoff_until = 0.0
                if self.saturated:
                    nd.queue.append(self._new_packet(nd, self.now))
            else:
                pkt.attempts += 1
                c.data_failures += 1
                if s.collided:
                    c.data_collisions += 1
            self.sessions_done += 1
        self._idle_edge(nd)

    # -- driver --------------------------------------------------------

    def run(self):
        cfg = self.cfg
        if self.saturated:
            for nd in self.nodes:
                if nd.nbrs:
                    nd.queue.append(self._new_packet(nd, 0.0))
                    c = self.counters
                    c.arrived += 1
                    self._check_queue(nd)
        elif cfg.lam > 0:
            for nd in self.nodes:
                if nd.nbrs:
                    self.schedule(nd.arrival_rng.expovariate(cfg.lam), self._on_arrival, nd)
        heap = self._heap
        pop = heapq.heappop
        stop = cfg.stop_packets
        tmax = cfg.max_time
        self.stopped_by = "drained"
        while heap:
            t, _, fn, a, b = pop(heap)
            if t > tmax:
                self.stopped_by = "max_time"
                break
            self.now = t
            fn(a, b)
            if self.sessions_done >= stop:
                self.stopped_by = "packets"
                break
        self.counters.end_time = self.now
        return self.counters


class _RtsView:
    """Minimal stand-in for an McRTS when the receiver answers after the slot."""

    __slots__ = ("id", "ch")

    def __init__(self, f):
        self.id = f.hs
        self.ch = f.ch
