"""Per-run tallies turned into metrics, and aggregation across replications."""

import math
from dataclasses import dataclass, field, asdict

import numpy as np
from scipy import stats

from dish.sim.engine import CHANNEL_CONFLICT, DEAF_TERMINAL, RTS, CTS, COOP


@dataclass
class Ratio:
    numerator: int
    denominator: int

    @property
    def value(self):
        """None when undefined (no trials)."""
        if self.denominator == 0:
            return None
        return self.numerator / self.denominator


@dataclass
class ReplicationMetrics:
    replication: int
    p_co: Ratio
    mcc_counts: dict
    mcc_obtained: dict
    xi: float  # None when no data handshakes took place
    delta: float  # None when saturated or nothing delivered
    S: float
    control_frames_sent: dict
    packets_arrived: int
    packets_delivered: int
    packets_pending_retry: int
    packets_in_queue: int
    data_handshakes: int
    data_failures: int
    data_collisions: int
    receiver_only_visits: int
    sim_time: float
    node_count: int
    stopped_by: str

    def conservation_holds(self):
        # pending_retry is a subset of in_queue: count each packet once
        return self.packets_arrived == self.packets_delivered + self.packets_in_queue

    def as_dict(self):
        d = asdict(self)
        d["p_co"] = self.p_co.value
        d["p_co_numerator"] = self.p_co.numerator
        d["p_co_denominator"] = self.p_co.denominator
        return d


def collect_metrics(sim, replication=0):
    c = sim.counters
    queued = sum(len(nd.queue) for nd in sim.nodes)
    pending = sum(1 for nd in sim.nodes for p in nd.queue if p.attempts > 0)
    total = sum(c.mcc.values())
    got = sum(c.mcc_obtained.values())
    T = c.end_time
    xi = c.data_failures / c.data_handshakes if c.data_handshakes else None
    delta = None
    if not sim.saturated and c.delivered:
        delta = c.delay_sum / c.delivered
    return ReplicationMetrics(
        replication=replication,
        p_co=Ratio(got, total),
        mcc_counts=dict(c.mcc),
        mcc_obtained=dict(c.mcc_obtained),
        xi=xi,
        delta=delta,
        S=c.delivered_bits / T if T > 0 else 0.0,
        control_frames_sent=dict(c.frames),
        packets_arrived=c.arrived,
        packets_delivered=c.delivered,
        packets_pending_retry=pending,
        packets_in_queue=queued,
        data_handshakes=c.data_handshakes,
        data_failures=c.data_failures,
        data_collisions=c.data_collisions,
        receiver_only_visits=c.receiver_only,
        sim_time=T,
        node_count=len(sim.nodes),
        stopped_by=sim.stopped_by,
    )


@dataclass
class Interval:
    mean: float
    lo: float
    hi: float


def binomial_interval(successes, trials, level=0.95):
    """Normal-approximation interval, clipped to [0, 1]; None without trials."""
    if trials == 0:
        return None
    p = successes / trials
    z = float(stats.norm.ppf(0.5 + level / 2))
    half = z * math.sqrt(p * (1 - p) / trials)
    return Interval(p, max(0.0, p - half), min(1.0, p + half))


def t_interval(values, level=0.95):
    vals = np.array([v for v in values if v is not None], dtype=float)
    if vals.size == 0:
        return None
    m = float(vals.mean())
    if vals.size == 1:
        return Interval(m, m, m)
    half = float(stats.t.ppf(0.5 + level / 2, vals.size - 1) * vals.std(ddof=1)) / math.sqrt(vals.size)
    return Interval(m, m - half, m + half)


@dataclass
class Metrics:
    """Aggregate over replications; ``replications`` keeps the raw records."""

    p_co_sim: Ratio
    p_co_ci: Interval
    mcc_counts: dict
    xi: Interval
    delta: Interval
    S: Interval
    control_frames_sent: int
    replications: list = field(default_factory=list)

    @property
    def p_co(self):
        return self.p_co_sim.value

    def as_dict(self):
        def iv(x):
            return None if x is None else asdict(x)

        return {
            "p_co": self.p_co,
            "p_co_numerator": self.p_co_sim.numerator,
            "p_co_denominator": self.p_co_sim.denominator,
            "p_co_ci": iv(self.p_co_ci),
            "mcc_counts": dict(self.mcc_counts),
            "xi": iv(self.xi),
            "delta": iv(self.delta),
            "S": iv(self.S),
            "control_frames_sent": self.control_frames_sent,
            "replications": [r.as_dict() for r in self.replications],
        }


def aggregate(records):
    """Pool replication records; order-independent."""
    records = sorted(records, key=lambda r: r.replication)
    num = sum(r.p_co.numerator for r in records)
    den = sum(r.p_co.denominator for r in records)
    counts = {CHANNEL_CONFLICT: 0, DEAF_TERMINAL: 0}
    for r in records:
        for k, v in r.mcc_counts.items():
            counts[k] += v
    frames = sum(sum(r.control_frames_sent.get(k, 0) for k in (RTS, CTS, COOP)) for r in records)
    return Metrics(
        p_co_sim=Ratio(num, den),
        p_co_ci=binomial_interval(num, den),
        mcc_counts=counts,
        xi=t_interval([r.xi for r in records]),
        delta=t_interval([r.delta for r in records]),
        S=t_interval([r.S for r in records]),
        control_frames_sent=frames,
        replications=records,
    )
