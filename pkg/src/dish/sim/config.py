from dataclasses import dataclass, asdict, replace

SINGLE_HOP = "single-hop"
MULTI_HOP = "multi-hop"

MODEL_BASED = "model-based"
IDEAL = "ideal"
REAL = "real"
DISH_MODES = (MODEL_BASED, IDEAL, REAL)

STABLE = "stable-poisson"
SATURATED = "saturated"


@dataclass(frozen=True)
class SimConfig:
    """One simulated scenario.

    ``n`` is the node count for single-hop and the density per range**2 for
    multi-hop. Timing knobs ending in ``_b`` are multiples of the control
    frame airtime.
    """

    topology: str = MULTI_HOP
    n: float = 10
    lam: float = 10.0
    L: int = 1000
    num_channels: int = 6
    rate_control: float = 1e6
    rate_data: float = 1e6
    area_m: float = 1500.0
    range_m: float = 250.0
    dish_mode: str = MODEL_BASED
    traffic_mode: str = STABLE
    seed: int = 0
    stop_packets: int = 20_000
    replications: int = 5
    max_time: float = 1e5
    control_frame_bytes: int = 14
    ack_bytes: int = 14
    contention_b: float = 10.0
    cts_timeout_b: float = 2.0
    backoff_b: float = 20.0
    connect_retries: int = 100

    def __post_init__(self):
        if self.topology not in (SINGLE_HOP, MULTI_HOP):
            raise ValueError(f"topology must be {SINGLE_HOP!r} or {MULTI_HOP!r}")
        if self.dish_mode not in DISH_MODES:
            raise ValueError(f"dish_mode must be one of {DISH_MODES}")
        if self.traffic_mode not in (STABLE, SATURATED):
            raise ValueError(f"traffic_mode must be {STABLE!r} or {SATURATED!r}")
        if self.num_channels < 2:
            raise ValueError("need a control channel and at least one data channel")
        if self.stop_packets <= 0:
            raise ValueError("stop_packets must be positive")
        if self.replications <= 0:
            raise ValueError("replications must be positive")
        if self.lam < 0:
            raise ValueError("lam must be non-negative")
        if self.n <= 0:
            raise ValueError("n must be positive")
        if self.topology == SINGLE_HOP and int(self.n) != self.n:
            raise ValueError("single-hop n is a node count")
        if self.L <= 0:
            raise ValueError("L must be positive")

    @property
    def b(self):
        """Control frame airtime (s)."""
        return 8.0 * self.control_frame_bytes / self.rate_control

    @property
    def T_d(self):
        """DATA + ACK residency on a data channel (s)."""
        return 8.0 * (self.L + self.ack_bytes) / self.rate_data

    @property
    def data_channels(self):
        return self.num_channels - 1

    def replace(self, **changes):
        return replace(self, **changes)

    def as_dict(self):
        return asdict(self)
