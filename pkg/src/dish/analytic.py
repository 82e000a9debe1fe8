"""Steady-state model of a multi-channel MAC and the resulting cooperation availability.

All rates are per second and all durations in seconds. ``n`` is nodes per
R**2 in a multi-hop network and the total node count in a single-hop one.
"""

import math
from dataclasses import dataclass, field

from dish import geometry

SINGLE_HOP = "single-hop"
MULTI_HOP = "multi-hop"

DATA_RATE = 1e6  # bit/s, data and control channels alike
ACK_BYTES = 14
CONTROL_FRAME_BYTES = 14  # TA + RA + CH + Duration


def handshake_duration(L, ack_bytes=ACK_BYTES, rate=DATA_RATE):
    """DATA + ACK airtime for an L-byte payload."""
    return 8.0 * (L + ack_bytes) / rate


def control_airtime(frame_bytes=CONTROL_FRAME_BYTES, rate=DATA_RATE):
    return 8.0 * frame_bytes / rate


class NoStableSolution(ArithmeticError):
    """The balance equations have no admissible fixed point for these parameters."""

    def __init__(self, message, boundary=None):
        super().__init__(message)
        self.boundary = boundary


@dataclass(frozen=True)
class NetworkParams:
    n: float
    lam: float
    T_d: float
    b: float
    topology: str = MULTI_HOP

    def __post_init__(self):
        if self.topology not in (SINGLE_HOP, MULTI_HOP):
            raise ValueError(f"unknown topology {self.topology!r}")
        if not self.n > 0:
            raise ValueError(f"n must be positive, got {self.n}")
        if self.lam < 0:
            raise ValueError(f"lambda must be non-negative, got {self.lam}")
        if not self.T_d > 0:
            raise ValueError(f"T_d must be positive, got {self.T_d}")
        if not 0 < self.b < self.T_d / 10:
            raise ValueError(f"need 0 < b < T_d/10, got b={self.b}, T_d={self.T_d}")
        if self.lam * self.T_d >= 1:
            raise NoStableSolution(f"lambda*T_d = {self.lam * self.T_d:.3f} >= 1")

    @classmethod
    def from_packet(cls, n, lam, L=1000, topology=MULTI_HOP, b=None):
        """Parameters for L-byte payloads on 1 Mb/s channels."""
        return cls(n=n, lam=lam, T_d=handshake_duration(L), b=control_airtime() if b is None else b,
                   topology=topology)

    def with_(self, **changes):
        fields = dict(n=self.n, lam=self.lam, T_d=self.T_d, b=self.b, topology=self.topology)
        fields.update(changes)
        return NetworkParams(**fields)


@dataclass(frozen=True)
class SteadyState:
    p_ctrl: float
    p_oh: float
    p_succ: float
    p_ni_oh: float
    p_ni_cts: float
    lambda_c: float
    lambda_rts: float
    lambda_cts: float
    iterations: int = 0

    def as_dict(self):
        return {k: getattr(self, k) for k in (
            "p_ctrl", "p_oh", "p_succ", "p_ni_oh", "p_ni_cts",
            "lambda_c", "lambda_rts", "lambda_cts")}


@dataclass(frozen=True)
class CooperationResult:
    p_ctrl_star: float
    p_co_xy_star: float
    p_co: float
    aux: dict = field(default_factory=dict)


def _frac_exp(x):
    """(1 - exp(-x)) / x, continuous at 0."""
    if abs(x) < 1e-6:
        return 1.0 - x / 2.0 + x * x / 6.0 - x ** 3 / 24.0
    return -math.expm1(-x) / x


def g(x, T_d):
    """Integral of exp(-x t) over t in [0, T_d]."""
    return T_d * _frac_exp(x * T_d)


def prob_no_interference_after_data(delta_t, lambda_c, T_d):
    """P(a node on a data channel at t1 stays quiet on the control channel over [t1, t1+delta_t])."""
    if not 0 <= delta_t < T_d:
        raise ValueError(f"delta_t must lie in [0, T_d), got {delta_t}")
    if lambda_c < 0:
        raise ValueError("lambda_c must be non-negative")
    return 1.0 - delta_t / T_d + (delta_t / T_d) * _frac_exp(lambda_c * delta_t)


def p_ni_oh(p_ctrl, lambda_c, b, T_d):
    """P(a hidden neighbor leaves an overheard control message intact); vulnerable period 2b."""
    on_ctrl = math.exp(-2.0 * lambda_c * b)
    return p_ctrl * on_ctrl + (1.0 - p_ctrl) * prob_no_interference_after_data(2.0 * b, lambda_c, T_d)


def p_ni_cts(p_ctrl, lambda_c, b, T_d):
    """P(a node hidden from the receiver leaves the McCTS at the transmitter intact)."""
    r = b / T_d
    tail = 1.0 + r - r * _frac_exp(lambda_c * b) - math.exp(-lambda_c * b)
    return (1.0 - p_ctrl) * (1.0 - r * tail) + p_ctrl


def p_ni_cts_exact(p_ctrl, lambda_c, b, T_d):
    """Same probability evaluated directly on its timing construction.

    A node back from a data channel during the McCTS window is only exposed
    for the rest of that window, which gives
    1 - (b/T_d)(2 - exp(-lambda_c b) - (1 - exp(-lambda_c b))/(lambda_c b)) off the
    control channel. ``p_ni_cts`` reuses the whole-window switching probability
    there instead, and so reports less interference once lambda_c*b is not small.
    """
    x = lambda_c * b
    risk = (b / T_d) * (2.0 - math.exp(-x) - _frac_exp(x))
    return (1.0 - p_ctrl) * (1.0 - risk) + p_ctrl


CTS_MODELS = {"closed-form": p_ni_cts, "exact": p_ni_cts_exact}


def _rates(lam, p_ctrl, p_oh, p_succ):
    denom = p_ctrl * p_succ
    lambda_c = lam * (1.0 + p_oh) / denom
    lambda_cts = lam * p_oh / denom
    return lambda_c, lambda_cts


def solve_steady_state(params, *, force_no_interference=False, damping=0.5, tol=1e-13,
                       max_iter=10_000, cts_model="closed-form"):
    """Damped Picard iteration of the coupled balance equations.

    Raises NoStableSolution if the iterates leave the unit interval for 100
    consecutive steps or fail to converge within ``max_iter``.
    """
    lam, T_d, b = params.lam, params.T_d, params.b
    c_a = geometry.expectation_constants().c_exclusive_given_neighbor
    interference = params.topology == MULTI_HOP and not force_no_interference
    ni_cts = CTS_MODELS[cts_model]

    p_ctrl = 1.0 - lam * T_d
    p_oh = p_succ = p_ctrl
    bad_streak = 0
    floor = 1e-9
    for it in range(1, max_iter + 1):
        lambda_c, lambda_cts = _rates(lam, p_ctrl, p_oh, p_succ)
        if interference:
            q_oh = p_ni_oh(p_ctrl, lambda_c, b, T_d)
            q_cts = ni_cts(p_ctrl, lambda_c, b, T_d)
            f_oh = math.exp(-c_a * params.n * (1.0 - q_oh))
            f_cts = math.exp(-c_a * params.n * (1.0 - q_cts))
        else:
            f_oh = f_cts = 1.0
        new_ctrl = 1.0 - (lam + lambda_cts) * T_d
        new_oh = new_ctrl * f_oh
        new_succ = new_oh * f_cts

        if not (0.0 < new_succ and new_ctrl <= 1.0):
            bad_streak += 1
            if bad_streak >= 100:
                raise NoStableSolution(
                    f"iterates left (0, 1] for {bad_streak} steps (lambda={lam}, n={params.n})")
            new_ctrl = min(max(new_ctrl, floor), 1.0)
            new_oh = min(max(new_oh, floor), new_ctrl)
            new_succ = min(max(new_succ, floor), new_oh)
        else:
            bad_streak = 0

        nxt = (
            (1 - damping) * p_ctrl + damping * new_ctrl,
            (1 - damping) * p_oh + damping * new_oh,
            (1 - damping) * p_succ + damping * new_succ,
        )
        change = max(abs(a - c) / max(abs(a), 1e-300) for a, c in zip(nxt, (p_ctrl, p_oh, p_succ)))
        p_ctrl, p_oh, p_succ = nxt
        if change < tol and bad_streak == 0:
            break
    else:
        raise NoStableSolution(f"no convergence after {max_iter} iterations (lambda={lam}, n={params.n})")

    if p_ctrl <= floor or p_succ <= floor:
        raise NoStableSolution(f"degenerate fixed point p_ctrl={p_ctrl}, p_succ={p_succ}")
    lambda_c, lambda_cts = _rates(lam, p_ctrl, p_oh, p_succ)
    if interference:
        q_oh = p_ni_oh(p_ctrl, lambda_c, b, T_d)
        q_cts = ni_cts(p_ctrl, lambda_c, b, T_d)
    else:
        q_oh = q_cts = 1.0
    return SteadyState(
        p_ctrl=p_ctrl, p_oh=p_oh, p_succ=p_succ, p_ni_oh=q_oh, p_ni_cts=q_cts,
        lambda_c=lambda_c, lambda_rts=lambda_c - lambda_cts, lambda_cts=lambda_cts,
        iterations=it,
    )


def balance_residual(state, params, *, force_no_interference=False, cts_model="closed-form"):
    """Largest relative violation of the balance equations at ``state``."""
    c_a = geometry.expectation_constants().c_exclusive_given_neighbor
    lam, T_d, b = params.lam, params.T_d, params.b
    lambda_c, lambda_cts = _rates(lam, state.p_ctrl, state.p_oh, state.p_succ)
    if params.topology == MULTI_HOP and not force_no_interference:
        q_oh = p_ni_oh(state.p_ctrl, lambda_c, b, T_d)
        q_cts = CTS_MODELS[cts_model](state.p_ctrl, lambda_c, b, T_d)
    else:
        q_oh = q_cts = 1.0
    p_ctrl = 1.0 - (lam + lambda_cts) * T_d
    p_oh = state.p_ctrl * math.exp(-c_a * params.n * (1.0 - q_oh))
    p_succ = state.p_oh * math.exp(-c_a * params.n * (1.0 - q_cts))
    pairs = [(state.p_ctrl, p_ctrl), (state.p_oh, p_oh), (state.p_succ, p_succ),
             (state.lambda_c, lambda_c), (state.lambda_cts, lambda_cts),
             (state.p_ni_oh, q_oh), (state.p_ni_cts, q_cts)]
    return max(abs(a - c) / max(abs(c), 1e-300) for a, c in pairs)


def switch_weight(state):
    """Share of MCC problems where y missed x's message through interference rather than absence."""
    if state.p_oh >= 1.0:
        return 0.0
    return (state.p_ctrl - state.p_oh) / (1.0 - state.p_oh)


def switch_rate(state):
    """Rate at which a node on the control channel leaves for a data channel."""
    return state.lambda_rts * state.p_succ + state.lambda_cts


def p_ctrl_star_from_rates(lambda_c, lambda_w, w, T_d):
    if lambda_c == 0.0 and lambda_w == 0.0:
        return 1.0
    a = w * lambda_c - (1.0 - w) / T_d
    num = a * g(lambda_c + lambda_w, T_d) + (1.0 - w) / T_d * g(lambda_w, T_d)
    den = 1.0 - w + a * g(lambda_c, T_d)
    return num / den


def p_ctrl_star(state, params):
    """P(a node that overheard x is still on the control channel when y transmits)."""
    w = 0.0 if params.topology == SINGLE_HOP else switch_weight(state)
    return p_ctrl_star_from_rates(state.lambda_c, switch_rate(state), w, params.T_d)


def cooperation(state, params):
    """p_co for a solved steady state; the single-hop form counts the n - 4 bystanders."""
    c = geometry.expectation_constants()
    star = p_ctrl_star(state, params)
    w = 0.0 if params.topology == SINGLE_HOP else switch_weight(state)
    aux = {"w": w, "lambda_w": switch_rate(state)}
    if params.topology == SINGLE_HOP:
        xy = state.p_ctrl * star
        k = params.n - 4
        p_co = 1.0 - (1.0 - xy) ** k if k > 0 else 0.0
    else:
        xy = state.p_ctrl * star * math.exp(-2.0 * c.c_exclusive_given_common * params.n
                                             * (1.0 - state.p_ni_oh))
        p_co = -math.expm1(-c.c_common * params.n * xy)
    return CooperationResult(p_ctrl_star=star, p_co_xy_star=xy, p_co=p_co, aux=aux)


def p_co_multi_hop(params, *, force_no_interference=False, cts_model="closed-form"):
    if params.topology != MULTI_HOP:
        raise ValueError("p_co_multi_hop needs multi-hop parameters")
    state = solve_steady_state(params, force_no_interference=force_no_interference,
                               cts_model=cts_model)
    if force_no_interference:
        # p_ni_oh = 1 removes the exclusive-neighbor penalty entirely
        state = SteadyState(**{**state.as_dict(), "p_ni_oh": 1.0, "p_ni_cts": 1.0,
                               "iterations": state.iterations})
    return cooperation(state, params)


def single_hop_closed_form(lam, T_d):
    """Closed-form p_ctrl, lambda_c, lambda_w and p_ctrl* for a fully connected network."""
    a = lam * T_d
    disc = 1.0 + a * (a - 6.0)
    if disc < 0:
        raise NoStableSolution(f"lambda*T_d = {a:.4f} beyond single-hop saturation",
                               boundary=(3.0 - 2.0 * math.sqrt(2.0)) / T_d)
    root = math.sqrt(disc)
    p_ctrl = 0.5 * (1.0 - a + root)
    if lam == 0:
        return {"p_ctrl": 1.0, "lambda_c": 0.0, "lambda_w": 0.0, "p_ctrl_star": 1.0}
    lambda_c = 0.5 * ((1.0 - root) / (lam * T_d * T_d) - 3.0 / T_d)
    lambda_w = (1.0 - root) / T_d - lam
    star = (g(lambda_w, T_d) - g(lambda_c + lambda_w, T_d)) / (T_d - g(lambda_c, T_d))
    return {"p_ctrl": p_ctrl, "lambda_c": lambda_c, "lambda_w": lambda_w, "p_ctrl_star": star}


def p_co_single_hop(params):
    if params.topology != SINGLE_HOP:
        raise ValueError("p_co_single_hop needs single-hop parameters")
    cf = single_hop_closed_form(params.lam, params.T_d)
    xy = cf["p_ctrl"] * cf["p_ctrl_star"]
    k = params.n - 4
    p_co = 1.0 - (1.0 - xy) ** k if k > 0 else 0.0
    return CooperationResult(p_ctrl_star=cf["p_ctrl_star"], p_co_xy_star=xy, p_co=p_co,
                             aux={"w": 0.0, "lambda_w": cf["lambda_w"], "p_ctrl": cf["p_ctrl"],
                                  "lambda_c": cf["lambda_c"]})


def p_co(params):
    if params.topology == SINGLE_HOP:
        return p_co_single_hop(params)
    return p_co_multi_hop(params)


def analyze(params):
    """Steady state and cooperation result together."""
    state = solve_steady_state(params)
    return state, cooperation(state, params) if params.topology == MULTI_HOP else p_co_single_hop(params)


def _stable(params):
    try:
        p_co(params)
    except NoStableSolution:
        return False
    return True


def max_stable_lambda(params, *, hi=None, rel_tol=1e-6):
    """Largest arrival rate with an admissible fixed point, found by bisection."""
    lo = 0.0
    hi = (1.0 / params.T_d) * (1 - 1e-12) if hi is None else hi
    if _stable(params.with_(lam=hi)):
        return hi
    while hi - lo > rel_tol * max(hi, 1e-12):
        mid = 0.5 * (lo + hi)
        if _stable(params.with_(lam=mid)):
            lo = mid
        else:
            hi = mid
    return lo
