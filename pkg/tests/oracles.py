"""Monte-Carlo oracles, independent of the closed forms they check.

Each returns (estimate, standard error).
"""

import numpy as np


def _in_disk(rng, size, center=None):
    r = np.sqrt(rng.random(size))
    a = 2 * np.pi * rng.random(size)
    pts = np.column_stack([r * np.cos(a), r * np.sin(a)])
    return pts if center is None else pts + center


def _area_estimate(hits):
    p = hits.mean()
    return np.pi * p, np.pi * np.sqrt(p * (1 - p) / hits.size)


def exclusive_given_neighbor(rng, N):
    """Mean area of disk(v) outside disk(i), v uniform in disk(i); unit range."""
    v = _in_disk(rng, N)
    w = _in_disk(rng, N, v)
    return _area_estimate(np.hypot(w[:, 0], w[:, 1]) > 1.0)


def exclusive_given_common(rng, N):
    """Same area, with v uniform in the lens of i and j, j uniform in disk(i)."""
    j = _in_disk(rng, N)
    v = np.empty_like(j)
    todo = np.arange(N)
    while todo.size:
        cand = _in_disk(rng, todo.size)
        ok = np.hypot(*(cand - j[todo]).T) < 1.0
        v[todo[ok]] = cand[ok]
        todo = todo[~ok]
    w = _in_disk(rng, N, v)
    return _area_estimate(np.hypot(w[:, 0], w[:, 1]) > 1.0)


def common_area(rng, N):
    """Mean lens area of i and a uniform neighbor j."""
    j = _in_disk(rng, N)
    w = _in_disk(rng, N)
    return _area_estimate(np.hypot(*(w - j).T) < 1.0)


def _bernoulli(hits):
    p = hits.mean()
    return p, np.sqrt(max(p * (1 - p), 1e-300) / hits.size)


def quiet_after_data(rng, N, delta_t, lambda_c, T_d):
    """A node on a data channel at t1 returns after U(0, T_d) and then transmits
    after Exp(lambda_c); quiet if that happens after t1 + delta_t."""
    back = rng.random(N) * T_d
    tx = back + rng.exponential(1 / lambda_c, N)
    return _bernoulli(tx > delta_t)


def no_interference_overhear(rng, N, p_ctrl, lambda_c, b, T_d):
    """Hidden neighbor stays quiet over a 2b vulnerable window."""
    on_ctrl = rng.random(N) < p_ctrl
    first_tx_ctrl = rng.exponential(1 / lambda_c, N)
    back = rng.random(N) * T_d
    first_tx_data = back + rng.exponential(1 / lambda_c, N)
    quiet = np.where(on_ctrl, first_tx_ctrl > 2 * b, first_tx_data > 2 * b)
    return _bernoulli(quiet)


def no_interference_cts(rng, N, p_ctrl, lambda_c, b, T_d):
    """Node hidden from the McCTS sender, checked during the McCTS at the McRTS sender.

    Time 0 is the start of the McRTS (s_j - b). A node on the control channel
    then overhears the McRTS and defers. A node on a data channel returns at
    U(0, T_d); returning during the McRTS it defers until b, and then transmits
    after Exp(lambda_c). Interference means a transmission start in [b, 2b).
    """
    on_ctrl = rng.random(N) < p_ctrl
    back = rng.random(N) * T_d
    start = np.maximum(back, b) + rng.exponential(1 / lambda_c, N)
    quiet = on_ctrl | (start >= 2 * b)
    return _bernoulli(quiet)


def p_ctrl_star(rng, N, lambda_c, lambda_w, w, T_d):
    """Mixture/convolution model of the overhear-to-trigger gap, truncated to [0, T_d]."""
    out = []
    need = N
    while need > 0:
        m = int(need * 1.5) + 100
        interfered = rng.random(m) < w
        tau_c = rng.exponential(1 / lambda_c, m)
        tau_c = np.where(interfered, tau_c, tau_c + rng.random(m) * T_d)
        tau_c = tau_c[tau_c <= T_d]
        out.append(tau_c[:need])
        need -= out[-1].size
    tau_c = np.concatenate(out)
    tau_w = rng.exponential(1 / lambda_w, N) if lambda_w > 0 else np.full(N, np.inf)
    return _bernoulli(tau_w > tau_c)
