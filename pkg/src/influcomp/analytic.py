"""Mean-field trajectories of two competing influences.

Every trajectory point is the root of an implicit equation

    K(t) * x**e + x = t,    0 < x < t,

with ``K(t)`` depending on the regime.  Before overload ``K`` is a constant
fixed by the initial state; after overload (linearised discrimination
probability) it carries a time factor until ``t_c + 1/mu``, after which the
shares freeze.  Coefficients are handled in log space because the exponents
``mu * t_c`` routinely reach the hundreds.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class PowerPair:
    a: float
    b: float

    def __post_init__(self):
        for name, val in (("a", self.a), ("b", self.b)):
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"influence power {name} must be positive and finite, got {val}")


@dataclass(frozen=True)
class InitialState:
    """Expected counts at the anchor time; the clock equals the total count."""

    t0: float
    x1: float
    x2: float

    def __post_init__(self):
        if not (self.x1 > 0 and self.x2 > 0):
            raise ValueError("initial counts must be positive")
        if abs(self.x1 + self.x2 - self.t0) > 1e-9 * max(1.0, self.t0):
            raise ValueError("initial counts must sum to t0")

    @classmethod
    def from_counts(cls, x1: float, x2: float) -> "InitialState":
        return cls(x1 + x2, x1, x2)


@dataclass
class Trajectory:
    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray

    @property
    def share1(self) -> np.ndarray:
        return self.x1 / (self.x1 + self.x2)

    @property
    def share2(self) -> np.ndarray:
        return self.x2 / (self.x1 + self.x2)

    def __len__(self):
        return len(self.t)

    def to_csv(self, path, meta: dict | None = None) -> None:
        write_trajectory_csv(self, path, meta)


def write_trajectory_csv(traj: Trajectory, path, meta: dict | None = None) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in (meta or {}).items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh)
        w.writerow(["t", "x1", "x2", "share1", "share2"])
        for row in zip(traj.t, traj.x1, traj.x2, traj.share1, traj.share2):
            w.writerow([repr(float(x)) for x in row])


def read_trajectory_csv(path) -> tuple[Trajectory, dict]:
    meta, rows = {}, []
    with open(path) as fh:
        lines = []
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].strip().partition("=")
                meta[k.strip()] = v.strip()
            else:
                lines.append(line)
    reader = csv.DictReader(lines)
    for r in reader:
        rows.append((float(r["t"]), float(r["x1"]), float(r["x2"])))
    if not rows:
        raise ValueError(f"{path}: no trajectory rows")
    arr = np.array(rows)
    return Trajectory(arr[:, 0], arr[:, 1], arr[:, 2]), meta


def default_grid(t0: float, t_end: float, points: int = 200) -> np.ndarray:
    return np.geomspace(t0, t_end, points)


def solve_implicit(log_coef: float, power: float, t: float,
                   bisect_tol: float = 1e-6, newton_tol: float = 1e-10) -> float:
    """Root of ``exp(log_coef) * x**power + x = t`` on (0, t).

    Works on the equivalent monotone form
    ``h(x) = log_coef + power*log(x) - log(t - x) = 0``: bisection until the
    bracket is below ``bisect_tol`` relative, then Newton on ``log x`` (kept
    inside the bracket) until the step is below ``newton_tol`` relative to
    ``min(x, t - x)``.
    """
    if not t > 0:
        raise SolverError(f"time must be positive, got {t}")

    def h(x):
        return log_coef + power * math.log(x) - math.log(t - x)

    lo, hi = 0.0, t
    # h -> -inf at 0+ and +inf at t-, so (0, t) always brackets the root
    x = 0.5 * t
    while (hi - lo) > bisect_tol * t:
        x = 0.5 * (lo + hi)
        if x <= lo or x >= hi:
            break
        if h(x) > 0:
            hi = x
        else:
            lo = x
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx = h(x)
        if fx == 0.0:
            break
        if fx > 0:
            hi = x
        else:
            lo = x
        # Newton in log x: h is close to linear there even for tiny roots
        nxt = x * math.exp(-fx / (power + x / (t - x)))
        if not lo < nxt < hi:
            # fallback steps only shrink the bracket, they never signal convergence
            if hi - lo <= 4 * math.ulp(hi):
                break
            x = math.sqrt(lo * hi) if lo > 0 else 0.5 * hi
            continue
        # relative to the smaller of x and t - x, so roots near t are resolved too
        if abs(nxt - x) <= max(newton_tol * min(x, t - x), 4 * math.ulp(x)):
            x = nxt
            break
        x = nxt
    else:
        raise SolverError(f"Newton did not converge at t={t}")
    resid = abs(math.exp(log_coef + power * math.log(x)) + x - t)
    if resid > 1e-8 * t:
        raise SolverError(f"residual {resid:.3g} too large at t={t}")
    return x


def _grid(t_grid) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(np.diff(t) <= 0):
        raise ValueError("time grid must be strictly increasing")
    return t


def _conserve(t, x1, x2):
    gap = np.abs(x1 + x2 - t)
    if np.any(gap > 1e-6 * t):
        k = int(np.argmax(gap / t))
        raise SolverError(f"x1 + x2 != t at t={t[k]} (gap {gap[k]:.3g})")


def pre_overload(a: float, b: float, init: InitialState, t_grid) -> Trajectory:
    """Solve ``C1 x1**(b/a) + x1 = t`` and ``C2 x2**(a/b) + x2 = t`` on the grid."""
    PowerPair(a, b)
    t = _grid(t_grid)
    if t[0] < init.t0 * (1 - 1e-12):
        raise ValueError("time grid starts before t0")
    log_c1 = math.log(init.x2) - (b / a) * math.log(init.x1)
    log_c2 = math.log(init.x1) - (a / b) * math.log(init.x2)
    x1 = np.array([solve_implicit(log_c1, b / a, ti) for ti in t])
    x2 = np.array([solve_implicit(log_c2, a / b, ti) for ti in t])
    _conserve(t, x1, x2)
    return Trajectory(t, x1, x2)


def corollary_closed_form(ratio: float, init: InitialState, t):
    """Explicit solutions for power ratios a/b in {1/2, 1, 2}."""
    t = np.asarray(t, dtype=float)
    x1_0, x2_0, t0 = init.x1, init.x2, init.t0
    if math.isclose(ratio, 1.0):
        return x1_0 / t0 * t, x2_0 / t0 * t
    if math.isclose(ratio, 0.5):
        c1 = x2_0 / x1_0**2
        c2 = x1_0 / math.sqrt(x2_0)
        x1 = (np.sqrt(4 * c1 * t + 1) - 1) / (2 * c1)
        x2 = t - 0.5 * (c2 * np.sqrt(4 * t + c2**2) - c2**2)
        return x1, x2
    if math.isclose(ratio, 2.0):
        # mirror of the 1/2 case with the roles of the influences swapped
        c1 = x2_0 / math.sqrt(x1_0)
        c2 = x1_0 / x2_0**2
        x1 = t - 0.5 * (c1 * np.sqrt(4 * t + c1**2) - c1**2)
        x2 = (np.sqrt(4 * c2 * t + 1) - 1) / (2 * c2)
        return x1, x2
    raise ValueError(f"no closed form for a/b = {ratio}")


def discrimination_prob(t, mu: float, t_c: float, linearized: bool = False):
    """Probability an overloaded riser still weighs influence powers."""
    t = np.asarray(t, dtype=float)
    if np.any(t < t_c):
        raise ValueError("discrimination probability is defined for t >= t_c only")
    if linearized:
        # exactly zero from t_c + 1/mu on, whatever the rounding of 1 - mu*(t - t_c)
        out = np.where(t >= t_c + 1.0 / mu, 0.0, np.maximum(0.0, 1.0 - mu * (t - t_c)))
    else:
        out = np.exp(-mu * (t - t_c))
    return out if out.ndim else float(out)


def _post_log_coefs(a, b, mu, anchor: InitialState, t):
    """log K1(t), log K2(t) of the post-overload implicit equations."""
    tc = anchor.t0
    k = (b - a) / a * mu * tc
    log_c3 = (math.log(anchor.x2) - (b / a) * math.log(anchor.x1)
              - k * math.log(tc) - (a - b) / a * mu * tc)
    log_k1 = log_c3 + k * math.log(t) + (a - b) / a * mu * t
    k2 = (a - b) / b * mu * tc
    log_c4 = (math.log(anchor.x1) - (a / b) * math.log(anchor.x2)
              - k2 * math.log(tc) - (b - a) / b * mu * tc)
    log_k2 = log_c4 + k2 * math.log(t) + (b - a) / b * mu * t
    return log_k1, log_k2


def post_overload(a: float, b: float, mu: float, anchor: InitialState, t_grid) -> Trajectory:
    """Trajectory after overload onset ``anchor.t0`` under the linearised decay.

    Inside ``(t_c, t_c + 1/mu)`` the time-dependent implicit equations are
    solved; from ``t_c + 1/mu`` on, shares are frozen at their junction value.
    """
    PowerPair(a, b)
    if not mu > 0:
        raise ValueError("decay rate mu must be positive")
    t = _grid(t_grid)
    tc = anchor.t0
    if t[0] < tc * (1 - 1e-12):
        raise ValueError("time grid starts before the overload onset")
    t_end = tc + 1.0 / mu
    j1, j2 = _post_point(a, b, mu, anchor, t_end)
    x1 = np.empty_like(t)
    x2 = np.empty_like(t)
    for i, ti in enumerate(t):
        if ti < t_end:
            x1[i], x2[i] = _post_point(a, b, mu, anchor, ti)
        else:
            x1[i], x2[i] = j1 / t_end * ti, j2 / t_end * ti
    _conserve(t, x1, x2)
    return Trajectory(t, x1, x2)


def _post_point(a, b, mu, anchor, t):
    log_k1, log_k2 = _post_log_coefs(a, b, mu, anchor, t)
    return solve_implicit(log_k1, b / a, t), solve_implicit(log_k2, a / b, t)


def post_overload_residual(a, b, mu, anchor: InitialState, traj: Trajectory) -> np.ndarray:
    """Relative residual of the first-branch x1 equation at each point inside the branch."""
    t_end = anchor.t0 + 1.0 / mu
    out = []
    for ti, xi in zip(traj.t, traj.x1):
        if ti < t_end:
            log_k1, _ = _post_log_coefs(a, b, mu, anchor, ti)
            out.append(abs(math.exp(log_k1 + b / a * math.log(xi)) + xi - ti) / ti)
    return np.array(out)


def rho(delta, t0: float, mu: float, a: float, b: float):
    """Ratio of the overloaded to the plain coefficient, ``delta`` after onset.

    ``[e / (1 + delta/t0)**(t0/delta)]**((a-b)/a * mu * delta)``, equal to 1 at
    ``delta = 0``.
    """
    delta = np.asarray(delta, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        log_r = (a - b) / a * mu * (delta - t0 * np.log1p(delta / t0))
    out = np.where(delta == 0, 1.0, np.exp(log_r))
    return out if out.ndim else float(out)


@dataclass
class OrderingReport:
    t: np.ndarray
    winner_ok: np.ndarray
    loser_ok: np.ndarray
    max_violation: float
    plain: Trajectory
    overloaded: Trajectory

    @property
    def violations(self) -> int:
        return int(np.sum(~self.winner_ok) + np.sum(~self.loser_ok))


def theorem4_check(a: float, b: float, mu: float, init: InitialState, t_grid,
                   tol: float = 1e-8) -> OrderingReport:
    """Compare the plain regime with overload starting at ``init.t0``.

    The stronger influence must never do better under overload and the weaker
    never worse.  Violations are measured as count differences divided by t;
    differences within ``tol`` of that scale count as equal.
    """
    t = _grid(t_grid)
    plain = pre_overload(a, b, init, t)
    over = post_overload(a, b, mu, init, t)
    if a >= b:
        strong_gap = (over.x1 - plain.x1) / t
        weak_gap = (plain.x2 - over.x2) / t
    else:
        strong_gap = (over.x2 - plain.x2) / t
        weak_gap = (plain.x1 - over.x1) / t
    # a gap > 0 means the inequality is violated by that much
    winner_ok = strong_gap <= tol
    loser_ok = weak_gap <= tol
    worst = float(max(0.0, strong_gap.max(), weak_gap.max()))
    return OrderingReport(t, winner_ok, loser_ok, worst, plain, over)


def integrate_ode(a: float, b: float, init: InitialState, t_end: float, step: float = 1e-3,
                  mu: float | None = None, t_c: float | None = None, t_out=None) -> Trajectory:
    """Classical RK4 on the mean-field rate equations.

    Without ``mu`` this is the plain regime.  With ``mu`` the discrimination
    probability is the linearised one starting at ``t_c`` (default: start).
    """
    if mu is not None and t_c is None:
        t_c = init.t0

    def p_hat(t):
        if mu is None or t < t_c:
            return 1.0
        return max(0.0, 1.0 - mu * (t - t_c))

    def rate(t, x1, x2):
        p = p_hat(t)
        w = a * x1 + b * x2
        tot = x1 + x2
        return p * a * x1 / w + (1 - p) * x1 / tot, p * b * x2 / w + (1 - p) * x2 / tot

    # step boundaries include the kink of the linearised decay
    knots = [init.t0, t_end]
    if mu is not None and init.t0 < t_c + 1.0 / mu < t_end:
        knots.insert(1, t_c + 1.0 / mu)
    ts, ys = [init.t0], [(init.x1, init.x2)]
    y1, y2 = init.x1, init.x2
    for seg_start, seg_end in zip(knots[:-1], knots[1:]):
        m = max(1, int(math.ceil((seg_end - seg_start) / step - 1e-9)))
        h = (seg_end - seg_start) / m
        for k in range(m):
            t = seg_start + k * h
            a1, b1 = rate(t, y1, y2)
            a2, b2 = rate(t + h / 2, y1 + h / 2 * a1, y2 + h / 2 * b1)
            a3, b3 = rate(t + h / 2, y1 + h / 2 * a2, y2 + h / 2 * b2)
            a4, b4 = rate(t + h, y1 + h * a3, y2 + h * b3)
            y1 += h / 6 * (a1 + 2 * a2 + 2 * a3 + a4)
            y2 += h / 6 * (b1 + 2 * b2 + 2 * b3 + b4)
            ts.append(seg_start + (k + 1) * h)
            ys.append((y1, y2))
    ts = np.array(ts)
    ys = np.array(ys)
    t_out = None if t_out is None else np.asarray(t_out, dtype=float)
    if t_out is not None:
        return Trajectory(t_out, np.interp(t_out, ts, ys[:, 0]), np.interp(t_out, ts, ys[:, 1]))
    return Trajectory(ts, ys[:, 0], ys[:, 1])


def full_trajectory(a: float, b: float, init: InitialState, t_grid,
                    mu: float | None = None, t_c: float | None = None) -> Trajectory:
    """Plain regime up to ``t_c``, then the overloaded regime anchored there.

    The anchor is the mean-field state at ``t_c``.  Without ``t_c`` (or with
    ``t_c`` past the grid) the whole grid is the plain regime.
    """
    t = _grid(t_grid)
    if t_c is None or mu is None or t_c >= t[-1]:
        return pre_overload(a, b, init, t)
    if t_c <= init.t0:
        return post_overload(a, b, mu, init, t)
    before = t[t < t_c]
    after = t[t >= t_c]
    at_tc = pre_overload(a, b, init, [t_c])
    anchor = InitialState(t_c, float(at_tc.x1[0]), t_c - float(at_tc.x1[0]))
    parts = [pre_overload(a, b, init, before)] if len(before) else []
    parts.append(post_overload(a, b, mu, anchor, after))
    return Trajectory(np.concatenate([p.t for p in parts]),
                      np.concatenate([p.x1 for p in parts]),
                      np.concatenate([p.x2 for p in parts]))
