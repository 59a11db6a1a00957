"""Rating-system design: incentive constraints and cost-optimal parameters.

The recommendation is that every AS in a deployment set P keeps a security
service running.  Compliance is monitored imperfectly: once per assessment
period of length T a public binary signal per AS is correct with
probability 1 - epsilon(T), and the AS's public rating is set to the last
signal.  Senders filter traffic toward a receiver at quality p1 (low
malware rate) when its rating is high and p0 when low; traffic from
non-deploying senders carries malware at the ambient rate p_high.

A design (T, p0, p1) is incentive compatible (IC) for AS i in P when

    (1 - 2*epsilon(T)) * exp(-beta*T) * (p0 - p1) * nu_i(P) >= c

with nu_i(P) the inbound rate of i from within P.  The binding member is
the one with minimal nu_i(P) (critical traffic nu_crit).  Among IC designs,
long-run cost is minimized by pushing p1 to p_low, choosing p0 at the IC
boundary, and picking T to minimize the efficiency loss factor

    g(T) = exp(beta*T) * epsilon(T) / (1 - 2*epsilon(T))

over the feasible periods, i.e. those where the boundary p0 stays within
[p_low, p_high].  The resulting long-run cost per unit time is

    J = (p_low + g(T*) * c / nu_crit) * sum(mu_i, i in P)
        + p_high * sum(mu_i, i not in P) + |P| * c.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .network import Subset, TrafficMatrix, critical_members, critical_traffic

__all__ = [
    "AssumptionCheck",
    "AssumptionReport",
    "DesignResult",
    "Environment",
    "IcRegion",
    "MonitoringModel",
    "NotIncentiveCompatibleError",
    "PeriodInterval",
    "RatingDesign",
    "efficiency_loss_factor",
    "feasible_period_interval",
    "fds_sufficient",
    "first_best",
    "ic_check",
    "ic_region_beta_max",
    "minimize_loss_factor",
    "optimal_design",
    "security_cost",
    "validate_assumptions",
]


class NotIncentiveCompatibleError(ValueError):
    """Raised when a cost evaluation is asked for a non-IC design."""

    def __init__(self, violators: tuple[int, ...]):
        self.violators = violators
        super().__init__(
            f"design is not incentive compatible for ASs {list(violators)}"
        )


@dataclass(frozen=True)
class Environment:
    """Economic primitives: malware rates without/with filtering, the
    per-period deployment cost rate c, and the discount rate beta."""

    p_high: float
    p_low: float
    c: float
    beta: float

    def __post_init__(self) -> None:
        if not 0 <= self.p_low <= 1:
            raise ValueError("p_low must lie in [0, 1]")
        if not 0 <= self.p_high <= 1:
            raise ValueError("p_high must lie in [0, 1]")
        if self.p_low >= self.p_high:
            raise ValueError("p_low must be strictly below p_high")
        if self.c <= 0:
            raise ValueError("c must be positive")
        if self.beta <= 0:
            raise ValueError("beta must be positive")

    @property
    def gap(self) -> float:
        return self.p_high - self.p_low


class MonitoringModel:
    """Monitoring error curve epsilon(T).

    Two kinds: the rational family epsilon(T) = w0 / (T + 2*w0), and
    tabulated curves interpolated piecewise-linearly.  Validity (the curve
    is non-increasing, convex, starts at or below 1/2) is analytic for the
    rational family and checked on the table for custom curves; tabulated
    curves hold their endpoint values outside the table's range.
    """

    def __init__(self, kind: str, w0: float | None = None, table=None) -> None:
        self.kind = kind
        self.w0 = w0
        self._ts: np.ndarray | None = None
        self._eps: np.ndarray | None = None
        if kind == "rational":
            if w0 is None or w0 <= 0:
                raise ValueError("w0 must be positive")
        elif kind == "tabulated":
            ts = np.array([t for t, _ in table], dtype=float)
            es = np.array([e for _, e in table], dtype=float)
            if len(ts) < 2:
                raise ValueError("tabulated curve needs at least 2 points")
            if np.any(np.diff(ts) <= 0):
                raise ValueError("tabulated periods must be strictly increasing")
            if ts[0] < 0:
                raise ValueError("tabulated periods must be non-negative")
            if np.any(es < 0) or np.any(es > 0.5):
                raise ValueError("tabulated errors must lie in [0, 0.5]")
            if np.any(np.diff(es) > 1e-12):
                raise ValueError("tabulated errors must be non-increasing")
            if len(es) >= 3:
                second = np.diff(es, 2)
                if np.any(second < -1e-9):
                    raise ValueError("tabulated errors must be convex")
            self._ts, self._eps = ts, es
        else:
            raise ValueError(f"unknown monitoring kind: {kind!r}")

    @classmethod
    def rational(cls, w0: float) -> "MonitoringModel":
        return cls("rational", w0=w0)

    @classmethod
    def tabulated(cls, points: Sequence[tuple[float, float]]) -> "MonitoringModel":
        return cls("tabulated", table=points)

    def epsilon(self, T):
        if self.kind == "rational":
            return self.w0 / (np.asarray(T, dtype=float) + 2 * self.w0)
        return np.interp(np.asarray(T, dtype=float), self._ts, self._eps)

    def validity_report(self) -> tuple[bool, str]:
        if self.kind == "rational":
            return True, (
                f"rational family w0={self.w0}: decreasing and convex with "
                "epsilon(0)=1/2 analytically"
            )
        tail = float(self._eps[-1])
        return True, (
            f"tabulated curve checked on {len(self._ts)} points: non-increasing, "
            f"convex, epsilon(0)<=1/2; tail value {tail} (limit not verifiable "
            "from a finite table)"
        )

    def __repr__(self) -> str:
        if self.kind == "rational":
            return f"MonitoringModel.rational(w0={self.w0})"
        return f"MonitoringModel.tabulated({len(self._ts)} points)"


@dataclass(frozen=True)
class RatingDesign:
    """A concrete rating-system parameterization for a deployment set."""

    T: float
    p0: float
    p1: float
    subset: Subset

    def __post_init__(self) -> None:
        if self.T <= 0:
            raise ValueError("T must be positive")
        if self.p1 > self.p0:
            raise ValueError("p1 must not exceed p0")


@dataclass(frozen=True)
class PeriodInterval:
    """Closed interval of feasible assessment periods; lo == 0.0 means the
    infimum is 0 and arbitrarily small periods are feasible."""

    lo: float
    hi: float

    def contains(self, t: float) -> bool:
        return self.lo <= t <= self.hi


@dataclass(frozen=True)
class DesignResult:
    subset: Subset
    feasible: bool
    t_star: float | None
    p0_star: float | None
    p1_star: float | None
    g_star: float | None
    j_star: float | None
    binding_as: int | None
    diagnostic: str | None = None

    @classmethod
    def infeasible(cls, subset: Subset, diagnostic: str) -> "DesignResult":
        return cls(subset, False, None, None, None, None, None, None, diagnostic)

    @classmethod
    def no_deployment(cls, env: Environment, tm: TrafficMatrix) -> "DesignResult":
        j = env.p_high * float(tm.rates.sum())
        return cls(Subset(()), True, None, None, None, None, j, None,
                   "no deployment")

    def design(self) -> RatingDesign:
        if not self.feasible or self.t_star is None:
            raise ValueError("no design parameters available")
        return RatingDesign(self.t_star, self.p0_star, self.p1_star, self.subset)


@dataclass(frozen=True)
class IcRegion:
    """Largest discount rate an existing design tolerates, plus whether the
    monitoring error at T -> 0 is small enough that every finite discount
    rate admits some IC design."""

    beta_max: float
    ic_for_all_beta: bool


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class AssumptionReport:
    monitor: AssumptionCheck
    viability: AssumptionCheck
    social_gain: AssumptionCheck
    subset_note: str | None = None

    @property
    def all_ok(self) -> bool:
        return self.monitor.passed and self.viability.passed and self.social_gain.passed

    def to_dict(self) -> dict:
        d = {
            c.name: {"passed": c.passed, "detail": c.detail}
            for c in (self.monitor, self.viability, self.social_gain)
        }
        if self.subset_note:
            d["subset_note"] = self.subset_note
        return d


# ---- numeric helpers ------------------------------------------------------

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(f, a: float, b: float, rel_tol: float = 1e-9,
                max_iter: int = 256) -> tuple[float, float]:
    """Golden-section minimum of a unimodal f on [a, b]."""
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    for _ in range(max_iter):
        if b - a <= rel_tol * max(abs(a), abs(b), 1e-300):
            break
        if f1 < f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = f(x2)
    x = (a + b) / 2.0
    return x, f(x)


def _bisect_edge(pred, lo: float, hi: float, want_high_true: bool,
                 iters: int = 64) -> float:
    """Boundary of a monotone predicate on [lo, hi].

    want_high_true: pred holds at hi and fails at lo (returns the smallest
    true point); otherwise pred holds at lo and fails at hi (largest true
    point)."""
    for _ in range(iters):
        mid = (lo + hi) / 2.0
        if pred(mid) == want_high_true:
            hi = mid
        else:
            lo = mid
    return hi if want_high_true else lo


def _loss_factor(env: Environment, mon: MonitoringModel, T):
    eps = mon.epsilon(T)
    denom = 1.0 - 2.0 * eps
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.exp(env.beta * np.asarray(T, dtype=float)) * eps / denom
    return np.where(denom > 0, out, np.inf)


def _ic_headroom(env: Environment, mon: MonitoringModel, T):
    """exp(beta*T) / (1 - 2*epsilon(T)); IC designs exist at T iff this is
    at most (p_high - p_low) * nu_crit / c."""
    eps = mon.epsilon(T)
    denom = 1.0 - 2.0 * eps
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        out = np.exp(env.beta * np.asarray(T, dtype=float)) / denom
    return np.where(denom > 0, out, np.inf)


# ---- operations -----------------------------------------------------------


def efficiency_loss_factor(env: Environment, mon: MonitoringModel, T: float) -> float:
    """g(T); the per-unit-traffic overhead multiplier of the binding design."""
    if T <= 0:
        raise ValueError("T must be positive")
    if float(mon.epsilon(T)) >= 0.5:
        raise ValueError("efficiency loss factor undefined where epsilon >= 1/2")
    return float(_loss_factor(env, mon, T))


def feasible_period_interval(
    env: Environment, mon: MonitoringModel, nu_crit: float
) -> PeriodInterval | None:
    """Assessment periods admitting an IC design with prices in
    [p_low, p_high] for critical traffic nu_crit; None when empty."""
    if nu_crit <= 0:
        return None
    bound = env.gap * nu_crit / env.c
    if bound <= 1.0:
        return None
    t_cap = math.log(bound) / env.beta
    h = lambda t: float(_ic_headroom(env, mon, t))
    t_min, h_min = _golden_min(h, t_cap * 1e-12, t_cap)
    if h_min > bound:
        return None
    t_tiny = t_cap * 1e-15
    if h(t_tiny) <= bound:
        lo = 0.0
    else:
        lo = _bisect_edge(lambda t: h(t) <= bound, t_tiny, t_min, True)
    if h(t_cap) <= bound:
        hi = t_cap
    else:
        hi = _bisect_edge(lambda t: h(t) <= bound, t_min, t_cap, False)
    return PeriodInterval(lo, hi)


def minimize_loss_factor(
    env: Environment, mon: MonitoringModel, nu_crit: float
) -> tuple[float, float] | None:
    """(T*, g*) minimizing the loss factor over feasible periods, or None.

    Coarse log-spaced bracketing (1024 points) followed by golden-section
    refinement to 1e-9 relative width."""
    interval = feasible_period_interval(env, mon, nu_crit)
    if interval is None:
        return None
    lo = max(interval.lo, interval.hi * 1e-12)
    ts = np.geomspace(lo, interval.hi, 1024)
    gs = _loss_factor(env, mon, ts)
    i = int(np.argmin(gs))
    a = ts[max(i - 1, 0)]
    b = ts[min(i + 1, len(ts) - 1)]
    f = lambda t: float(_loss_factor(env, mon, t))
    t_star, g_star = _golden_min(f, float(a), float(b))
    for t_cand, g_cand in ((float(ts[0]), float(gs[0])), (float(ts[-1]), float(gs[-1]))):
        if g_cand < g_star:
            t_star, g_star = t_cand, g_cand
    return t_star, g_star


def ic_check(design: RatingDesign, env: Environment, mon: MonitoringModel,
             tm: TrafficMatrix, i: int) -> bool:
    """One-shot deviation test for AS i.  ASs outside the deployment set
    have nothing to deviate from and are trivially IC."""
    if not 0 <= i < tm.n:
        raise ValueError(f"AS index {i} out of range")
    if i not in design.subset:
        return True
    from .network import inbound_within

    nu_i = inbound_within(tm, design.subset, i)
    eps = float(mon.epsilon(design.T))
    lhs = (1.0 - 2.0 * eps) * math.exp(-env.beta * design.T) * (
        design.p0 - design.p1
    ) * nu_i
    return lhs >= env.c * (1.0 - 1e-9)


def ic_region_beta_max(design: RatingDesign, env: Environment,
                       mon: MonitoringModel, nu_crit: float) -> IcRegion:
    """Largest beta keeping the given design IC at critical traffic nu_crit
    (0.0 when none), plus the T->0 headroom condition under which every
    finite beta admits some IC design."""
    eps = float(mon.epsilon(design.T))
    arg = (1.0 - 2.0 * eps) * (design.p0 - design.p1) * nu_crit / env.c
    beta_max = math.log(arg) / design.T if arg > 1.0 else 0.0
    eps0 = float(mon.epsilon(0.0))
    threshold = 0.5 * (1.0 - env.c / (env.gap * nu_crit)) if nu_crit > 0 else -1.0
    return IcRegion(beta_max=beta_max, ic_for_all_beta=eps0 <= threshold)


def optimal_design(env: Environment, mon: MonitoringModel, tm: TrafficMatrix,
                   subset=None) -> DesignResult:
    """Cost-minimizing IC design for the given deployment set (default all).

    Feasible results bind the IC constraint at the critical member:
    p1* = p_low and p0* sits exactly at the one-shot-deviation boundary."""
    p = Subset.full(tm.n) if subset is None else (
        subset if isinstance(subset, Subset) else Subset.of(subset, tm.n)
    )
    if len(p) == 0:
        raise ValueError("optimal_design needs a nonempty deployment set")
    nu_crit = critical_traffic(tm, p)
    if nu_crit <= 0:
        return DesignResult.infeasible(
            p,
            "zero critical traffic: some member receives no traffic from "
            "within the deployment set, so no rating design can deter it",
        )
    found = minimize_loss_factor(env, mon, nu_crit)
    if found is None:
        return DesignResult.infeasible(
            p,
            "no assessment period admits prices within [p_low, p_high] that "
            "satisfy the one-shot deviation constraint at this critical traffic",
        )
    t_star, g_star = found
    eps = float(mon.epsilon(t_star))
    p0 = math.exp(env.beta * t_star) * env.c / ((1.0 - 2.0 * eps) * nu_crit) + env.p_low
    p0 = min(p0, env.p_high)
    outbound = tm.rates.sum(axis=1)
    idx = np.fromiter(p.members, dtype=int)
    mu_in = float(outbound[idx].sum())
    mu_out = float(outbound.sum()) - mu_in
    j = (env.p_low + g_star * env.c / nu_crit) * mu_in + env.p_high * mu_out \
        + len(p) * env.c
    binding = critical_members(tm, p)[0]
    return DesignResult(
        subset=p,
        feasible=True,
        t_star=t_star,
        p0_star=p0,
        p1_star=env.p_low,
        g_star=g_star,
        j_star=j,
        binding_as=binding,
    )


def security_cost(design: RatingDesign, env: Environment, mon: MonitoringModel,
                  tm: TrafficMatrix) -> float:
    """Long-run expected cost per unit time of compliant play under the
    design.  Rejects designs that are not IC for some member."""
    if not (env.p_low <= design.p1 <= design.p0 <= env.p_high):
        raise ValueError("design prices must satisfy p_low <= p1 <= p0 <= p_high")
    violators = tuple(
        i for i in design.subset if not ic_check(design, env, mon, tm, i)
    )
    if violators:
        raise NotIncentiveCompatibleError(violators)
    eps = float(mon.epsilon(design.T))
    outbound = tm.rates.sum(axis=1)
    if len(design.subset) == 0:
        return float(env.p_high * outbound.sum())
    idx = np.fromiter(design.subset.members, dtype=int)
    mu_in = float(outbound[idx].sum())
    mu_out = float(outbound.sum()) - mu_in
    mix = (1.0 - eps) * design.p1 + eps * design.p0
    return mix * mu_in + env.p_high * mu_out + len(design.subset) * env.c


def first_best(env: Environment, tm: TrafficMatrix) -> float:
    """Cost with perfect enforcement and no monitoring loss: everyone
    deploys and fully filters."""
    return float(env.p_low * tm.rates.sum() + tm.n * env.c)


def fds_sufficient(env: Environment, mon: MonitoringModel,
                   tm: TrafficMatrix) -> bool:
    """Sufficient condition for full deployment to be the optimal
    recommendation: the minimized loss factor is small enough that every
    AS's filtering benefit to others covers its deployment cost."""
    outbound = tm.rates.sum(axis=1)
    nu_crit = critical_traffic(tm, Subset.full(tm.n))
    found = minimize_loss_factor(env, mon, nu_crit)
    if found is None:
        return False
    _, g_star = found
    threshold = ((env.gap * float(outbound.min()) - env.c) / float(outbound.sum())) \
        * nu_crit / env.c
    return g_star <= threshold


def validate_assumptions(env: Environment, mon: MonitoringModel,
                         tm: TrafficMatrix, subset=None) -> AssumptionReport:
    """Check the model-validity conditions the optimality results rely on.

    monitor: the error curve is a valid (decreasing, convex, epsilon(0) <=
    1/2) monitoring model.  viability: for every AS the deployment cost is
    below the achievable benefit, c < (p_high - p_low) * max(nu_i, mu_i).
    social_gain: the minimized full-set loss factor does not exceed
    min_i ((p_high - p_low) * mu_i - c) * nu_crit / (c * mu_i), so each
    member's contribution covers its cost after monitoring losses.
    """
    ok_mon, detail_mon = mon.validity_report()
    monitor = AssumptionCheck("monitor", ok_mon, detail_mon)

    inbound = tm.rates.sum(axis=0)
    outbound = tm.rates.sum(axis=1)
    failing = [
        int(i)
        for i in range(tm.n)
        if env.c >= env.gap * max(float(inbound[i]), float(outbound[i]))
    ]
    viability = AssumptionCheck(
        "viability",
        not failing,
        "c below (p_high - p_low) * max(inbound, outbound) for every AS"
        if not failing
        else f"cost covers no achievable benefit for ASs {failing} (0-based)",
    )

    nu_crit = critical_traffic(tm, Subset.full(tm.n))
    found = minimize_loss_factor(env, mon, nu_crit)
    if found is None:
        social = AssumptionCheck(
            "social_gain", False,
            "no IC design exists for the full set, loss factor undefined",
        )
    else:
        _, g_star = found
        margins = (env.gap * outbound - env.c) * nu_crit / (env.c * outbound)
        rhs = float(margins.min())
        social = AssumptionCheck(
            "social_gain",
            g_star <= rhs,
            f"minimized loss factor {g_star:.6g} vs per-AS margin bound {rhs:.6g}",
        )

    note = None
    if subset is not None:
        p = subset if isinstance(subset, Subset) else Subset.of(subset, tm.n)
        if len(p) > 0:
            nu_p = critical_traffic(tm, p)
            note = f"subset critical traffic {nu_p:.6g}"
    return AssumptionReport(monitor, viability, social, note)
