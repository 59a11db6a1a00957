"""Monte Carlo simulation of rating dynamics and rival punishment schemes.

Accounting is expected-cost: malware events are never sampled, only the
public signals (and, for tit-for-tat, the pairwise observations) are
random.  Each period of length T, traffic from sender i to receiver j
carries malware probability p_{rating(j)} when i runs the service and
p_high otherwise; AS j pays (sum_i q_ij * lambda_ij) * T plus c * T when
deploying.  Signals are correct with probability 1 - epsilon(T) and the
rating is the last signal.  Per-AS utilities discount at exp(-beta*T) per
period.

Two rival schemes are modeled for comparison.  Grim trigger: everyone
deploys and filters fully until any public signal reads "deviate", then
nobody deploys again (absorbing).  Tit-for-tat: an AS that sees its
partner skip deployment sends that partner unfiltered traffic for one
period.  Two modeling choices are deliberate and recorded here: the
pairwise observation is of the partner's deployment action (punishment
traffic does not itself trigger counter-punishment, otherwise observation
noise drives every pair to punish half the time regardless of patience),
and deployment follows the static myopic break-even rule, deploy iff
exp(-beta*T) * (p_high - p_low) * nu_mutual > c, where nu_mutual counts
inbound traffic from reciprocal partners (retaliation arrives one period
late, hence the discount).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .design import (
    Environment,
    MonitoringModel,
    RatingDesign,
    ic_check,
    minimize_loss_factor,
    optimal_design,
)
from .network import Subset, TrafficMatrix, critical_members, critical_traffic

__all__ = [
    "Behavior",
    "BehaviorProfile",
    "ComparisonRow",
    "DeviationGain",
    "SimReport",
    "SimState",
    "deviation_gain",
    "run_benchmark",
    "run_strategy_comparison",
    "simulate",
]

KINDS = (
    "compliant",
    "persistent-deviator",
    "one-shot-deviator",
    "tit-for-tat",
    "grim-trigger",
    "never-deploy",
    "always-deploy",
)

_Z95 = 1.6448536269514722  # one-sided 95% normal quantile


@dataclass(frozen=True)
class Behavior:
    kind: str
    at_period: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown behavior kind: {self.kind!r}")
        if self.kind == "one-shot-deviator":
            if self.at_period is None or self.at_period < 0:
                raise ValueError("one-shot-deviator needs at_period >= 0")
        elif self.at_period is not None:
            raise ValueError(f"{self.kind} takes no at_period")


@dataclass(frozen=True)
class BehaviorProfile:
    behaviors: tuple[Behavior, ...]

    @classmethod
    def uniform(cls, n: int, kind: str, at_period: int | None = None
                ) -> "BehaviorProfile":
        return cls(tuple(Behavior(kind, at_period) for _ in range(n)))

    @classmethod
    def compliant(cls, n: int) -> "BehaviorProfile":
        return cls.uniform(n, "compliant")

    @classmethod
    def never_deploy(cls, n: int) -> "BehaviorProfile":
        return cls.uniform(n, "never-deploy")

    def replace(self, i: int, behavior: Behavior) -> "BehaviorProfile":
        items = list(self.behaviors)
        items[i] = behavior
        return BehaviorProfile(tuple(items))

    def kinds(self) -> tuple[str, ...]:
        return tuple(b.kind for b in self.behaviors)

    def __len__(self) -> int:
        return len(self.behaviors)


@dataclass(frozen=True)
class SimState:
    """End-of-run state: period counter, final ratings (rating runs only),
    active tit-for-tat grudges as (punisher, target) pairs, trigger flag."""

    period: int
    ratings: tuple[int, ...] | None
    tft_grudges: tuple[tuple[int, int], ...] | None
    trigger_fired: bool


@dataclass(frozen=True)
class SimReport:
    horizon: int
    period_length: float
    seed: int
    avg_cost: float
    avg_cost_per_as: tuple[float, ...]
    discounted_utility: tuple[float, ...]
    rating_high_fraction: tuple[float, ...] | None
    punishment_fraction: float | None
    final_state: SimState
    time_series: dict | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = {
            "horizon": self.horizon,
            "period_length": self.period_length,
            "seed": self.seed,
            "avg_cost": self.avg_cost,
            "avg_cost_per_as": list(self.avg_cost_per_as),
            "discounted_utility": list(self.discounted_utility),
            "rating_high_fraction": (
                None if self.rating_high_fraction is None
                else list(self.rating_high_fraction)
            ),
            "punishment_fraction": self.punishment_fraction,
            "meta": self.meta,
        }
        if self.time_series is not None:
            ts = {}
            for k, v in self.time_series.items():
                vals = np.asarray(v, dtype=float).tolist()
                ts[k] = [None if math.isnan(x) else x for x in vals]
            d["time_series"] = ts
        return d

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def write_time_series_csv(self, path) -> None:
        if self.time_series is None:
            raise ValueError("run simulate(..., time_series=True) first")
        ts = self.time_series
        with open(path, "w", newline="") as fh:
            fh.write("period,total_cost,trigger_fired,mean_rating\n")
            for k in range(self.horizon):
                cost = repr(float(ts["total_cost"][k]))
                rating = float(ts["mean_rating"][k])
                rating_cell = "" if math.isnan(rating) else repr(rating)
                fh.write(
                    f"{k},{cost},{int(ts['trigger_fired'][k])},{rating_cell}\n"
                )


def _check_profile(profile: BehaviorProfile, n: int) -> None:
    if len(profile) != n:
        raise ValueError(
            f"profile has {len(profile)} behaviors for {n} ASs"
        )
    kinds = set(profile.kinds())
    for special in ("tit-for-tat", "grim-trigger"):
        if special in kinds and kinds != {special}:
            raise ValueError(
                f"{special} profiles must be uniform across ASs; "
                "mixing with other behaviors is not modeled"
            )


def simulate(design: RatingDesign, profile: BehaviorProfile, env: Environment,
             mon: MonitoringModel, tm: TrafficMatrix, horizon: int, seed: int,
             *, time_series: bool = False) -> SimReport:
    """Run one seeded path and report per-unit-time costs, discounted
    utilities, and scheme-specific state summaries.  Identical arguments
    and seed reproduce the report bit for bit."""
    n = tm.n
    _check_profile(profile, n)
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    eps = float(mon.epsilon(design.T))
    if not 0 <= eps <= 0.5:
        raise ValueError("monitoring error must lie in [0, 1/2]")
    rng = np.random.default_rng(seed)
    u_signal = rng.random((horizon, n))
    kinds = set(profile.kinds())
    if kinds == {"tit-for-tat"}:
        return _simulate_tft(design, env, tm, horizon, seed, eps, rng,
                             time_series)
    if kinds == {"grim-trigger"}:
        return _simulate_trigger(design, env, tm, horizon, seed, eps,
                                 u_signal, time_series)
    return _simulate_rating(design, profile, env, tm, horizon, seed, eps,
                            u_signal, time_series)


def _report(design, env, tm, horizon, seed, cost, extra, time_series_cols,
            meta) -> SimReport:
    T = design.T
    delta = math.exp(-env.beta * T)
    disc = delta ** np.arange(horizon)
    utility = -(disc[:, None] * cost).sum(axis=0)
    per_as = cost.sum(axis=0) / (horizon * T)
    ts = None
    if time_series_cols is not None:
        ts = {
            "period": np.arange(horizon),
            "total_cost": cost.sum(axis=1) / T,
            "trigger_fired": time_series_cols["trigger_fired"],
            "mean_rating": time_series_cols["mean_rating"],
        }
    return SimReport(
        horizon=horizon,
        period_length=T,
        seed=seed,
        avg_cost=float(per_as.sum()),
        avg_cost_per_as=tuple(float(x) for x in per_as),
        discounted_utility=tuple(float(x) for x in utility),
        rating_high_fraction=extra.get("rating_high_fraction"),
        punishment_fraction=extra.get("punishment_fraction"),
        final_state=extra["final_state"],
        time_series=ts,
        meta=meta,
    )


def _simulate_rating(design, profile, env, tm, horizon, seed, eps, u_signal,
                     want_ts) -> SimReport:
    n = tm.n
    rec = np.zeros(n, dtype=bool)
    rec[list(design.subset.members)] = True
    actions = np.tile(rec, (horizon, 1))
    for i, b in enumerate(profile.behaviors):
        if b.kind == "compliant":
            continue
        if b.kind == "persistent-deviator":
            actions[:, i] = ~rec[i]
        elif b.kind == "never-deploy":
            actions[:, i] = False
        elif b.kind == "always-deploy":
            actions[:, i] = True
        elif b.kind == "one-shot-deviator":
            if b.at_period < horizon:
                actions[b.at_period, i] = ~rec[i]
    compliant = actions == rec
    signal_high = (u_signal < 1.0 - eps) == compliant
    ratings = np.empty((horizon, n), dtype=bool)
    ratings[0] = True
    ratings[1:] = signal_high[:-1]
    inbound = tm.rates.sum(axis=0)
    deployed_in = actions.astype(float) @ tm.rates
    p_recv = np.where(ratings, design.p1, design.p0)
    cost = (p_recv * deployed_in + env.p_high * (inbound - deployed_in)
            + actions * env.c) * design.T
    ts_cols = None
    if want_ts:
        ts_cols = {
            "trigger_fired": np.zeros(horizon, dtype=bool),
            "mean_rating": ratings.mean(axis=1),
        }
    state = SimState(
        period=horizon,
        ratings=tuple(int(r) for r in ratings[-1]),
        tft_grudges=None,
        trigger_fired=False,
    )
    extra = {
        "rating_high_fraction": tuple(float(x) for x in ratings.mean(axis=0)),
        "punishment_fraction": None,
        "final_state": state,
    }
    meta = {"mode": "rating", "profile": list(profile.kinds()),
            "design": {"T": design.T, "p0": design.p0, "p1": design.p1,
                       "subset": list(design.subset.members)}}
    return _report(design, env, tm, horizon, seed, cost, extra, ts_cols, meta)


def _simulate_trigger(design, env, tm, horizon, seed, eps, u_signal,
                      want_ts) -> SimReport:
    n = tm.n
    rec = np.zeros(n, dtype=bool)
    rec[list(design.subset.members)] = True
    signal_high = u_signal < 1.0 - eps  # everyone compliant until it fires
    bad = ~signal_high.all(axis=1)
    bad_idx = np.flatnonzero(bad)
    first_bad = int(bad_idx[0]) if bad_idx.size else horizon
    fired = np.arange(horizon) > first_bad
    inbound = tm.rates.sum(axis=0)
    deployed_in = rec.astype(float) @ tm.rates
    pre_cost = (env.p_low * deployed_in
                + env.p_high * (inbound - deployed_in)
                + rec * env.c) * design.T
    post_cost = env.p_high * inbound * design.T
    cost = np.where(fired[:, None], post_cost, pre_cost)
    ts_cols = None
    if want_ts:
        ts_cols = {
            "trigger_fired": fired,
            "mean_rating": np.full(horizon, np.nan),
        }
    state = SimState(period=horizon, ratings=None, tft_grudges=None,
                     trigger_fired=first_bad < horizon)
    extra = {
        "rating_high_fraction": None,
        "punishment_fraction": float(fired.mean()),
        "final_state": state,
    }
    meta = {"mode": "trigger", "first_bad_period": first_bad,
            "design": {"T": design.T, "subset": list(design.subset.members)}}
    return _report(design, env, tm, horizon, seed, cost, extra, ts_cols, meta)


def _simulate_tft(design, env, tm, horizon, seed, eps, rng, want_ts
                  ) -> SimReport:
    n = tm.n
    rates = tm.rates
    sends = rates > 0
    if np.any(sends & ~sends.T):
        warnings.warn(
            "tit-for-tat punishment needs reciprocal traffic; some links "
            "here are one-way and cannot be punished",
            stacklevel=3,
        )
    observable = sends.T  # [j, i]: j sees i's action via i -> j traffic
    nu_mutual = (rates * sends.T).sum(axis=0)
    deploy = math.exp(-env.beta * design.T) * env.gap * nu_mutual > env.c
    u_obs = rng.random((horizon, n, n))  # [t, j, i]
    deviates = ~deploy  # static actions
    obs_deviate = (deviates[None, None, :] ^ (u_obs < eps)) & observable[None, :, :]
    grudges = np.zeros((horizon, n, n), dtype=bool)
    grudges[1:] = obs_deviate[:-1]
    quality = np.where(
        (~deploy[None, :, None]) | grudges, env.p_high, env.p_low
    )
    cost = (np.einsum("tji,ji->ti", quality, rates)
            + deploy * env.c) * design.T
    ts_cols = None
    if want_ts:
        ts_cols = {
            "trigger_fired": np.zeros(horizon, dtype=bool),
            "mean_rating": np.full(horizon, np.nan),
        }
    final_grudges = tuple(
        (int(j), int(i)) for j, i in zip(*np.nonzero(grudges[-1]))
    )
    state = SimState(period=horizon, ratings=None,
                     tft_grudges=final_grudges, trigger_fired=False)
    mutual_links = int((sends & sends.T).sum())
    extra = {
        "rating_high_fraction": None,
        "punishment_fraction": None,
        "final_state": state,
    }
    meta = {
        "mode": "tit-for-tat",
        "deploying": [int(i) for i in np.flatnonzero(deploy)],
        "mean_grudges_per_period": float(grudges.sum() / horizon),
        "mutual_links": mutual_links,
        "design": {"T": design.T},
    }
    return _report(design, env, tm, horizon, seed, cost, extra, ts_cols, meta)


@dataclass(frozen=True)
class DeviationGain:
    """Paired-seed comparison of AS i's discounted utility when it deviates
    persistently versus complying, everyone else compliant."""

    as_index: int
    gains: tuple[float, ...]
    mean: float
    std: float
    stderr: float
    compliant_mean: float
    deviant_mean: float
    significantly_positive: bool
    significantly_negative: bool


def deviation_gain(design: RatingDesign, env: Environment,
                   mon: MonitoringModel, tm: TrafficMatrix, i: int,
                   horizon: int, seeds) -> DeviationGain:
    """Monte Carlo estimate of the utility gain from persistent deviation.

    The same seed is reused for the compliant and deviant runs (common
    random numbers), so for an IC design the estimate concentrates at or
    below zero; significance flags are one-sided z-tests at 95%."""
    if isinstance(seeds, int):
        seeds = range(seeds)
    seeds = list(seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    n = tm.n
    base = BehaviorProfile.compliant(n)
    dev = base.replace(i, Behavior("persistent-deviator"))
    gains = []
    comp_u = []
    dev_u = []
    for s in seeds:
        rc = simulate(design, base, env, mon, tm, horizon, s)
        rd = simulate(design, dev, env, mon, tm, horizon, s)
        comp_u.append(rc.discounted_utility[i])
        dev_u.append(rd.discounted_utility[i])
        gains.append(dev_u[-1] - comp_u[-1])
    arr = np.array(gains)
    mean = float(arr.mean())
    std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    se = std / math.sqrt(len(arr)) if len(arr) > 1 else 0.0
    if se > 0:
        pos = mean - _Z95 * se > 0
        neg = mean + _Z95 * se < 0
    else:
        pos = mean > 0
        neg = mean < 0
    return DeviationGain(
        as_index=i,
        gains=tuple(gains),
        mean=mean,
        std=std,
        stderr=se,
        compliant_mean=float(np.mean(comp_u)),
        deviant_mean=float(np.mean(dev_u)),
        significantly_positive=pos,
        significantly_negative=neg,
    )


def run_benchmark(kind: str, env: Environment, mon: MonitoringModel,
                  tm: TrafficMatrix, horizon: int, seed: int,
                  fixed: tuple[float, float, float] | None = None,
                  *, time_series: bool = False) -> SimReport:
    """Simulate one of the reference schemes.

    no-otc: nobody deploys.  rating-independent: prices ignore ratings, so
    nobody deploys in equilibrium (costs match no-otc exactly).
    worst-best: maximal punishment spread (p_high, p_low) with the loss
    factor minimized over feasible periods.  fixed: given (T, p0, p1),
    compliant when IC, otherwise nobody deploys.  optimal: the
    cost-minimizing IC design."""
    n = tm.n
    full = Subset.full(n)
    empty = Subset(())
    never = BehaviorProfile.never_deploy(n)
    compliant = BehaviorProfile.compliant(n)

    if kind == "no-otc":
        design = RatingDesign(1.0, env.p_high, env.p_high, empty)
        profile = never
        note = "no service anywhere"
    elif kind == "rating-independent":
        design = RatingDesign(1.0, env.p_low, env.p_low, full)
        profile = never
        note = "prices ignore ratings; deploying is dominated"
    elif kind == "worst-best":
        found = minimize_loss_factor(env, mon, critical_traffic(tm, full))
        if found is None:
            design = RatingDesign(1.0, env.p_high, env.p_high, empty)
            profile = never
            note = "maximal spread infeasible; falling back to no deployment"
        else:
            design = RatingDesign(found[0], env.p_high, env.p_low, full)
            profile = compliant
            note = "maximal punishment spread at the loss-minimizing period"
    elif kind == "fixed":
        if fixed is None:
            raise ValueError("fixed benchmark needs (T, p0, p1)")
        t, p0, p1 = fixed
        design = RatingDesign(t, p0, p1, full)
        binding = critical_members(tm, full)[0]
        if ic_check(design, env, mon, tm, binding):
            profile = compliant
            note = "fixed design is IC; compliant play"
        else:
            design = RatingDesign(t, p0, p1, empty)
            profile = never
            note = "fixed design is not IC; nobody deploys"
    elif kind == "optimal":
        result = optimal_design(env, mon, tm, full)
        if result.feasible:
            design = result.design()
            profile = compliant
            note = "cost-minimizing IC design"
        else:
            design = RatingDesign(1.0, env.p_high, env.p_high, empty)
            profile = never
            note = "no IC design exists; nobody deploys"
    else:
        raise ValueError(f"unknown benchmark kind: {kind!r}")

    report = simulate(design, profile, env, mon, tm, horizon, seed,
                      time_series=time_series)
    meta = dict(report.meta)
    meta["benchmark"] = kind
    meta["note"] = note
    return replace(report, meta=meta)


@dataclass(frozen=True)
class ComparisonRow:
    beta: float
    kind: str
    avg_cost: float
    avg_cost_std: float
    punishment_fraction: float | None
    seeds: int


def run_strategy_comparison(kind: str, env: Environment, mon: MonitoringModel,
                            tm: TrafficMatrix, T: float, horizon: int,
                            seeds, beta_grid: Sequence[float]
                            ) -> tuple[ComparisonRow, ...]:
    """Average cost of a punishment scheme across discount rates.

    kind "rating" re-optimizes the full-set design at each beta (its own
    period); "tft" and "trigger" run at the given period T."""
    if kind not in ("tft", "trigger", "rating"):
        raise ValueError(f"unknown comparison kind: {kind!r}")
    if isinstance(seeds, int):
        seeds = range(seeds)
    seeds = list(seeds)
    n = tm.n
    full = Subset.full(n)
    rows = []
    for beta in beta_grid:
        env_b = replace(env, beta=float(beta))
        costs = []
        punish = []
        for s in seeds:
            if kind == "rating":
                result = optimal_design(env_b, mon, tm, full)
                if result.feasible:
                    rep = simulate(result.design(), BehaviorProfile.compliant(n),
                                   env_b, mon, tm, horizon, s)
                else:
                    rep = run_benchmark("no-otc", env_b, mon, tm, horizon, s)
            elif kind == "tft":
                design = RatingDesign(T, env.p_high, env.p_low, full)
                rep = simulate(design, BehaviorProfile.uniform(n, "tit-for-tat"),
                               env_b, mon, tm, horizon, s)
            else:
                design = RatingDesign(T, env.p_high, env.p_low, full)
                rep = simulate(design, BehaviorProfile.uniform(n, "grim-trigger"),
                               env_b, mon, tm, horizon, s)
            costs.append(rep.avg_cost)
            if rep.punishment_fraction is not None:
                punish.append(rep.punishment_fraction)
        arr = np.array(costs)
        rows.append(ComparisonRow(
            beta=float(beta),
            kind=kind,
            avg_cost=float(arr.mean()),
            avg_cost_std=float(arr.std(ddof=1)) if len(arr) > 1 else 0.0,
            punishment_fraction=float(np.mean(punish)) if punish else None,
            seeds=len(seeds),
        ))
    return tuple(rows)
