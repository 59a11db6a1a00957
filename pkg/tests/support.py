"""Shared helpers for the test suite: seeded random instances.

Instances are drawn by rejection so that every returned (environment,
monitor, traffic matrix) triple admits a feasible design; the stricter
variant also requires the viability and social-gain assumption checks to
pass, which the subset-search guarantees need.
"""

import numpy as np

from mutualsec import (
    Environment,
    MonitoringModel,
    Subset,
    TrafficMatrix,
    critical_traffic,
    optimal_design,
    validate_assumptions,
)


def random_connected_matrix(rng, n, lo=0.5, hi=4.0):
    """Symmetric connected traffic matrix: a random ring plus extra edges."""
    arr = np.zeros((n, n))
    order = rng.permutation(n)
    for k in range(n):
        i, j = order[k], order[(k + 1) % n]
        rate = rng.uniform(lo, hi)
        arr[i, j] = arr[j, i] = rate
    extra = int(rng.integers(0, n * (n - 1) // 2 + 1))
    for _ in range(extra):
        i, j = rng.integers(0, n, size=2)
        if i != j and arr[i, j] == 0:
            rate = rng.uniform(lo, hi)
            arr[i, j] = arr[j, i] = rate
    return TrafficMatrix.from_matrix(arr)


def random_environment(rng, nu_crit):
    p_low = float(rng.uniform(0.01, 0.15))
    p_high = float(rng.uniform(p_low + 0.1, min(p_low + 0.5, 0.95)))
    beta = float(rng.uniform(0.05, 0.6))
    c = float(rng.uniform(0.1, 0.7)) * (p_high - p_low) * nu_crit
    return Environment(p_high=p_high, p_low=p_low, c=c, beta=beta)


def random_feasible_instance(rng, n_lo=3, n_hi=8, *, require_assumptions=False,
                             max_tries=500):
    """Draw (env, mon, tm) with a feasible full-deployment design."""
    for _ in range(max_tries):
        n = int(rng.integers(n_lo, n_hi + 1))
        tm = random_connected_matrix(rng, n)
        nu = critical_traffic(tm, Subset.full(n))
        env = random_environment(rng, nu)
        mon = MonitoringModel.rational(float(rng.uniform(0.02, 0.5)))
        result = optimal_design(env, mon, tm)
        if not result.feasible:
            continue
        if require_assumptions:
            report = validate_assumptions(env, mon, tm)
            if not report.all_ok:
                continue
        return env, mon, tm
    raise RuntimeError("could not draw a feasible instance")


REFERENCE_ENV = Environment(p_high=0.3, p_low=0.05, c=0.3, beta=0.2)


def reference_instance(w0=0.1, n=8, rate=1.0):
    return (REFERENCE_ENV, MonitoringModel.rational(w0),
            TrafficMatrix.complete(n, rate))
