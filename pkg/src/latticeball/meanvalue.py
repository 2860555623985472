"""Mean-value identities over the space of unimodular lattices and the
Monte Carlo statistics that test them.

The mean of the count over Haar measure is vol(tB) + 1; the second
moment for n >= 3 adds c_n * vol(tB) with

    c_n = sum over coprime pairs (q, r) of 4 / ((q r)^n max(q, r)^n),

so the remainder E = N - vol has variance 1 + (c_n - 2) vol(tB).  The
constant is summed here with a proven tail bound instead of a fixed
cutoff.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .basis import LatticeBasis
from .counting import ball_volume, error_term, unit_ball_volume
from .sampling import Seed


class CalibrationError(RuntimeError):
    """Sampler failed its distributional calibration gate."""


# ---------------------------------------------------------------------------
# The lattice-sum constant c_n
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CnResult:
    n: int
    value: float
    tail_bound: float
    terms_used: int
    cutoff: int


def _zeta_upper(n: int) -> float:
    """Upper bound on zeta(n) from a partial sum plus integral tail."""
    K = 1000
    s = sum(k ** -float(n) for k in range(1, K + 1))
    return s + K ** (1 - n) / (n - 1)


def compute_cn(n: int, tol: float = 1e-10) -> CnResult:
    """Sum the coprime pair series until the tail provably drops below tol.

    Pairs with max(q, r) > Q contribute at most
    8 zeta(n) Q^(1-2n) / (2n - 1), which fixes the cutoff.
    """
    if n < 3:
        raise ValueError("the pair series is used for n >= 3 only")
    if tol < 1e-14:
        raise ValueError("requested tolerance is below achievable precision")
    z = _zeta_upper(n)
    Q = math.ceil((8.0 * z / ((2 * n - 1) * tol)) ** (1.0 / (2 * n - 1))) + 1
    total = 0.0
    terms = 0
    for q in range(1, Q + 1):
        qn = float(q) ** n
        for r in range(1, Q + 1):
            if math.gcd(q, r) == 1:
                total += 4.0 / (qn * float(r) ** n * float(max(q, r)) ** n)
                terms += 1
    tail = 8.0 * z * Q ** (1 - 2 * n) / (2 * n - 1)
    return CnResult(n=n, value=total, tail_bound=tail, terms_used=terms,
                    cutoff=Q)


# ---------------------------------------------------------------------------
# First and second moment predictions
# ---------------------------------------------------------------------------


def siegel_mean(n: int, t: float) -> float:
    """Haar average of the count: volume plus one (the origin's term)."""
    if t < 0:
        raise ValueError("radius must be nonnegative")
    return unit_ball_volume(n) * t ** n + 1.0


def rogers_second_moment(n: int, t: float, cn: CnResult) -> float:
    if n < 3:
        raise ValueError("second-moment formula requires n >= 3")
    if cn.n != n:
        raise ValueError("cn was computed for a different dimension")
    vol = unit_ball_volume(n) * t ** n
    return vol * vol + 1.0 + cn.value * vol


def variance_prediction(n: int, t: float, cn: CnResult) -> float:
    """Var[N - vol] = 1 + (c_n - 2) vol(tB) over unimodular lattices."""
    if n < 3:
        raise ValueError("variance formula requires n >= 3")
    if cn.n != n:
        raise ValueError("cn was computed for a different dimension")
    vol = unit_ball_volume(n) * t ** n
    return 1.0 + (cn.value - 2.0) * vol


# ---------------------------------------------------------------------------
# Monte Carlo statistics of the remainder
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentStats:
    t: float
    samples: int
    mean_E: float
    rms_E: float
    var_E: float
    stderr_var: float
    mean_count: float
    seed: Seed


def thread_count() -> int:
    env = os.environ.get("LATTICEBALL_THREADS", "")
    if env.strip():
        k = int(env)
        if k < 1:
            raise ValueError("LATTICEBALL_THREADS must be positive")
        return k
    return os.cpu_count() or 1


def mc_stats(sampler, t: float, samples: int, seed: Seed) -> ExperimentStats:
    """Remainder statistics over ``samples`` independent draws.

    sampler is any callable Seed -> LatticeBasis.  Sample i always uses
    seed.child(i), and results land in a preallocated slot before a
    single ordered reduction, so the numbers are identical for every
    thread count.
    """
    if samples < 2:
        raise ValueError("need at least two samples")
    if t < 0:
        raise ValueError("radius must be nonnegative")
    E = np.empty(samples)
    counts = np.empty(samples)

    def run(i: int) -> None:
        X = sampler(seed.child(i))
        c = float(error_term(X, t))
        E[i] = c
        counts[i] = c + ball_volume(X.n, t, X.det)

    workers = thread_count()
    if workers == 1:
        for i in range(samples):
            run(i)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, range(samples)))

    mean = float(np.mean(E))
    rms = float(np.sqrt(np.mean(E * E)))
    var = float(np.var(E, ddof=1))
    m4 = float(np.mean((E - mean) ** 4))
    stderr_var = math.sqrt(max(m4 - var * var, 0.0) / samples)
    return ExperimentStats(t=t, samples=samples, mean_E=mean, rms_E=rms,
                           var_E=var, stderr_var=stderr_var,
                           mean_count=float(np.mean(counts)), seed=seed)


def siegel_calibration(stats: ExperimentStats, n: int) -> tuple[float, float]:
    """Residual of the empirical mean count against vol + 1, and the
    standard error of that mean.  A sampler within its statistical
    rights keeps |residual| below a few stderr."""
    resid = stats.mean_count - siegel_mean(n, stats.t)
    stderr_mean = math.sqrt(stats.var_E / stats.samples)
    return resid, stderr_mean


# ---------------------------------------------------------------------------
# Scaling fits and the exact scaling identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingFit:
    slope: float
    intercept: float
    max_residual: float


def fit_scaling_exponent(points) -> ScalingFit:
    """Least squares in log-log coordinates for (t, rms) pairs."""
    pts = [(float(a), float(b)) for a, b in points]
    if len(pts) < 3:
        raise ValueError("need at least three points")
    if any(t <= 1.0 for t, _ in pts):
        raise ValueError("t values must exceed 1")
    if any(r <= 0.0 for _, r in pts):
        raise ValueError("rms values must be positive (degenerate data)")
    x = np.log([t for t, _ in pts])
    y = np.log([r for _, r in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.max(np.abs(y - (slope * x + intercept))))
    return ScalingFit(slope=float(slope), intercept=float(intercept),
                      max_residual=resid)


def scaling_identity_check(basis: LatticeBasis, r: float, t: float,
                           tol: float = 1e-9) -> bool:
    """error_term(rX, t) must equal error_term(X, t/r) exactly in exact
    arithmetic; verified here to an absolute tolerance."""
    if r <= 0:
        raise ValueError("scale must be positive")
    left = error_term(basis.scaled(r), t)
    right = error_term(basis, t / r)
    return abs(left - right) <= tol
