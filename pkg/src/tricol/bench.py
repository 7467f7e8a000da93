"""Complexity benchmark: structured fills vs dense LU vs rank-one baseline.

Wall times use a monotonic clock with one discarded warmup round and the
median of the remaining repetitions; instrumented entry-computation counts
give a noise-free view of the quadratic growth.  Runs are single-threaded
by default so the series stay comparable.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .general import invert as general_invert
from .homogeneous import hom_finite_invert
from .model import BandSpec, HomogeneousSpec, validate
from .oracles import dense_invert, sherman_morrison_invert

#: two-sided 97.5% t quantiles by degrees of freedom (slope intervals)
_T975 = {1: 12.706, 2: 4.303, 3: 3.182, 4: 2.776, 5: 2.571, 6: 2.447, 7: 2.365, 8: 2.306}


@dataclass
class BenchReport:
    """Timing and count series per method, with fitted log-log slopes."""

    sizes: list
    repetitions: int
    seed: int
    times: dict = field(default_factory=dict)       # method -> [seconds]
    counts: dict = field(default_factory=dict)      # method -> [entry ops]
    slopes: dict = field(default_factory=dict)      # method -> (slope, halfwidth)
    count_slopes: dict = field(default_factory=dict)
    insufficient: bool = False


def fit_loglog(sizes: Sequence[float], values: Sequence[float]):
    """Least-squares slope on log-log axes with a 95% halfwidth."""
    xs = np.log(np.asarray(sizes, dtype=float))
    ys = np.log(np.asarray(values, dtype=float))
    k = len(xs)
    if k < 2:
        return None
    xbar = xs.mean()
    sxx = float(np.sum((xs - xbar) ** 2))
    slope = float(np.sum((xs - xbar) * (ys - ys.mean())) / sxx)
    intercept = float(ys.mean() - slope * xbar)
    if k == 2:
        return slope, math.inf
    resid = ys - (intercept + slope * xs)
    s2 = float(np.sum(resid**2)) / (k - 2)
    halfwidth = _T975.get(k - 2, 2.306) * math.sqrt(s2 / sxx)
    return slope, halfwidth


def _random_instance(n: int, rng: np.random.Generator) -> BandSpec:
    bd = rng.uniform(0.5, 1.5, n)
    bu = rng.uniform(0.5, 1.5, n)
    bz = rng.uniform(0.05, 0.5, n)
    bu[-1] = 0.0
    return BandSpec.finite(bd, bu, bz)


def _median_time(fn, repetitions: int) -> Optional[float]:
    if repetitions <= 0:
        return None
    fn()  # warmup, discarded
    ts = []
    for _ in range(repetitions):
        t0 = time.perf_counter()
        fn()
        ts.append(time.perf_counter() - t0)
    return float(np.median(ts))


def bench(sizes: Sequence[int], repetitions: int = 3, seed: int = 0,
          kinds: Sequence[str] = ("homogeneous", "random")) -> BenchReport:
    """Time the three inversion paths on identical instances per size.

    ``repetitions = 0`` produces a counts-only report (timings skipped);
    fewer than two sizes yields no slopes and sets ``insufficient``.
    """
    sizes = sorted(int(n) for n in sizes)
    rep = BenchReport(sizes=sizes, repetitions=repetitions, seed=seed)
    rng = np.random.default_rng(seed)
    for kind in kinds:
        structured = f"structured[{kind}]"
        dense = f"dense_lu[{kind}]"
        sm = f"sherman_morrison[{kind}]"
        for name in (structured, dense, sm):
            rep.times[name] = []
        rep.counts[structured] = []
        for n in sizes:
            if kind == "homogeneous":
                spec = HomogeneousSpec(2.0, 1.0, 1.0, last=n - 1, truncation="special")
                m = validate(spec)
                run = lambda: hom_finite_invert(spec)
            else:
                band = _random_instance(n, rng)
                m = validate(band)
                run = lambda: general_invert(m)
            view = run()  # counted once, outside timing
            rep.counts[structured].append(view.report.entry_ops)
            dense_b = m.to_dense()
            rep.times[structured].append(_median_time(run, repetitions))
            rep.times[dense].append(_median_time(lambda: dense_invert(dense_b), repetitions))
            rep.times[sm].append(_median_time(lambda: sherman_morrison_invert(m), repetitions))
    if len(sizes) < 2:
        rep.insufficient = True
        return rep
    for name, series in rep.times.items():
        if None not in series:
            rep.slopes[name] = fit_loglog(sizes, series)
    for name, series in rep.counts.items():
        rep.count_slopes[name] = fit_loglog(sizes, series)
    return rep


def report_to_dict(rep: BenchReport) -> dict:
    """JSON-ready structured report."""
    return {
        "sizes": rep.sizes,
        "repetitions": rep.repetitions,
        "seed": rep.seed,
        "counts": rep.counts,
        "count_slopes": {k: list(v) for k, v in rep.count_slopes.items()},
        "times_seconds": {k: v for k, v in rep.times.items()},
        "time_slopes": {k: list(v) for k, v in rep.slopes.items()},
        "insufficient": rep.insufficient,
    }


def render_table(rep: BenchReport, with_times: bool = True) -> str:
    """Delimited table; counts are deterministic, timings are not."""
    lines = []
    head = ["size"] + [f"count:{k}" for k in rep.counts]
    lines.append("\t".join(head))
    for i, n in enumerate(rep.sizes):
        row = [str(n)] + [str(rep.counts[k][i]) for k in rep.counts]
        lines.append("\t".join(row))
    for name, sl in sorted(rep.count_slopes.items()):
        if sl is not None:
            lines.append(f"count-slope\t{name}\t{sl[0]:.4f}\t±{sl[1]:.4f}")
    if rep.insufficient:
        lines.append("insufficient sizes for slope fitting")
    if with_times and any(v and None not in v for v in rep.times.values()):
        lines.append("# timings (non-deterministic)")
        head = ["size"] + [f"ms:{k}" for k in rep.times]
        lines.append("\t".join(head))
        for i, n in enumerate(rep.sizes):
            row = [str(n)]
            for k in rep.times:
                t = rep.times[k][i]
                row.append("-" if t is None else f"{1e3 * t:.3f}")
            lines.append("\t".join(row))
        for name, sl in sorted(rep.slopes.items()):
            if sl is not None:
                lines.append(f"time-slope\t{name}\t{sl[0]:.4f}\t±{sl[1]:.4f}")
    return "\n".join(lines)
