"""Monte Carlo estimates, exact enumeration probabilities, and derived numbers.

Replicate t of an estimate always uses (seed, replicate=t), so totals are
plain sums of per-replicate indicators and every result is independent of how
replicates are distributed over workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .events import CrossingQuery, SeparatingQuery, TwoArmQuery, build_detector
from .geometry import (
    LatticeGraph,
    MeshSpec,
    TriangleDomain,
    build_lattice,
    shift_domain,
    snap_to_lattice,
)
from .randomness import enumerate_all, uniforms

Z95 = 1.959963984540054  # two-sided 95% normal quantile


def wilson_interval(successes: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval; honest near 0 and 1 at small counts."""
    if n <= 0:
        raise ValueError("n must be positive")
    phat = successes / n
    denom = 1 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class Estimate:
    """A seeded Monte Carlo estimate with its Wilson 95% interval."""

    n: int
    successes: int
    p_hat: float
    ci_low: float
    ci_high: float
    seed: int
    descriptor: str = ""

    @classmethod
    def from_counts(cls, successes: int, n: int, seed: int,
                    descriptor: str = "") -> "Estimate":
        lo, hi = wilson_interval(successes, n)
        return cls(n, successes, successes / n, lo, hi, seed, descriptor)

    @property
    def sigma(self) -> float:
        """Normal-scale spread implied by the interval; never zero for finite n."""
        return (self.ci_high - self.ci_low) / (2 * Z95)


def describe(query) -> str:
    """Canonical event descriptor (dataclass reprs are deterministic)."""
    return repr(query)


def _count_range(graph: LatticeGraph, query, p: float, seed: int,
                 start: int, stop: int) -> int:
    detector = build_detector(graph, query)
    n_states = graph.n_states()
    hits = 0
    for t in range(start, stop):
        states = uniforms(seed, t, n_states) < p
        if detector.evaluate(states):
            hits += 1
    return hits


def _ranges(n: int, parts: int):
    parts = max(1, min(parts, n))
    step = -(-n // parts)
    return [(a, min(a + step, n)) for a in range(0, n, step)]


def estimate(graph: LatticeGraph, query, p, n: int, seed: int,
             workers: int = 1) -> Estimate:
    """Monte Carlo probability of the queried event over n replicates."""
    if n < 1:
        raise ValueError("n must be at least 1")
    p = float(p)
    if workers <= 1:
        hits = _count_range(graph, query, p, seed, 0, n)
    else:
        chunks = _ranges(n, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            hits = sum(pool.map(
                _count_range,
                [graph] * len(chunks), [query] * len(chunks),
                [p] * len(chunks), [seed] * len(chunks),
                [a for a, _ in chunks], [b for _, b in chunks],
            ))
    return Estimate.from_counts(hits, n, seed, describe(query))


def exact_probability(graph: LatticeGraph, query, p: Fraction,
                      region=None) -> Fraction:
    """Exact event probability by exhaustive enumeration of its support."""
    detector = build_detector(graph, query)
    if region is None:
        region = detector.region
    total = Fraction(0)
    for config, weight in enumerate_all(graph, region, Fraction(p)):
        if detector.evaluate(config.states):
            total += weight
    return total


@dataclass(frozen=True)
class Profile:
    """Separating probabilities f_l at every lattice point of AB."""

    graph: LatticeGraph
    domain: TriangleDomain
    p: float | Fraction
    values: tuple  # index k = 0..l; Fraction (exact) or Estimate
    exact: bool

    @property
    def l(self) -> int:
        return self.graph.mesh.l

    def value(self, k: int):
        """f_l at grid index k as a number."""
        v = self.values[k]
        return v if self.exact else v.p_hat

    def interpolate(self, u):
        """Piecewise-linear f_l(U); u is the horizontal coordinate on AB."""
        l = self.l
        t = (Fraction(u) - self.domain.a[0]) * l
        if t < 0 or t > l:
            raise ValueError("U must lie on AB")
        k = int(t)
        if k == t:
            return self.value(k)
        frac = t - k
        return self.value(k) * (1 - frac) + self.value(k + 1) * frac


def _profile_counts(graph: LatticeGraph, domain: TriangleDomain, p: float,
                    seed: int, start: int, stop: int) -> np.ndarray:
    l = graph.mesh.l
    detectors = [
        build_detector(graph, SeparatingQuery(domain, domain.ab_lattice_point(k, l)))
        for k in range(l + 1)
    ]
    counts = np.zeros(l + 1, dtype=np.int64)
    n_states = graph.n_states()
    for t in range(start, stop):
        states = uniforms(seed, t, n_states) < p
        for k, det in enumerate(detectors):
            if det.evaluate(states):
                counts[k] += 1
    return counts


def separating_profile(graph: LatticeGraph, domain: TriangleDomain, p,
                       n: int | None = None, seed: int = 0,
                       exact: bool = False, workers: int = 1) -> Profile:
    """f_l(Z) at every lattice Z on AB, exact or sampled.

    Sampling reuses one uniform field per replicate across all Z, so the
    sampled profile is pathwise monotone in Z.
    """
    l = graph.mesh.l
    if exact:
        detectors = [
            build_detector(graph,
                           SeparatingQuery(domain, domain.ab_lattice_point(k, l)))
            for k in range(l + 1)
        ]
        region = np.unique(np.concatenate([d.region for d in detectors]))
        values = [Fraction(0)] * (l + 1)
        for config, weight in enumerate_all(graph, region, Fraction(p)):
            for k, det in enumerate(detectors):
                if det.evaluate(config.states):
                    values[k] += weight
        return Profile(graph, domain, Fraction(p), tuple(values), True)
    if n is None:
        raise ValueError("n is required unless exact=True")
    p = float(p)
    if workers <= 1:
        counts = _profile_counts(graph, domain, p, seed, 0, n)
    else:
        chunks = _ranges(n, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            counts = sum(pool.map(
                _profile_counts,
                [graph] * len(chunks), [domain] * len(chunks),
                [p] * len(chunks), [seed] * len(chunks),
                [a for a, _ in chunks], [b for _, b in chunks],
            ))
    values = tuple(
        Estimate.from_counts(int(c), n, seed, f"separating k={k}")
        for k, c in enumerate(counts)
    )
    return Profile(graph, domain, p, values, False)


def first_difference(profile: Profile, kbar: int, k: int):
    """l * (f_l(Z) - f_l(Zbar)) for adjacent grid indices."""
    if k - kbar != 1:
        raise ValueError("first_difference needs an adjacent pair")
    return (profile.value(k) - profile.value(kbar)) * profile.l


def second_difference(profile: Profile, khat: int, kbar: int, k: int):
    """l^2 * (f_l(Z) - 2 f_l(Zbar) + f_l(Zhat)) for an adjacent triple."""
    if not (kbar - khat == 1 and k - kbar == 1):
        raise ValueError("second_difference needs an adjacent triple")
    l = profile.l
    return (profile.value(k) - 2 * profile.value(kbar) + profile.value(khat)) * l * l


def common_graph(mesh: MeshSpec, *domains: TriangleDomain) -> LatticeGraph:
    """One window covering every domain (for shared-configuration identities)."""
    graphs = [build_lattice(mesh, d) for d in domains]
    return LatticeGraph(
        mesh,
        min(g.i_min for g in graphs), max(g.i_max for g in graphs),
        min(g.j_min for g in graphs), max(g.j_max for g in graphs),
    )


def second_difference_identity(mesh: MeshSpec, domain: TriangleDomain,
                               p: Fraction, k: int):
    """Both sides of the shifted-domain identity at grid index k, exactly.

    Returns (lhs, rhs) with
        lhs = l^2 (f(k) - 2 f(k-1) + f(k-2))
        rhs = l^2 (P(two_arm(D, k-1, k)) - P(two_arm(D shifted right, k-1, k)))
    computed on a common window; equality is translation equivariance of the
    two-arm detector.
    """
    if k < 2:
        raise ValueError("needs grid index k >= 2")
    l = mesh.l
    shifted = shift_domain(domain, "tau+", mesh)
    graph = common_graph(mesh, domain, shifted)
    pts = {m: domain.ab_lattice_point(m, l) for m in (k - 2, k - 1, k)}
    f = {
        m: exact_probability(graph, SeparatingQuery(domain, pt), p)
        for m, pt in pts.items()
    }
    lhs = (f[k] - 2 * f[k - 1] + f[k - 2]) * l * l
    h_here = exact_probability(
        graph, TwoArmQuery(domain, pts[k - 1], pts[k]), p)
    h_shifted = exact_probability(
        graph, TwoArmQuery(shifted, pts[k - 1], pts[k]), p)
    rhs = (h_here - h_shifted) * l * l
    return lhs, rhs


def exponent_fit(points) -> tuple[float, float]:
    """Weighted log-log slope of P-hat against ratio.

    points: iterable of (ratio, Estimate); duplicate ratios pool their counts.
    """
    pooled: dict[float, list[int]] = {}
    for ratio, est in points:
        acc = pooled.setdefault(float(ratio), [0, 0])
        acc[0] += est.successes
        acc[1] += est.n
    if len(pooled) < 2:
        raise ValueError("exponent fit needs at least 2 distinct ratios")
    xs, ys, ws = [], [], []
    for ratio in sorted(pooled):
        successes, n = pooled[ratio]
        if successes == 0:
            raise ValueError(
                f"zero successes at ratio {ratio}; increase n for a usable fit"
            )
        est = Estimate.from_counts(successes, n, 0)
        xs.append(math.log(ratio))
        ys.append(math.log(est.p_hat))
        ws.append((est.p_hat / est.sigma) ** 2)  # 1 / var(log p_hat)
    xs, ys, ws = np.asarray(xs), np.asarray(ys), np.asarray(ws)
    xbar = np.average(xs, weights=ws)
    ybar = np.average(ys, weights=ws)
    sxx = np.sum(ws * (xs - xbar) ** 2)
    slope = float(np.sum(ws * (xs - xbar) * (ys - ybar)) / sxx)
    stderr = float(1.0 / math.sqrt(sxx))
    return slope, stderr


@dataclass(frozen=True)
class BisectionResult:
    p: float
    lo: float
    hi: float
    estimate: Estimate


def critical_bisection(meshes, lo: float, hi: float, tol: float,
                       n: int = 4000, seed: int = 0, workers: int = 1,
                       domain: TriangleDomain | None = None) -> BisectionResult:
    """Bisect p until the X=1/2 crossing probability of the largest mesh is 1/2.

    At criticality the crossing probability of the split-at-1/2 triangle tends
    to 1/2, and it is increasing in p, so the root brackets the threshold.
    """
    mesh = max(meshes, key=lambda m: m.l)
    if domain is None:
        domain = TriangleDomain.isosceles(
            Fraction(snap_to_lattice(Fraction(1, 2), mesh.l), mesh.l))
    graph = build_lattice(mesh, domain)
    query = CrossingQuery(domain)

    def phat(p, rep_salt):
        return estimate(graph, query, p, n, seed + rep_salt, workers).p_hat

    if not (phat(lo, 1) < 0.5 < phat(hi, 2)):
        raise ValueError("bracket [lo, hi] does not straddle p_hat = 1/2")
    step = 3
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if phat(mid, step) < 0.5:
            lo = mid
        else:
            hi = mid
        step += 1
    mid = (lo + hi) / 2
    final = estimate(graph, query, mid, n, seed, workers)
    return BisectionResult(mid, lo, hi, final)
