"""Acceptance suite: one test and one printed pass/fail line per criterion.

Each criterion pins its own tolerances and runtime budget.  Criterion 7 runs
the whole-plane five-arm measurement exactly as specified; see the test's
failure message for what the distinct-cluster counting convention measures
there.
"""

import time
from fractions import Fraction

import numpy as np

from tricross.arms import arm_probability_scan, five_arm_probability_scan
from tricross.conformal import (
    PHI1_PRINTED,
    PHI2,
    SCMap,
    sc_inverse,
    sc_value,
)
from tricross.estimators import (
    Estimate,
    estimate,
    exact_probability,
    exponent_fit,
    separating_profile,
)
from tricross.events import (
    BlockingQuery,
    CrossingQuery,
    SeparatingQuery,
    TwoArmQuery,
    build_detector,
)
from tricross.geometry import (
    LatticeGraph,
    MeshSpec,
    TriangleDomain,
    build_lattice,
)
from tricross.randomness import UniformField, threshold
from tricross.runner import ExperimentConfig, render

F = Fraction
HALF = F(1, 2)


def _report(num: int, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {num}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    assert ok, line


def _isosceles_setup(l, mode="site"):
    domain = TriangleDomain.isosceles(HALF if l % 2 == 0 else F((l + 1) // 2, l))
    graph = build_lattice(MeshSpec(l, mode), domain)
    return domain, graph


def test_criterion_01_two_arm_difference_identity_exact():
    # site mode, l <= 4, p = 1/2: f(Z) - f(Zbar) == P(two-arm) as rationals
    t0 = time.time()
    checked = 0
    for l in (2, 3, 4):
        domain, graph = _isosceles_setup(l)
        profile = separating_profile(graph, domain, HALF, exact=True)
        for k in range(1, l + 1):
            h = exact_probability(
                graph,
                TwoArmQuery(domain, domain.ab_lattice_point(k - 1, l),
                            domain.ab_lattice_point(k, l)),
                HALF)
            if h != profile.values[k] - profile.values[k - 1]:
                _report(1, False, f"mismatch at l={l}, k={k}")
            checked += 1
    elapsed = time.time() - t0
    _report(1, elapsed < 60,
            f"{checked} adjacent pairs exact over l=2..4 site "
            f"in {elapsed:.1f}s (< 60s)")


def test_criterion_02_second_difference_shift_identity_exact():
    from tricross.estimators import second_difference_identity

    checked = 0
    for l in (2, 3, 4):
        domain, _ = _isosceles_setup(l)
        for k in range(2, l + 1):
            lhs, rhs = second_difference_identity(MeshSpec(l), domain, HALF, k)
            if lhs != rhs:
                _report(2, False, f"mismatch at l={l}, k={k}: {lhs} != {rhs}")
            checked += 1
    _report(2, True, f"{checked} adjacent triples exact over l=2..4 site")


def test_criterion_03_separating_xor_blocking_sampled():
    l, n = 8, 10_000
    domain, graph = _isosceles_setup(l)
    pairs = []
    for k in range(l + 1):
        z = domain.ab_lattice_point(k, l)
        pairs.append((build_detector(graph, SeparatingQuery(domain, z)),
                      build_detector(graph, BlockingQuery(domain, z))))
    from tricross.randomness import uniforms

    n_states = graph.n_states()
    for t in range(n):
        states = uniforms(101, t, n_states) < 0.5
        for k, (sep, blk) in enumerate(pairs):
            if sep.evaluate(states) == blk.evaluate(states):
                _report(3, False, f"XOR violated at replicate {t}, k={k}")
    _report(3, True,
            f"separating XOR blocking held at all {l + 1} boundary points "
            f"in {n}/{n} samples (l=8 site, p=1/2)")


def test_criterion_04_pathwise_monotonicity_with_common_randomness():
    l, n = 8, 10_000
    domain, graph = _isosceles_setup(l)
    detectors = [
        build_detector(graph, SeparatingQuery(domain,
                                              domain.ab_lattice_point(k, l)))
        for k in range(l + 1)
    ]
    for t in range(n):
        field = UniformField.draw(graph, seed=103, replicate=t)
        # nested thresholded fields
        c3 = threshold(field, 0.3).states
        c5 = threshold(field, 0.5).states
        c7 = threshold(field, 0.7).states
        if np.any(c3 & ~c5) or np.any(c5 & ~c7):
            _report(4, False, f"threshold nesting violated at replicate {t}")
        # separating events monotone along AB on the same configuration
        seps = [d.evaluate(c5) for d in detectors]
        for k in range(l):
            if seps[k] and not seps[k + 1]:
                _report(4, False, f"event monotonicity violated at "
                                  f"replicate {t}, k={k}")
    _report(4, True,
            f"threshold nesting (p=0.3/0.5/0.7) and separating monotonicity "
            f"held in {n}/{n} samples")


def test_criterion_05_sub_and_supercritical_limits():
    t0 = time.time()
    l, n = 64, 10_000
    domain, graph = _isosceles_setup(l, "bond")
    query = CrossingQuery(domain)
    low = estimate(graph, query, 0.35, n, seed=105)
    high = estimate(graph, query, 0.65, n, seed=106)
    elapsed = time.time() - t0
    ok = low.p_hat < 0.05 and high.p_hat > 0.95 and elapsed < 300
    _report(5, ok,
            f"bond l=64 X=1/2: p_hat(0.35)={low.p_hat:.4f} (< 0.05), "
            f"p_hat(0.65)={high.p_hat:.4f} (> 0.95), {elapsed:.0f}s (< 300s)")


def test_criterion_06_oracle_vs_monte_carlo_ten_seeds():
    l, n = 3, 100_000
    domain, graph = _isosceles_setup(l, "bond")
    query = CrossingQuery(domain)
    exact = float(exact_probability(graph, query, HALF))
    passes = 0
    worst = 0.0
    for seed in range(10):
        est = estimate(graph, query, 0.5, n, seed=seed)
        dev = abs(est.p_hat - exact) / est.sigma
        worst = max(worst, dev)
        if dev < 4.0:
            passes += 1
    _report(6, passes >= 9,
            f"{passes}/10 seeds within 4 Wilson sigma of exact {exact} "
            f"(worst deviation {worst:.2f} sigma)")


def test_criterion_07_five_arm_exponent_whole_plane():
    t0 = time.time()
    R, n = 64, 100_000
    graph = LatticeGraph(MeshSpec(2, "bond"), -R, R, -R, R)
    rows = five_arm_probability_scan(graph, [(4, R), (8, R), (16, R)],
                                     n, 0.5, seed=107)
    slope, stderr = exponent_fit((ratio, est) for ratio, _, _, est in rows)
    elapsed = time.time() - t0
    ok = 1.5 <= slope <= 2.5 and elapsed < 1800
    _report(7, ok,
            f"five-arm (3 open + 2 closed) fitted slope {slope:.3f} "
            f"+/- {stderr:.3f} vs required [1.5, 2.5], {elapsed:.0f}s "
            f"(< 1800s); note: counting distinct crossing clusters of each "
            f"color in a whole-plane annulus requires the arms to be "
            f"separated by opposite-color circuits, so this event decays "
            f"like the alternating six-arm probability (exponent 35/12 "
            f"~= 2.92), not like the polychromatic five-arm probability")


def test_criterion_08_half_plane_arm_exponents():
    t0 = time.time()
    R, n = 64, 100_000
    graph = LatticeGraph(MeshSpec(2, "bond"), -R, R, 0, R)
    pairs = [(4, R), (8, R), (16, R)]
    rows2 = arm_probability_scan(graph, pairs, n, 0.5, 1, 1, "half-plane",
                                 seed=108)
    slope2, err2 = exponent_fit((r, e) for r, _, _, e in rows2)
    rows3 = arm_probability_scan(graph, pairs, n, 0.5, 2, 1, "half-plane",
                                 seed=109)
    slope3, err3 = exponent_fit((r, e) for r, _, _, e in rows3)
    elapsed = time.time() - t0
    ok = 0.7 <= slope2 <= 1.3 and 1.5 <= slope3 <= 2.5 and elapsed < 1800
    _report(8, ok,
            f"half-plane 2-arm slope {slope2:.3f} +/- {err2:.3f} in "
            f"[0.7, 1.3]; 3-arm slope {slope3:.3f} +/- {err3:.3f} in "
            f"[1.5, 2.5]; {elapsed:.0f}s (< 1800s)")


def test_criterion_09_conformal_self_checks():
    checks = []
    checks.append(sc_value(PHI1_PRINTED, 0.0) == 0.0)
    checks.append(sc_value(PHI1_PRINTED, 1.0) == 1.0)
    checks.append(abs(sc_value(PHI2, 0.5) - 0.5) <= 1e-10)
    worst_rt = 0.0
    for m in (PHI1_PRINTED, PHI2):
        for x in np.linspace(0.01, 0.99, 99):
            worst_rt = max(worst_rt,
                           abs(sc_value(m, sc_inverse(m, float(x))) - x))
    checks.append(worst_rt <= 1e-10)
    worst_ref = 0.0
    coarse, fine = SCMap(-0.75, 0.75, tol=1e-8), SCMap(-0.75, 0.75, tol=1e-12)
    for w in (0.1, 0.3, 0.5, 0.7, 0.9):
        worst_ref = max(worst_ref, abs(sc_value(coarse, w) - sc_value(fine, w)))
    checks.append(worst_ref <= 1e-8)
    _report(9, all(checks),
            f"endpoints exact, midpoint to 1e-10, inverse round-trip worst "
            f"{worst_rt:.2e} (<= 1e-10), tolerance refinement worst "
            f"{worst_ref:.2e} (<= 1e-8)")


def test_criterion_10_desk_scale_crossing_scan():
    t0 = time.time()
    cfg = ExperimentConfig(
        experiment="crossing", mode="bond",
        l=(16, 32, 64, 128), x=(F(1, 4), HALF, F(3, 4)),
        n=20_000, seed=110,
    )
    data = render(cfg)
    again = render(ExperimentConfig(**{**cfg.__dict__, "workers": 2}))
    elapsed = time.time() - t0
    lines = data.decode().splitlines()
    header = next(ln for ln in lines if ln.startswith("experiment,")).split(",")
    rows = [ln.split(",") for ln in lines if ln.startswith("crossing,")]
    i_lo, i_hi = header.index("ci_low"), header.index("ci_high")
    widths = [(float(r[i_hi]) - float(r[i_lo])) / 2 for r in rows]
    ok = (len(rows) == 12
          and all(w < 0.01 for w in widths)
          and "pi_minus_X" in header and "pi_minus_xpow" in header
          and data == again
          and elapsed < 7200)
    _report(10, ok,
            f"12 cells (l in 16..128, X in 1/4..3/4, n=20000), max CI "
            f"half-width {max(widths):.4f} (< 0.01), deviation columns "
            f"present, byte-identical at workers=1 and 2, {elapsed:.0f}s "
            f"(< 7200s)")


def test_criterion_11_worker_count_determinism_all_experiments():
    configs = [
        ExperimentConfig(experiment="crossing", mode="bond", l=(6,),
                         x=(HALF,), n=200, seed=11),
        ExperimentConfig(experiment="profile", mode="site", l=(4,),
                         n=200, seed=11),
        ExperimentConfig(experiment="arms", mode="bond", R=8, radii=(2, 4),
                         n=200, open_arms=1, closed_arms=0, seed=11),
        ExperimentConfig(experiment="sixarm", mode="site", R=8, r=4, n=100,
                         seed=11),
        ExperimentConfig(experiment="conformal"),
        ExperimentConfig(experiment="oracle", mode="bond", l=(3,), x=(HALF,)),
        ExperimentConfig(experiment="bisect", mode="bond", l=(6,), n=400,
                         lo=0.3, hi=0.7, tol=0.05, seed=11),
    ]
    for cfg in configs:
        solo = render(ExperimentConfig(**{**cfg.__dict__, "workers": 1}))
        team = render(ExperimentConfig(**{**cfg.__dict__, "workers": 3}))
        if solo != team:
            _report(11, False, f"{cfg.experiment} differs across worker counts")
    _report(11, True,
            "all 7 experiments byte-identical at workers=1 and workers=3")
