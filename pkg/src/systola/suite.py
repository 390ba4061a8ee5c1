"""Validation suite shared by ``systola validate`` and the acceptance tests.

Each check exercises one verifiable claim about the toolkit: capacity values
on bodies with known spectra, agreement between the dual and shooting
pipelines, index identities, the duality estimate, Morse-complex structure,
linking signs, and finite-difference hygiene.  Expensive artifacts (systole
runs, critical-point sets, the Morse complex) are cached in a context dict
so the checks can share them; detail strings are deterministic for a fixed
seed so validation reports can be compared byte for byte.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from time import perf_counter

import numpy as np

from .bodies import ball, ellipsoid, perturbed_ellipsoid, smoothed_polydisk
from .czindex import (
    AsymptoticOperator,
    conley_zehnder,
    conley_zehnder_rotation,
    fredholm_indices,
    hamiltonian_linearization,
    operator_spectrum,
    transverse_linearization,
)
from .dual import (
    _full_modes,
    _grad_vec,
    _loop_vec,
    _vec_loop,
    check_dual_inequality,
    dual_action_eval,
    find_critical_points,
    reduced_eval,
    systole,
)
from .fourier import FourierLoop
from .hamiltonians import (
    LinearProfile,
    TimeHamiltonian,
    build_hamiltonian,
    direct_action,
    fenchel_eval,
)
from .linking import gauss_linking, linking_number, project_to_space, self_linking
from .morse import build_complex, trace_unstable, verify_complex
from .reeb import find_closed_orbits

SQRT2 = math.sqrt(2.0)

CHECK_NAMES = {
    1: "ellipsoid-capacity",
    2: "ball-normalization",
    3: "oracle-agreement",
    4: "index-identity",
    5: "cz-cross-validation",
    6: "dynamical-convexity",
    7: "morse-structure",
    8: "mountain-pass",
    9: "dual-inequality",
    10: "action-identity",
    11: "hopf-signature",
    12: "monotonicity",
    13: "fredholm-arithmetic",
    14: "numerical-hygiene",
}

QUICK_CHECKS = (1, 2, 5, 6, 9, 10, 13)
FULL_CHECKS = tuple(sorted(CHECK_NAMES))


@dataclass
class CheckResult:
    """Outcome of a single validation check."""

    name: str
    passed: bool
    detail: str


def _memo(ctx: dict, key: str, builder):
    """Build-once cache with error memoization, so a failing artifact is
    reported by every dependent check without being recomputed."""
    err_key = key + "_error"
    if err_key in ctx:
        raise RuntimeError(ctx[err_key])
    if key not in ctx:
        try:
            ctx[key] = builder()
        except Exception as exc:
            ctx[err_key] = f"{type(exc).__name__}: {exc}"
            raise
    return ctx[key]


def _seed(ctx: dict) -> int:
    return int(ctx.get("seed", 0))


# ---------------------------------------------------------------------------
# shared artifacts


def _e12_result(ctx: dict) -> dict:
    def build():
        t0 = perf_counter()
        res = systole(
            ellipsoid([1.0, SQRT2]),
            K_tail=32,
            head_n=8,
            seed=_seed(ctx),
            cross_tol=1e-6,
            keep_objects=True,
        )
        ctx["e12_elapsed"] = perf_counter() - t0
        return res

    return _memo(ctx, "e12", build)


def _validation_bodies(ctx: dict) -> list:
    def build():
        rng = np.random.default_rng(_seed(ctx) + 101)
        ratios = []
        while len(ratios) < 3:
            r = float(rng.uniform(1.15, 1.95))
            # Keep clear of low-order rationals so covering multiples of the
            # two primitive actions stay separated in the spectrum.
            near = min(abs(r - p / q) for q in range(1, 5) for p in range(q, 2 * 4 * q))
            if near < 0.02:
                continue
            ratios.append(r)
        bodies = [ellipsoid([1.0, r]) for r in ratios]
        bodies.append(perturbed_ellipsoid([1.0, 1.3], delta=0.04, bump_width=0.5))
        bodies.append(smoothed_polydisk(1.0, 1.5, epsilon=0.02))
        return bodies

    return _memo(ctx, "val_bodies", build)


def _validation_results(ctx: dict) -> list:
    def build():
        return [
            systole(body, K_tail=32, seed=_seed(ctx), cross_tol=1e-6, keep_objects=True)
            for body in _validation_bodies(ctx)
        ]

    return _memo(ctx, "val_results", build)


def _gamma1_circle(M: int = 256) -> np.ndarray:
    """The short closed characteristic of E(1, sqrt 2): a circle of action 1
    in the first coordinate plane."""
    r = 1.0 / math.sqrt(math.pi)
    theta = 2.0 * np.pi * np.arange(M) / M
    pts = np.zeros((M, 4))
    pts[:, 0] = r * np.cos(theta)
    pts[:, 1] = r * np.sin(theta)
    return pts


def _split_setup(ctx: dict):
    """Profiled Hamiltonian on E(1, sqrt 2) with the orbit-splitting term,
    and its dual critical points: the constant loop plus the two survivors
    of the split circle family."""

    def build():
        body = ellipsoid([1.0, SQRT2])
        ham = build_hamiltonian(
            body,
            eta=1.2,
            perturbation_spec={"type": "orbit-splitting", "points": _gamma1_circle(), "eps": 1e-3},
        )
        crits = find_critical_points(ham, K_tail=16, head_n=6, n_sobol=8, seed=_seed(ctx))
        return ham, crits

    return _memo(ctx, "split", build)


def _morse_data(ctx: dict):
    def build():
        ham, _ = _split_setup(ctx)
        return build_complex(ham, K_tail=16, seed=_seed(ctx), n_jitter=5, n_rays=64)

    return _memo(ctx, "morse", build)


def _convex_results(ctx: dict) -> list:
    """Systole results for the uniformly convex bodies available at the
    current suite level."""
    results = [_e12_result(ctx)]
    if ctx.get("level", "full") == "full":
        results += _validation_results(ctx)
    return [r for r in results if r["_objects"]["body"].uniformly_convex]


def _matched_pairs(res: dict, tol: float = 1e-4) -> list:
    """Pair dual critical points with shooting orbits by Reeb action."""
    objs = res["_objects"]
    pairs = []
    for c in objs["crits"]:
        if c.constant:
            continue
        a = c.orbit["reeb_action"]
        best = min(objs["orbits"], key=lambda o: abs(o.action - a))
        if abs(best.action - a) < tol:
            pairs.append((c, best))
    return pairs


# ---------------------------------------------------------------------------
# checks


def check_01(ctx: dict) -> CheckResult:
    """systole(E(1, sqrt 2)) = 1 and spectrum below 2.2 = {1, sqrt 2, 2}."""
    res = _e12_result(ctx)
    elapsed = ctx["e12_elapsed"]
    expected = [1.0, SQRT2, 2.0]
    sys_err = abs(res["systole"] - 1.0)
    dual = [a for a in res["dual_spectrum"] if a < 2.2]
    shoot = [a for a in res["shooting_spectrum"] if a < 2.2]
    dual_ok = len(dual) == 3 and all(abs(a - b) <= 1e-6 for a, b in zip(dual, expected))
    shoot_ok = len(shoot) == 3 and all(abs(a - b) <= 1e-6 for a, b in zip(shoot, expected))
    fast = elapsed < 60.0
    passed = sys_err <= 1e-6 and dual_ok and shoot_ok and fast
    spectrum = ", ".join(f"{a:.9f}" for a in dual)
    return CheckResult(
        CHECK_NAMES[1],
        passed,
        f"systole error {sys_err:.2e}; spectrum below 2.2 = [{spectrum}]; "
        f"under 60 s: {'yes' if fast else 'no'}",
    )


def check_02(ctx: dict) -> CheckResult:
    """systole(B(1)) = 1 with the orbit family flagged as degenerate."""
    res = _memo(ctx, "ball", lambda: systole(ball(1.0), seed=_seed(ctx), keep_objects=True))
    err = abs(res["systole"] - 1.0)
    degen = bool(any(res["degenerate_orbits"]))
    passed = err <= 1e-6 and degen
    return CheckResult(
        CHECK_NAMES[2],
        passed,
        f"systole error {err:.2e}; degenerate family flagged: {'yes' if degen else 'no'}",
    )


def check_03(ctx: dict) -> CheckResult:
    """Dual and shooting spectra agree within 1e-6 on all validation bodies."""
    results = _validation_results(ctx)
    worst = max(r["worst_delta"] for r in results)
    passed = len(results) == 5 and worst <= 1e-6
    return CheckResult(
        CHECK_NAMES[3],
        passed,
        f"{len(results)} bodies; worst dual/shooting action delta {worst:.2e}",
    )


def check_04(ctx: dict) -> CheckResult:
    """Morse index = CZ - n at every matched transversally nondegenerate
    critical point; the split systole has CZ = 3 and Morse index 1."""
    checked = 0
    mismatches = []
    for res in _convex_results(ctx):
        body = res["_objects"]["body"]
        for crit, orbit in _matched_pairs(res):
            if orbit.degenerate or crit.nullity > 1:
                continue
            cz, _ = conley_zehnder(transverse_linearization(body, orbit))
            checked += 1
            if crit.index != cz - body.dim_n:
                mismatches.append(f"{body.name} action {orbit.action:.6f}: "
                                  f"index {crit.index} != CZ {cz} - {body.dim_n}")
    ham, crits = _split_setup(ctx)
    for crit in crits:
        if crit.nullity > 0:
            continue
        cz = conley_zehnder_rotation(hamiltonian_linearization(ham, crit.orbit["points"]))
        checked += 1
        if crit.index != cz - 2:
            mismatches.append(f"split value {crit.value:.6f}: index {crit.index} != CZ {cz} - 2")
    split_cz = None
    split_index = None
    nonconstant = [c for c in crits if not c.constant]
    if nonconstant:
        low = min(nonconstant, key=lambda c: c.value)
        split_cz = conley_zehnder_rotation(hamiltonian_linearization(ham, low.orbit["points"]))
        split_index = low.index
    split_ok = split_cz == 3 and split_index == 1
    passed = checked >= 4 and not mismatches and split_ok
    detail = (
        f"{checked} matched points, {len(mismatches)} mismatches; "
        f"split systole CZ {split_cz}, Morse index {split_index}"
    )
    if mismatches:
        detail += "; " + "; ".join(mismatches[:3])
    return CheckResult(CHECK_NAMES[4], passed, detail)


def check_05(ctx: dict) -> CheckResult:
    """Winding and rotation-number CZ agree on random nondegenerate rank-1
    operators; constant rotation blocks reproduce the closed form."""
    rot = []
    for c, expected in ((0.3, 1), (1.4, 3), (2.7, 5)):
        S = np.tile(2.0 * np.pi * c * np.eye(2), (64, 1, 1))
        op = AsymptoticOperator(S_grid=S)
        cz_w, _ = conley_zehnder(op)
        cz_r = conley_zehnder_rotation(op)
        rot.append(cz_w == expected and cz_r == expected)
    rng = np.random.default_rng(_seed(ctx) + 5)
    total = 0
    agree = 0
    attempts = 0
    grid = np.arange(96) / 96.0
    while total < 50 and attempts < 600:
        attempts += 1
        amp = rng.uniform(0.5, 4.0)
        S = np.zeros((96, 2, 2))
        for harmonic, weight in ((0, 1.0), (1, 0.6), (2, 0.3)):
            A = rng.normal(0.0, amp * weight, (2, 2))
            A = 0.5 * (A + A.T)
            B = rng.normal(0.0, amp * weight, (2, 2))
            B = 0.5 * (B + B.T)
            cos = np.cos(2.0 * np.pi * harmonic * grid)[:, None, None]
            sin = np.sin(2.0 * np.pi * harmonic * grid)[:, None, None]
            S = S + cos * A + (sin * B if harmonic else 0.0)
        op = AsymptoticOperator(S_grid=S)
        spec = operator_spectrum(op, K=24)
        if float(np.min(np.abs(spec.eigenvalues))) < 1e-2:
            continue
        cz_w, _ = conley_zehnder(op)
        cz_r = conley_zehnder_rotation(op)
        total += 1
        agree += int(cz_w == cz_r)
    passed = all(rot) and total == 50 and agree == 50
    return CheckResult(
        CHECK_NAMES[5],
        passed,
        f"rotation oracle {'ok' if all(rot) else 'failed'}; "
        f"agreement {agree}/{total} on random operators",
    )


def check_06(ctx: dict) -> CheckResult:
    """Every nondegenerate orbit detected on uniformly convex bodies has CZ >= 3."""
    n_orbits = 0
    n_bodies = 0
    min_cz = None
    for res in _convex_results(ctx):
        body = res["_objects"]["body"]
        n_bodies += 1
        for orbit in res["_objects"]["orbits"]:
            if orbit.degenerate:
                continue
            cz, _ = conley_zehnder(transverse_linearization(body, orbit))
            n_orbits += 1
            min_cz = cz if min_cz is None else min(min_cz, cz)
    passed = n_orbits > 0 and min_cz is not None and min_cz >= 3
    return CheckResult(
        CHECK_NAMES[6],
        passed,
        f"{n_orbits} orbits on {n_bodies} bodies; minimal CZ {min_cz}",
    )


def check_07(ctx: dict) -> CheckResult:
    """Split complex has generators of index (0, 1, 2), d1 = +-1, d2 = 0,
    d^2 = 0, vanishing H0, and is stable across five metric jitters."""
    data = _morse_data(ctx)
    rep = verify_complex(data)
    indices = sorted(int(k) for k in data.indices)
    three = indices == [0, 1, 2]
    b1 = data.boundary.get(1)
    b1_ok = b1 is not None and b1.shape == (1, 1) and abs(int(b1[0, 0])) == 1
    b2 = data.boundary.get(2)
    b2_ok = b2 is not None and b2.size == 1 and int(b2[0, 0]) == 0
    jitter_ok = rep["jitter_stable"] and len(data.jitter_runs) == 5
    passed = bool(
        three
        and b1_ok
        and b2_ok
        and rep["boundary_squared_zero"]
        and rep["h0_applicable"]
        and rep["h0_vanishes"]
        and jitter_ok
    )
    b1_val = int(b1[0, 0]) if b1 is not None and b1.size else None
    b2_val = int(b2[0, 0]) if b2 is not None and b2.size else None
    return CheckResult(
        CHECK_NAMES[7],
        passed,
        f"indices {indices}; |d1| = {abs(b1_val) if b1_val is not None else None}; "
        f"d2 = {b2_val}; d^2 = 0: {'yes' if rep['boundary_squared_zero'] else 'no'}; "
        f"H0 = 0: {'yes' if rep['h0_vanishes'] else 'no'}; "
        f"stable over {len(data.jitter_runs)} jitters: {'yes' if rep['jitter_stable'] else 'no'}",
    )


def check_08(ctx: dict) -> CheckResult:
    """One unstable branch of the index-1 point reaches the minimum, the
    other escapes below the -1e3 threshold."""
    data = _morse_data(ctx)
    ones = [i for i, k in enumerate(data.indices) if k == 1]
    zeros = [i for i, k in enumerate(data.indices) if k == 0]
    if len(ones) != 1 or len(zeros) != 1:
        return CheckResult(
            CHECK_NAMES[8], False, f"unexpected index counts: {sorted(map(int, data.indices))}"
        )
    records = trace_unstable(data, ones[0])
    conv = [r for r in records if r["fate"] == "converged"]
    esc = [r for r in records if r["fate"] == "escaped"]
    passed = (
        len(records) == 2
        and len(conv) == 1
        and len(esc) == 1
        and conv[0]["target"] == zeros[0]
        and esc[0]["psi_final"] < -1e3
    )
    esc_val = f"{esc[0]['psi_final']:.1f}" if esc else "none"
    return CheckResult(
        CHECK_NAMES[8],
        passed,
        f"branches: {len(conv)} converged to the minimum, {len(esc)} escaped "
        f"(final value {esc_val})",
    )


def check_09(ctx: dict) -> CheckResult:
    """Duality estimate holds on 1000 random samples and is tight at a
    reconstructed orbit."""
    res = _e12_result(ctx)
    ham = res["_objects"]["ham"]
    rng = np.random.default_rng(_seed(ctx) + 9)
    violations = 0
    min_slack = math.inf
    K = 3
    for _ in range(1000):
        beta_coef = (rng.normal(0, 1, (2 * K + 1, 2)) + 1j * rng.normal(0, 1, (2 * K + 1, 2)))
        scale = 0.12 / (1.0 + np.abs(np.arange(-K, K + 1)))[:, None]
        beta = FourierLoop(beta_coef * scale)
        eta_coef = np.zeros((2 * K + 1, 2), dtype=complex)
        eta_coef[:K] = (rng.normal(0, 1, (K, 2)) + 1j * rng.normal(0, 1, (K, 2))) * 0.08
        eta_loop = FourierLoop(eta_coef)
        eta_mean = rng.normal(0.0, 0.15, 4)
        out = check_dual_inequality(ham, beta, eta_loop=eta_loop, eta_mean=eta_mean, M=256)
        min_slack = min(min_slack, out["slack"])
        if out["slack"] < -1e-9:
            violations += 1
    crits = [c for c in res["_objects"]["crits"] if not c.constant]
    low = min(crits, key=lambda c: c.value)
    tight = check_dual_inequality(ham, low.loop, beta_mean=low.orbit["mean"], M=512)
    gap = abs(tight["slack"])
    passed = violations == 0 and gap < 1e-6
    return CheckResult(
        CHECK_NAMES[9],
        passed,
        f"{violations} violations in 1000 samples (worst slack {min_slack:.3e}); "
        f"equality gap at the systole orbit {gap:.2e}",
    )


def check_10(ctx: dict) -> CheckResult:
    """Dual critical values equal the Hamiltonian action of the reconstructed
    orbits; the homogeneous functional vanishes on its orbit."""
    worst = 0.0
    n_points = 0
    result_sets = [_e12_result(ctx)]
    if ctx.get("level", "full") == "full":
        result_sets += _validation_results(ctx)
    for res in result_sets:
        ham = res["_objects"]["ham"]
        for crit in res["_objects"]["crits"]:
            gap = abs(crit.value - direct_action(ham, crit.orbit["points"]))
            worst = max(worst, gap)
            n_points += 1
    if ctx.get("level", "full") == "full":
        ham_s, crits_s = _split_setup(ctx)
        for crit in crits_s:
            gap = abs(crit.value - direct_action(ham_s, crit.orbit["points"]))
            worst = max(worst, gap)
            n_points += 1
    ham_h = TimeHamiltonian(
        body=ellipsoid([1.0, SQRT2]), profile=LinearProfile(1.0), spec={"profile": "linear"}
    )
    loop = FourierLoop.from_grid(_gamma1_circle(128), K=8)
    hom = abs(dual_action_eval(ham_h, loop, M=256).value)
    passed = n_points > 0 and worst < 1e-8 and hom < 1e-8
    return CheckResult(
        CHECK_NAMES[10],
        passed,
        f"worst action gap {worst:.2e} over {n_points} critical points; "
        f"homogeneous value {hom:.2e}",
    )


def check_11(ctx: dict) -> CheckResult:
    """Hopf signature on E(1, sqrt 2): sl(systole) = -1 and lk = +1 with the
    second orbit; the two polydisk systole circles are unlinked."""
    res = _e12_result(ctx)
    body = res["_objects"]["body"]
    orbits = res["_objects"]["orbits"]
    g1 = min(orbits, key=lambda o: abs(o.action - 1.0))
    g2 = min(orbits, key=lambda o: abs(o.action - SQRT2))
    if abs(g1.action - 1.0) > 1e-6 or abs(g2.action - SQRT2) > 1e-6:
        return CheckResult(CHECK_NAMES[11], False, "expected orbits not found on E(1, sqrt 2)")
    normals = body.gauge(g1.points)[1]
    sl = self_linking(g1.points, normals=normals)
    a3, b3 = project_to_space([g1.points, g2.points])
    lk = linking_number(a3, b3)
    gauss = gauss_linking(a3, b3)
    pair_ok = abs(gauss - lk) < 0.2

    poly_res = _validation_results(ctx)[-1]
    poly_body = poly_res["_objects"]["body"]
    sys_val = poly_res["systole"]
    reps = [o for o in poly_res["_objects"]["orbits"] if abs(o.action - sys_val) < 1e-6]
    if len(reps) < 2:
        extra = find_closed_orbits(
            poly_body, action_max=1.1 * sys_val, n_seeds=64, seed=_seed(ctx) + 11
        )
        reps += [o for o in extra if abs(o.action - sys_val) < 1e-6]
    lk_poly = None
    for i in range(len(reps)):
        for j in range(i + 1, len(reps)):
            sep = float(np.linalg.norm(reps[i].points.mean(0) - reps[j].points.mean(0)))
            if sep > 0.05:
                c3, d3 = project_to_space([reps[i].points, reps[j].points])
                lk_poly = linking_number(c3, d3)
                break
        if lk_poly is not None:
            break
    passed = sl == -1 and lk == 1 and pair_ok and lk_poly == 0
    return CheckResult(
        CHECK_NAMES[11],
        passed,
        f"sl(systole) = {sl}; lk with second orbit = {lk}; "
        f"polydisk systole pair lk = {lk_poly}",
    )


def check_12(ctx: dict) -> CheckResult:
    """Capacity monotonicity: systole(E(1, sqrt 2)) <= systole(E(1.2, 1.7))."""
    small = _e12_result(ctx)["systole"]
    big_res = _memo(
        ctx, "e_big", lambda: systole(ellipsoid([1.2, 1.7]), seed=_seed(ctx))
    )
    big = big_res["systole"]
    passed = small <= big and abs(big - 1.2) <= 1e-6
    return CheckResult(
        CHECK_NAMES[12],
        passed,
        f"systole(E(1, sqrt 2)) = {small:.9f} <= systole(E(1.2, 1.7)) = {big:.9f}",
    )


def check_13(ctx: dict) -> CheckResult:
    """Index bookkeeping on the three reference curves."""
    plane = fredholm_indices("curve", {"n": 2, "chi": 1, "cz_positive": [3]})
    cylinder = fredholm_indices("curve", {"n": 2, "chi": 0, "cz_positive": [3], "cz_negative": [3]})
    sphere = fredholm_indices("curve", {"n": 2, "chi": 2, "c1": 2})
    passed = (plane, cylinder, sphere) == (2, 0, 2)
    return CheckResult(
        CHECK_NAMES[13],
        passed,
        f"plane {plane} (expect 2), cylinder {cylinder} (expect 0), sphere {sphere} (expect 2)",
    )


def check_14(ctx: dict) -> CheckResult:
    """Analytic gradients match central differences; the headline value is
    stable under doubling of the discretization orders."""
    rng = np.random.default_rng(_seed(ctx) + 14)
    worst = 0.0

    bodies = [
        ellipsoid([1.0, SQRT2]),
        perturbed_ellipsoid([1.0, 1.3], delta=0.04, bump_width=0.5),
        smoothed_polydisk(1.0, 1.5, epsilon=0.02),
    ]
    for body in bodies:
        for _ in range(10):
            z = rng.normal(0.0, 0.5, 4)
            while np.linalg.norm(z) < 0.2:
                z = rng.normal(0.0, 0.5, 4)
            _, grad, _ = body.gauge(z)
            fd = np.empty(4)
            h = 1e-6 * (1.0 + np.linalg.norm(z))
            for i in range(4):
                zp, zm = z.copy(), z.copy()
                zp[i] += h
                zm[i] -= h
                fd[i] = (body.gauge(zp)[0] - body.gauge(zm)[0]) / (2.0 * h)
            worst = max(worst, float(np.max(np.abs(fd - grad)) / max(1.0, np.max(np.abs(grad)))))

    ham = build_hamiltonian(ellipsoid([1.0, SQRT2]), eta=1.4, perturbation_spec={"type": "core"})
    for _ in range(10):
        w = rng.normal(0.0, 1.2, 4)
        _, zstar, _ = fenchel_eval(ham, 0.0, w)
        fd = np.empty(4)
        h = 1e-6 * (1.0 + np.linalg.norm(w))
        for i in range(4):
            wp, wm = w.copy(), w.copy()
            wp[i] += h
            wm[i] -= h
            fd[i] = (fenchel_eval(ham, 0.0, wp)[0] - fenchel_eval(ham, 0.0, wm)[0]) / (2.0 * h)
        worst = max(worst, float(np.max(np.abs(fd - zstar)) / max(1.0, np.max(np.abs(zstar)))))

    K = 4
    modes = _full_modes(K)
    for _ in range(10):
        coef = (rng.normal(0, 1, (2 * K + 1, 2)) + 1j * rng.normal(0, 1, (2 * K + 1, 2)))
        coef *= 0.1 / (1.0 + np.abs(np.arange(-K, K + 1)))[:, None] ** 2
        loop = FourierLoop(coef)
        x = _loop_vec(loop, modes)
        ev = dual_action_eval(ham, loop, M=64)
        grad = _grad_vec(ev, modes, K)
        fd = np.empty(x.size)
        h = 1e-5
        for i in range(x.size):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            fd[i] = (
                dual_action_eval(ham, _vec_loop(xp, modes, K, 2), M=64).value
                - dual_action_eval(ham, _vec_loop(xm, modes, K, 2), M=64).value
            ) / (2.0 * h)
        worst = max(worst, float(np.max(np.abs(fd - grad)) / max(1.0, np.max(np.abs(grad)))))

    head_n = 2
    for _ in range(10):
        x = rng.normal(0.0, 0.08, head_n * 4)
        _, grad, _ = reduced_eval(ham, x, head_n, K_tail=8, M=64)
        fd = np.empty(x.size)
        h = 1e-5
        for i in range(x.size):
            xp, xm = x.copy(), x.copy()
            xp[i] += h
            xm[i] -= h
            fd[i] = (
                reduced_eval(ham, xp, head_n, K_tail=8, M=64)[0]
                - reduced_eval(ham, xm, head_n, K_tail=8, M=64)[0]
            ) / (2.0 * h)
        worst = max(worst, float(np.max(np.abs(fd - grad)) / max(1.0, np.max(np.abs(grad)))))

    base = _e12_result(ctx)
    doubled = _memo(
        ctx,
        "e12_doubled",
        lambda: systole(
            ellipsoid([1.0, SQRT2]), K_tail=64, head_n=16, seed=_seed(ctx), cross_tol=1e-6
        ),
    )
    drift = abs(doubled["systole"] - base["systole"])
    spec_drift = max(
        abs(a - b)
        for a, b in zip(
            [v for v in base["dual_spectrum"] if v < 2.2],
            [v for v in doubled["dual_spectrum"] if v < 2.2],
        )
    )
    passed = worst < 1e-5 and drift <= 1e-6 and spec_drift <= 1e-6
    return CheckResult(
        CHECK_NAMES[14],
        passed,
        f"worst relative gradient error {worst:.2e}; doubling drift "
        f"{drift:.2e} (spectrum {spec_drift:.2e})",
    )


_CHECKS = {
    1: check_01,
    2: check_02,
    3: check_03,
    4: check_04,
    5: check_05,
    6: check_06,
    7: check_07,
    8: check_08,
    9: check_09,
    10: check_10,
    11: check_11,
    12: check_12,
    13: check_13,
    14: check_14,
}


def run_check(number: int, ctx: dict) -> CheckResult:
    """Run one numbered check, converting exceptions to failed results."""
    try:
        return _CHECKS[number](ctx)
    except Exception as exc:
        return CheckResult(
            CHECK_NAMES[number], False, f"error: {type(exc).__name__}: {exc}"
        )


def run_suite(level: str = "full", seed: int = 0):
    """Run the validation suite.

    Parameters
    ----------
    level : str
        "quick" for the fast subset, "full" for all checks.
    seed : int
        Seed for every randomized ingredient; the report is deterministic
        per (level, seed).

    Returns
    -------
    report : dict
        Deterministic summary with one entry per check.
    timings : dict
        Wall-clock seconds per check, kept separate so reports stay
        reproducible.
    """
    if level not in ("quick", "full"):
        raise ValueError(f"unknown suite level: {level!r}")
    numbers = QUICK_CHECKS if level == "quick" else FULL_CHECKS
    ctx = {"seed": int(seed), "level": level}
    checks = []
    timings = {}
    for number in numbers:
        t0 = perf_counter()
        result = run_check(number, ctx)
        timings[result.name] = perf_counter() - t0
        checks.append(result)
    report = {
        "schema_version": 1,
        "suite": level,
        "seed": int(seed),
        "n_checks": len(checks),
        "n_passed": sum(1 for c in checks if c.passed),
        "all_passed": all(c.passed for c in checks),
        "checks": [
            {"name": c.name, "passed": bool(c.passed), "detail": c.detail} for c in checks
        ],
    }
    return report, timings
