"""Finite dimensional Morse complex of the head-reduced dual action.

The reduced functional psi lives on the head Fourier modes 1..head_n after
minimizing the dual action over the tail.  Its negative gradient flow in
the H^1 metric (mode k weighted by 1/(1 + 4 pi^2 k^2), with a small random
diagonal jitter standing in for genericity) connects critical points of
consecutive Morse index; this module integrates those flow lines, counts
them with signs, assembles the integer boundary operator, and computes the
homology of the resulting complex.

Flow lines out of split orbit pairs are extremely stiff: the phase
direction carries a Hessian eigenvalue proportional to the splitting size
while radial directions are order one, so the integrator is a linearly
implicit Euler scheme (Jacobian refreshed every few accepted steps) whose
step is capped only by invertibility of I + h A.  Boundary counts are
bisection quantities, insensitive to the parametrization accuracy of
individual trajectories, and are re-derived under independent metric
jitters as a stability check.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dual import (
    DualCriticalPoint,
    _loop_vec,
    _precond_weights,
    _structured_seeds,
    _vec_loop,
    find_critical_points,
    reduced_eval,
)
from .fourier import FourierLoop
from .hamiltonians import TimeHamiltonian, hessian_range
from .runtime import thread_count

TWO_PI = 2.0 * math.pi


@dataclass
class MorseComplexData:
    """A built Morse complex with its flow-line bookkeeping.

    boundary[k] is the integer matrix of the boundary operator from index-k
    generators (rows) to index-(k-1) generators (cols); row/col positions
    follow the order of ``generators[k]``, which lists positions into
    ``critical_points``.
    """

    critical_points: list[DualCriticalPoint]
    head_coords: np.ndarray
    indices: np.ndarray
    values: np.ndarray
    generators: dict[int, list[int]]
    boundary: dict[int, np.ndarray]
    metric_jitter: float
    flow_records: list[dict]
    jitter_runs: list[dict]
    params: dict
    ham: TimeHamiltonian = field(repr=False, default=None)
    hessians: list[np.ndarray] = field(repr=False, default_factory=list)
    weights: np.ndarray = field(repr=False, default=None)


def _make_eval(ham, head_n, K_tail, M):
    """Reduced-functional evaluator with per-flow warm caches."""
    cache = {"tail": None, "zstar": None}

    def fn(x):
        val, grad, info = reduced_eval(
            ham, x, head_n, K_tail, M=M,
            tail_warm=cache["tail"], zstar_warm=cache["zstar"],
        )
        cache["tail"] = info["loop"]
        cache["zstar"] = info["eval"].zstar
        return val, grad

    def hess(x):
        _, _, info = reduced_eval(
            ham, x, head_n, K_tail, M=M,
            tail_warm=cache["tail"], zstar_warm=cache["zstar"],
            with_hessian=True,
        )
        cache["tail"] = info["loop"]
        cache["zstar"] = info["eval"].zstar
        return info["hessian"]

    return fn, hess


def descend_flow(
    fn,
    hess_fn,
    x0,
    weights,
    stop,
    h0: float = 0.05,
    hmax: float = 200.0,
    max_steps: int = 4000,
    refresh: int = 20,
):
    """Integrate the negative gradient flow x' = -W grad psi to a fate.

    fn(x) -> (psi, grad); hess_fn(x) -> Hessian of psi; W = diag(weights).
    Linearly implicit Euler in the sqrt(W)-coordinates: each step solves
    (I + h A) dy = -h sqrt(W) grad with A = sqrt(W) H sqrt(W) frozen
    between refreshes, via the cached eigendecomposition of A.  The step is
    capped at 0.9/|lambda_min| for negative lambda_min so I + hA stays
    positive, which lets the scheme cross nearly degenerate saddles in a
    handful of steps while remaining unconditionally stable on the convex
    directions.

    stop(x, psi) is called at accepted steps and returns a fate dict to
    finish, or None to continue.

    Displacements are capped at a fraction of 1 + |x|: near a saddle the
    implicit solve amplifies the unstable component by 1/(1 + h lam_min)
    per step, and an uncapped step can leap across a curved valley onto
    the wrong slope while still decreasing psi.  A triggered cap also
    forces a curvature refresh, since the step left the region where the
    frozen Hessian was computed.
    """
    sqw = np.sqrt(np.asarray(weights, dtype=float))
    x = np.array(x0, dtype=float)
    psi, g = fn(x)
    fate = stop(x, psi)
    if fate is not None:
        return {**fate, "steps": 0, "psi": float(psi)}
    lam = Q = None
    h = h0
    since, rejects = 0, 0
    for step in range(1, max_steps + 1):
        if lam is None or since >= refresh or rejects >= 3:
            A = sqw[:, None] * hess_fn(x) * sqw[None, :]
            lam, Q = np.linalg.eigh(0.5 * (A + A.T))
            since, rejects = 0, 0
        h_eff = min(h, hmax)
        if lam[0] < 0:
            h_eff = min(h_eff, 0.9 / (-lam[0]))
        b = Q.T @ (sqw * g)
        dy = -h_eff * (b / (1.0 + h_eff * lam))
        dx = sqw * (Q @ dy)
        nrm = float(np.linalg.norm(dx))
        cap = 0.1 * (1.0 + float(np.linalg.norm(x)))
        if nrm > cap:
            dx *= cap / nrm
            since = refresh
        x_new = x + dx
        try:
            psi_new, g_new = fn(x_new)
        except np.linalg.LinAlgError:
            h = 0.5 * h_eff
            rejects += 1
            continue
        if psi_new <= psi + 1e-10 * (1.0 + abs(psi)):
            x, psi, g = x_new, psi_new, g_new
            since += 1
            rejects = 0
            h = min(1.4 * h_eff, hmax)
            fate = stop(x, psi)
            if fate is not None:
                return {**fate, "steps": step, "psi": float(psi)}
        else:
            h = 0.5 * h_eff
            rejects += 1
    return {"fate": "undetermined", "target": None, "steps": max_steps,
            "psi": float(psi)}


@dataclass
class _FlowSetup:
    """Shared data for one complex build."""

    ham: TimeHamiltonian
    head_n: int
    K_tail: int
    M: int
    crit_x: np.ndarray
    values: np.ndarray
    indices: np.ndarray
    hessians: list[np.ndarray]
    weights: np.ndarray
    jitter: float
    catch: float
    ident_tol: float
    floor: float
    delta: float
    n_rays: int
    max_steps: int
    bisect_width: float = 1e-10


def _unstable_frame(setup: _FlowSetup, i: int, wj: np.ndarray):
    """Orientation frame of W^u at critical point i under the metric wj.

    Eigenvectors of sqrt(W) H sqrt(W) with negative eigenvalue, in
    ascending eigenvalue order, mapped back to flow coordinates, unit
    normalized, with the first entry of magnitude > 1e-8 made positive.
    """
    sqw = np.sqrt(wj)
    A = sqw[:, None] * setup.hessians[i] * sqw[None, :]
    lam, U = np.linalg.eigh(0.5 * (A + A.T))
    tol = 1e-6 * (1.0 + float(np.max(np.abs(lam))))
    n_neg = int(np.sum(lam < -tol))
    frame = []
    for j in range(n_neg):
        v = sqw * U[:, j]
        v = v / np.linalg.norm(v)
        lead = np.flatnonzero(np.abs(v) > 1e-8)
        if lead.size and v[lead[0]] < 0:
            v = -v
        frame.append(v)
    return n_neg, frame


def _phase_family_dist(y: np.ndarray, head_n: int):
    """Distance from a head vector to the loop-rotation family of ``y``,
    min_s ||x - shift_s(y)||, as a callable of x."""
    modes = np.arange(1, head_n + 1)
    n = y.size // (2 * head_n)
    ref = _vec_loop(y, modes, head_n, n)

    def dist(x: np.ndarray) -> float:
        return math.sqrt(_vec_loop(x, modes, head_n, n).aligned_distance2(ref))

    return dist


def _make_stop(setup: _FlowSetup, track: np.ndarray | None = None, floor=None):
    """Fate test: convergence into a minimum's catch ball or psi below floor.

    When ``track`` holds candidate saddle positions, the closest approach
    to each of their loop-rotation families along the trajectory is
    recorded in ``best``.  The family quotient matters: a trajectory that
    limits onto a saddle may creep along the slow phase direction far
    more slowly than floating point can bisect, so the raw distance to
    the saddle never closes while the distance to its family does.
    """
    minima = np.flatnonzero(setup.indices == 0)
    Xmin = setup.crit_x[minima]
    lo = setup.floor if floor is None else floor
    best = {"dist": math.inf, "arg": -1}
    fams = [] if track is None else [
        _phase_family_dist(row, setup.head_n) for row in track
    ]

    def stop(x, psi):
        if fams:
            d = np.array([f(x) for f in fams])
            j = int(np.argmin(d))
            if d[j] < best["dist"]:
                best["dist"], best["arg"] = float(d[j]), j
        if len(minima):
            d = np.linalg.norm(Xmin - x, axis=1)
            j = int(np.argmin(d))
            if d[j] < setup.catch:
                return {"fate": "converged", "target": int(minima[j])}
        if psi < lo:
            return {"fate": "escaped", "target": None}
        return None

    return stop, best


def _flow_fate(setup: _FlowSetup, x0, wj, track=None, floor=None):
    fn, hess = _make_eval(setup.ham, setup.head_n, setup.K_tail, setup.M)
    stop, best = _make_stop(setup, track=track, floor=floor)
    out = descend_flow(fn, hess, x0, wj, stop, max_steps=setup.max_steps)
    out["closest"] = best
    return out


def _ray_point(setup: _FlowSetup, xq, v1, v2, theta):
    d = math.cos(theta) * v1 + math.sin(theta) * v2
    return xq + setup.delta * d / np.linalg.norm(d)


def _jittered_weights(setup: _FlowSetup, run_seed: int) -> np.ndarray:
    rng = np.random.default_rng(run_seed)
    u = rng.uniform(-1.0, 1.0, setup.crit_x.shape[1])
    return setup.weights * (1.0 + setup.jitter * u)


def _run_flows(setup: _FlowSetup, run_seed: int, hints=None, coarse: int = 0):
    """One full flow-line enumeration under a fresh metric jitter.

    hints, if given, maps index-2 points to transition angles from a
    previous run; the ray sweep then uses a coarse grid plus brackets
    around each hint instead of the full resolution (a jitter of size
    O(1e-4) moves transition angles by the same order).
    """
    wj = _jittered_weights(setup, run_seed)
    records: list[dict] = []
    failures: list[str] = []
    n = len(setup.indices)
    counts: dict[str, int] = {}

    for q in range(n):
        if setup.indices[q] != 1:
            continue
        n_neg, frame = _unstable_frame(setup, q, wj)
        if n_neg != 1:
            failures.append(f"point {q}: metric index {n_neg} != Morse index 1")
            continue
        v1 = frame[0]
        for branch in (+1, -1):
            rec = _flow_fate(setup, setup.crit_x[q] + branch * setup.delta * v1, wj)
            rec.update(kind="branch", source=q, branch=branch)
            if rec["fate"] == "converged":
                # epsilon = +1 iff the ascending gradient along the line is
                # positively oriented against the W^u orientation; the
                # gradient points back toward the source, so the -v1 branch
                # carries +1.
                rec["sign"] = -branch
                key = f"{q}->{rec['target']}"
                counts[key] = counts.get(key, 0) + rec["sign"]
            elif rec["fate"] == "undetermined":
                failures.append(f"branch {branch:+d} of point {q} undetermined")
            records.append(rec)

    saddles = np.flatnonzero(setup.indices == 1)
    for q in range(n):
        if setup.indices[q] != 2:
            continue
        n_neg, frame = _unstable_frame(setup, q, wj)
        if n_neg != 2:
            failures.append(f"point {q}: metric index {n_neg} != Morse index 2")
            continue
        v1, v2 = frame
        xq = setup.crit_x[q]

        if hints is None:
            thetas = TWO_PI * np.arange(setup.n_rays) / setup.n_rays
        else:
            step = TWO_PI / setup.n_rays
            th = set(TWO_PI * np.arange(coarse) / max(coarse, 1))
            for t0 in hints.get(q, ()):
                th.add((t0 - step) % TWO_PI)
                th.add((t0 + step) % TWO_PI)
            thetas = np.sort(np.array(sorted(th)))

        def ray_fate(theta):
            rec = _flow_fate(setup, _ray_point(setup, xq, v1, v2, theta), wj)
            return (rec["fate"], rec.get("target"))

        with ThreadPoolExecutor(max_workers=thread_count()) as ex:
            fate_list = list(ex.map(ray_fate, thetas))
        if any(fk[0] == "undetermined" for fk in fate_list):
            failures.append(f"point {q}: undetermined ray fate")
        sweep_rec = {
            "kind": "ray-sweep",
            "source": q,
            "n_rays": len(thetas),
            "fates": sorted({str(fk) for fk in fate_list}),
        }
        records.append(sweep_rec)

        # Bisect every change of the fate map on the direction circle.
        pairs = list(zip(thetas, fate_list))
        intervals = []
        for (a, fa), (b, fb) in zip(pairs, pairs[1:] + [(pairs[0][0] + TWO_PI, pairs[0][1])]):
            if fa != fb:
                intervals.append((a, fa, b, fb))
        transitions = []
        while intervals:
            a, fa, b, fb = intervals.pop()
            while b - a > setup.bisect_width:
                mid = 0.5 * (a + b)
                fm = ray_fate(mid % TWO_PI)
                if fm == fa:
                    a = mid
                elif fm == fb:
                    b = mid
                else:
                    intervals.append((mid, fm, b, fb))
                    b, fb = mid, fm
            transitions.append((0.5 * (a + b) % TWO_PI, fa, fb))
        transitions.sort(key=lambda t: t[0])

        resolved = []
        for theta, fa, fb in transitions:
            rec = _flow_fate(
                setup,
                _ray_point(setup, xq, v1, v2, theta),
                wj,
                track=setup.crit_x[saddles] if len(saddles) else None,
            )
            close = rec["closest"]
            if close["arg"] < 0 or close["dist"] > setup.ident_tol:
                failures.append(
                    f"point {q}: transition at theta={theta:.6f} shadows no "
                    f"index-1 point (closest {close['dist']:.3e})"
                )
                continue
            resolved.append(
                {
                    "kind": "transition",
                    "source": q,
                    "theta": float(theta),
                    "target": int(saddles[close["arg"]]),
                    "sector_before": str(fa),
                    "sector_after": str(fb),
                    "steps": rec["steps"],
                    "shadow_dist": close["dist"],
                }
            )
        # Consecutive crossings of the same stable manifold alternate in
        # sign around the direction circle; the first (smallest angle) per
        # target is taken positive.
        by_target: dict[int, list[dict]] = {}
        for rec in sorted(resolved, key=lambda r: r["theta"]):
            by_target.setdefault(rec["target"], []).append(rec)
        for target, recs in by_target.items():
            if len(recs) % 2 == 1:
                failures.append(
                    f"point {q}: odd crossing count {len(recs)} toward {target}"
                )
            for pos, rec in enumerate(recs):
                rec["sign"] = 1 if pos % 2 == 0 else -1
                key = f"{q}->{target}"
                counts[key] = counts.get(key, 0) + rec["sign"]
                records.append(rec)
        sweep_rec["transitions"] = len(resolved)

    hint_out = {
        int(q): [r["theta"] for r in records
                 if r.get("kind") == "transition" and r["source"] == q]
        for q in np.flatnonzero(setup.indices == 2)
    }
    return {"seed": run_seed, "counts": counts, "records": records,
            "failures": failures, "ok": not failures, "hints": hint_out}


def _counts_to_boundary(indices: np.ndarray, counts: dict[str, int]):
    generators: dict[int, list[int]] = {}
    for i, k in enumerate(indices):
        generators.setdefault(int(k), []).append(i)
    kmax = max(generators)
    boundary = {}
    for k in range(1, kmax + 1):
        rows = generators.get(k, [])
        cols = generators.get(k - 1, [])
        B = np.zeros((len(rows), len(cols)), dtype=np.int64)
        for a, q in enumerate(rows):
            for b, p in enumerate(cols):
                B[a, b] = counts.get(f"{q}->{p}", 0)
        boundary[k] = B
    return generators, boundary


def build_complex(
    ham: TimeHamiltonian,
    head_n: int | None = None,
    K_tail: int = 16,
    M: int | None = None,
    seed: int = 0,
    jitter: float = 1e-4,
    n_jitter: int = 5,
    escape: float = -1e3,
    n_rays: int = 720,
    n_sobol: int = 6,
    max_steps: int = 4000,
) -> MorseComplexData:
    """Build the Morse complex of the head-reduced dual action.

    Locates the critical points, orients their unstable manifolds, counts
    signed flow lines (both unstable branches for index-1 sources, a
    direction-circle sweep with adaptive bisection for index-2 sources),
    and repeats the count under ``n_jitter`` independent metric jitters.
    The boundary operator is taken from the first clean run; all clean
    runs are kept in ``jitter_runs`` for the stability check in
    verify_complex, and Morse-Smale failures are retried with a fresh
    jitter (kept under params['failed_attempts']).

    Raises RuntimeError when a critical point is degenerate (use an
    orbit-splitting perturbation), when a source has Morse index above 2
    (the sweep enumerates one- and two-dimensional unstable manifolds
    only), or when every jitter attempt fails.
    """
    if M is None:
        M = 8 * K_tail
    n = ham.dim_n
    base_profile = getattr(ham.profile, "base", ham.profile)
    s_max = 1.05 * getattr(base_profile, "r1", 2.0)
    _, h_hi = hessian_range(ham, s_max=s_max, seed=seed)
    if head_n is None:
        head_n = min(max(2, int(math.ceil(h_hi / TWO_PI)) + 1), K_tail // 2)

    extra = [FourierLoop.zeros(K_tail, n)]
    if ham.time_dependent:
        for s in _structured_seeds(ham, K_tail):
            extra.append(s.shift(1.0 / 3.0))
            extra.append(s.shift(2.0 / 3.0))
    crits = find_critical_points(
        ham, K_tail=K_tail, head_n=head_n, M=M, n_sobol=n_sobol, seed=seed,
        extra_seeds=extra,
    )
    bad = [i for i, c in enumerate(crits) if c.nullity > 0]
    if bad:
        raise RuntimeError(
            f"degenerate critical points at positions {bad}; the Morse "
            "complex needs an orbit-splitting perturbation"
        )
    if any(c.index > 2 for c in crits):
        raise RuntimeError("flow-line counting is implemented for sources of "
                           "index 1 and 2 only")

    head_modes = np.arange(1, head_n + 1)
    dim = 2 * n * head_n
    crit_x = np.zeros((len(crits), dim))
    hessians = []
    for i, c in enumerate(crits):
        crit_x[i] = _loop_vec(c.loop, head_modes)
        _, _, info = reduced_eval(
            ham, crit_x[i], head_n, K_tail, M=M, tail_warm=c.loop,
            with_hessian=True,
        )
        hessians.append(info["hessian"])
    indices = np.array([c.index for c in crits], dtype=int)
    values = np.array([c.value for c in crits])

    weights = np.repeat(_precond_weights(head_modes), 2 * n)
    scale = 1.0 + float(np.max(np.abs(crit_x)))
    if len(crits) > 1:
        d = np.linalg.norm(crit_x[:, None, :] - crit_x[None, :, :], axis=-1)
        sep = float((d + np.diag(np.full(len(crits), np.inf))).min())
    else:
        sep = math.inf
    catch = min(1e-3 * scale, 0.2 * sep)
    vmin = float(values.min())
    setup = _FlowSetup(
        ham=ham, head_n=head_n, K_tail=K_tail, M=M,
        crit_x=crit_x, values=values, indices=indices, hessians=hessians,
        weights=weights, jitter=jitter, catch=catch,
        ident_tol=min(0.25 * sep, 50 * catch),
        floor=vmin - 1e-6 * (1.0 + abs(vmin)),
        delta=1e-3 * scale, n_rays=n_rays, max_steps=max_steps,
    )

    ok_runs: list[dict] = []
    failed: list[dict] = []
    hints = None
    attempt = 0
    while len(ok_runs) < n_jitter and attempt < n_jitter + 4:
        run = _run_flows(setup, seed + attempt, hints=hints,
                         coarse=max(n_rays // 8, 16) if hints is not None else 0)
        attempt += 1
        if run["ok"]:
            ok_runs.append(run)
            if hints is None:
                hints = run["hints"]
        else:
            failed.append(run)
    if not ok_runs:
        raise RuntimeError(
            "Morse-Smale failure under every metric jitter: "
            + "; ".join(failed[-1]["failures"])
        )
    base = ok_runs[0]
    generators, boundary = _counts_to_boundary(indices, base["counts"])

    return MorseComplexData(
        critical_points=crits,
        head_coords=crit_x,
        indices=indices,
        values=values,
        generators=generators,
        boundary=boundary,
        metric_jitter=jitter,
        flow_records=base["records"],
        jitter_runs=[
            {"seed": r["seed"], "counts": r["counts"], "ok": r["ok"]}
            for r in ok_runs
        ],
        params={
            "head_n": head_n, "K_tail": K_tail, "M": M, "seed": seed,
            "n_rays": n_rays, "escape": escape, "jitter": jitter,
            "catch": catch, "delta": setup.delta, "max_steps": max_steps,
            "n_jitter": n_jitter,
            "failed_attempts": [
                {"seed": r["seed"], "failures": r["failures"]} for r in failed
            ],
        },
        ham=ham,
        hessians=hessians,
        weights=weights,
    )


def _rebuild_setup(data: MorseComplexData) -> _FlowSetup:
    vmin = float(data.values.min())
    return _FlowSetup(
        ham=data.ham, head_n=data.params["head_n"], K_tail=data.params["K_tail"],
        M=data.params["M"], crit_x=data.head_coords, values=data.values,
        indices=data.indices, hessians=data.hessians, weights=data.weights,
        jitter=data.metric_jitter, catch=data.params["catch"],
        ident_tol=50 * data.params["catch"],
        floor=vmin - 1e-6 * (1.0 + abs(vmin)),
        delta=data.params["delta"], n_rays=data.params["n_rays"],
        max_steps=data.params["max_steps"],
    )


def trace_unstable(data: MorseComplexData, p) -> list[dict]:
    """Fates of both unstable branches of an index-1 critical point.

    p is a position into data.critical_points (or the DualCriticalPoint
    itself).  Branches are integrated until they converge into a minimum
    or descend below the escape threshold data.params['escape']; a branch
    that exhausts the step budget is flagged undetermined.
    """
    if isinstance(p, DualCriticalPoint):
        p = data.critical_points.index(p)
    if data.indices[p] != 1:
        raise ValueError(f"point {p} has Morse index {data.indices[p]}, need 1")
    setup = _rebuild_setup(data)
    wj = _jittered_weights(setup, data.params["seed"])
    n_neg, frame = _unstable_frame(setup, p, wj)
    if n_neg != 1:
        raise RuntimeError(f"metric index {n_neg} at point {p} disagrees with 1")
    out = []
    for branch in (+1, -1):
        rec = _flow_fate(
            setup, setup.crit_x[p] + branch * setup.delta * frame[0], wj,
            floor=data.params["escape"],
        )
        fate = {
            "branch": branch,
            "fate": rec["fate"],
            "target": rec.get("target"),
            "psi_final": rec["psi"],
            "steps": rec["steps"],
        }
        if rec["fate"] == "escaped":
            fate["threshold"] = data.params["escape"]
        out.append(fate)
    return out


def _smith_diagonal(A: np.ndarray) -> list[int]:
    """Invariant factors of an integer matrix (Smith normal form diagonal)."""
    B = [[int(v) for v in row] for row in np.atleast_2d(A)]
    m = len(B)
    n = len(B[0]) if m else 0
    out = []
    t = 0
    while t < min(m, n):
        pr, pc, pv = -1, -1, 0
        for i in range(t, m):
            for j in range(t, n):
                if B[i][j] != 0 and (pv == 0 or abs(B[i][j]) < abs(pv)):
                    pr, pc, pv = i, j, B[i][j]
        if pv == 0:
            break
        B[t], B[pr] = B[pr], B[t]
        for row in B:
            row[t], row[pc] = row[pc], row[t]
        dirty = True
        while dirty:
            dirty = False
            for i in range(t + 1, m):
                q = B[i][t] // B[t][t]
                if q:
                    for j in range(t, n):
                        B[i][j] -= q * B[t][j]
                if B[i][t]:
                    B[t], B[i] = B[i], B[t]
                    dirty = True
            for j in range(t + 1, n):
                q = B[t][j] // B[t][t]
                if q:
                    for i in range(t, m):
                        B[i][j] -= q * B[i][t]
                if B[t][j]:
                    for i in range(t, m):
                        B[i][t], B[i][j] = B[i][j], B[i][t]
                    dirty = True
        out.append(abs(B[t][t]))
        t += 1
    # Fold the diagonal into the divisibility chain d1 | d2 | ...
    changed = True
    while changed:
        changed = False
        for i in range(len(out)):
            for j in range(i + 1, len(out)):
                if out[j] % out[i]:
                    g = math.gcd(out[i], out[j])
                    out[i], out[j] = g, out[i] * out[j] // g
                    changed = True
    return out


def homology_ranks(generators: dict[int, list[int]], boundary: dict[int, np.ndarray]):
    """Integer homology of the complex: free rank and torsion per degree."""
    kmax = max(generators) if generators else -1
    out = {}
    for k in range(kmax + 1):
        nk = len(generators.get(k, []))
        dk = _smith_diagonal(boundary[k]) if k in boundary and boundary[k].size else []
        dk1 = (
            _smith_diagonal(boundary[k + 1])
            if (k + 1) in boundary and boundary[k + 1].size
            else []
        )
        out[k] = {
            "free_rank": nk - len(dk) - len(dk1),
            "torsion": [d for d in dk1 if d > 1],
        }
    return out


def verify_complex(data: MorseComplexData) -> dict:
    """Structural checks of a built Morse complex.

    Verifies boundary(boundary) = 0 in integer arithmetic, recomputes
    integer homology, checks that every recorded flow line connects points
    of index difference one, compares signed counts across the jitter
    reruns, and, for complexes with an index-1 generator and all positive
    critical values, asserts that degree-zero homology vanishes.
    """
    failures = []
    gens, bnd = data.generators, data.boundary
    sq_zero = True
    for k in sorted(bnd):
        if (k + 1) in bnd and bnd[k + 1].size and bnd[k].size:
            comp = bnd[k + 1] @ bnd[k]
            if np.any(comp != 0):
                sq_zero = False
                failures.append(
                    f"boundary^2 != 0 between degrees {k + 1} and {k - 1}"
                )

    diffs_ok = True
    for rec in data.flow_records:
        if rec.get("kind") == "branch" and rec.get("fate") == "converged":
            if data.indices[rec["source"]] - data.indices[rec["target"]] != 1:
                diffs_ok = False
                failures.append(f"branch line {rec['source']}->{rec['target']}")
        if rec.get("kind") == "transition":
            if data.indices[rec["source"]] - data.indices[rec["target"]] != 1:
                diffs_ok = False
                failures.append(f"transition {rec['source']}->{rec['target']}")

    counts = [r["counts"] for r in data.jitter_runs]
    jitter_stable = (
        len(counts) >= data.params.get("n_jitter", len(counts))
        and all(c == counts[0] for c in counts)
    )
    if not jitter_stable:
        failures.append("flow-line counts varied across metric jitters")

    hom = homology_ranks(gens, bnd)
    h0_applicable = bool(len(gens.get(1, [])) > 0 and np.all(data.values > 0))
    h0_vanishes = None
    if h0_applicable:
        h0_vanishes = hom[0]["free_rank"] == 0 and not hom[0]["torsion"]
        if not h0_vanishes:
            failures.append("degree-0 homology of a positive-action complex nonzero")

    return {
        "ok": not failures,
        "boundary_squared_zero": sq_zero,
        "index_gaps_ok": diffs_ok,
        "jitter_stable": jitter_stable,
        "chain_ranks": {k: len(v) for k, v in gens.items()},
        "homology": hom,
        "h0_applicable": h0_applicable,
        "h0_vanishes": h0_vanishes,
        "failures": failures,
    }
