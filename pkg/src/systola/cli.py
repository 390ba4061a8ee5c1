"""Command line interface.

Every subcommand writes a JSON run certificate (to --out, or stdout) whose
payload is deterministic for a fixed seed except for the "timings" subtree.
Exit status: 0 when the requested run and its built-in cross-checks succeed,
1 on a numerical failure or inconsistency, 2 on a malformed invocation.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .bodies import body_from_spec
from .certificate import (
    dumps_certificate,
    make_certificate,
    spectrum_rows,
    write_certificate,
    write_spectrum_csv,
)
from .czindex import (
    conley_zehnder,
    conley_zehnder_rotation,
    operator_spectrum,
    transverse_linearization,
)
from .dual import systole
from .hamiltonians import build_hamiltonian
from .linking import gauss_linking, linking_number, project_to_space, self_linking
from .morse import build_complex, trace_unstable, verify_complex
from .reeb import find_closed_orbits, orbit_data
from .suite import run_suite


def _load_body_spec(text: str) -> dict:
    s = text.strip()
    if s.startswith("{"):
        return json.loads(s)
    with open(s, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _default_eta(body) -> float:
    return 1.5 * math.pi * body.circumradius_bound**2


def _emit(cert: dict, out) -> None:
    if out:
        write_certificate(cert, out)
    else:
        sys.stdout.write(dumps_certificate(cert))


def _params(args, body, **extra) -> dict:
    p = {"seed": int(args.seed)}
    if getattr(args, "eta", None) is not None:
        p["eta"] = float(args.eta)
    if getattr(args, "order", None) is not None:
        p["order"] = int(args.order)
    if getattr(args, "tail", None) is not None:
        p["tail"] = int(args.tail)
    p.update(extra)
    return p


def _cmd_systole(args, body):
    res = systole(
        body,
        eta=args.eta,
        K_tail=args.tail or 32,
        head_n=args.order,
        seed=args.seed,
        cross_tol=args.tol_action,
        keep_objects=True,
    )
    objs = res.pop("_objects")
    timings = {
        "shooting": res.pop("time_shooting"),
        "dual": res.pop("time_dual"),
        "total": res.pop("time_total"),
    }
    if body.dim_n == 2:
        orbit = min(objs["orbits"], key=lambda o: o.action)
        normals = body.gauge(orbit.points)[1]
        res["self_linking"] = int(self_linking(orbit.points, normals=normals))
        if orbit.degenerate:
            res["cz_systole"] = None
        else:
            cz, _ = conley_zehnder(transverse_linearization(body, orbit))
            res["cz_systole"] = int(cz)
    cert = make_certificate(
        "systole",
        body.spec,
        _params(args, body, tol_action=args.tol_action),
        res,
        timings=timings,
    )
    return cert, True


def _cmd_orbits(args, body):
    eta = args.eta if args.eta is not None else _default_eta(body)
    orbits = find_closed_orbits(body, action_max=eta, n_seeds=32, seed=args.seed)
    rows = []
    defect_ok = True
    for o in orbits:
        d = orbit_data(body, o)
        defect_ok = defect_ok and d["action_defect"] <= args.tol_action
        rows.append(
            {
                "action": float(d["action"]),
                "period": float(d["period"]),
                "action_defect": float(d["action_defect"]),
                "multiplicity": int(d["multiplicity"]),
                "degenerate": bool(d["degenerate"]),
                "closure_error": float(d["closure_error"]),
                "transverse_multipliers": [
                    [float(m.real), float(m.imag)] for m in np.atleast_1d(d["transverse_multipliers"])
                ],
                "monodromy_symplecticity": float(d["monodromy_symplecticity"]),
            }
        )
    ok = bool(rows) and defect_ok
    results = {"n_orbits": len(rows), "orbits": rows, "action_integrals_consistent": defect_ok}
    cert = make_certificate(
        "orbits", body.spec, _params(args, body, eta=eta, tol_action=args.tol_action), results
    )
    return cert, ok


def _cmd_cz(args, body):
    if body.dim_n != 2:
        raise RuntimeError("cz indices of orbits are computed for bodies in R^4 only")
    eta = args.eta if args.eta is not None else _default_eta(body)
    orbits = find_closed_orbits(body, action_max=eta, n_seeds=32, seed=args.seed)
    entries = []
    methods_agree = True
    convex_ok = True
    for o in orbits:
        e = {
            "action": float(o.action),
            "multiplicity": int(o.multiplicity),
            "degenerate": bool(o.degenerate),
        }
        if not o.degenerate:
            op = transverse_linearization(body, o)
            cz, _ = conley_zehnder(op)
            cz_rot = conley_zehnder_rotation(op)
            e["cz"] = int(cz)
            e["cz_rotation"] = int(cz_rot)
            methods_agree = methods_agree and cz == cz_rot
            if body.uniformly_convex:
                convex_ok = convex_ok and cz >= 3
        entries.append(e)
    ok = bool(entries) and methods_agree and convex_ok
    results = {
        "n_orbits": len(entries),
        "orbits": entries,
        "winding_rotation_agree": methods_agree,
        "dynamically_convex": convex_ok if body.uniformly_convex else None,
    }
    cert = make_certificate("cz", body.spec, _params(args, body, eta=eta), results)
    return cert, ok


def _cmd_spectrum(args, body):
    if body.dim_n != 2:
        raise RuntimeError("operator spectra are computed for bodies in R^4 only")
    eta = args.eta if args.eta is not None else _default_eta(body)
    orbits = find_closed_orbits(body, action_max=eta, n_seeds=32, seed=args.seed)
    if not orbits:
        raise RuntimeError("no closed orbit found below the action cap")
    orbit = min(orbits, key=lambda o: o.action)
    op = transverse_linearization(body, orbit)
    data = operator_spectrum(op, K=args.tail or 24)
    rows = spectrum_rows([float(v) for v in data.eigenvalues], [int(w) for w in data.windings])
    windings = [r[2] for r in sorted(rows)]
    monotone = all(a <= b for a, b in zip(windings, windings[1:]))
    results = {
        "orbit_action": float(orbit.action),
        "orbit_degenerate": bool(orbit.degenerate),
        "rows": [[float(ev), int(m), int(w)] for ev, m, w in rows],
        "windings_monotone": monotone,
    }
    cert = make_certificate("spectrum", body.spec, _params(args, body, eta=eta), results)
    if args.out:
        write_spectrum_csv(rows, Path(args.out).with_suffix(".csv"))
    return cert, monotone


def _cmd_morse(args, body):
    orbits = find_closed_orbits(
        body, action_max=args.eta if args.eta is not None else _default_eta(body),
        n_seeds=32, seed=args.seed,
    )
    if not orbits:
        raise RuntimeError("no closed orbit found below the action cap")
    orbit = min(orbits, key=lambda o: o.action)
    eta = args.eta if args.eta is not None else 1.2 * orbit.action
    ham = build_hamiltonian(
        body,
        eta,
        {"type": "orbit-splitting", "points": orbit.resampled(256), "eps": 1e-3},
    )
    data = build_complex(
        ham, head_n=args.order, K_tail=args.tail or 16, seed=args.seed,
        n_jitter=5, n_rays=64,
    )
    rep = verify_complex(data)
    traces = {}
    for i, k in enumerate(data.indices):
        if k == 1:
            traces[str(i)] = [
                {
                    "branch": int(r["branch"]),
                    "fate": r["fate"],
                    "target": None if r["target"] is None else int(r["target"]),
                    "psi_final": float(r["psi_final"]),
                }
                for r in trace_unstable(data, i)
            ]
    results = {
        "critical_points": [
            {"index": int(k), "value": float(v)}
            for k, v in zip(data.indices, data.values)
        ],
        "generators": {str(k): [int(i) for i in v] for k, v in data.generators.items()},
        "boundary": {str(k): data.boundary[k].tolist() for k in sorted(data.boundary)},
        "homology": {str(k): h for k, h in rep["homology"].items()},
        "verification": {
            key: rep[key]
            for key in (
                "ok",
                "boundary_squared_zero",
                "index_gaps_ok",
                "jitter_stable",
                "h0_applicable",
                "h0_vanishes",
            )
        },
        "unstable_traces": traces,
        "failures": rep["failures"],
    }
    cert = make_certificate("morse", body.spec, _params(args, body, eta=eta), results)
    return cert, bool(rep["ok"])


def _cmd_link(args, body):
    if body.dim_n != 2:
        raise RuntimeError("linking invariants are computed for bodies in R^4 only")
    eta = args.eta if args.eta is not None else _default_eta(body)
    orbits = find_closed_orbits(body, action_max=eta, n_seeds=32, seed=args.seed)
    if not orbits:
        raise RuntimeError("no closed orbit found below the action cap")
    entries = []
    for o in orbits:
        normals = body.gauge(o.points)[1]
        entries.append(
            {
                "action": float(o.action),
                "degenerate": bool(o.degenerate),
                "self_linking": int(self_linking(o.points, normals=normals)),
            }
        )
    pairs = []
    gauss_ok = True
    for i in range(len(orbits)):
        for j in range(i + 1, len(orbits)):
            a3, b3 = project_to_space([orbits[i].points, orbits[j].points])
            lk = linking_number(a3, b3)
            g = gauss_linking(a3, b3)
            gauss_ok = gauss_ok and abs(g - lk) < 0.2
            pairs.append({"i": i, "j": j, "lk": int(lk), "gauss": float(g)})
    results = {"orbits": entries, "pairs": pairs, "gauss_consistent": gauss_ok}
    cert = make_certificate("link", body.spec, _params(args, body, eta=eta), results)
    return cert, gauss_ok


def _cmd_validate(args, body):
    report, timings = run_suite(level=args.suite, seed=args.seed)
    for c in report["checks"]:
        tag = "PASS" if c["passed"] else "FAIL"
        print(f"[{tag}] {c['name']}: {c['detail']}", file=sys.stderr)
    cert = make_certificate(
        "validate",
        None,
        {"suite": args.suite, "seed": int(args.seed)},
        report,
        timings={"checks": timings},
    )
    return cert, bool(report["all_passed"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="systola",
        description="Systoles and action spectra of smooth convex bodies, "
        "with dual/shooting cross-validation.",
        epilog="Set SYSTOLA_THREADS to cap worker threads in flow sweeps.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_body=True):
        if needs_body:
            p.add_argument(
                "--body",
                required=True,
                help='body description: inline JSON or a path to a JSON file, '
                'e.g. \'{"type": "ellipsoid", "a": [1.0, 1.4142135623730951]}\'',
            )
        p.add_argument("--eta", type=float, default=None, help="profile slope / action cap")
        p.add_argument("--order", type=int, default=None, help="head order of the reduction")
        p.add_argument("--tail", type=int, default=None, help="Fourier tail truncation")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized ingredients")
        p.add_argument("--out", default=None, help="certificate path (default: stdout)")
        p.add_argument(
            "--tol-action",
            type=float,
            default=1e-5,
            dest="tol_action",
            help="tolerance for action cross-checks",
        )

    p = sub.add_parser("systole", help="capacity with dual/shooting cross-validation")
    common(p)
    p.set_defaults(func=_cmd_systole)

    p = sub.add_parser("orbits", help="closed Reeb orbits from the shooting oracle")
    common(p)
    p.set_defaults(func=_cmd_orbits)

    p = sub.add_parser("cz", help="Conley-Zehnder indices of detected orbits")
    common(p)
    p.set_defaults(func=_cmd_cz)

    p = sub.add_parser("spectrum", help="asymptotic operator spectrum of the systole orbit")
    common(p)
    p.set_defaults(func=_cmd_spectrum)

    p = sub.add_parser("morse", help="Morse complex of the orbit-splitting Hamiltonian")
    common(p)
    p.set_defaults(func=_cmd_morse)

    p = sub.add_parser("link", help="self-linking and pairwise linking of detected orbits")
    common(p)
    p.set_defaults(func=_cmd_link)

    p = sub.add_parser("validate", help="run the validation suite")
    common(p, needs_body=False)
    p.add_argument("--suite", choices=("quick", "full"), default="quick")
    p.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    body = None
    if getattr(args, "body", None) is not None:
        try:
            body = body_from_spec(_load_body_spec(args.body))
        except (json.JSONDecodeError, FileNotFoundError, KeyError, TypeError, ValueError) as exc:
            print(f"error: invalid body description: {exc}", file=sys.stderr)
            return 2
    try:
        cert, ok = args.func(args, body)
    except Exception as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    _emit(cert, args.out)
    return 0 if ok else 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
