"""Run certificates: canonical serialization and spectrum CSV output.

Certificates are plain dictionaries serialized to a canonical JSON form:
keys sorted, floats printed with 17 significant digits (enough to
round-trip IEEE doubles bit-exactly), no insignificant whitespace
variation.  Identical payloads therefore serialize to identical bytes,
and certificates are deterministic given (config, seed) once wall-clock
timings are excluded; helpers below compare certificates modulo the
"timings" subtree.
"""

from __future__ import annotations

import json
import math

import numpy as np

SCHEMA_VERSION = 1


def _canon(value, out: list) -> None:
    if value is None or value is True or value is False:
        out.append("null" if value is None else ("true" if value else "false"))
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=True))
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite float in certificate: {value!r}")
        if value == int(value) and abs(value) < 1e16:
            out.append(f"{value:.1f}")
        else:
            out.append(format(value, ".17g"))
    elif isinstance(value, dict):
        out.append("{")
        first = True
        for key in sorted(value):
            if not isinstance(key, str):
                raise TypeError(f"certificate keys must be strings, got {key!r}")
            if not first:
                out.append(",")
            first = False
            out.append(json.dumps(key, ensure_ascii=True))
            out.append(":")
            _canon(value[key], out)
        out.append("}")
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _canon(item, out)
        out.append("]")
    else:
        if isinstance(value, np.integer):
            out.append(str(int(value)))
        elif isinstance(value, np.floating):
            _canon(float(value), out)
        elif isinstance(value, np.bool_):
            out.append("true" if value else "false")
        elif isinstance(value, np.ndarray):
            _canon(value.tolist(), out)
        else:
            raise TypeError(f"unserializable value {value!r}")


def dumps_certificate(payload: dict) -> str:
    """Canonical JSON text of a certificate payload (with trailing newline)."""
    out: list[str] = []
    _canon(payload, out)
    return "".join(out) + "\n"


def write_certificate(payload: dict, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write(dumps_certificate(payload))


def load_certificate(path) -> dict:
    with open(path, "r", encoding="ascii") as fh:
        return json.loads(fh.read())


def roundtrip_ok(payload: dict) -> bool:
    """True when serialize -> parse -> serialize reproduces the bytes."""
    text = dumps_certificate(payload)
    return dumps_certificate(json.loads(text)) == text


def strip_timings(payload):
    """Copy of a payload with every 'timings' subtree removed."""
    if isinstance(payload, dict):
        return {k: strip_timings(v) for k, v in payload.items() if k != "timings"}
    if isinstance(payload, list):
        return [strip_timings(v) for v in payload]
    return payload


def deterministic_equal(a: dict, b: dict) -> bool:
    """Certificate equality modulo wall-clock timings."""
    return dumps_certificate(strip_timings(a)) == dumps_certificate(strip_timings(b))


def make_certificate(command: str, body_spec, parameters: dict, results: dict,
                     timings: dict | None = None) -> dict:
    cert = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "body": body_spec,
        "parameters": parameters,
        "results": results,
    }
    if timings is not None:
        cert["timings"] = timings
    return cert


def write_spectrum_csv(rows, path) -> None:
    """CSV of an operator spectrum with columns eigenvalue,multiplicity,winding.

    rows are (eigenvalue, multiplicity, winding) triples; eigenvalues are
    written with 17 significant digits.
    """
    with open(path, "w", encoding="ascii") as fh:
        fh.write("eigenvalue,multiplicity,winding\n")
        for ev, mult, wind in rows:
            fh.write(f"{format(float(ev), '.17g')},{int(mult)},{int(wind)}\n")


def spectrum_rows(eigenvalues, windings, tol: float = 1e-9):
    """Cluster (eigenvalue, winding) pairs into CSV rows with multiplicities."""
    order = sorted(range(len(eigenvalues)), key=lambda i: eigenvalues[i])
    rows = []
    for i in order:
        ev, w = float(eigenvalues[i]), int(windings[i])
        if rows and abs(ev - rows[-1][0]) <= tol * (1.0 + abs(ev)) and rows[-1][2] == w:
            rows[-1] = (rows[-1][0], rows[-1][1] + 1, w)
        else:
            rows.append((ev, 1, w))
    return rows
