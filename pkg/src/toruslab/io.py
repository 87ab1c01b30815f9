"""Field serialization: a one-line JSON header followed by raw coefficients.

Layout of a .fld file:

    {"d": ..., "theta": [...], "M": ...}\n
    interleaved (re, im) little-endian float64, row-major k order, k = -M first
"""

from __future__ import annotations

import json

import numpy as np

from .core import FrequencyField, TorusGeometry


def write_field(f: FrequencyField, path) -> None:
    header = {"d": f.geometry.d, "theta": list(f.geometry.theta), "M": f.box_radius}
    flat = f.coeffs.ravel(order="C")
    data = np.empty((flat.size, 2), dtype="<f8")
    data[:, 0] = flat.real
    data[:, 1] = flat.imag
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        fh.write(data.tobytes())


def read_field(path) -> FrequencyField:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode("utf-8"))
        raw = fh.read()
    g = TorusGeometry(d=int(header["d"]), theta=tuple(header["theta"]))
    M = int(header["M"])
    n = (2 * M + 1) ** g.d
    data = np.frombuffer(raw, dtype="<f8", count=2 * n).reshape(n, 2)
    coeffs = (data[:, 0] + 1j * data[:, 1]).reshape((2 * M + 1,) * g.d)
    return FrequencyField(g, M, coeffs)
