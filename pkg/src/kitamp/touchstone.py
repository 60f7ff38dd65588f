"""Touchstone v1 and CSV import/export for S-parameter data.

Written files use real/imaginary format with frequencies in Hz; the
parser additionally accepts MA and DB formats and the usual frequency
unit prefixes so measured files can be read for comparison overlays.
The classic 2-port column order quirk (S11 S21 S12 S22) is honored in
both directions.
"""

from __future__ import annotations

import csv
import re
from pathlib import Path

import numpy as np

from .errors import ParseError
from .network import FrequencyGrid, NPortSParams

_FREQ_SCALE = {"hz": 1.0, "khz": 1e3, "mhz": 1e6, "ghz": 1e9}


def _fmt(x: float) -> str:
    """Shortest exact decimal form; float(_fmt(x)) == x."""
    return repr(float(x))


def write_touchstone(path, sp: NPortSParams) -> None:
    """Write ``sp`` as a Touchstone v1 .sNp file (Hz, RI)."""
    path = Path(path)
    n = sp.n_ports
    lines = [f"# Hz S RI R {_fmt(sp.reference_impedance)}"]
    for k, f in enumerate(sp.grid.points):
        m = sp.matrix[k]
        if n == 2:
            order = [(0, 0), (1, 0), (0, 1), (1, 1)]
            vals = []
            for i, j in order:
                vals += [_fmt(m[i, j].real), _fmt(m[i, j].imag)]
            lines.append(" ".join([_fmt(f)] + vals))
        else:
            for i in range(n):
                vals = []
                for j in range(n):
                    vals += [_fmt(m[i, j].real), _fmt(m[i, j].imag)]
                prefix = _fmt(f) if i == 0 else ""
                lines.append((prefix + " " + " ".join(vals)).strip())
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _ports_from_suffix(path: Path) -> int:
    m = re.fullmatch(r"\.s(\d+)p", path.suffix.lower())
    if not m:
        raise ParseError(
            f"cannot infer port count from extension {path.suffix!r}",
            path=str(path),
        )
    return int(m.group(1))


def read_touchstone(path) -> NPortSParams:
    """Read a Touchstone v1 file; port count comes from the extension."""
    path = Path(path)
    n = _ports_from_suffix(path)
    scale = 1e9
    fmt = "ma"
    z_ref = 50.0
    numbers: list[float] = []
    for lineno, raw in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            tokens = line[1:].lower().split()
            for t, tok in enumerate(tokens):
                if tok in _FREQ_SCALE:
                    scale = _FREQ_SCALE[tok]
                elif tok in ("ri", "ma", "db"):
                    fmt = tok
                elif tok == "r" and t + 1 < len(tokens):
                    z_ref = float(tokens[t + 1])
            continue
        try:
            numbers.extend(float(tok) for tok in line.split())
        except ValueError as exc:
            raise ParseError(
                f"bad numeric token in touchstone data: {exc}",
                path=str(path),
                line=lineno,
            ) from None
    per_point = 1 + 2 * n * n
    if not numbers or len(numbers) % per_point:
        raise ParseError(
            f"touchstone data length {len(numbers)} is not a multiple of "
            f"{per_point} values per frequency for an {n}-port",
            path=str(path),
        )
    data = np.asarray(numbers).reshape(-1, per_point)
    freqs = data[:, 0] * scale
    pairs = data[:, 1:].reshape(-1, n * n, 2)
    if fmt == "ri":
        vals = pairs[..., 0] + 1j * pairs[..., 1]
    elif fmt == "ma":
        vals = pairs[..., 0] * np.exp(1j * np.deg2rad(pairs[..., 1]))
    else:  # db
        vals = 10.0 ** (pairs[..., 0] / 20.0) * np.exp(
            1j * np.deg2rad(pairs[..., 1])
        )
    mat = vals.reshape(-1, n, n)
    if n == 2:
        mat = np.transpose(mat, (0, 2, 1))  # stored (S11 S21 S12 S22)
    return NPortSParams(
        n_ports=n,
        grid=FrequencyGrid(freqs),
        matrix=mat,
        reference_impedance=z_ref,
    )


def write_sparams_csv(path, sp: NPortSParams) -> None:
    """CSV with one row per frequency: frequency, reference impedance,
    then Re/Im per matrix element in row-major order."""
    path = Path(path)
    n = sp.n_ports
    header = ["frequency_hz", "reference_ohm"]
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            header += [f"s{i}{j}_re", f"s{i}{j}_im"]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k, f in enumerate(sp.grid.points):
            row = [_fmt(f), _fmt(sp.reference_impedance)]
            for i in range(n):
                for j in range(n):
                    v = sp.matrix[k, i, j]
                    row += [_fmt(v.real), _fmt(v.imag)]
            writer.writerow(row)


def read_sparams_csv(path) -> NPortSParams:
    """Inverse of :func:`write_sparams_csv`."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty CSV file", path=str(path)) from None
        if len(header) < 4 or header[0] != "frequency_hz":
            raise ParseError(
                "expected header starting with frequency_hz,reference_ohm",
                path=str(path),
                line=1,
            )
        n = int(round(np.sqrt((len(header) - 2) / 2)))
        if 2 + 2 * n * n != len(header):
            raise ParseError(
                f"header of {len(header)} columns is not an n-port layout",
                path=str(path),
                line=1,
            )
        freqs, mats, z_ref = [], [], None
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"expected {len(header)} fields, got {len(row)}",
                    path=str(path),
                    line=lineno,
                )
            try:
                vals = [float(x) for x in row]
            except ValueError as exc:
                raise ParseError(
                    f"bad numeric field: {exc}", path=str(path), line=lineno
                ) from None
            freqs.append(vals[0])
            z_ref = vals[1]
            pairs = np.asarray(vals[2:]).reshape(n * n, 2)
            mats.append((pairs[:, 0] + 1j * pairs[:, 1]).reshape(n, n))
    if not freqs:
        raise ParseError("CSV contains no data rows", path=str(path))
    return NPortSParams(
        n_ports=n,
        grid=FrequencyGrid(np.asarray(freqs)),
        matrix=np.asarray(mats),
        reference_impedance=z_ref,
    )
