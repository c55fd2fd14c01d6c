# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Deterministic CSV/JSON artifact builders.

Every artifact is a pure function of its inputs: floats are written with
``repr``-level precision, JSON keys are sorted and no timestamps are added.
"""

import csv
import hashlib
import io
import json
from pathlib import Path
from typing import Any, Iterable, List, Sequence, Union

import numpy as np

from ibr_ard.models.types import FrequencyGrid, ImpedanceSpectrum

SPECTRUM_HEADER = [
    "omega",
    "dd_re",
    "dd_im",
    "dq_re",
    "dq_im",
    "qd_re",
    "qd_im",
    "qq_re",
    "qq_im",
]
TRANSIENT_HEADER = ["t", "id", "iq", "vd", "vq"]
CLOUD_HEADER = ["re_lambda", "im_lambda", "stealth_ok", "source"]
RANKING_HEADER = ["bus", "api", "branch", "scr_proxy", "dominant_mode_hz"]


def format_float(value: Any) -> str:
    """Format a number for CSV output; non-numbers are passed through ``str``."""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def to_jsonable(value: Any) -> Any:
    """Convert numpy scalars/arrays, complex numbers and paths to JSON types."""
    if hasattr(value, "to_dict") and not isinstance(value, type):
        return to_jsonable(value.to_dict())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return {"re": float(value.real), "im": float(value.imag)}
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, Path):
        return str(value)
    return value


def export_as_json(data: Any) -> str:
    """Serialize to JSON with sorted keys and a trailing newline."""
    return json.dumps(to_jsonable(data), indent=2, sort_keys=True) + "\n"


def canonical_digest(data: Any) -> str:
    """SHA-256 hex digest of the compact canonical JSON form."""
    canonical = json.dumps(to_jsonable(data), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def export_rows_as_csv(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Build a CSV document with ``\\n`` line endings.

    Args:
        header: Column names
        rows: Row values, formatted with :func:`format_float`

    Returns:
        CSV text
    """
    output = io.StringIO()
    writer = csv.writer(output, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) for v in row])
    return output.getvalue()


def parse_csv_rows(text: str, expected_header: Sequence[str]) -> List[List[str]]:
    """Parse CSV text and check its header.

    Raises:
        ValueError: The header does not match ``expected_header``.
    """
    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows or [h.strip() for h in rows[0]] != list(expected_header):
        found = rows[0] if rows else []
        raise ValueError(f"unexpected CSV header {found}, expected {list(expected_header)}")
    return [row for row in rows[1:] if row]


def export_spectrum_as_csv(spectrum: ImpedanceSpectrum) -> str:
    rows = []
    for omega, value in zip(spectrum.grid.points, spectrum.values):
        row: List[Any] = [omega]
        for entry in value.reshape(-1):
            row.extend([entry.real, entry.imag])
        rows.append(row)
    return export_rows_as_csv(SPECTRUM_HEADER, rows)


def parse_spectrum_csv(text: str, role: str = "impedance") -> ImpedanceSpectrum:
    data = np.array(parse_csv_rows(text, SPECTRUM_HEADER), dtype=float)
    values = (data[:, 1::2] + 1j * data[:, 2::2]).reshape(-1, 2, 2)
    return ImpedanceSpectrum(FrequencyGrid(data[:, 0]), values, role)


def write_artifact(path: Union[str, Path], text: str) -> Path:
    """Write ``text`` to ``path`` creating parent directories."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as f:
        f.write(text)
    return target
