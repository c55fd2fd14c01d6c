# Copyright 2026 icecake0141
# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
"""Tests for CSV/JSON artifact builders."""

import json
from pathlib import Path

import numpy as np
import pytest

from ibr_ard.models.types import ImpedanceSpectrum
from ibr_ard.shared.export import (
    CLOUD_HEADER,
    SPECTRUM_HEADER,
    canonical_digest,
    export_as_json,
    export_rows_as_csv,
    export_spectrum_as_csv,
    format_float,
    parse_csv_rows,
    parse_spectrum_csv,
    to_jsonable,
    write_artifact,
)


def test_format_float():
    """Floats keep full precision, booleans are lowercase."""
    assert format_float(0.1) == "0.10000000000000001"
    assert float(format_float(1 / 3)) == 1 / 3
    assert format_float(np.float64(2.5)) == "2.5"
    assert format_float(np.int64(4)) == "4"
    assert format_float(True) == "true"
    assert format_float(np.bool_(False)) == "false"
    assert format_float("boundary") == "boundary"


def test_to_jsonable():
    data = {
        1: np.array([1.0, 2.0]),
        "lam": complex(-1.0, 3.0),
        "path": Path("a/b"),
        "flag": np.bool_(True),
        "n": np.int32(3),
    }
    assert to_jsonable(data) == {
        "1": [1.0, 2.0],
        "lam": {"re": -1.0, "im": 3.0},
        "path": "a/b",
        "flag": True,
        "n": 3,
    }


def test_export_as_json_is_sorted():
    text = export_as_json({"b": 1, "a": {"d": 2, "c": 3}})
    assert text.endswith("\n")
    assert list(json.loads(text)) == ["a", "b"]
    assert text.index('"c"') < text.index('"d"')


def test_canonical_digest_ignores_key_order():
    assert canonical_digest({"a": 1, "b": [1.0, 2.0]}) == canonical_digest(
        {"b": [1.0, 2.0], "a": 1}
    )
    assert canonical_digest({"a": 1}) != canonical_digest({"a": 2})


def test_rows_as_csv():
    text = export_rows_as_csv(CLOUD_HEADER, [[-1.5, 2.0, True, "sample"]])
    assert text == "re_lambda,im_lambda,stealth_ok,source\n-1.5,2,true,sample\n"
    assert parse_csv_rows(text, CLOUD_HEADER) == [["-1.5", "2", "true", "sample"]]


def test_parse_rejects_wrong_header():
    with pytest.raises(ValueError, match="unexpected CSV header"):
        parse_csv_rows("a,b\n1,2\n", CLOUD_HEADER)
    with pytest.raises(ValueError, match="unexpected CSV header"):
        parse_csv_rows("", CLOUD_HEADER)


def test_spectrum_csv(small_grid):
    """Spectrum CSV carries omega plus re/im of the four dq entries."""
    values = np.random.default_rng(0).standard_normal((len(small_grid), 2, 2)) * (1 + 0.3j)
    spectrum = ImpedanceSpectrum(small_grid, values)
    text = export_spectrum_as_csv(spectrum)
    assert text.splitlines()[0] == ",".join(SPECTRUM_HEADER)
    parsed = parse_spectrum_csv(text)
    np.testing.assert_array_equal(parsed.grid.points, small_grid.points)
    np.testing.assert_array_equal(parsed.values, values)


def test_write_artifact_creates_parents(tmp_path):
    target = write_artifact(tmp_path / "bus_2" / "report.json", "{}\n")
    assert target.read_text() == "{}\n"
