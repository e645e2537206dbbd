"""Channel spec files: lossless round-trips and failure diagnostics."""

import json

import numpy as np
import pytest

from fsbclab import (
    BsbcFamilySpec,
    SpecParseError,
    SpecValidationError,
    build_bsbc_family,
    load_channel_spec,
    save_channel_spec,
)
from fsbclab.specio import kernel_from_dict


def family():
    return BsbcFamilySpec(
        state_chain=[[0.9, 0.1], [0.2, 0.8]],
        eps1=[0.10, 0.18],
        eps12=[0.0625, 0.0625],
        label="roundtrip",
    )


def test_kernel_roundtrip_is_bit_exact(tmp_path):
    kernel = build_bsbc_family(family())
    path = tmp_path / "spec.json"
    save_channel_spec(kernel, path)
    back = load_channel_spec(path)
    assert back.label == "roundtrip"
    assert np.array_equal(back.probs, kernel.probs)


def test_family_roundtrip(tmp_path):
    path = tmp_path / "fam.json"
    save_channel_spec(family(), path)
    back = load_channel_spec(path)
    assert np.array_equal(back.probs, build_bsbc_family(family()).probs)


def test_double_save_is_stable(tmp_path):
    kernel = build_bsbc_family(family())
    p1, p2 = tmp_path / "a.json", tmp_path / "b.json"
    save_channel_spec(kernel, p1)
    save_channel_spec(load_channel_spec(p1), p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_malformed_json_is_a_parse_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(SpecParseError):
        load_channel_spec(path)


def test_missing_file_is_a_parse_error(tmp_path):
    with pytest.raises(SpecParseError):
        load_channel_spec(tmp_path / "absent.json")


def test_missing_field_names_the_field(tmp_path):
    doc = {"label": "x", "X": 2, "Y": 2, "Z": 2, "S": 1}
    path = tmp_path / "short.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SpecValidationError, match="kernel"):
        load_channel_spec(path)


def test_mistyped_field(tmp_path):
    doc = {"label": "x", "X": "two", "Y": 2, "Z": 2, "S": 1, "kernel": []}
    path = tmp_path / "typed.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SpecValidationError, match="X"):
        load_channel_spec(path)


def test_family_variant_validation():
    with pytest.raises(SpecValidationError, match="state_chain"):
        kernel_from_dict({"bsbc_family": {"eps1": [0.1], "eps12": [0]}})
    with pytest.raises(SpecValidationError):
        kernel_from_dict({"bsbc_family": {"state_chain": [[1.0]], "eps1": [0.1], "eps12": "x"}})


def test_non_object_spec_rejected():
    with pytest.raises(SpecValidationError):
        kernel_from_dict([1, 2, 3])


def test_ragged_kernel_rejected(tmp_path):
    doc = {"label": "x", "X": 2, "Y": 2, "Z": 2, "S": 1, "kernel": [[1, 2], [3]]}
    path = tmp_path / "ragged.json"
    path.write_text(json.dumps(doc))
    with pytest.raises(SpecValidationError):
        load_channel_spec(path)
