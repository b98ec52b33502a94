import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bargmann_circuits.circfile import (
    CircuitFileError,
    bundled_examples,
    load_circuit,
    parse_circuit,
    parse_matrix,
    read_text,
    serialize_circuit,
)
from bargmann_circuits.circuit import ActiveComponent, PassiveComponent

MINIMAL = '{"modes": [{"name": "a", "pol": "none"}]}'


def doc(**kw):
    base = {
        "modes": [{"name": "a", "pol": "none"}, {"name": "b", "pol": "none"}],
        "components": [{"kind": "down_converter", "modes": ["a", "b"], "params": {"strength": {"re": 0.2, "im": 0.0}}}],
    }
    base.update(kw)
    return json.dumps(base)


def errors_of(text):
    with pytest.raises(CircuitFileError) as info:
        parse_circuit(text)
    return info.value.errors


def test_minimal_document():
    spec = parse_circuit(MINIMAL)
    assert spec.labels == ["a"] and spec.components == () and spec.detect is None


def test_bundled_teleport():
    spec = load_circuit("teleport")
    assert spec.nmodes == 8
    kinds = [c.kind for c in spec.components]
    assert kinds.count("down_converter") == 2
    assert kinds.count("polarization_rotation") == 1
    assert kinds.count("beam_splitter") == 1
    assert spec.detect is not None and len(spec.detect.event.operators()) == 2


def test_bundled_files_listed():
    assert bundled_examples() == ["heralded_photon.circ.json", "teleport.circ.json", "two_mode_squeezer.circ.json"]


def test_undeclared_mode_single_error():
    text = json.dumps(
        {
            "modes": [{"name": "a", "pol": "x"}, {"name": "a", "pol": "y"}],
            "components": [{"kind": "beam_splitter", "modes": ["a_x", "e_x"], "params": {}}],
        }
    )
    errs = errors_of(text)
    assert len(errs) == 1 and "e_x" in errs[0]


def test_errors_collected_together():
    text = json.dumps(
        {
            "modes": [{"name": "a", "pol": "q"}, {"name": "b", "pol": "none"}],
            "components": [
                {"kind": "laser", "modes": ["b"]},
                {"kind": "squeezer", "modes": ["b"], "params": {}},
                {"kind": "phase_shift", "modes": ["b"], "params": {"phi": "x"}},
            ],
            "options": {"cutoff": 99},
        }
    )
    errs = errors_of(text)
    assert len(errs) == 5
    assert any("modes[0].pol" in e for e in errs)
    assert any("laser" in e for e in errs)
    assert any("strength" in e for e in errs)
    assert any("phi" in e for e in errs)
    assert any("cutoff" in e for e in errs)


def test_syntax_error_location():
    errs = errors_of('{"modes": [\n  {"name": "a",, }]}')
    assert errs[0].startswith("syntax error at line 2 column")


def test_detect_validation():
    errs = errors_of(doc(detect={"signature": {"a": 1, "b": 1}}))
    assert any("undetected" in e for e in errs)
    errs = errors_of(doc(detect={"signature": {"a": -1}}))
    assert any("non-negative" in e for e in errs)
    errs = errors_of(doc(detect={"signature": {"a": 1}, "operators": []}))
    assert any("exactly one" in e for e in errs)


def test_dark_counts_rejected():
    errs = errors_of(doc(detect={"signature": {"a": 1}, "detectors": {"dark_counts": {"a": 1e-3}}}))
    assert len(errs) == 1 and "dark counts are not modelled" in errs[0]


def test_detector_ranges():
    errs = errors_of(
        doc(detect={"signature": {"a": 1}, "detectors": {"efficiency": {"a": 1.5}, "confusion": {"a": {"1": -0.1}}}})
    )
    assert len(errs) == 2


def test_detector_block_parsed():
    spec = parse_circuit(
        doc(detect={"signature": {"a": 1}, "detectors": {"efficiency": {"a": 0.9}, "confusion": {"a": {"1": 0.7, "2": 0.3}}}})
    )
    assert spec.detect.efficiency == {"a": 0.9}
    assert spec.detect.confusion == {"a": {1: 0.7, 2: 0.3}}


def test_complex_and_matrix_params():
    U = [[{"re": 0.0, "im": 1.0}, 0], [0, 1]]
    text = doc(components=[{"kind": "custom_unitary", "modes": ["a", "b"], "params": {"matrix": U}}])
    spec = parse_circuit(text)
    comp = spec.components[0]
    assert isinstance(comp, PassiveComponent)
    assert np.allclose(comp.local_matrix(), [[1j, 0], [0, 1]])
    errs = errors_of(doc(components=[{"kind": "custom_unitary", "modes": ["a", "b"], "params": {"matrix": [[1, 1], [0, 1]]}}]))
    assert any("unitary" in e for e in errs)


def test_parse_matrix():
    assert np.allclose(parse_matrix('{"matrix": [[1, {"re": 0, "im": 2}], [{"re": 0, "im": 2}, 3]]}'), [[1, 2j], [2j, 3]])
    assert parse_matrix("[[0.5]]").shape == (1, 1)
    with pytest.raises(CircuitFileError):
        parse_matrix('{"matrix": [[1, 2]]}')


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        read_text("/nonexistent/none.circ.json")


@pytest.mark.parametrize("name", ["teleport", "heralded_photon", "two_mode_squeezer"])
def test_bundled_round_trip(name):
    spec = load_circuit(name)
    again = parse_circuit(serialize_circuit(spec))
    assert again == spec
    assert serialize_circuit(again) == serialize_circuit(spec)


def test_round_trip_with_operators_and_detectors():
    spec = parse_circuit(
        doc(
            detect={
                "operators": [{"sign": 1, "orders": {"a": 1}}, {"sign": {"re": 0, "im": -1}, "orders": {"a": 2}}],
                "detectors": {"efficiency": {"a": 0.75}},
            },
            options={"cutoff": 6, "tolerance": 1e-7, "emit": "json"},
        )
    )
    assert parse_circuit(serialize_circuit(spec)) == spec


def twelve_digits(lo, hi):
    # the file format keeps 12 significant digits, so only those round-trip exactly
    return st.floats(lo, hi, allow_nan=False).map(lambda x: float(f"{x:.12g}"))


@settings(max_examples=40, deadline=None)
@given(twelve_digits(-0.3, 0.3), twelve_digits(-0.3, 0.3), twelve_digits(-3, 3), st.integers(0, 4))
def test_round_trip_property(re, im, phi, count):
    text = json.dumps(
        {
            "modes": [{"name": "a", "pol": "x"}, {"name": "a", "pol": "y"}, {"name": "b", "pol": "none"}],
            "components": [
                {"kind": "squeezer", "modes": ["b"], "params": {"strength": {"re": re, "im": im}}},
                {"kind": "polarization_rotation", "modes": ["a"], "params": {"theta": phi}},
                {"kind": "phase_shift", "modes": ["a_y"], "params": {"phi": phi}},
            ],
            "detect": {"signature": {"b": count}},
        }
    )
    spec = parse_circuit(text)
    assert parse_circuit(serialize_circuit(spec)) == spec
    assert isinstance(spec.components[0], ActiveComponent)
