import numpy as np
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oncolattice.experiments import Table, phase_portrait, preset, run_timeseries
from oncolattice.output import format_value, read_csv, update_manifest, write_csv, write_svg


def test_empty_table_writes_header_only(tmp_path):
    p = write_csv(Table(["t", "u"], np.empty((0, 2))), tmp_path / "e.csv")
    assert p.read_bytes() == b"t,u\n"
    back = read_csv(p)
    assert back.columns == ["t", "u"] and back.data.shape == (0, 2)


@given(arrays(float, (1, 4), elements=st.floats(allow_nan=False, allow_infinity=False, width=64)))
def test_round_trip_is_bit_exact(tmp_path_factory, row):
    p = tmp_path_factory.mktemp("rt") / "r.csv"
    write_csv(Table(["a", "b", "c", "d"], row), p)
    assert np.array_equal(read_csv(p).data, row)


def test_special_values():
    assert [format_value(v) for v in (np.inf, -np.inf, np.nan, 0.1)] == ["inf", "-inf", "nan", "0.10000000000000001"]


def test_timeseries_reread_and_line_endings(tmp_path):
    tab = run_timeseries(preset("fig10b"))
    p = write_csv(tab, tmp_path / "fig10b.csv")
    raw = p.read_bytes()
    assert b"\r" not in raw and raw.endswith(b"\n")
    back = read_csv(p)
    assert back.columns == tab.columns
    assert np.array_equal(back.data, tab.data)


def test_svg_is_deterministic(tmp_path):
    tab = run_timeseries(preset("fig5"))
    a = write_svg(tab, tmp_path / "a.svg", title="fig5").read_bytes()
    b = write_svg(tab, tmp_path / "b.svg", title="fig5").read_bytes()
    assert a == b and a.lstrip().startswith(b"<?xml")
    pp = phase_portrait(preset("fig1a").model, resolution=6, samples=1)
    assert write_svg(pp, tmp_path / "pp.svg").stat().st_size > 0


def test_manifest_replaces_by_name(tmp_path):
    update_manifest(tmp_path, {"name": "b", "files": ["b.csv"]})
    update_manifest(tmp_path, {"name": "a", "files": ["a.csv"]})
    p = update_manifest(tmp_path, {"name": "b", "files": ["b2.csv"]})
    import json
    recs = json.loads(p.read_text())["scenarios"]
    assert [r["name"] for r in recs] == ["a", "b"] and recs[1]["files"] == ["b2.csv"]
