"""Catalog registry tests: coverage manifest, routing, reports, sweeps."""

import glob
import json
import os

import pytest

from baileyforge import registry as R
from baileyforge.dsl import parse_file, pretty_print
from baileyforge.errors import SpecError

MANIFEST = os.path.join(R.IDENTITY_DIR, "manifest.json")


def manifest_rows():
    with open(MANIFEST) as fh:
        return json.load(fh)["entries"]


# -- coverage: manifest <-> files <-> registry --------------------------------


def test_catalog_counts():
    assert len(R.REGISTRY) == 73
    routes = [e.route for e in R.REGISTRY.values()]
    assert routes.count("dsl") == 70
    assert routes.count("builtin-engine") == 3


def test_manifest_matches_registry_exactly():
    rows = manifest_rows()
    assert [r["name"] for r in rows] == sorted(R.REGISTRY)
    for row in rows:
        assert row == R.entry_info(R.REGISTRY[row["name"]])


def test_manifest_matches_shipped_files():
    on_disk = {os.path.basename(p) for p in glob.glob(os.path.join(R.IDENTITY_DIR, "*.idn"))}
    in_manifest = {r["file"] for r in manifest_rows() if r["route"] == "dsl"}
    assert on_disk == in_manifest
    assert len(in_manifest) == 70


def test_rejection_specimens_are_not_catalog_entries():
    invalid = glob.glob(os.path.join(R.IDENTITY_DIR, "invalid", "*.idn"))
    broken = glob.glob(os.path.join(R.IDENTITY_DIR, "broken", "*.idn"))
    assert len(invalid) == 2
    assert len(broken) == 1
    names = {os.path.basename(p)[:-4] for p in invalid + broken}
    assert not names & set(R.REGISTRY)


def test_every_file_defines_its_own_name():
    for entry in R.REGISTRY.values():
        if entry.route == "dsl":
            spec = R.load_spec(entry)
            assert spec.name == entry.name


def test_round_trip_full_catalog():
    for entry in R.REGISTRY.values():
        if entry.route != "dsl":
            continue
        spec = R.load_spec(entry)
        again = parse_file(pretty_print(spec))
        assert len(again) == 1 and again[0] == spec, entry.name


# -- the whole catalog verifies at its shipped defaults ----------------------


@pytest.mark.parametrize("name", sorted(R.REGISTRY))
def test_catalog_entry_verifies(name):
    report = R.verify_entry(name)
    assert report.status == "pass", (name, report.detail, report.mismatch)
    assert report.mismatch is None


# -- report contract ---------------------------------------------------------


def test_report_json_fields_and_determinism():
    a = R.verify_entry("jtp_check", order=20).json_dict()
    b = R.verify_entry("jtp_check", order=20).json_dict()
    assert list(a) == ["name", "params", "scale", "order", "status",
                       "mismatch", "duration_ms", "path"]
    a.pop("duration_ms")
    b.pop("duration_ms")
    assert a == b
    assert a["status"] == "pass" and a["path"] == "dsl"


def test_family_defaults_and_order_rule():
    r = R.verify_entry("rr_mod3m_plus")
    assert r.params == {"m": 7, "a": 1}
    assert r.order == 84
    r = R.verify_entry("rr_mod3m_plus", {"m": 2, "a": 1})
    assert r.order == 24 and r.status == "pass"
    r = R.verify_entry("rr_mod3m_plus", {"m": 2, "a": 1}, order=30)
    assert r.order == 30 and r.status == "pass"


def test_scale2_family_defaults():
    r = R.verify_entry("rr_mod2m_half_plus", {"m": 2, "a": 1})
    assert r.scale == 2 and r.order == 32 and r.status == "pass"


def test_out_of_range_binding_is_an_error():
    r = R.verify_entry("rr_mod3m_plus", {"m": 7, "a": 9})
    assert r.status == "error"
    assert "a" in (r.detail or "")


def test_unknown_entry_is_an_error():
    r = R.verify_entry("no_such_identity")
    assert r.status == "error"
    assert "unknown catalog entry" in r.detail


def test_builtin_entry_rejects_params_and_oracle():
    assert R.verify_entry("alt_theta_formal", {"m": 1}).status == "error"
    assert R.verify_entry("alt_theta_formal", use_oracle=True).status == "error"


def test_oracle_route():
    r = R.verify_entry("jtp_check", order=12, use_oracle=True)
    assert r.status == "pass" and r.path == "oracle"


def test_broken_file_reports_first_mismatch():
    path = os.path.join(R.IDENTITY_DIR, "broken", "sq_mod3_off_by_term.idn")
    (r,) = R.verify_file(path)
    assert r.status == "fail"
    m = r.mismatch
    assert (m["q_exp_num"], m["q_exp_den"], m["z_exp"]) == (17, 1, 0)
    assert m["lhs"] != m["rhs"]


def test_divergent_specimens_report_errors():
    for fname, code in (("divergent_bilateral.idn", "bilateral-no-growth"),
                        ("divergent_chain.idn", "chain-no-growth")):
        (r,) = R.verify_file(os.path.join(R.IDENTITY_DIR, "invalid", fname))
        assert r.status == "error"
        assert code in r.detail


def test_verify_file_on_missing_path():
    (r,) = R.verify_file("/no/such/place.idn")
    assert r.status == "error"


# -- sweeps ------------------------------------------------------------------


def test_grid_parse_and_expand():
    axes = R.parse_grid("m=1..2,a=0..m")
    assert R.expand_grid(axes) == [
        {"m": 1, "a": 0}, {"m": 1, "a": 1},
        {"m": 2, "a": 0}, {"m": 2, "a": 1}, {"m": 2, "a": 2},
    ]
    with pytest.raises(SpecError):
        R.parse_grid("m=1..2,a=0..k")
    with pytest.raises(SpecError):
        R.parse_grid("just-words")
    with pytest.raises(SpecError):
        R.parse_grid("")


def test_sweep_serial_and_parallel_agree():
    serial = R.sweep_entry("rr_mod3m_plus", "m=1..2,a=0..m")
    parallel = R.sweep_entry("rr_mod3m_plus", "m=1..2,a=0..m", jobs=2)
    assert len(serial) == 5
    for s, p in zip(serial, parallel):
        sd, pd = s.json_dict(), p.json_dict()
        sd.pop("duration_ms")
        pd.pop("duration_ms")
        assert sd == pd
        assert sd["status"] == "pass"
    assert [s.params for s in serial] == R.expand_grid(R.parse_grid("m=1..2,a=0..m"))
