import json

import pytest

from ensys.census import (
    CensusError,
    Tally,
    Witness,
    census,
    enumerate_subsystems,
    lemma3_check,
    orbit_size,
    soundness_audit,
)
from ensys.gadgets import f_witness_chain
from ensys.solver import Domain, classify_finiteness
from ensys.system import full_universe, parse_system

Z, N = Domain.INTEGERS, Domain.NONNEGATIVE


def test_orbits_cover_power_set():
    for n in (1, 2):
        reps = list(enumerate_subsystems(n, "full"))
        assert sum(orbit_size(s) for s in reps) == 2 ** len(full_universe(n))
    assert len(list(enumerate_subsystems(1, "full"))) == 8


def test_full_mode_refused_when_too_large():
    with pytest.raises(CensusError):
        next(enumerate_subsystems(3, "full"))


def test_n1_census():
    rec = census(1, Z)
    assert (rec.f_value, rec.g_value) == (1, 2)
    assert rec.f_exact and rec.g_exact and rec.undetermined == 0
    assert rec.orbit_count == 8
    assert str(rec.g_witness.system) == "x1*x1=x1"
    assert rec.g_witness.solutions == ((0,), (1,))


def test_n1_census_over_n_uses_subscripted_names():
    rec = census(1, N)
    assert rec.to_json()["functions"] == ["f_1", "g_1"]
    assert (rec.f_value, rec.g_value) == (1, 2)


def test_pruned_agrees_with_full_n1():
    full, pruned = census(1, Z, mode="full"), census(1, Z, mode="pruned")
    assert (full.f_value, full.g_value) == (pruned.f_value, pruned.g_value)
    assert pruned.complete


def test_pruned_n2():
    rec = census(2, Z, mode="pruned")
    assert (rec.f_value, rec.g_value) == (4, 4)
    assert rec.undetermined == 0 and rec.complete


def test_positive_domain_refused():
    with pytest.raises(CensusError):
        census(1, Domain.POSITIVE)


def test_bad_n():
    with pytest.raises(CensusError):
        census(5, Z)


def test_max_orbits_gives_partial_record():
    rec = census(2, Z, mode="pruned", max_orbits=10)
    assert not rec.complete and not rec.f_exact
    assert rec.orbit_count == 10


def test_witness_mode_n4():
    rec = census(4, Z)
    assert rec.mode == "witness" and not rec.f_exact
    assert rec.f_value >= 2 ** 8 and rec.g_value >= 16


def test_checkpoint_resume(tmp_path):
    path = tmp_path / "ck.json"
    first = census(1, Z, checkpoint=str(path))
    data = json.loads(path.read_text())
    assert len(data["chunks"]) == 8
    # drop half the chunks and resume
    data["chunks"] = {k: v for k, v in data["chunks"].items() if int(k) % 2 == 0}
    path.write_text(json.dumps(data))
    assert census(1, Z, checkpoint=str(path)).dumps() == first.dumps()


def test_checkpoint_mismatch(tmp_path):
    path = tmp_path / "ck.json"
    census(1, Z, checkpoint=str(path))
    with pytest.raises(CensusError):
        census(1, N, checkpoint=str(path))


def test_tally_merge_is_order_independent():
    systems = list(enumerate_subsystems(1, "full"))
    parts = []
    for s in systems:
        t = Tally()
        t.add(s, classify_finiteness(s))
        parts.append(t)
    left = Tally()
    for t in parts:
        left = left.merge(t)
    right = Tally()
    for t in reversed(parts):
        right = right.merge(t)
    assert left.to_json() == right.to_json()
    assert Tally.from_json(json.loads(json.dumps(left.to_json()))).to_json() == left.to_json()


def test_witness_json_round_trip():
    w = Witness(parse_system("x1*x1=x1"), ((0,), (1,)), 2)
    assert Witness.from_json(w.to_json()) == w


def test_lemma3_chain():
    steps = lemma3_check(f_witness_chain(2), 3)
    assert [(s.height, s.appended_height) for s in steps] == [(4, 16), (16, 256), (256, 65536)]
    assert all(s.ok for s in steps)


def test_audit_n1():
    report = soundness_audit(1, Z)
    assert report.discrepancies == () and report.undetermined == 0
    assert report.finite_checked + report.infinite_checked == 8


def test_recorded_witnesses_reverify_from_json():
    rec = census(2, Z, mode="pruned")
    data = json.loads(rec.dumps())
    for name in ("f_witness", "g_witness"):
        w = Witness.from_json(data[name])
        v = classify_finiteness(w.system, Z)
        assert v.solutions.tuples == w.solutions
    assert Witness.from_json(data["f_witness"]).value == 4
