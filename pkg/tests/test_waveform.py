from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import linear_scan, random_wave_spec, spec_to_vcd
from rtlpilot.errors import UnknownSignal
from rtlpilot.fixtures import VCD_DIR, vcd_files
from rtlpilot.waveform import (
    AmbiguousSignal,
    DuplicateIdCode,
    NoEdges,
    VarInfo,
    VcdFormatError,
    WaveDb,
    canonical,
    load_vcd,
    parse_vcd,
    rising_edges,
    serialize_vcd,
    tabulate,
    window_around,
    window_by_changes,
)

GOLDEN = Path(__file__).parent / "golden"
HEADER = "$timescale 1ns $end\n$scope module top $end\n$var wire 1 ! q $end\n$upscope $end\n"


def test_toggle_fixture_changes():
    db = load_vcd(VCD_DIR / "toggle.vcd")
    assert db.changes["top.q"] == ((0, "0"), (5, "1"))
    assert db.timescale == (1, "ns") and db.tick_seconds == 1e-9


def test_toggle_table():
    db = load_vcd(VCD_DIR / "toggle.vcd")
    table = tabulate(db, ["q"], (0, 5))
    assert table.rows == ((0, ("0",)), (5, ("1",)))


def test_missing_enddefinitions():
    with pytest.raises(VcdFormatError):
        parse_vcd(HEADER + "#0\n0!\n")


def test_error_carries_offset():
    text = HEADER + "$enddefinitions $end\n#0\n2!\n"
    with pytest.raises(VcdFormatError) as exc:
        parse_vcd(text)
    assert exc.value.offset == text.index("2!")


def test_x_at_time_zero_only():
    db = parse_vcd(HEADER + "$enddefinitions $end\n#0\nx!\n#40\n")
    assert db.changes["top.q"] == ((0, "x"),)
    assert db.end_time == 40


def test_duplicate_id_code_with_conflicting_width():
    text = ("$timescale 1ns $end\n$scope module t $end\n$var wire 1 ! a $end\n$var wire 4 ! b $end\n"
            "$upscope $end\n$enddefinitions $end\n")
    with pytest.raises(DuplicateIdCode):
        parse_vcd(text)


def test_real_variables_rejected():
    text = "$timescale 1ns $end\n$scope module t $end\n$var real 64 ! r $end\n$upscope $end\n$enddefinitions $end\n"
    with pytest.raises(VcdFormatError, match="real"):
        parse_vcd(text)


def test_vector_padding_and_case():
    text = ("$timescale 1ns $end\n$scope module t $end\n$var wire 4 ! v $end\n$upscope $end\n"
            "$enddefinitions $end\n#0\nbX !\n#1\nb1 !\n#2\nbZ0 !\n")
    assert parse_vcd(text).changes["t.v"] == ((0, "xxxx"), (1, "0001"), (2, "zzz0"))


def test_empty_window_before_changes():
    db = parse_vcd(HEADER + "$enddefinitions $end\n#10\n1!\n")
    table = tabulate(db, ["q"], (0, 5))
    assert table.rows == ((0, ("x",)),)


def test_counter_rows_at_clock_edges():
    db = load_vcd(VCD_DIR / "counter8.vcd")
    assert rising_edges(db, "clk") == [5, 15, 25, 35, 45, 55, 65, 75]
    table = tabulate(db, ["clk", "cnt"], (5, 15))
    assert [t for t, _ in table.rows] == [5, 10, 15]
    assert [v[1] for _, v in table.rows] == ["001", "001", "010"]


def test_window_around_counter():
    db = load_vcd(VCD_DIR / "counter8.vcd")
    # 5th rising edge is at 45; two edges back is the 3rd (25), one ahead the 6th (55)
    assert window_around(db, 45, 2, 1, "clk") == (25, 55)
    assert window_around(db, 47, 0, 0, "clk") == (45, 55)


def test_window_clamped_to_dump():
    db = load_vcd(VCD_DIR / "counter8.vcd")
    assert window_around(db, 6, 5, 20, "clk") == (0, 80)


def test_window_requires_edges():
    db = parse_vcd(HEADER + "$enddefinitions $end\n#0\n0!\n#50\n")
    with pytest.raises(NoEdges):
        window_around(db, 10, 1, 1, "q")


def test_window_unknown_clock():
    db = load_vcd(VCD_DIR / "counter8.vcd")
    with pytest.raises(UnknownSignal):
        window_around(db, 10, 1, 1, "clock")


def test_window_by_changes():
    db = load_vcd(VCD_DIR / "toggle.vcd")
    assert window_by_changes(db, 3, 1, 1, ["q"]) == (0, 5)


def test_golden_counter_table():
    db = load_vcd(VCD_DIR / "counter8.vcd")
    table = tabulate(db, ["clk", "cnt"], window_around(db, 45, 2, 1, "clk"))
    assert table.render() + "\n" == (GOLDEN / "counter8_window.txt").read_text()


def test_golden_fsm_table_with_x_and_z():
    db = load_vcd(VCD_DIR / "fsm_xz.vcd")
    table = tabulate(db, ["clk", "w", "state", "z", "bus"], (0, db.end_time))
    assert table.render() + "\n" == (GOLDEN / "fsm_xz_full.txt").read_text()


def test_suffix_resolution_and_ambiguity():
    db = load_vcd(VCD_DIR / "multi_scope.vcd")
    leaves = [n.rsplit(".", 1)[1] for n in db.signals]
    shared = next(leaf for leaf in leaves if leaves.count(leaf) > 1)
    with pytest.raises(AmbiguousSignal) as exc:
        db.resolve(shared)
    assert len(exc.value.matches) > 1
    full = next(n for n in db.signals if n.endswith("." + shared))
    assert db.resolve(full) == full


def test_unknown_signal_lists_near_matches():
    db = load_vcd(VCD_DIR / "counter8.vcd")
    with pytest.raises(UnknownSignal) as exc:
        tabulate(db, ["cnt", "cnr"], (0, 10))
    assert exc.value.names == ["cnr"]
    assert "cnt" in exc.value.near_matches["cnr"]


def test_reversed_window_rejected():
    db = load_vcd(VCD_DIR / "toggle.vcd")
    with pytest.raises(ValueError):
        tabulate(db, ["q"], (5, 0))


@pytest.mark.parametrize("path", vcd_files(), ids=lambda p: p.name)
def test_fixture_round_trip(path):
    db = load_vcd(path)
    again = parse_vcd(serialize_vcd(db))
    assert canonical(again) == canonical(db)


def test_aliases_survive_round_trip():
    db = load_vcd(VCD_DIR / "aliased.vcd")
    codes = [i.id_code for i in db.signals.values()]
    assert len(set(codes)) < len(codes)
    again = parse_vcd(serialize_vcd(db))
    assert canonical(again) == canonical(db)


# -- properties -------------------------------------------------------------------

wave_specs = st.integers(0, 2**32 - 1).map(lambda s: random_wave_spec(random.Random(s)))


@given(wave_specs)
@settings(max_examples=80)
def test_parse_matches_generated_changes(spec):
    scale, signals, changes, end = spec
    db = parse_vcd(spec_to_vcd(*spec))
    assert db.timescale == scale and db.end_time == end
    for name, (width, _) in signals.items():
        assert db.signals[name].width == width
        assert list(db.changes[name]) == changes[name]


@given(wave_specs)
@settings(max_examples=80)
def test_round_trip_property(spec):
    db = parse_vcd(spec_to_vcd(*spec))
    assert canonical(parse_vcd(serialize_vcd(db))) == canonical(db)


@given(wave_specs, st.data())
@settings(max_examples=80)
def test_tabulate_last_value_semantics(spec, data):
    _, signals, changes, end = spec
    db = parse_vcd(spec_to_vcd(*spec))
    names = data.draw(st.lists(st.sampled_from(sorted(signals)), min_size=1, max_size=4, unique=True))
    t0 = data.draw(st.integers(0, end + 5))
    t1 = data.draw(st.integers(t0, end + 10))
    table = tabulate(db, names, (t0, t1))
    times = [t for t, _ in table.rows]
    assert times == sorted(set(times)) and times[0] == t0
    assert all(t0 <= t <= t1 for t in times)
    expected_times = {t0} | {t for n in names for t, _ in changes[n] if t0 < t <= t1}
    assert set(times) == expected_times
    for t, vals in table.rows:
        for n, v in zip(names, vals):
            assert v == linear_scan(changes[n], signals[n][0], t)


def test_wavedb_value_at_before_first_change():
    db = WaveDb((1, "ns"), {"t.a": VarInfo(2, "!")}, {"t.a": ((4, "01"),)}, 10)
    assert db.value_at("a", 3) == "xx"
    assert db.value_at("t.a", 4) == "01"
