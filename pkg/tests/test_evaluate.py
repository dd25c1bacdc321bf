import json

import pytest
from hypothesis import given, settings, strategies as st

from isct.evaluate import (Placement, Schedule, ScheduleError, ScheduleParseError, apply_dpm_post, compare_report,
                           idle_intervals, load_schedule, render_records, render_table, save_schedule,
                           schedule_energy, schedule_violations)
from isct.exact import exact_schedule
from isct.gantt import gantt_svg
from isct.graph import Task, TaskGraph
from isct.heuristic import heuristic_schedule
from isct.power import idle_cost

from conftest import GOLDEN


def _at(power, level, cycles):
    return tuple(cycles if i == level else 0.0 for i in range(power.m))


@pytest.fixture
def single_best(single, power):
    return exact_schedule(single, power, 1).schedule


def test_wrap_around_interval(single_best):
    ivs = idle_intervals(single_best)
    assert len(ivs) == 1
    assert ivs[0].kind == "wrap-around"
    assert ivs[0].length * 1e3 == pytest.approx(6.6928, abs=1e-4)


def test_back_to_back_has_no_gap(power):
    sched = Schedule(8e-3, 1, power.freqs, (
        Placement(1, 1, 0.0, _at(power, 4, 2.1e6)),
        Placement(2, 1, 1e-3, _at(power, 4, 2.1e6)),
    ))
    kinds = [iv.kind for iv in idle_intervals(sched)]
    assert kinds == ["wrap-around"]


def test_unused_processor_whole_period(single_best, power):
    sched = Schedule(8e-3, 2, power.freqs, single_best.placements)
    whole = [iv for iv in idle_intervals(sched) if iv.kind == "whole-period"]
    assert len(whole) == 1 and whole[0].proc == 2 and whole[0].length == 8e-3


def test_single_task_energies(single, single_best, power):
    assert schedule_energy(single, power, single_best).total * 1e3 == pytest.approx(1.67480, abs=1e-5)
    never = schedule_energy(single, power, single_best, "never").total * 1e3
    assert never == pytest.approx(3.13702, abs=1e-5)


def test_report_totals(tgff7, power):
    sched = exact_schedule(tgff7, power, 3).schedule
    rep = schedule_energy(tgff7, power, sched)
    assert rep.total == pytest.approx(rep.exec_energy + rep.idle_energy, abs=1e-12)
    assert rep.used_processors <= 3
    assert len(rep.per_processor) == 3


def test_empty_schedule(power):
    g = TaskGraph((), (), 8e-3)
    rep = schedule_energy(g, power, Schedule(8e-3, 4, power.freqs, ()))
    assert rep.total == 0.0 and rep.used_processors == 0


def test_unused_processor_costs_nothing(single, single_best, power):
    wide = Schedule(8e-3, 3, power.freqs, single_best.placements)
    assert schedule_energy(single, power, wide).total == schedule_energy(single, power, single_best).total


def _gap_schedule(power, gap):
    d = 2e6 / power.f_max
    g = TaskGraph((Task(1, 2_000_000),), (), d + gap)
    return g, Schedule(g.period, 1, power.freqs, (Placement(1, 1, 0.0, _at(power, 4, 2e6)),))


@pytest.mark.parametrize("gap,expect", [(6e-3, True), (2e-3, False), (5e-3, True)])
def test_post_dpm_threshold(power, gap, expect):
    g, sched = _gap_schedule(power, gap)
    post = apply_dpm_post(g, power, sched)
    assert post.switches == {(1, 0): expect}
    assert schedule_energy(g, power, post, "given").total == pytest.approx(schedule_energy(g, power, sched).total)


def test_given_flags_never_beat_optimal(tgff7, power):
    sched = heuristic_schedule(tgff7, power, 2).schedule
    best = schedule_energy(tgff7, power, sched).total
    never = schedule_energy(tgff7, power, sched, "never").total
    assert best <= never


def test_given_flag_on_short_interval_rejected(power):
    g, sched = _gap_schedule(power, 2e-3)
    with pytest.raises(ScheduleError):
        schedule_energy(g, power, sched.with_switches({(1, 0): True}), "given")


def test_violations_detected(power):
    g = TaskGraph((Task(1, 2.1e6), Task(2, 2.1e6)), ((1, 2),), 8e-3)
    overlap = Schedule(8e-3, 1, power.freqs, (
        Placement(1, 1, 0.0, _at(power, 4, 2.1e6)),
        Placement(2, 1, 0.5e-3, _at(power, 4, 2.1e6)),
    ))
    problems = schedule_violations(g, power, overlap)
    assert any("overlap" in p for p in problems)
    assert any("precedence" in p or "before" in p for p in problems)
    short = Schedule(8e-3, 1, power.freqs, (
        Placement(1, 1, 0.0, _at(power, 4, 2.0e6)),
        Placement(2, 1, 2e-3, _at(power, 4, 2.1e6)),
    ))
    assert schedule_violations(g, power, short)
    late = Schedule(8e-3, 1, power.freqs, (
        Placement(1, 1, 0.0, _at(power, 4, 2.1e6)),
        Placement(2, 1, 7.5e-3, _at(power, 4, 2.1e6)),
    ))
    assert schedule_violations(g, power, late)
    with pytest.raises(ScheduleError):
        idle_intervals(overlap)


def test_compare_identical(tgff7, power):
    sched = exact_schedule(tgff7, power, 2).schedule
    assert compare_report(tgff7, power, sched, sched).saving == 0.0


def test_compare_against_never_switch(single, single_best, power):
    base = single_best.with_switches({(1, 0): False})
    row = compare_report(single, power, single_best, base)
    # the baseline here is priced by the optimal policy, so compare energies directly
    never = schedule_energy(single, power, single_best, "never").total
    best = schedule_energy(single, power, single_best).total
    assert 100 * (never - best) / never == pytest.approx(46.6, abs=0.05)
    assert row.isct_energy == best


def test_report_formats(tgff7, pair, power):
    rows = [compare_report(g, power, exact_schedule(g, power, 2).schedule,
                           heuristic_schedule(g, power, 2).schedule, name)
            for name, g in (("tgff7", tgff7), ("pair", pair))]
    table = render_table(rows)
    assert table.splitlines()[0].startswith("graph")
    assert len(table.splitlines()) == 1 + len(rows) + 1
    records = [json.loads(line) for line in render_records(rows).splitlines()]
    assert len(records) == len(rows) + 1
    assert records[0]["name"] == "tgff7" and "average" in records[-1]


def test_schedule_round_trip(tgff7, power):
    sched = apply_dpm_post(tgff7, power, exact_schedule(tgff7, power, 3).schedule)
    again = load_schedule(save_schedule(sched), power)
    assert again == sched


def test_schedule_golden(pair, fixture_power):
    text = (GOLDEN / "two_independent_K2.schedule.txt").read_text()
    sched = load_schedule(text, fixture_power)
    assert schedule_energy(pair, fixture_power, sched).total * 1e3 == pytest.approx(2.96460, abs=1e-5)


@pytest.mark.parametrize("text,line", [
    ("schedule v2\n", 1),
    ("schedule v1\nperiod 0.008\nprocessors 1\ntask 1 proc one start 0\n", 4),
    ("schedule v1\nperiod 0.008\nprocessors 1\ntask 1 proc 1 start 0\nsplit 1 9 100\n", 5),
])
def test_schedule_parse_errors(power, text, line):
    with pytest.raises(ScheduleParseError) as err:
        load_schedule(text, power)
    assert err.value.line == line


def test_gantt_golden(pair, fixture_power):
    sched = exact_schedule(pair, fixture_power, 2).schedule
    assert gantt_svg(sched) == (GOLDEN / "two_independent_K2.svg").read_text()


def test_gantt_shapes(single_best, power):
    empty = gantt_svg(Schedule(8e-3, 2, power.freqs, ()))
    assert empty.count("<title>") == 0 and "P2" in empty
    one = gantt_svg(single_best)
    assert one.count("<title>") == 1 and "sleep" in one


@settings(max_examples=30, deadline=None)
@given(starts=st.lists(st.floats(0, 6e-3), min_size=1, max_size=4), seed=st.integers(0, 3))
def test_closure_and_policy_order(power, starts, seed):
    # place tasks left to right with the drawn starts as gaps
    d = 1e6 / power.f_max
    t, places = 0.0, []
    for i, gap in enumerate(starts, start=1):
        t += gap / len(starts)
        places.append(Placement(i, 1, t, _at(power, 4, 1e6)))
        t += d
    g = TaskGraph(tuple(Task(i, 1_000_000) for i in range(1, len(starts) + 1)), (), 8e-3)
    sched = Schedule(8e-3, 1, power.freqs, tuple(places))
    busy = len(starts) * d
    idle = sum(iv.length for iv in idle_intervals(sched))
    assert busy + idle == pytest.approx(8e-3, abs=1e-9)
    best = schedule_energy(g, power, sched).total
    flags = {(1, iv.index): bool((seed >> (iv.index % 2)) & 1) and iv.length >= power.t_be
             for iv in idle_intervals(sched)}
    assert best <= schedule_energy(g, power, sched.with_switches(flags), "given").total + 1e-15
    assert schedule_energy(g, power, sched).idle_energy == pytest.approx(
        sum(idle_cost(power, iv.length, iv.length >= power.t_be) for iv in idle_intervals(sched)))
