import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isct.power import (Platform, PlatformParseError, PowerModel, PowerModelError, break_even,
                        energy_per_cycle, exec_envelope, idle_energy, load_platform, reference_platform,
                        power_at, save_platform, switchable)

TABLE_MW = [430.9, 556.8, 710.7, 896.5, 1118.2]
GHZ = [1.01, 1.26, 1.53, 1.81, 2.1]


def test_cycle_energies_match_table_arithmetic(power):
    expected_nj = [0.6999, 0.6610, 0.6449, 0.6478, 0.6639]
    for f, p, e in zip(GHZ, TABLE_MW, expected_nj):
        direct = (p + 276.0) * 1e-3 / (f * 1e9)
        assert energy_per_cycle(power, f * 1e9) == pytest.approx(direct, rel=1e-12)
        assert direct * 1e9 == pytest.approx(e, abs=6e-5)


def test_most_efficient_level_is_middle(power):
    energies = power.cycle_energies
    assert energies.index(min(energies)) == 2


def test_break_even_reference_values(power):
    assert break_even(power) == 5e-3
    assert power.e_sw / power.c == pytest.approx(1.3949e-3, rel=1e-4)


def test_break_even_with_zero_static_power():
    m = PowerModel((1e9,), c=0.0, e_sw=1e-4, t_sw=2e-3, pdep=(0.1,))
    assert break_even(m) == 2e-3


def test_fit_within_one_percent_of_table(power):
    fitted = power.fitted()
    for f, p in zip(GHZ, TABLE_MW):
        table = (p + 276.0) * 1e-3
        assert abs(power_at(fitted, f * 1e9) - table) / table <= 0.01


def test_table_takes_precedence_over_fit(power):
    assert power_at(power, 1.53e9) == pytest.approx(0.9867)


@pytest.mark.parametrize("length, expected", [
    (2e-3, 0.276 * 2e-3),
    (5e-3, 385e-6),  # closed bound at the break-even time
    (6e-3, 385e-6),
    (8e-3, 0.0),  # idle for the whole period
    (0.0, 0.0),
])
def test_idle_energy_cases(power, length, expected):
    assert idle_energy(power, length, 8e-3) == pytest.approx(expected)


def test_idle_energy_rejects_out_of_range(power):
    with pytest.raises(PowerModelError):
        idle_energy(power, 9e-3, 8e-3)


def test_switchable_boundary(power):
    assert switchable(power, 5e-3)
    assert not switchable(power, 4.99e-3)


def test_every_reference_level_is_on_the_envelope(power):
    env = exec_envelope(power, 2e6)
    assert sorted(env.levels) == [0, 1, 2, 3, 4]


def test_envelope_corners(power):
    env = exec_envelope(power, 2e6)
    assert env.d_min == pytest.approx(2e6 / 2.1e9)
    assert env.energy_at(env.d_min) == pytest.approx(2e6 * power.cycle_energies[4])
    assert env.energy_at(2e6 / 1.53e9) == pytest.approx(1.2898039e-3, rel=1e-6)


def test_envelope_interpolates_between_adjacent_levels(power):
    env = exec_envelope(power, 2e6)
    d2, d3 = 2e6 / 1.26e9, 2e6 / 1.53e9
    mid = (d2 + d3) / 2
    e2, e3 = 2e6 * power.cycle_energies[1], 2e6 * power.cycle_energies[2]
    assert env.energy_at(mid) == pytest.approx((e2 + e3) / 2, rel=1e-12)
    split = env.split_at(mid)
    assert set(split) == {1, 2}
    assert sum(split.values()) == pytest.approx(2e6)


def _brute_force_min(power, units, unit_cycles, duration):
    """Cheapest split on a cycle grid lasting at least ``duration``. Beyond the
    most efficient level the envelope increases, so this brackets it from above."""
    m = power.m
    e = np.array(power.cycle_energies) * unit_cycles
    t = unit_cycles / np.array(power.freqs)
    best = math.inf
    for cuts in itertools.combinations(range(units + m - 1), m - 1):
        counts = np.diff((-1,) + cuts + (units + m - 1,)) - 1
        if counts @ t >= duration * (1 - 1e-12):
            best = min(best, float(counts @ e))
    return best


@pytest.mark.parametrize("share", [0.0, 0.25, 0.5, 0.75])
def test_envelope_matches_brute_force_between_f2_and_f3(power, share):
    units, unit_cycles = 40, 5e4  # 2e6 cycles on a 5e4-cycle grid
    W = units * unit_cycles
    d3, d2 = W / 1.53e9, W / 1.26e9
    d = d3 + share * (d2 - d3)
    env = exec_envelope(power, W)
    brute = _brute_force_min(power, units, unit_cycles, d)
    assert brute >= env.energy_at(d) * (1 - 1e-12)
    assert brute <= env.energy_at(d) * 1.001


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.floats(0.0, 1.0))
def test_optimal_split_uses_two_adjacent_levels(power, units, share):
    env = exec_envelope(power, units * 1e5)
    d = env.d_min + share * (env.d_max - env.d_min)
    split = env.split_at(d)
    assert 1 <= len(split) <= 2
    if len(split) == 2:
        i, j = sorted(split)
        assert abs(env.levels.index(i) - env.levels.index(j)) == 1
    dur = sum(n / power.freqs[i] for i, n in split.items())
    assert dur == pytest.approx(d, rel=1e-9)


def test_platform_round_trip():
    plat = reference_platform()
    again = load_platform(save_platform(plat))
    assert again == plat


@pytest.mark.parametrize("text", [
    "",
    "platform v2\n",
    "platform v1\nc 276\nfreq 1.0 100\nesw 385\n",
    "platform v1\nc 276\nfreq 1.0 100\nfreq 2.0\nesw 1\ntsw 1\n",
    "platform v1\nc abc\n",
])
def test_bad_platform_files(text):
    with pytest.raises(PlatformParseError):
        load_platform(text)


def test_platform_env_override(tmp_path, monkeypatch):
    from isct.power import PLATFORM_ENV, default_platform
    custom = Platform(reference_platform().power, processors=2)
    path = tmp_path / "p.txt"
    path.write_text(save_platform(custom))
    monkeypatch.setenv(PLATFORM_ENV, str(path))
    assert default_platform().processors == 2


@pytest.mark.parametrize("kwargs", [
    dict(freqs=(), c=0.1, e_sw=0, t_sw=0, pdep=()),
    dict(freqs=(2e9, 1e9), c=0.1, e_sw=0, t_sw=0, pdep=(1, 2)),
    dict(freqs=(1e9,), c=-1, e_sw=0, t_sw=0, pdep=(1,)),
    dict(freqs=(1e9,), c=0.1, e_sw=0, t_sw=0),
])
def test_invalid_power_models(kwargs):
    with pytest.raises(PowerModelError):
        PowerModel(**kwargs)
