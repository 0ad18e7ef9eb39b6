"""Bias schedules: values, validation, classification, and parsing."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pgl.schedule import (
    PROBE_GRID,
    Constant,
    KakutaniClass,
    LogPower,
    Table,
    Zero,
    cesaro_average,
    classify_kakutani,
    first_persistent_below,
    gamma,
    gamma_slice,
    parse_schedule,
    validate,
)

# First index at which (ln n)^(-1) drops below b, derived by hand:
# 1/ln(n) < b  iff  n > e^(1/b), so the first integer is floor(e^(1/b)) + 1.
def first_index_below(b: float) -> int:
    return math.floor(math.exp(1.0 / b)) + 1


class TestValues:
    def test_zero_bias_is_identically_zero(self):
        sched = Zero()
        for n in (1, 2, 17, 10**6, 2**40):
            assert sched.gamma(n) == 0.0

    def test_constant_bias_returns_its_value(self):
        sched = Constant(-0.2)
        assert sched.gamma(1) == -0.2
        assert sched.gamma(10**9) == -0.2

    def test_position_must_be_positive(self):
        for sched in (Zero(), Constant(0.1), LogPower(1.0), Table((0.1,))):
            with pytest.raises(ValueError):
                sched.gamma(0)
            with pytest.raises(ValueError):
                sched.gamma(-3)

    def test_log_power_cap_governs_small_positions(self):
        sched = LogPower(1.0)
        # below the floor index, and where the formula exceeds the cap
        assert sched.gamma(1) == 0.49
        assert sched.gamma(2) == 0.49          # 1/ln 2 > 1 > 0.49
        assert sched.gamma(7) == 0.49          # 1/ln 7 = 0.514 > 0.49
        assert sched.gamma(8) == pytest.approx(1.0 / math.log(8), rel=1e-15)

    def test_log_power_uses_natural_log(self):
        g = LogPower(1.0).gamma(55)
        assert g == pytest.approx(1.0 / math.log(55), rel=1e-15)
        assert abs(g - 0.2496) < 1e-3

    def test_log_power_general_exponent(self):
        sched = LogPower(0.5, cap=0.3, n0=10)
        assert sched.gamma(9) == 0.3           # below the floor index
        assert sched.gamma(10) == 0.3          # ln(10)^-0.5 = 0.659 > cap
        expected = math.log(10**6) ** -0.5
        assert expected < 0.3
        assert sched.gamma(10**6) == pytest.approx(expected, rel=1e-15)

    def test_log_power_parameter_validation(self):
        with pytest.raises(ValueError):
            LogPower(0.0)
        with pytest.raises(ValueError):
            LogPower(-1.0)
        with pytest.raises(ValueError):
            LogPower(1.0, cap=0.5)
        with pytest.raises(ValueError):
            LogPower(1.0, cap=0.0)
        with pytest.raises(ValueError):
            LogPower(1.0, n0=1)

    def test_table_lookup_and_tail_modes(self):
        rep = Table((0.1, -0.2))
        assert rep.gamma(1) == 0.1
        assert rep.gamma(2) == -0.2
        assert rep.gamma(3) == -0.2            # repeat last entry
        assert rep.gamma(10**6) == -0.2
        zero = Table((0.1, -0.2), tail="zero")
        assert zero.gamma(2) == -0.2
        assert zero.gamma(3) == 0.0

    def test_table_requires_values(self):
        with pytest.raises(ValueError):
            Table(())

    def test_gamma_slice_matches_pointwise_values(self):
        scheds = [Zero(), Constant(0.25), LogPower(0.5), Table((0.1, 0.2, 0.3))]
        for sched in scheds:
            for start in (1, 5):
                block = sched.gamma_slice(start, 7)
                assert block.dtype == np.float64
                assert block.shape == (7,)
                for offset in range(7):
                    assert block[offset] == sched.gamma(start + offset)
                # free-function forms agree with the methods
                assert np.array_equal(block, gamma_slice(sched, start, 7))
                assert gamma(sched, start) == sched.gamma(start)

    @settings(max_examples=60, deadline=None)
    @given(
        exponent=st.floats(0.1, 3.0, allow_nan=False),
        cap=st.floats(0.01, 0.49, allow_nan=False),
        grid_pos=st.integers(0, len(PROBE_GRID) - 2),
    )
    def test_log_power_in_range_and_non_increasing_on_probe_grid(
        self, exponent, cap, grid_pos
    ):
        sched = LogPower(exponent, cap=cap)
        n, n_next = PROBE_GRID[grid_pos], PROBE_GRID[grid_pos + 1]
        g, g_next = sched.gamma(n), sched.gamma(n_next)
        assert 0.0 < g < 0.5 and 0.0 < g_next < 0.5
        assert g_next <= g + 1e-15


class TestValidation:
    def test_standard_schedules_are_clean(self):
        for sched in (Zero(), Constant(0.3), LogPower(1.0), LogPower(0.25)):
            assert validate(sched) == []

    def test_out_of_range_bias_is_reported(self):
        messages = validate(Constant(0.7))
        assert messages and any("outside" in m for m in messages)
        assert validate(Constant(0.5))          # boundary is excluded
        assert validate(Table((0.1, 0.6)))

    def test_extra_indices_are_probed(self):
        # clean on the default grid, flagged once a bad index is probed
        bad_at_5 = Table((0.1, 0.1, 0.1, 0.1, 0.9), tail="zero")
        assert any("gamma(5)" in m for m in validate(bad_at_5, extra_indices=(5,)))


class TestClassification:
    def test_known_kinds(self):
        assert classify_kakutani(Zero()) is KakutaniClass.EQUIVALENT
        assert classify_kakutani(Constant(0.0)) is KakutaniClass.EQUIVALENT
        assert classify_kakutani(Constant(0.1)) is KakutaniClass.SINGULAR
        for c in (0.25, 0.5, 1.0, 2.0):
            assert classify_kakutani(LogPower(c)) is KakutaniClass.SINGULAR
        assert classify_kakutani(Table((0.1,), tail="zero")) is KakutaniClass.EQUIVALENT
        assert classify_kakutani(Table((0.1,))) is KakutaniClass.UNKNOWN

    def test_enum_values_are_strings(self):
        assert KakutaniClass.EQUIVALENT.value == "equivalent"
        assert KakutaniClass.SINGULAR.value == "singular"
        assert KakutaniClass.UNKNOWN.value == "unknown"


class TestCesaro:
    def test_zero_and_constant(self):
        assert cesaro_average(Zero(), 1000) == 0.0
        assert cesaro_average(Constant(0.2), 1000) == pytest.approx(0.2, rel=1e-12)

    def test_log_power_small_average_matches_direct_sum(self):
        sched = LogPower(1.0)
        direct = math.fsum(
            min(0.49, 1.0 / math.log(n)) if n >= 2 else 0.49 for n in range(1, 11)
        ) / 10.0
        assert cesaro_average(sched, 10) == pytest.approx(direct, rel=1e-12)

    def test_log_power_average_decays(self):
        sched = LogPower(1.0)
        assert cesaro_average(sched, 10**6) < cesaro_average(sched, 10**3)

    def test_needs_at_least_one_term(self):
        with pytest.raises(ValueError):
            cesaro_average(Zero(), 0)


class TestPersistence:
    def test_zero_and_constant(self):
        assert first_persistent_below(Zero(), 0.1) == 1
        assert first_persistent_below(Zero(), 0.0) is None
        assert first_persistent_below(Constant(0.05), 0.1) == 1
        assert first_persistent_below(Constant(0.2), 0.1) is None

    def test_table_scans_past_the_last_offender(self):
        sched = Table((0.3, 0.05, 0.2, 0.01))
        assert first_persistent_below(sched, 0.1) == 4
        assert first_persistent_below(Table((0.3, 0.2)), 0.1) is None
        assert first_persistent_below(Table((0.3, 0.2), tail="zero"), 0.1) == 3

    def test_log_power_crossing_matches_hand_formula(self):
        b = (2.0 ** 0.25 - 1.0) / 2.0
        expected = first_index_below(b)
        sched = LogPower(1.0)
        n = first_persistent_below(sched, b)
        assert n == expected
        assert sched.gamma(n) < b <= sched.gamma(n - 1)

    def test_log_power_cap_region_crossing(self):
        # 1/ln(n) < 0.49 first holds at n = 8 (1/ln 7 = 0.514, 1/ln 8 = 0.481)
        assert first_persistent_below(LogPower(1.0), 0.49) == 8
        assert first_persistent_below(LogPower(1.0), 0.5) == 1

    def test_log_power_beyond_search_ceiling_is_none(self):
        # (ln n)^(-1/2) < 0.0946 requires n > e^(111.7), past the 2^63 ceiling
        assert first_persistent_below(LogPower(0.5), 0.0946) is None


class TestParsing:
    def test_simple_specs(self):
        assert isinstance(parse_schedule("zero"), Zero)
        const = parse_schedule("const:0.25")
        assert isinstance(const, Constant) and const.value == 0.25
        lp = parse_schedule("logpow:1.0")
        assert isinstance(lp, LogPower)
        assert (lp.exponent, lp.cap, lp.n0) == (1.0, 0.49, 2)

    def test_log_power_options(self):
        lp = parse_schedule("logpow:0.5:cap=0.3:n0=10")
        assert (lp.exponent, lp.cap, lp.n0) == (0.5, 0.3, 10)

    def test_labels_round_trip(self):
        for spec in ("zero", "const:0.25", "logpow:1.0", "logpow:0.5:cap=0.3:n0=10"):
            sched = parse_schedule(spec)
            again = parse_schedule(sched.label)
            assert again.label == sched.label
            for n in (1, 2, 100, 10**6):
                assert again.gamma(n) == sched.gamma(n)

    def test_table_files(self, tmp_path):
        path = tmp_path / "biases.txt"
        path.write_text("# comment line\n0.1\n\n-0.2\n  0.05  \n")
        sched = parse_schedule(f"table:{path}")
        assert isinstance(sched, Table)
        assert sched.values == (0.1, -0.2, 0.05)
        assert sched.gamma(4) == 0.05           # repeat tail by default
        zeroed = parse_schedule(f"table:{path}:tail=zero")
        assert zeroed.gamma(4) == 0.0

    def test_table_file_errors(self, tmp_path):
        bad = tmp_path / "bad.txt"
        bad.write_text("0.1\nnot-a-number\n")
        with pytest.raises(ValueError, match="not a decimal bias"):
            parse_schedule(f"table:{bad}")
        empty = tmp_path / "empty.txt"
        empty.write_text("# only a comment\n")
        with pytest.raises(ValueError):
            parse_schedule(f"table:{empty}")
        with pytest.raises(ValueError):
            parse_schedule(f"table:{tmp_path / 'missing.txt'}")

    @pytest.mark.parametrize(
        "spec",
        ["", "bogus:1", "zero:extra", "logpow", "logpow:abc",
         "logpow:1.0:weird=2", "const", "const:x", "logpow:-1.0"],
    )
    def test_rejects_malformed_specs(self, spec):
        with pytest.raises(ValueError):
            parse_schedule(spec)

    def test_unknown_kind_message_names_the_kind(self):
        with pytest.raises(ValueError, match="unknown kind 'bogus'"):
            parse_schedule("bogus:1")
