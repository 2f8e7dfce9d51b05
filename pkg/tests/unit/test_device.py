"""Unit tests for subpuf.device."""
import math

import numpy as np
import pytest

from subpuf.core.exceptions import DomainError
from subpuf.device.mismatch import RandomStream, sample_mismatch
from subpuf.device.model import effective_vth, subthreshold_current, thermal_voltage
from subpuf.device.params import Environment, MismatchModel, PhysicalConstants, VthDeviation

CONSTANTS = PhysicalConstants()


class TestThermalVoltage:
    """Test suite for kT/q."""

    @pytest.mark.parametrize(
        "temperature, expected_mv",
        [(300.15, 25.87), (218.15, 18.80), (398.15, 34.31)],
    )
    def test_reference_temperatures(self, temperature, expected_mv):
        """Test V_T at room, cold and hot corners."""
        assert thermal_voltage(CONSTANTS, temperature) * 1e3 == pytest.approx(expected_mv, abs=0.01)

    def test_linear_in_temperature(self):
        """Test doubling T doubles V_T."""
        assert thermal_voltage(CONSTANTS, 600.0) == pytest.approx(2 * thermal_voltage(CONSTANTS, 300.0))

    @pytest.mark.parametrize("temperature", [0.0, -10.0])
    def test_non_positive_temperature_rejected(self, temperature):
        """Test non-positive temperature raises DomainError."""
        with pytest.raises(DomainError):
            thermal_voltage(CONSTANTS, temperature)


class TestEffectiveVth:
    """Test suite for threshold voltage at an operating point."""

    def test_nominal_conditions(self, nmos):
        """Test all corrections vanish at T_ref without body bias."""
        assert effective_vth(nmos, Environment()) == pytest.approx(nmos.vth_nominal)

    def test_scalar_without_deviation(self, nmos):
        """Test an unsampled device gives a plain float, not a 1-element array."""
        assert type(effective_vth(nmos, Environment())) is float
        assert type(effective_vth(nmos, Environment(), v_sb=0.2)) is float

    def test_vector_with_deviation(self, nmos):
        """Test sampled deviations keep their shape."""
        assert effective_vth(nmos, Environment(), VthDeviation.zeros(5)).shape == (5,)

    def test_zero_gamma_ignores_body_bias(self, nmos):
        """Test body term is scaled by gamma."""
        flat = nmos.model_copy(update={"body_gamma": 0.0})
        assert effective_vth(flat, Environment(), v_sb=0.4) == pytest.approx(flat.vth_nominal)

    def test_body_effect_value(self, nmos):
        """Test the body term at V_SB = 0.4 V."""
        expected = 0.45 + 0.2 * (math.sqrt(1.1) - math.sqrt(0.7))
        assert effective_vth(nmos, Environment(), v_sb=0.4) == pytest.approx(expected)

    def test_reverse_well_bias_raises_vth(self, nmos):
        """Test negative p-well bias increases the threshold."""
        assert effective_vth(nmos, Environment(body_vpw=-0.4)) > effective_vth(nmos, Environment())

    def test_decreases_with_temperature(self, nmos):
        """Test threshold falls as the die heats up."""
        cold = effective_vth(nmos, Environment(temperature=218.15))
        hot = effective_vth(nmos, Environment(temperature=398.15))
        assert cold > hot

    def test_sampled_deviation_added(self, nmos):
        """Test the static deviation shifts the threshold one for one."""
        dev = VthDeviation.zeros().shifted(0.01)
        assert effective_vth(nmos, Environment(), dev) == pytest.approx(nmos.vth_nominal + 0.01)

    def test_body_bias_outside_validity(self, nmos):
        """Test |V_PW| beyond 2*phi_F raises DomainError."""
        with pytest.raises(DomainError):
            effective_vth(nmos, Environment(body_vpw=0.75))


class TestSubthresholdCurrent:
    """Test suite for the subthreshold current law."""

    def test_zero_drain_voltage(self, nmos):
        """Test no current flows without V_ds."""
        v_t = thermal_voltage(CONSTANTS, 300.15)
        assert subthreshold_current(nmos, 0.3, 0.0, 0.45, v_t) == 0.0

    def test_drain_factor_saturates(self, nmos):
        """Test the drain factor is within 5e-5 of 1 at V_ds = 10 V_T."""
        v_t = thermal_voltage(CONSTANTS, 300.15)
        saturated = subthreshold_current(nmos, 0.3, 10 * v_t, 0.45, v_t)
        ideal = subthreshold_current(nmos, 0.3, 100 * v_t, 0.45, v_t)
        assert abs(saturated / ideal - 1) < 5e-5

    def test_linear_in_width(self, nmos):
        """Test doubling W doubles the current."""
        v_t = thermal_voltage(CONSTANTS, 300.15)
        wide = nmos.scaled(2.0)
        assert subthreshold_current(wide, 0.3, 0.5, 0.45, v_t) == pytest.approx(
            2 * subthreshold_current(nmos, 0.3, 0.5, 0.45, v_t)
        )

    def test_increasing_in_gate_and_drain(self, nmos):
        """Test current grows with V_gs and V_ds."""
        v_t = thermal_voltage(CONSTANTS, 300.15)
        base = subthreshold_current(nmos, 0.3, 0.05, 0.45, v_t)
        assert subthreshold_current(nmos, 0.31, 0.05, 0.45, v_t) > base
        assert subthreshold_current(nmos, 0.3, 0.06, 0.45, v_t) > base

    def test_non_positive_thermal_voltage(self, nmos):
        """Test v_t <= 0 raises DomainError."""
        with pytest.raises(DomainError):
            subthreshold_current(nmos, 0.3, 0.5, 0.45, 0.0)


class TestSampleMismatch:
    """Test suite for Pelgrom mismatch sampling."""

    def test_zero_model_gives_zero_deviations(self, nmos):
        """Test a zero model draws exact zeros."""
        dev = sample_mismatch(MismatchModel.zero(), nmos, RandomStream(1), 100)
        for field in (dev.static, dev.tempco, dev.gamma, dev.slope):
            assert np.all(field == 0)

    def test_same_key_same_samples(self, nmos):
        """Test sampling is a pure function of seed and key."""
        a = sample_mismatch(MismatchModel(), nmos, RandomStream(5, (1, 2)), 50)
        b = sample_mismatch(MismatchModel(), nmos, RandomStream(5, (1, 2)), 50)
        np.testing.assert_array_equal(a.static, b.static)
        np.testing.assert_array_equal(a.tempco, b.tempco)

    def test_area_law(self, nmos):
        """Test quadrupling W*L halves the static spread."""
        model = MismatchModel()
        small = sample_mismatch(model, nmos, RandomStream(11), 100_000)
        large = sample_mismatch(model, nmos.scaled(4.0), RandomStream(12), 100_000)
        assert np.std(large.static) / np.std(small.static) == pytest.approx(0.5, rel=0.02)

    def test_static_sigma(self, nmos):
        """Test static spread equals A_VT / sqrt(W L)."""
        model = MismatchModel()
        dev = sample_mismatch(model, nmos, RandomStream(13), 100_000)
        assert np.std(dev.static) == pytest.approx(model.vth_sigma(nmos), rel=0.02)

    def test_distinct_keys_independent(self, nmos):
        """Test different keys give uncorrelated draws."""
        model = MismatchModel()
        a = sample_mismatch(model, nmos, RandomStream(7, (0,)), 100_000)
        b = sample_mismatch(model, nmos, RandomStream(7, (1,)), 100_000)
        assert abs(np.corrcoef(a.static, b.static)[0, 1]) < 0.01

    def test_cells_independent(self, nmos):
        """Test neighbouring cells in one draw are uncorrelated."""
        dev = sample_mismatch(MismatchModel(), nmos, RandomStream(19), 100_000)
        assert abs(np.corrcoef(dev.static[:-1], dev.static[1:])[0, 1]) < 0.01
        assert abs(np.corrcoef(dev.static[:-2], dev.static[2:])[0, 1]) < 0.01

    def test_tempco_follows_body_factor(self, nmos):
        """Test tempco and body-factor deviations are positively correlated."""
        dev = sample_mismatch(MismatchModel(), nmos, RandomStream(17), 50_000)
        assert np.corrcoef(dev.tempco, dev.gamma)[0, 1] == pytest.approx(0.8, abs=0.02)


class TestRandomStream:
    """Test suite for keyed counter-based streams."""

    def test_child_extends_key(self):
        """Test child streams append to the key path."""
        assert RandomStream(1).child(2, 3).key == (2, 3)
        assert RandomStream(1, (2,)).child(3) == RandomStream(1, (2, 3))

    def test_prefix_of_longer_draw(self):
        """Test a shorter draw is a prefix of a longer one from the same stream."""
        stream = RandomStream(9, (4,))
        np.testing.assert_array_equal(stream.normal(10), stream.normal(20)[:10])
