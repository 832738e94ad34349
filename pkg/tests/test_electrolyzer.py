import math
from dataclasses import replace
from datetime import datetime, timedelta

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from h2mpc import electrolyzer as el
from h2mpc import units
from h2mpc.params import ControlAction, PlantParams, PlantState


def horner_rate(t, j):
    """Independent oracle: Horner evaluation of the thinning polynomial."""
    a4 = -0.008255 * t + 2.906615
    a3 = 0.021855 * t - 7.740815
    a2 = -0.01798 * t + 6.44534
    a1 = 0.00415 * t - 1.53825
    a0 = -0.00005 * t + 0.01715
    return (((a4 * j + a3) * j + a2) * j + a1) * j + a0


class TestGenerationRates:
    def test_zero_current(self, params):
        assert el.h2_generation_rate(0.0, params) == 0.0
        assert el.o2_generation_rate(0.0, params) == 0.0

    def test_max_current_oracle(self, params):
        # hand evaluation of n*I*eta/(2F)
        expected = 800 * 65000 * 0.95 / (2 * 96485)
        got = el.h2_generation_rate(65000.0, params)
        assert got == pytest.approx(expected, abs=1e-9)
        assert units.mol_s_to_kmol_hr(got) == pytest.approx(921.594, abs=1e-2)

    def test_co_current_hits_setpoint(self, params):
        # the constant-operation current reproduces the 500 kmol/hr setpoint
        rate = units.mol_s_to_kmol_hr(el.h2_generation_rate(3.526e4, params))
        assert rate == pytest.approx(500.0, rel=1e-3)
        assert el.h2_generation_rate(3.526e4, params) == pytest.approx(
            800 * 35260 * 0.95 / (2 * 96485), abs=1e-9
        )

    @given(st.floats(min_value=0.0, max_value=65000.0))
    @settings(max_examples=50, deadline=None)
    def test_stoichiometric_ratio(self, current):
        p = PlantParams()
        assert el.o2_generation_rate(current, p) == 0.5 * el.h2_generation_rate(current, p)

    def test_negative_current_rejected(self, params):
        with pytest.raises(ValueError):
            el.h2_generation_rate(-1.0, params)
        with pytest.raises(ValueError):
            el.o2_generation_rate(-1.0, params)


class TestVoltages:
    def test_reversible_potential(self):
        assert el.reversible_potential(298.0) == 1.299
        assert el.reversible_potential(343.15) == pytest.approx(1.258365, abs=1e-12)
        assert el.reversible_potential(353.15) == pytest.approx(1.249365, abs=1e-12)

    def test_activation_voltage_at_exchange_current(self, params):
        # I equal to rho_I * A (consistent units) makes the log vanish
        i0 = params.exchange_current_density * params.membrane_area_cm2
        assert i0 == pytest.approx(0.5)
        assert el.activation_voltage(343.15, i0, params) == pytest.approx(0.0, abs=1e-15)

    def test_activation_voltage_regression_anchor(self, params):
        # standalone arithmetic: (R*T)/(2*F*C) * ln(I / 0.5)
        expected = (8.314 * 343.15) / (2 * 96485 * 0.5) * math.log(35260.0 / 0.5)
        assert el.activation_voltage(343.15, 35260.0, params) == pytest.approx(expected, rel=1e-12)

    def test_activation_voltage_monotone_in_current(self, params):
        currents = np.linspace(8000.0, 65000.0, 40)
        vals = el.activation_voltage(343.15, currents, params)
        assert np.all(np.diff(vals) > 0)

    def test_activation_voltage_rejects_nonpositive_current(self, params):
        with pytest.raises(ValueError):
            el.activation_voltage(343.15, 0.0, params)

    def test_membrane_conductivity_oracle(self, params):
        # exponential term is exactly 1 at 303 K
        assert el.membrane_conductivity(303.0, params) == pytest.approx(0.0687, abs=1e-5)
        expected = 0.0687 * math.exp(1268.0 * (1.0 / 303.0 - 1.0 / 353.15))
        assert el.membrane_conductivity(353.15, params) == pytest.approx(expected, rel=1e-12)

    def test_conductivity_zero_prefactor(self):
        p = replace(PlantParams(), water_content=0.00326 / 0.00514)
        assert el.membrane_conductivity(313.0, p) == pytest.approx(0.0, abs=1e-15)
        assert el.membrane_conductivity(353.0, p) == pytest.approx(0.0, abs=1e-15)

    def test_partial_pressures(self):
        p_h2, p_o2 = el.partial_pressures(0.0, 0.0, 343.15, 1.0)
        assert p_h2 == 0.0 and p_o2 == 0.0
        # ideal-gas inversion: N for exactly 1 bar in 1 m3 at 343.15 K
        n_for_1bar = 1.0e5 * 1.0 / (8.314 * 343.15)
        p_h2, _ = el.partial_pressures(n_for_1bar, 0.0, 343.15, 1.0)
        assert p_h2 == pytest.approx(1.0, rel=1e-12)
        p2, _ = el.partial_pressures(2 * n_for_1bar, 0.0, 343.15, 1.0)
        assert p2 == pytest.approx(2.0 * p_h2, rel=1e-12)
        with pytest.raises(ValueError):
            el.partial_pressures(1.0, 1.0, 343.15, 0.0)

    def test_open_circuit_at_unit_pressures(self, params):
        assert el.open_circuit_voltage(350.0, 1.0, 1.0, params) == el.reversible_potential(350.0)

    def test_open_circuit_nernst_term(self, params):
        expected = el.reversible_potential(353.15) + (8.314 * 353.15) / (2 * 96485) * math.log(2.0)
        got = el.open_circuit_voltage(353.15, 2.0, 1.0, params)
        assert got == pytest.approx(expected, rel=1e-12)
        assert el.open_circuit_voltage(353.15, 2.0, 1.5, params) > got

    def test_open_circuit_rejects_bad_pressure(self, params):
        with pytest.raises(ValueError):
            el.open_circuit_voltage(353.15, 0.0, 1.0, params)

    def test_ohmic_voltage(self, params):
        assert el.ohmic_voltage(0.0, 178.0, 343.15, params) == 0.0
        # standalone arithmetic: I * eps_cm / (A_cm2 * beta)
        beta = 0.0687 * math.exp(1268.0 * (1.0 / 303.0 - 1.0 / 343.15))
        expected = 35260.0 * 0.0178 / (50000.0 * beta)
        assert el.ohmic_voltage(35260.0, 178.0, 343.15, params) == pytest.approx(expected, rel=1e-12)
        # linear in current and thickness
        assert el.ohmic_voltage(2 * 35260.0, 178.0, 343.15, params) == pytest.approx(2 * expected, rel=1e-12)
        assert el.ohmic_voltage(35260.0, 89.0, 343.15, params) == pytest.approx(expected / 2, rel=1e-12)

    @given(
        st.floats(min_value=343.0, max_value=353.0),
        st.floats(min_value=8000.0, max_value=65000.0),
        st.floats(min_value=50.0, max_value=178.0),
    )
    @settings(max_examples=50, deadline=None)
    def test_total_voltage_sum_identity(self, t, current, eps):
        p = PlantParams()
        vb = el.total_voltage(t, current, eps, 1.0, 1.0, p)
        assert vb.v_total == vb.v_act + vb.v_oc + vb.v_ohm

    def test_total_voltage_in_bounds_at_nominal(self, params):
        # nominal point: j = 7052 A/m2 -> I = 35260 A
        vb = el.total_voltage(343.15, 35260.0, 178.0, 1.0, 1.0, params)
        assert vb.in_bounds
        assert params.voltage_min < vb.v_total < params.voltage_max

    def test_total_voltage_flags_low_current(self, params):
        # at the raw current-density floor the stack still sits inside the
        # voltage box; the flag trips at genuinely small currents
        low_i = params.current_density_min * params.membrane_area
        vb = el.total_voltage(343.15, low_i, 178.0, 1.0, 1.0, params)
        assert vb.v_total == pytest.approx(1.5466, abs=1e-3)
        assert vb.in_bounds
        tiny = el.total_voltage(343.15, 50.0, 178.0, 1.0, 1.0, params)
        assert tiny.v_total < params.voltage_min
        assert not tiny.in_bounds


class TestPlantPower:
    def test_zero_current(self, params):
        assert el.plant_power(0.0, 343.15, 178.0, 1.0, 1.0, params) == 0.0

    def test_electrochemical_term_scale(self, params):
        # at 65 kA and a representative 2.0 V the stack term alone is 104 MW,
        # consistent with the 110 MW plant cap
        assert 2.0 * 65000.0 * 800 / 1e6 == pytest.approx(104.0)
        p_kw = el.plant_power(65000.0, 343.15, 178.0, 1.0, 1.0, params)
        assert 90000.0 < p_kw < 120000.0

    def test_auxiliary_power_oracle(self, params):
        # 10 kWh/kg at 500 kmol/hr (= 1008 kg/hr) is 10080 kW
        current = 500.0 / params.h2_kmol_hr_per_amp
        vb = el.total_voltage(343.15, current, 178.0, 1.0, 1.0, params)
        p_kw = el.plant_power(current, 343.15, 178.0, 1.0, 1.0, params)
        p_extra = p_kw - vb.v_total * current * 800 / 1000.0
        assert p_extra == pytest.approx(10080.0, rel=1e-9)


class TestDegradationRate:
    def test_oracle_values(self):
        # frozen from the independent Horner oracle evaluated in-test
        for t, j in [(343.15, 1.0), (343.15, 1.3), (353.15, 1.0), (343.0, 1.0)]:
            assert el.degradation_rate(t, j) == pytest.approx(horner_rate(t, j), abs=1e-12)
        assert el.degradation_rate(343.15, 1.0) == pytest.approx(-0.006042, abs=1e-7)
        assert el.degradation_rate(343.15, 1.3) == pytest.approx(-0.0018128656, abs=1e-7)
        assert el.degradation_rate(353.15, 1.0) == pytest.approx(-0.008842, abs=1e-7)

    def test_temperature_affine_coefficients_at_353(self):
        # the five temperature-affine coefficients at 353.15 K
        assert -0.008255 * 353.15 + 2.906615 == pytest.approx(-0.008638, abs=1e-6)
        assert 0.021855 * 353.15 - 7.740815 == pytest.approx(-0.022722, abs=1e-6)
        assert -0.01798 * 353.15 + 6.44534 == pytest.approx(0.095703, abs=2e-6)
        assert 0.00415 * 353.15 - 1.53825 == pytest.approx(-0.072678, abs=1e-6)
        assert -0.00005 * 353.15 + 0.01715 == pytest.approx(-0.0005075, abs=1e-12)

    def test_direct_vs_horner_on_grid(self):
        t = np.linspace(343.0, 353.0, 100)[:, None]
        j = np.linspace(0.1, 1.3, 100)[None, :]
        direct = el.degradation_rate(t, j)
        horner = horner_rate(t, j)
        assert np.max(np.abs(direct - horner)) < 1e-12

    def test_negative_throughout_admissible_box(self, params):
        t = np.linspace(343.0, 353.0, 60)[:, None]
        j = np.linspace(0.1, 1.3, 60)[None, :]
        assert np.all(el.degradation_rate(t, j) < 0.0)

    def test_bounds_flag(self, params):
        assert el.degradation_rate_bounds_ok(343.15, 1.0, params)
        assert not el.degradation_rate_bounds_ok(343.15, 1.5, params)
        assert not el.degradation_rate_bounds_ok(360.0, 1.0, params)


def co_action(params, p_rtm=0.0, p_dam=None) -> ControlAction:
    gen = units.mol_s_to_kmol_hr(el.h2_generation_rate(3.526e4, params))
    power_kw = el.plant_power(3.526e4, 343.15, 178.0, 1.0, 1.0, params)
    dam = power_kw / 1000.0 - p_rtm if p_dam is None else p_dam
    return ControlAction(
        p_dam_mw=dam,
        p_rtm_mw=p_rtm,
        temperature_k=343.15,
        current_a=3.526e4,
        h2_el_to_plant_kmolhr=gen,
        h2_to_storage_kmolhr=0.0,
        h2_from_storage_kmolhr=0.0,
    )


class TestStep:
    def test_co_action_holds_storage_and_setpoint(self, params, state):
        res = el.step(state, co_action(params), 15.0, params)
        assert res.state.storage_kmol == state.storage_kmol
        supplied = co_action(params).h2_el_to_plant_kmolhr
        assert supplied == pytest.approx(500.0, rel=1e-3)
        assert res.power_balance_residual_mwh == pytest.approx(0.0, abs=1e-9)
        assert res.state.clock == state.clock + timedelta(minutes=15)

    def test_balanced_storage_flows_cancel(self, params, state):
        # stor_in = stor_out = x > 0 with the setpoint met leaves storage put
        current = 500.0 / params.h2_kmol_hr_per_amp
        x = 80.0
        act = ControlAction(
            p_dam_mw=el.plant_power(current, 343.15, 178.0, 1.0, 1.0, params) / 1000.0,
            p_rtm_mw=0.0,
            temperature_k=343.15,
            current_a=current,
            h2_el_to_plant_kmolhr=500.0 - x,
            h2_to_storage_kmolhr=x,
            h2_from_storage_kmolhr=x,
        )
        res = el.step(state, act, 15.0, params)
        assert res.state.storage_kmol == state.storage_kmol

    def test_membrane_thinning_matches_rate(self, params, state):
        i_at_jmax = 1.3 * params.membrane_area_cm2  # 65 kA
        gen = units.mol_s_to_kmol_hr(el.h2_generation_rate(i_at_jmax, params))
        act = ControlAction(
            p_dam_mw=el.plant_power(i_at_jmax, 343.15, 178.0, 1.0, 1.0, params) / 1000.0,
            p_rtm_mw=0.0,
            temperature_k=343.15,
            current_a=i_at_jmax,
            h2_el_to_plant_kmolhr=500.0,
            h2_to_storage_kmolhr=gen - 500.0,
            h2_from_storage_kmolhr=0.0,
        )
        res = el.step(state, act, 15.0, params)
        expected_loss = -el.degradation_rate(343.15, 1.3) * 15.0
        assert res.membrane_loss_um == pytest.approx(expected_loss, rel=1e-9)
        assert res.membrane_cost_usd == pytest.approx(
            params.n_stacks * params.membrane_cost_coeff * expected_loss, rel=1e-9
        )
        # ton accounting: gen kmol/hr for a quarter hour
        assert res.h2_produced_ton == pytest.approx(gen * 0.25 * 2.016 / 1000.0, rel=1e-12)

    def test_mass_closure_property(self, params, state):
        rng = np.random.default_rng(3)
        s = state
        for _ in range(25):
            gen_target = rng.uniform(300.0, 900.0)
            current = gen_target / params.h2_kmol_hr_per_amp
            gen = params.h2_kmol_hr_per_amp * current
            stor_in = max(gen - 500.0, 0.0)
            el_plant = gen - stor_in
            stor_out = 500.0 - el_plant
            act = ControlAction(50.0, 0.0, 343.15, current, el_plant, stor_in, stor_out)
            res = el.step(s, act, 15.0, params)
            delta = res.state.storage_kmol - s.storage_kmol
            assert abs(delta - 0.25 * (stor_in - stor_out)) < 1e-9
            s = res.state

    def test_step_is_deterministic(self, params, state):
        a = el.step(state, co_action(params), 15.0, params)
        b = el.step(state, co_action(params), 15.0, params)
        assert a == b

    def test_step_rejects_bad_dt(self, params, state):
        with pytest.raises(ValueError, match="15"):
            el.step(state, co_action(params), 5.0, params)

    def test_step_rejects_current_outside_admissible_box(self, params, state):
        # below the box the generation floor of 100 kmol/hr cannot be met
        act = ControlAction(10.0, 0.0, 343.15, 6000.0, 85.0, 0.0, 415.0)
        with pytest.raises(ValueError, match="current"):
            el.step(state, act, 15.0, params)

    def test_step_rejects_setpoint_miss(self, params, state):
        act = replace(co_action(params), h2_from_storage_kmolhr=100.0)
        with pytest.raises(el.StepViolation, match="setpoint"):
            el.step(state, act, 15.0, params)

    def test_step_rejects_storage_overflow(self, params):
        full = PlantState(178.0, params.storage_max, datetime(2022, 1, 3))
        gen = units.mol_s_to_kmol_hr(el.h2_generation_rate(65000.0, params))
        act = ControlAction(
            el.plant_power(65000.0, 343.15, 178.0, 1.0, 1.0, params) / 1000.0,
            0.0, 343.15, 65000.0, 500.0, gen - 500.0, 0.0,
        )
        with pytest.raises(el.StepViolation, match="storage"):
            el.step(full, act, 15.0, params)

    def test_inventory_pressure_mode(self, params, state):
        s = replace(state, chamber_h2_mol=35.05, chamber_o2_mol=17.5)
        res = el.step(s, co_action(params), 15.0, params, pressure_mode="inventory")
        # generation equals outflow, so inventories stay put
        assert res.state.chamber_h2_mol == pytest.approx(s.chamber_h2_mol, abs=1e-9)
        with pytest.raises(ValueError, match="pressure mode"):
            el.step(s, co_action(params), 15.0, params, pressure_mode="bogus")
