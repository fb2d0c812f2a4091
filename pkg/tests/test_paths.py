"""Tests for path specification, schedule synthesis and phase quadratures."""

import json
import math

import numpy as np
import pytest

from geomgate.errors import NumericalFailure, ValidationError
from geomgate.paths import (
    BlochPath,
    PulseSchedule,
    PulseSegment,
    dynamical_phase,
    geometric_area,
    geometric_phase,
    integrate_path,
    make_path_spec,
    pulse_area,
    schedule_from_json,
    schedule_to_json,
    synthesize_schedule,
)

PI = math.pi

# canonical gate parameters: rotation axis angles and geometric phase
S_GATE = dict(chi0=0.0, xi0=0.0, gamma_g=-PI / 4)
T_GATE = dict(chi0=0.0, xi0=0.0, gamma_g=-PI / 8)
H_GATE = dict(chi0=PI / 4, xi0=0.0, gamma_g=-PI / 2)


def closed_form_area(spec):
    """Independent pulse-area oracle: chi0 + L + |span sinL cosL| + |L - chi0|."""
    L = spec.Lambda
    span = spec.xi1 - spec.xi0
    return spec.chi0 + L + abs(span * math.sin(L) * math.cos(L)) + abs(L - spec.chi0)


class TestMakePathSpec:
    @pytest.mark.parametrize("Lambda", [0.2 * PI, 0.42 * PI, 0.8 * PI, PI])
    def test_s_gate_lambda(self, Lambda):
        spec = make_path_spec(**S_GATE, Lambda=Lambda)
        assert spec.lam == pytest.approx(-PI / (2 * (1 - math.cos(Lambda))), rel=1e-14)

    @pytest.mark.parametrize("Lambda", [0.3 * PI, 0.7 * PI])
    def test_h_gate_lambda(self, Lambda):
        spec = make_path_spec(**H_GATE, Lambda=Lambda)
        assert spec.lam == pytest.approx(-PI / (1 - math.cos(Lambda)), rel=1e-14)

    def test_orange_slice_limit(self):
        spec = make_path_spec(0.0, 0.3, -PI / 2, PI)
        assert spec.lam == pytest.approx(-PI / 2, abs=1e-15)
        assert spec.xi1 == pytest.approx(0.3 - PI / 2, abs=1e-15)

    @pytest.mark.parametrize("config", ["A", "B"])
    @pytest.mark.parametrize("Lambda", [0.25 * PI, 0.42 * PI, 0.75 * PI])
    def test_phase_consistency_invariant(self, config, Lambda):
        spec = make_path_spec(**T_GATE, Lambda=Lambda, configuration=config)
        one_minus = 1 - math.cos(Lambda)
        assert spec.lam * one_minus / 2 == pytest.approx(spec.gamma_g, abs=1e-14)
        if config == "B":
            assert spec.k * PI * one_minus / 2 == pytest.approx(PI, abs=1e-12)
            assert spec.realized_phase == pytest.approx(spec.gamma_g - PI)

    def test_configuration_b_azimuth(self):
        spec = make_path_spec(**H_GATE, Lambda=0.7 * PI, configuration="B")
        assert spec.xi1 == pytest.approx(spec.lam - spec.k * PI, abs=1e-12)

    def test_rejects_equator_latitude(self):
        with pytest.raises(ValidationError, match="singular"):
            make_path_spec(**S_GATE, Lambda=PI / 2)

    def test_rejects_positive_phase_convention(self):
        with pytest.raises(ValidationError, match="negative"):
            make_path_spec(0.0, 0.0, PI / 4, 0.4 * PI)

    def test_rejects_out_of_domain_lambda(self):
        with pytest.raises(ValidationError):
            make_path_spec(**S_GATE, Lambda=1.2 * PI)
        with pytest.raises(ValidationError):
            make_path_spec(**S_GATE, Lambda=0.0)


class TestSynthesizeSchedule:
    def test_s_gate_areas_frozen(self):
        # frozen from the closed-form oracle at Lambda = 0.42 pi
        spec = make_path_spec(**S_GATE, Lambda=0.42 * PI)
        sched = synthesize_schedule(spec, omega0=1.0)
        areas = [seg.area for seg in sched.segments]
        assert len(areas) == 3  # chi0 = 0 drops the first arc
        assert areas == pytest.approx([1.3195, 0.5036, 1.3195], abs=2e-4)
        assert sched.total_area == pytest.approx(closed_form_area(spec), rel=1e-12)
        assert sched.total_area == pytest.approx(1.0003 * PI, abs=2e-4)

    def test_h_gate_orange_slice(self):
        spec = make_path_spec(**H_GATE, Lambda=PI)
        sched = synthesize_schedule(spec, omega0=1.0)
        areas = [seg.area for seg in sched.segments]
        assert areas == pytest.approx([PI / 4, PI, 3 * PI / 4], rel=1e-12)
        assert sched.total_area == pytest.approx(2 * PI, rel=1e-12)

    def test_t_gate_orange_slice_two_segments(self):
        spec = make_path_spec(**T_GATE, Lambda=PI)
        sched = synthesize_schedule(spec, omega0=1.0)
        assert len(sched.segments) == 2
        assert [s.kind for s in sched.segments] == ["longitude", "longitude"]

    @pytest.mark.parametrize("shape", ["sin2", "const"])
    def test_envelope_nonnegative(self, shape):
        spec = make_path_spec(**H_GATE, Lambda=0.35 * PI)
        sched = synthesize_schedule(spec, omega0=2 * PI * 20e6, shape=shape)
        for seg in sched.segments:
            t = np.linspace(0, seg.duration, 501)
            assert np.all(seg.omega(t) >= -1e-12)

    def test_durations_follow_areas_for_shared_peak(self):
        omega0 = 2 * PI * 19e6
        spec = make_path_spec(**S_GATE, Lambda=0.42 * PI)
        sched = synthesize_schedule(spec, omega0=omega0)
        for seg in sched.segments:
            assert seg.duration == pytest.approx(2 * seg.area / omega0, rel=1e-12)

    def test_segment_area_matches_quadrature(self):
        spec = make_path_spec(**H_GATE, Lambda=0.7 * PI, configuration="B")
        sched = synthesize_schedule(spec, omega0=1.0)
        assert pulse_area(sched) == pytest.approx(sched.total_area, abs=1e-8)

    def test_latitude_detuning_value(self):
        spec = make_path_spec(**S_GATE, Lambda=0.42 * PI)
        sched = synthesize_schedule(spec, omega0=1.0)
        lat = [s for s in sched.segments if s.kind == "latitude"][0]
        span = spec.xi1 - spec.xi0
        assert lat.delta == pytest.approx(span * math.sin(spec.Lambda) ** 2 / lat.duration)

    def test_rejects_bad_inputs(self):
        spec = make_path_spec(**S_GATE, Lambda=0.42 * PI)
        with pytest.raises(ValidationError):
            synthesize_schedule(spec, omega0=-1.0)
        with pytest.raises(ValidationError):
            synthesize_schedule(spec, omega0=1.0, shape="gauss")


class TestPulseArea:
    def test_empty_schedule(self):
        assert pulse_area(PulseSchedule(segments=())) == 0.0

    def test_crossover_bracketing_for_s(self):
        # geometric area crosses the composite-pulse area 3pi/2 near 0.23 pi
        lo = geometric_area(make_path_spec(**S_GATE, Lambda=0.23 * PI))
        hi = geometric_area(make_path_spec(**S_GATE, Lambda=0.22 * PI))
        assert lo < 1.5 * PI < hi


class TestIntegratePath:
    def test_s_gate_waypoints_and_closure(self):
        spec = make_path_spec(**S_GATE, Lambda=0.42 * PI)
        sched = synthesize_schedule(spec, omega0=1.0)
        path = integrate_path(sched)
        lat = path.blocks[1]
        assert np.max(np.abs(lat["chi"] - spec.Lambda)) < 1e-7
        assert lat["xi"][0] == pytest.approx(spec.xi1, abs=1e-9)
        assert lat["xi"][-1] == pytest.approx(spec.xi0, abs=1e-6)
        assert path.closure_defect() < 1e-6

    def test_single_longitude_from_pole(self):
        seg = PulseSegment(
            duration=2 * PI,
            shape="sin2",
            omega0=1.0,
            area=PI,
            delta=0.0,
            kind="longitude",
            phi0=PI / 2,
            phi_slope=0.0,
            chi_start=0.0,
            chi_end=PI,
            xi_ref=0.0,
        )
        path = integrate_path(PulseSchedule(segments=(seg,)), chi0=0.0, xi0=0.0)
        assert path.blocks[0]["chi"][-1] == pytest.approx(PI, abs=1e-12)

    def test_configuration_b_sweeps_shifted_span(self):
        spec = make_path_spec(**H_GATE, Lambda=0.7 * PI, configuration="B")
        sched = synthesize_schedule(spec, omega0=1.0)
        path = integrate_path(sched)
        lat = [b for b in path.blocks if b["kind"] == "latitude"][0]
        swept = lat["xi"][-1] - lat["xi"][0]
        assert swept == pytest.approx(-(spec.lam - spec.k * PI), abs=1e-6)

    def test_discontinuous_polar_angle_rejected(self):
        seg = PulseSegment(
            duration=1.0, shape="const", omega0=1.0, area=1.0, delta=0.0,
            kind="longitude", phi0=-PI / 2, phi_slope=0.0,
            chi_start=0.5, chi_end=1.5, xi_ref=0.0,
        )
        with pytest.raises(ValidationError, match="continuous"):
            integrate_path(PulseSchedule(segments=(seg,)), chi0=0.0, xi0=0.0)

    def test_divergence_guard_at_pole(self):
        # a generic-kind arc driven into the pole trips the cot(chi) overflow
        seg = PulseSegment(
            duration=1.0, shape="const", omega0=0.6, area=0.6, delta=0.0,
            kind="generic", phi0=-PI / 2, phi_slope=0.0,
            chi_start=0.3, chi_end=0.3, xi_ref=0.0,
        )
        with pytest.raises(NumericalFailure, match="divergence"):
            integrate_path(PulseSchedule(segments=(seg,)), chi0=0.3, xi0=0.0)


class TestGeometricPhase:
    @pytest.mark.parametrize("gate", [S_GATE, T_GATE, H_GATE])
    @pytest.mark.parametrize("Lambda", [0.25 * PI, 0.42 * PI, 0.63 * PI, 0.9 * PI])
    def test_matches_closed_form_configuration_a(self, gate, Lambda):
        spec = make_path_spec(**gate, Lambda=Lambda)
        path = integrate_path(synthesize_schedule(spec, omega0=1.0))
        assert geometric_phase(path) == pytest.approx(spec.gamma_g, abs=1e-5)

    @pytest.mark.parametrize("Lambda", [0.3 * PI, 0.7 * PI])
    def test_configuration_b_offset(self, Lambda):
        spec = make_path_spec(**H_GATE, Lambda=Lambda, configuration="B")
        path = integrate_path(synthesize_schedule(spec, omega0=1.0))
        assert geometric_phase(path) == pytest.approx(spec.gamma_g - PI, abs=1e-5)

    def test_orange_slice_lune(self):
        spec = make_path_spec(**H_GATE, Lambda=PI)
        path = integrate_path(synthesize_schedule(spec, omega0=1.0))
        assert geometric_phase(path) == pytest.approx(-PI / 2, abs=1e-9)

    def test_out_and_back_is_zero(self):
        up = PulseSegment(
            duration=1.0, shape="sin2", omega0=1.6, area=0.8, delta=0.0,
            kind="longitude", phi0=PI / 2, phi_slope=0.0,
            chi_start=0.0, chi_end=0.8, xi_ref=0.0,
        )
        down = PulseSegment(
            duration=1.0, shape="sin2", omega0=1.6, area=0.8, delta=0.0,
            kind="longitude", phi0=-PI / 2, phi_slope=0.0,
            chi_start=0.8, chi_end=0.0, xi_ref=0.0,
        )
        path = integrate_path(PulseSchedule(segments=(up, down)), chi0=0.0, xi0=0.0)
        assert geometric_phase(path) == pytest.approx(0.0, abs=1e-12)

    def test_open_path_rejected(self):
        seg = PulseSegment(
            duration=1.0, shape="sin2", omega0=1.6, area=0.8, delta=0.0,
            kind="longitude", phi0=PI / 2, phi_slope=0.0,
            chi_start=0.0, chi_end=0.8, xi_ref=0.0,
        )
        path = integrate_path(PulseSchedule(segments=(seg,)), chi0=0.0, xi0=0.0)
        with pytest.raises(ValidationError, match="open path"):
            geometric_phase(path)

    def test_k_plus_accumulates_to_loop_phase(self):
        spec = make_path_spec(**S_GATE, Lambda=0.42 * PI)
        path = integrate_path(synthesize_schedule(spec, omega0=1.0))
        assert path.k_plus()[-1] == pytest.approx(spec.gamma_g, abs=1e-3)


class TestDynamicalPhase:
    @pytest.mark.parametrize("gate", [S_GATE, T_GATE, H_GATE])
    @pytest.mark.parametrize("config", ["A", "B"])
    def test_parallel_transport(self, gate, config):
        spec = make_path_spec(**gate, Lambda=0.37 * PI, configuration=config)
        sched = synthesize_schedule(spec, omega0=1.0)
        path = integrate_path(sched)
        assert abs(dynamical_phase(path, sched)) < 1e-4

    def test_longitude_exactly_zero(self):
        seg = PulseSegment(
            duration=1.0, shape="sin2", omega0=1.6, area=0.8, delta=0.0,
            kind="longitude", phi0=PI / 2, phi_slope=0.0,
            chi_start=0.0, chi_end=0.8, xi_ref=0.0,
        )
        path = integrate_path(PulseSchedule(segments=(seg,)), chi0=0.0, xi0=0.0)
        assert dynamical_phase(path) == 0.0

    def test_balanced_latitude_integrand_vanishes_pointwise(self):
        # constant-envelope latitude: xi_dot constant and delta = -xi_dot sin^2(L)
        spec = make_path_spec(**S_GATE, Lambda=0.42 * PI)
        sched = synthesize_schedule(spec, omega0=1.0, shape="const")
        lat = [s for s in sched.segments if s.kind == "latitude"][0]
        t = np.linspace(0, lat.duration, 101)
        residue = lat.xi_dot(t) * math.sin(spec.Lambda) ** 2 + lat.delta
        assert np.max(np.abs(residue)) < 1e-12

    def test_principal_value_against_analytic_oracle(self):
        # fabricated block: chi = chi_a + rate*t crosses pi/2 midway between
        # samples, xi_dot = 0, constant delta; the integrand is
        # delta/(2 cos chi) and PV int sec = [ln|tan(chi/2 + pi/4)|] / rate
        rate, delta = 1.0, 0.4
        n, h = 2001, 0.001
        t = np.arange(n) * h
        k_cross = 900
        chi_a = PI / 2 - (k_cross + 0.5) * rate * h
        chi = chi_a + rate * t
        block = {
            "t": t,
            "chi": chi,
            "xi": np.zeros(n),
            "xi_dot": np.zeros(n),
            "delta": np.full(n, delta),
            "kind": "generic",
        }
        path = BlochPath(blocks=(block,), jumps=())
        antideriv = lambda x: math.log(abs(math.tan(x / 2 + PI / 4)))
        expected = (delta / (2 * rate)) * (antideriv(chi[-1]) - antideriv(chi[0]))
        assert dynamical_phase(path) == pytest.approx(expected, abs=5e-3)

    def test_unpaired_crossing_raises(self):
        rate, delta = 1.0, 0.4
        n, h = 30, 0.001
        t = np.arange(n) * h
        chi = PI / 2 - (2 + 0.5) * rate * h + rate * t  # crossing near the start
        block = {
            "t": t, "chi": chi, "xi": np.zeros(n), "xi_dot": np.zeros(n),
            "delta": np.full(n, delta), "kind": "generic",
        }
        with pytest.raises(NumericalFailure, match="unpaired"):
            dynamical_phase(BlochPath(blocks=(block,), jumps=()))


class TestSerialization:
    def test_round_trip(self):
        spec = make_path_spec(**H_GATE, Lambda=0.7 * PI, configuration="B")
        sched = synthesize_schedule(spec, omega0=2 * PI * 30e6)
        text = schedule_to_json(sched)
        back = schedule_from_json(text)
        assert len(back.segments) == len(sched.segments)
        for a, b in zip(back.segments, sched.segments):
            assert a.duration == pytest.approx(b.duration, rel=1e-12)
            assert a.area == pytest.approx(b.area, rel=1e-12)
            assert a.delta == pytest.approx(b.delta, rel=1e-12)
            assert a.phi0 == pytest.approx(b.phi0, rel=1e-12)

    def test_field_names_and_units(self):
        spec = make_path_spec(**S_GATE, Lambda=0.42 * PI)
        doc = json.loads(schedule_to_json(synthesize_schedule(spec, omega0=1.0)))
        assert set(doc) == {"segments", "configuration", "path"}
        assert set(doc["path"]) == {"chi0", "xi0", "Lambda", "lambda", "gamma_g"}
        assert set(doc["segments"][0]) == {
            "duration_s", "shape", "omega0_rad_s", "area_rad",
            "phi0_rad", "phi_slope_rad_s", "delta_rad_s",
        }

    def test_tampered_document_rejected(self):
        spec = make_path_spec(**S_GATE, Lambda=0.42 * PI)
        doc = json.loads(schedule_to_json(synthesize_schedule(spec, omega0=1.0)))
        doc["segments"][1]["area_rad"] *= 1.01
        with pytest.raises(ValidationError, match="inconsistent"):
            schedule_from_json(json.dumps(doc))

    def test_schedule_without_path_not_serializable(self):
        seg = PulseSegment(
            duration=1.0, shape="sin2", omega0=2.0, area=1.0, delta=0.0,
            kind="longitude", phi0=0.0, phi_slope=0.0,
            chi_start=0.0, chi_end=1.0, xi_ref=0.0,
        )
        with pytest.raises(ValidationError):
            schedule_to_json(PulseSchedule(segments=(seg,)))
