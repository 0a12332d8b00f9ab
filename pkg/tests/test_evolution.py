import math

import numpy as np
import pytest

from swym import evolution as ev
from swym import fileio
from swym.geometry import radius_r


def small_flat(x_lo=0.0, x_hi=20.0, n_points=401, boundary="reflecting"):
    cfg = ev.EvolutionConfig(x_lo=x_lo, x_hi=x_hi, n_points=n_points,
                             boundary=boundary)
    return ev.flat_background(cfg)


def sine_state(bg, m=3, amplitude=1.0):
    length = bg.x[-1] - bg.x[0]
    k = m * math.pi / length
    u = amplitude * np.sin(k * (bg.x - bg.x[0]))
    return ev.FieldState(background=bg, u=u,
                         pi=np.zeros_like(u)), k


class TestConfig:
    def test_h(self):
        cfg = ev.EvolutionConfig(x_lo=0.0, x_hi=1.0, n_points=11)
        assert cfg.h == pytest.approx(0.1)

    def test_bad_boundary(self):
        with pytest.raises(ValueError):
            ev.EvolutionConfig(boundary="absorbing")

    def test_bad_domain(self):
        with pytest.raises(ValueError):
            ev.EvolutionConfig(x_lo=5.0, x_hi=5.0)


class TestBackgrounds:
    def test_vacuum(self):
        bg = ev.vacuum_background()
        assert bg.kind == "vacuum"
        assert np.all(bg.w == 1.0)
        np.testing.assert_allclose(bg.q, 2.0 * bg.p, rtol=0, atol=0)

    def test_vacuum_minus(self):
        bg = ev.vacuum_background(sign=-1)
        assert np.all(bg.w == -1.0)
        np.testing.assert_allclose(bg.q, 2.0 * bg.p, rtol=0, atol=0)

    def test_flat(self):
        bg = small_flat()
        assert np.all(bg.p == 0.0) and np.all(bg.q == 0.0)

    def test_profile_background_limits(self, background_n1):
        # deep left the field sits at its horizon value; far right it
        # approaches -1 through the 1/r tail
        assert background_n1.w[0] == pytest.approx(0.2679491924, abs=1e-6)
        r_end = radius_r(background_n1.x[-1])
        tail = -1.0 + 6.4641016151377535 / r_end
        assert background_n1.w[-1] == pytest.approx(tail, abs=1e-3)

    def test_deep_padding_is_exact(self):
        cfg = ev.EvolutionConfig(x_lo=-1000.0, x_hi=50.0, n_points=2048)
        bg = ev.vacuum_background(cfg)
        deep = bg.x <= -730.0
        assert deep.any() and np.all(bg.p[deep] == 0.0)


class TestStates:
    def test_zero_state(self, background_n1):
        st = ev.zero_state(background_n1)
        assert np.all(st.u == 0.0) and np.all(st.pi == 0.0)
        assert st.t == 0.0
        np.testing.assert_array_equal(st.w_full, background_n1.w)

    def test_gaussian_pulse_shape(self):
        bg = ev.vacuum_background()
        st = ev.gaussian_pulse(bg, 1e-3, 100.0, 5.0)
        i = np.argmax(st.u)
        assert bg.x[i] == pytest.approx(100.0, abs=bg.h)
        # peak lands on the grid point nearest the center, at most h/2 off
        assert np.max(st.u) == pytest.approx(1e-3, rel=1e-3)
        assert np.max(st.u) <= 1e-3
        assert np.all(st.pi == 0.0)

    def test_directed_pulse_velocity(self):
        bg = ev.vacuum_background()
        st = ev.gaussian_pulse(bg, 1e-3, 100.0, 5.0, direction=1)
        # rightgoing packet: du/dt = -du/dx, with the analytic derivative
        du = -2.0 * (bg.x - 100.0) / 5.0**2 * st.u
        np.testing.assert_array_equal(st.pi, -du)

    def test_bad_direction(self):
        with pytest.raises(ValueError):
            ev.gaussian_pulse(ev.vacuum_background(), 1e-3, 100.0, 5.0,
                              direction=2)

    def test_mode_state_amplitude_and_rate(self, background_n1):
        st, lam = ev.eigenmode_state(background_n1, 1e-5)
        assert np.max(np.abs(st.u)) == pytest.approx(1e-5, rel=1e-12)
        assert lam == pytest.approx(0.2324311256, rel=1e-3)
        np.testing.assert_allclose(st.pi, lam * st.u, rtol=0, atol=0)

    def test_no_mode_on_vacuum(self):
        with pytest.raises(ValueError):
            ev.eigenmode_state(ev.vacuum_background(), 1e-5)


class TestFixedPointAndSymmetry:
    def test_stationary_background_is_exact_fixed_point(self,
                                                        background_n1):
        series = ev.evolve(ev.zero_state(background_n1), 10.0,
                           mode="nonlinear", probes=10)
        assert series.stop_reason == "completed"
        assert np.max(series.max_abs_u) == 0.0
        assert np.max(np.abs(series.total - series.total[0])) == 0.0

    def test_negation_symmetry_is_exact(self):
        plus = ev.gaussian_pulse(ev.vacuum_background(), 1e-3, 100.0, 5.0)
        minus = ev.gaussian_pulse(ev.vacuum_background(sign=-1), -1e-3,
                                  100.0, 5.0)
        sa = ev.evolve(plus, 5.0, mode="nonlinear", probes=5)
        sb = ev.evolve(minus, 5.0, mode="nonlinear", probes=5)
        assert np.max(np.abs(sa.final_state.u + sb.final_state.u)) == 0.0


class TestDiscreteDispersionOracle:
    """Standing sine on a flat reflecting strip.

    The semi-discrete system evolves u_j = sin(k x_j) cos(w_h t) exactly
    with w_h = (2/h) sin(k h / 2), so amplitudes at chosen instants are
    known in closed form before any code runs.
    """

    def test_quarter_period_of_discrete_frequency_is_a_node(self):
        bg = small_flat(n_points=401)
        st, k = sine_state(bg)
        w_h = (2.0 / bg.h) * math.sin(0.5 * k * bg.h)
        series = ev.evolve(st, 0.5 * math.pi / w_h, dt=None, mode="linear",
                           probes=1)
        # sampling lands within one step of the node; amplitude there is
        # |cos(w_h t)| <= w_h * dt plus tiny RK4 phase error
        dt_used = series.dt
        assert np.max(np.abs(series.final_state.u)) <= 1.5 * w_h * dt_used

    def test_continuum_quarter_period_amplitude(self):
        measured = []
        predicted = []
        for n_points in (201, 401):
            bg = small_flat(n_points=n_points)
            st, k = sine_state(bg)
            w_h = (2.0 / bg.h) * math.sin(0.5 * k * bg.h)
            t_star = 0.5 * math.pi / k
            n_steps = int(round(t_star / (0.25 * bg.h)))
            series = ev.evolve(st, t_star, dt=t_star / n_steps,
                               mode="linear", probes=1)
            measured.append(np.max(np.abs(series.final_state.u)))
            predicted.append(abs(math.cos(0.5 * math.pi * w_h / k)))
        for m, p in zip(measured, predicted):
            assert m == pytest.approx(p, rel=5e-3)
        # the lag is second order in h: halving h quarters the amplitude
        ratio = measured[0] / measured[1]
        assert 3.5 <= ratio <= 4.6


class TestConservation:
    def test_pulse_on_stationary_background(self, background_n1):
        pulse = ev.gaussian_pulse(background_n1, 1e-3, 50.0, 5.0)
        series = ev.evolve(pulse, 10.0, mode="nonlinear", probes=20)
        drift = np.max(np.abs(series.total - series.total[0]))
        assert drift / series.total[0] <= 1e-8

    def test_reflecting_box_long_run(self):
        bg = small_flat(x_lo=0.0, x_hi=40.0, n_points=801,
                        boundary="reflecting")
        st, _ = sine_state(bg, m=2, amplitude=1e-2)
        series = ev.evolve(st, 200.0, mode="nonlinear", probes=100)
        drift = np.max(np.abs(series.total - series.total[0]))
        assert drift / series.total[0] <= 1e-7

    def test_radiation_boundary_lets_energy_out(self):
        bg = ev.vacuum_background()
        pulse = ev.gaussian_pulse(bg, 1e-3, 100.0, 5.0, direction=1)
        series = ev.evolve(pulse, 230.0, mode="nonlinear", probes=20)
        assert series.total[-1] / series.total[0] <= 1e-3

    def test_vacuum_deviation_energy_closed_form(self):
        # u = -1 on the W = 1 background makes W_full = 0 everywhere:
        # no kinetic or gradient energy, potential (p/2)(0 - 1)^2, whose
        # line integral is (1/r_lo - 1/r_hi)/2
        bg = ev.vacuum_background()
        st = ev.FieldState(background=bg, u=-np.ones_like(bg.x),
                           pi=np.zeros_like(bg.x))
        rep = ev.energy(st)
        expected = 0.5 * (1.0 / radius_r(bg.x[0]) - 1.0 / radius_r(bg.x[-1]))
        assert rep.kinetic == 0.0 and rep.gradient == 0.0
        assert rep.total == pytest.approx(expected, rel=1e-9)


class TestGrowth:
    def test_linear_and_nonlinear_agree_while_small(self, background_n1):
        st, _ = ev.eigenmode_state(background_n1, 1e-6)
        lin = ev.evolve(st, 30.0, mode="linear", probes=30)
        nl = ev.evolve(st, 30.0, mode="nonlinear", probes=30)
        scale = np.max(np.abs(lin.final_state.u))
        gap = np.max(np.abs(lin.final_state.u - nl.final_state.u))
        assert gap / scale <= 1e-3

    def test_nonlinear_growth_saturates(self, background_n1):
        st, lam = ev.eigenmode_state(background_n1, 1e-5)
        series = ev.evolve(st, 80.0, mode="nonlinear", probes=800)
        assert series.stop_reason == "saturation"
        growth = np.max(series.max_abs_u) / series.max_abs_u[0]
        assert growth >= 100.0
        fit = ev.fit_growth(series, lambda_predicted=lam)
        assert fit.status == "ok"
        assert fit.r_squared >= 0.999
        assert fit.lambda_measured == pytest.approx(lam, rel=0.02)

    def test_synthetic_exponential_fit(self):
        bg = small_flat(n_points=64)
        t = np.linspace(0.0, 40.0, 401)
        norm = 1e-6 * np.exp(0.3 * t)
        series = ev.EvolutionSeries(
            t=t, total=norm, kinetic=norm, gradient=norm, potential=norm,
            deviation_norm=norm, max_abs_u=np.full_like(t, 1e-3),
            final_state=ev.zero_state(bg), stop_reason="completed",
            mode="linear", dt=0.1)
        fit = ev.fit_growth(series)
        assert fit.status == "ok"
        assert fit.lambda_measured == pytest.approx(0.3, abs=1e-6)
        assert fit.r_squared == pytest.approx(1.0, abs=1e-12)

    def test_flat_series_reports_no_growth(self):
        bg = small_flat(n_points=64)
        t = np.linspace(0.0, 10.0, 101)
        series = ev.EvolutionSeries(
            t=t, total=np.ones_like(t), kinetic=np.zeros_like(t),
            gradient=np.zeros_like(t), potential=np.ones_like(t),
            deviation_norm=np.full_like(t, 1e-6),
            max_abs_u=np.full_like(t, 1e-6),
            final_state=ev.zero_state(bg), stop_reason="completed",
            mode="linear", dt=0.1)
        fit = ev.fit_growth(series)
        assert fit.status == "no_growth"
        assert fit.lambda_measured is None


class TestStops:
    def test_cfl_rejected(self, background_n1):
        st = ev.zero_state(background_n1)
        with pytest.raises(ValueError):
            ev.evolve(st, 1.0, dt=10.0 * background_n1.h)

    def test_bad_mode_rejected(self, background_n1):
        with pytest.raises(ValueError):
            ev.evolve(ev.zero_state(background_n1), 1.0, mode="exact")

    def test_nan_input_stops(self, background_n1):
        u = np.zeros_like(background_n1.x)
        u[100] = np.nan
        st = ev.FieldState(background=background_n1, u=u,
                           pi=np.zeros_like(u))
        series = ev.evolve(st, 5.0, probes=5)
        assert series.stop_reason == "nan"

    def test_saturation_stop_on_big_pulse(self, background_n1):
        st = ev.gaussian_pulse(background_n1, 50.0, 50.0, 5.0)
        series = ev.evolve(st, 50.0, probes=200)
        assert series.stop_reason in ("saturation", "nan")
        assert series.t[-1] < 50.0

    def test_overflow_guard_stops(self):
        # saturation disabled so the |W| guard is the active stop
        cfg = ev.EvolutionConfig(saturation_threshold=None)
        bg = ev.vacuum_background(cfg)
        st = ev.gaussian_pulse(bg, 50.0, 100.0, 5.0)
        series = ev.evolve(st, 50.0, probes=200)
        assert series.stop_reason in ("overflow", "nan")
        assert series.t[-1] < 50.0


class TestSeriesArtifacts:
    def test_snapshots_near_requested_times(self, background_n1):
        st = ev.gaussian_pulse(background_n1, 1e-4, 50.0, 5.0)
        series = ev.evolve(st, 10.0, probes=100,
                           snapshot_times=(3.0, 7.0))
        assert set(series.snapshots) == {3.0, 7.0}
        for t_req, snap in series.snapshots.items():
            assert snap.t == pytest.approx(t_req, abs=0.5)

    def test_series_csv_roundtrip(self, tmp_path, background_n1):
        st = ev.gaussian_pulse(background_n1, 1e-4, 50.0, 5.0)
        series = ev.evolve(st, 2.0, probes=10)
        path = tmp_path / "series.csv"
        ev.write_series_csv(path, series)
        header, cols = fileio.read_csv(path)
        assert header[0] == "t"
        assert "energy_total" in header
        np.testing.assert_allclose(cols["t"], series.t, rtol=0, atol=0)
        np.testing.assert_allclose(cols["energy_total"], series.total,
                                   rtol=0, atol=0)

    def test_snapshot_csv(self, tmp_path, background_n1):
        st = ev.zero_state(background_n1)
        path = tmp_path / "snap.csv"
        ev.write_snapshot_csv(path, st)
        header, cols = fileio.read_csv(path)
        assert header == ["x", "u", "pi"]
        assert len(cols["x"]) == background_n1.n_points

    def test_growth_json(self, tmp_path):
        path = tmp_path / "fit.json"
        fit = ev.GrowthFit(0.25, (3.0, 9.0), 0.9999, 0.26, "ok")
        ev.write_growth(path, fit)
        data = fileio.read_json(path)
        assert data["status"] == "ok"
        assert data["lambda_measured"] == 0.25
        assert data["fit_window"] == [3.0, 9.0]

    def test_growth_json_no_growth(self, tmp_path):
        path = tmp_path / "fit.json"
        ev.write_growth(path, ev.GrowthFit(None, None, None, None,
                                           "no_growth"))
        data = fileio.read_json(path)
        assert data["status"] == "no_growth"
        assert data["lambda_measured"] is None
