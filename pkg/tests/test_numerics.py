import math

import numpy as np
import pytest

from swym.numerics import (
    EventSpec,
    IntegratorConfig,
    NumericsError,
    bisect,
    integrate,
    pchip_interpolant,
    tridiag_eigen_below,
    tridiag_eigen_lowest,
)

TIGHT = IntegratorConfig(rel_tol=1e-12, abs_tol=1e-14)


def _oscillator(t, y):
    return np.array([y[1], -y[0]])


class TestIntegrate:
    def test_oscillator_endpoint(self):
        traj = integrate(_oscillator, 0.0, np.array([1.0, 0.0]), 2.0, TIGHT)
        assert traj.status == "reached_end"
        assert traj.y_final[0] == pytest.approx(math.cos(2.0), abs=1e-10)

    def test_decay_endpoint(self):
        traj = integrate(lambda t, y: -y, 0.0, np.array([1.0]), 1.0, TIGHT)
        assert traj.y_final[0] == pytest.approx(math.exp(-1.0), abs=1e-9)

    def test_event_at_quarter_period(self):
        traj = integrate(
            _oscillator, 0.0, np.array([1.0, 0.0]), 2.0, TIGHT,
            events=(EventSpec(fn=lambda t, y: y[0], name="node"),))
        assert len(traj.events) == 1
        assert traj.events[0].t == pytest.approx(math.pi / 2.0, abs=1e-9)

    def test_terminal_event_stops(self):
        spec = EventSpec(fn=lambda t, y: y[0], name="node", terminal=True)
        traj = integrate(_oscillator, 0.0, np.array([1.0, 0.0]), 50.0,
                         TIGHT, events=(spec,))
        assert traj.status == "event:node"
        assert traj.t_final == pytest.approx(math.pi / 2.0, abs=1e-9)

    def test_event_direction_filter(self):
        # only falling crossings of y0 over two periods: t = pi/2, 5pi/2
        spec = EventSpec(fn=lambda t, y: y[0], name="fall", direction=-1)
        traj = integrate(_oscillator, 0.0, np.array([1.0, 0.0]),
                         4.0 * math.pi, TIGHT, events=(spec,))
        times = [rec.t for rec in traj.events]
        assert times == pytest.approx([math.pi / 2, 5 * math.pi / 2],
                                      abs=1e-8)

    def test_dense_output(self):
        traj = integrate(_oscillator, 0.0, np.array([1.0, 0.0]), 6.0, TIGHT)
        ts = np.linspace(0.0, 6.0, 101)
        vals = traj.eval(ts)[0]
        assert np.max(np.abs(vals - np.cos(ts))) <= 1e-9

    def test_empty_interval_rejected(self):
        with pytest.raises(ValueError):
            integrate(_oscillator, 1.0, np.array([1.0, 0.0]), 1.0, TIGHT)


class TestBisect:
    def test_sqrt2(self):
        res = bisect(lambda v: v * v > 2.0, 1.0, 2.0, tol=1e-13)
        assert 0.5 * (res.lo + res.hi) == pytest.approx(math.sqrt(2.0),
                                                        abs=1e-12)
        assert res.label_lo is False and res.label_hi is True

    def test_string_labels(self):
        res = bisect(lambda v: "big" if v > 0.25 else "small",
                     0.0, 1.0, tol=1e-10)
        assert res.lo == pytest.approx(0.25, abs=1e-9)

    def test_identical_labels_rejected(self):
        with pytest.raises(ValueError):
            bisect(lambda v: True, 0.0, 1.0, tol=1e-6)

    def test_bad_bracket_rejected(self):
        with pytest.raises(ValueError):
            bisect(lambda v: v > 0.5, 1.0, 0.0, tol=1e-6)

    def test_history_records_probes(self):
        res = bisect(lambda v: v > 0.5, 0.0, 1.0, tol=1e-3)
        assert res.history[0] == (0.0, False)
        assert res.history[1] == (1.0, True)
        assert res.n_calls == len(res.history)


class TestTridiag:
    def test_diagonal_matrix(self):
        w, v = tridiag_eigen_lowest(np.array([3.0, 1.0, 2.0]),
                                    np.zeros(2), 3)
        np.testing.assert_allclose(w, [1.0, 2.0, 3.0], atol=1e-14)
        # eigenvectors are unit coordinate vectors up to sign
        assert abs(v[1, 0]) == pytest.approx(1.0, abs=1e-14)

    def test_laplacian_eigenvalues(self):
        n = 500
        h = 1.0 / (n + 1)
        diag = np.full(n, 2.0 / h**2)
        off = np.full(n - 1, -1.0 / h**2)
        w, v = tridiag_eigen_lowest(diag, off, 4)
        j = np.arange(1, 5)
        exact = (4.0 / h**2) * np.sin(0.5 * math.pi * j * h) ** 2
        assert np.max(np.abs(w - exact) / exact) <= 1e-3
        # ground state is positive (up to overall sign) with no interior node
        phi = v[:, 0] * np.sign(v[n // 2, 0])
        assert np.all(phi > 0.0)

    def test_below_cutoff(self):
        n = 200
        h = 1.0 / (n + 1)
        diag = np.full(n, 2.0 / h**2) - 50.0
        off = np.full(n - 1, -1.0 / h**2)
        w, v = tridiag_eigen_below(diag, off, 0.0)
        exact0 = (4.0 / h**2) * math.sin(0.5 * math.pi * h) ** 2 - 50.0
        # pi**2 ~ 9.87 < 50 < 4 pi**2 ~ 39.5... exactly two modes sit below 0
        assert len(w) == 2
        assert w[0] == pytest.approx(exact0, rel=1e-10)


class TestPchip:
    def test_reproduces_nodes(self):
        xs = np.array([0.0, 1.0, 2.5, 4.0])
        ys = np.array([1.0, -1.0, 0.5, 2.0])
        f = pchip_interpolant(xs, ys)
        np.testing.assert_allclose(f(xs), ys, atol=1e-15)

    def test_constant_data_stays_constant(self):
        xs = np.linspace(0.0, 1.0, 20)
        f = pchip_interpolant(xs, np.full(20, 0.75))
        assert np.max(np.abs(f(np.linspace(0, 1, 333)) - 0.75)) == 0.0

    def test_monotone_data_stays_monotone(self):
        xs = np.linspace(0.0, 1.0, 15)
        f = pchip_interpolant(xs, np.tanh(3.0 * xs))
        fine = f(np.linspace(0.0, 1.0, 2000))
        assert np.all(np.diff(fine) >= -1e-15)
