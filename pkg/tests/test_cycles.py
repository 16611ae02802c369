import math

import numpy as np
import pytest

import oracles
from qthermo.core import gibbs_state, QubitHamiltonian
from qthermo.cycles import (
    CarnotSpec,
    OttoSpec,
    SweepGrid,
    carnot_efficiency,
    is_engine,
    otto_carnot_deficit,
    otto_closed_form,
    otto_efficiency,
    run_carnot,
    run_otto,
    sweep,
)
from qthermo.dynamics import BathSpec, relaxation_rate
from qthermo.errors import DomainError


def engine_grid(n, seed=7):
    """Random engine-regime (tc, th, wc, wh) points kept away from the reversible boundary."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        tc = rng.uniform(0.2, 2.0)
        th = tc * rng.uniform(1.2, 5.0)
        wh = rng.uniform(0.5, 4.0)
        wc = wh * rng.uniform(tc / th, 1.0)
        if wc < wh and (wc / wh - tc / th) > 1e-3:
            out.append((tc, th, wc, wh))
    return out


class TestOtto:
    def test_example_ledgers(self):
        r = run_otto(OttoSpec(1.0, 2.0, 1.0, 1.5))
        o = oracles.otto(1, 2, 1, 1.5)
        w1, qh, w2, qc = (s.work + s.heat for s in r.strokes)
        assert (w1, qh, w2, qc) == pytest.approx((o["w1"], o["qh"], o["w2"], o["qc"]), abs=1e-12)
        assert r.extracted_work == pytest.approx(o["w_ext"], abs=1e-12)
        assert r.extracted_work == pytest.approx(0.02594, abs=1e-5)
        assert r.efficiency == pytest.approx(1 / 3, abs=1e-9)
        assert abs(r.closure_residual) <= 1e-9
        assert r.state_return_error <= 1e-8
        assert r.engine

    def test_stroke_labels_and_baths(self):
        r = run_otto(OttoSpec(1.0, 2.0, 1.0, 1.5))
        assert [s.label for s in r.strokes] == ["compression", "hot_isochore", "expansion", "cold_isochore"]
        assert [s.bath_temperature for s in r.strokes] == [None, 2.0, None, 1.0]
        assert r.strokes[2].work < 0 and r.strokes[3].heat < 0

    def test_degenerate_gaps(self):
        r = run_otto(OttoSpec(1.0, 2.0, 1.2, 1.2))
        assert r.extracted_work == pytest.approx(0.0, abs=1e-15)
        assert r.efficiency == pytest.approx(0.0, abs=1e-15)

    def test_not_an_engine(self):
        spec = OttoSpec(1.0, 2.0, 1.0, 2.5)
        assert run_otto(spec).extracted_work < 0
        eff = otto_efficiency(spec)
        assert not eff.engine and eff.value == pytest.approx(0.6)

    def test_efficiency_formula(self):
        assert otto_efficiency(OttoSpec(1, 2, 1, 1.5)).value == pytest.approx(1 / 3, abs=1e-15)
        assert otto_efficiency(OttoSpec(1, 2, 1.4, 1.4)).value == 0.0
        assert otto_efficiency(OttoSpec(1, 2, 1, 1.5)).value <= carnot_efficiency(1, 2)

    @pytest.mark.parametrize("kwargs", [
        dict(t_cold=2, t_hot=1, omega_c=1, omega_h=1.5),
        dict(t_cold=1, t_hot=2, omega_c=2, omega_h=1.5),
        dict(t_cold=1, t_hot=2, omega_c=0, omega_h=1.5),
        dict(t_cold=1, t_hot=2, omega_c=1, omega_h=1.5, mode="slow"),
        dict(t_cold=-1, t_hot=2, omega_c=1, omega_h=1.5),
    ])
    def test_invalid_spec(self, kwargs):
        with pytest.raises(DomainError):
            OttoSpec(**kwargs)

    def test_matches_closed_form_helper(self):
        cf = otto_closed_form(1, 2, 1, 1.5)
        assert cf["w_ext"] == pytest.approx(run_otto(OttoSpec(1, 2, 1, 1.5)).extracted_work, abs=1e-12)

    def test_carnot_bound_on_random_grid(self):
        for tc, th, wc, wh in engine_grid(400):
            r = run_otto(OttoSpec(tc, th, wc, wh))
            assert r.efficiency <= carnot_efficiency(tc, th) + 1e-12

    def test_finite_time_closure(self):
        r = run_otto(OttoSpec(1, 2, 1, 1.5, mode="finite_time"))
        assert abs(r.closure_residual) <= 1e-5
        assert r.state_return_error <= 1e-4
        assert r.extracted_work == pytest.approx(oracles.otto(1, 2, 1, 1.5)["w_ext"], abs=1e-8)

    def test_finite_time_converges_exponentially(self):
        spec = dict(t_cold=1.0, t_hot=2.0, omega_c=1.0, omega_h=1.5)
        gh = relaxation_rate(QubitHamiltonian(1.5), BathSpec(2.0))
        exact = oracles.otto(1, 2, 1, 1.5)["w_ext"]
        errs = [abs(run_otto(OttoSpec(**spec, mode="finite_time", duration=(6 + k * math.log(2)) / gh)).extracted_work
                    - exact) for k in range(3)]
        assert errs[0] / errs[1] == pytest.approx(2.0, rel=1e-3)
        assert errs[1] / errs[2] == pytest.approx(2.0, rel=1e-3)

    def test_short_strokes_leave_cycle_open(self):
        r = run_otto(OttoSpec(1, 2, 1, 1.5, mode="finite_time", duration=0.1))
        assert r.state_return_error > 1e-3


class TestCarnot:
    def test_adiabat_targets(self):
        spec = CarnotSpec(1.0, 2.0, 1.0, 1.5, 10)
        assert spec.omega_h_prime == pytest.approx(2.0)
        assert spec.omega_c_prime == pytest.approx(0.75)

    def test_first_adiabat_lands_on_hot_gibbs(self):
        r = run_carnot(CarnotSpec(1.0, 2.0, 1.0, 1.5, 10))
        after = r.trajectory.states[1]
        np.testing.assert_allclose(after, gibbs_state(QubitHamiltonian(2.0), 2.0).matrix, atol=1e-12)

    def test_efficiency_converges_first_order(self):
        e400 = abs(run_carnot(CarnotSpec(1, 2, 1, 1.5, 400)).efficiency - 0.5)
        e800 = abs(run_carnot(CarnotSpec(1, 2, 1, 1.5, 800)).efficiency - 0.5)
        assert e400 <= 0.01
        assert e800 <= 0.6 * e400

    def test_entropy_production_scales_as_inverse_n(self):
        scaled = [run_carnot(CarnotSpec(1, 2, 1, 1.5, n)).total_entropy_production * n for n in (50, 100, 200, 400)]
        assert min(scaled) > 0
        assert max(scaled) / min(scaled) < 1.05

    def test_closed(self):
        r = run_carnot(CarnotSpec(1, 2, 1, 1.5, 50))
        assert abs(r.closure_residual) <= 1e-9
        assert r.state_return_error <= 1e-8

    def test_isotherm_directions(self):
        traj = run_carnot(CarnotSpec(1, 2, 1, 1.5, 20)).trajectory
        assert traj.gaps[1] == pytest.approx(2.0)
        assert np.all(np.diff(traj.gaps[1:42]) <= 0)   # hot isotherm lowers the gap
        assert np.all(np.diff(traj.gaps[43:]) >= 0)    # cold isotherm raises it

    def test_no_engine_rejected(self):
        with pytest.raises(DomainError, match="out of order"):
            CarnotSpec(1.0, 2.0, 1.0, 2.5, 10)

    def test_carnot_efficiency(self):
        assert carnot_efficiency(1, 2) == 0.5
        assert carnot_efficiency(1, 1 + 1e-12) == pytest.approx(0.0, abs=1e-11)
        assert carnot_efficiency(1, 1e9) == pytest.approx(1.0, abs=1e-8)
        with pytest.raises(DomainError):
            carnot_efficiency(2, 1)


class TestDeficit:
    def test_example(self):
        d = otto_carnot_deficit(OttoSpec(1, 2, 1, 1.5))
        o = oracles.otto(1, 2, 1, 1.5)
        assert d.residual <= 1e-9
        assert d.delta_s_hot == pytest.approx(o["dS2"], abs=1e-12)
        assert d.delta_s_hot == pytest.approx(0.04530, abs=1e-4)
        assert d.dissipation == pytest.approx(2 * o["sigma2"] + o["sigma4"], abs=1e-12)
        assert d.dissipation == pytest.approx(o["dS2"] - o["w_ext"], abs=1e-12)

    def test_reversible_point(self):
        d = otto_carnot_deficit(OttoSpec(1.0, 2.0, 1.0, 2.0))
        assert d.w_otto == pytest.approx(0.0, abs=1e-12)
        assert d.w_matched_carnot == pytest.approx(0.0, abs=1e-12)
        assert d.sigma_hot == pytest.approx(0.0, abs=1e-12)
        assert d.sigma_cold == pytest.approx(0.0, abs=1e-12)
        assert d.residual <= 1e-12

    def test_non_negative_dissipation(self):
        for tc, th, wc, wh in engine_grid(50, seed=3):
            assert otto_carnot_deficit(OttoSpec(tc, th, wc, wh)).dissipation >= -1e-10

    def test_requires_exact_mode(self):
        with pytest.raises(DomainError):
            otto_carnot_deficit(OttoSpec(1, 2, 1, 1.5, mode="finite_time"))


class TestSweep:
    def test_single_point_matches_direct_run(self):
        pts = sweep(SweepGrid((1.0,), (2.0,), (1.0,), (1.5,)))
        direct = run_otto(OttoSpec(1.0, 2.0, 1.0, 1.5))
        assert pts[0].report.strokes == direct.strokes
        assert pts[0].report.extracted_work == direct.extracted_work

    def test_engine_flag_flips_at_boundary(self):
        pts = sweep(SweepGrid((1.0,), (2.0,), (0.5, 0.999, 1.0, 1.001, 1.5), (2.0,)))
        assert [p.engine for p in pts] == [False, False, True, True, True]
        assert is_engine(1.0, 2.0, 1.0, 2.0)

    def test_exact_grid_closure(self):
        pts = sweep(SweepGrid((1.0,), (2.0, 3.0), tuple(np.linspace(0.5, 1.5, 10)), tuple(np.linspace(1.5, 3, 5))))
        assert len(pts) == 100
        assert all(abs(p.report.closure_residual) <= 1e-9 for p in pts if p.report)

    def test_invalid_points_skipped(self):
        pts = sweep(SweepGrid((1.0, 3.0), (2.0,), (1.0,), (1.5,)))
        assert pts[0].report is not None
        assert pts[1].report is None and "t_cold < t_hot" in pts[1].skipped

    def test_empty_grid(self):
        with pytest.raises(DomainError):
            sweep(SweepGrid((), (2.0,), (1.0,), (1.5,)))

    def test_carnot_sweep(self):
        pts = sweep(SweepGrid((1.0,), (2.0,), (1.0,), (1.5,), (10, 20)), cycle="carnot")
        errs = [abs(p.report.efficiency - 0.5) for p in pts]
        assert errs[1] < errs[0]

    def test_parallel_matches_serial(self):
        grid = SweepGrid((0.5, 1.0), (2.0,), (0.6, 0.9, 1.2), (1.5, 2.5))
        serial = sweep(grid)
        parallel = sweep(grid, jobs=2)
        assert [(p.index, p.report, p.skipped) for p in serial] == [(p.index, p.report, p.skipped) for p in parallel]
