import numpy as np
import pytest

from oncolattice.core import INITIAL_C, INITIAL_N, INITIAL_U, DEFAULT_PARAMS, Constant
from oncolattice.experiments import (PRESETS, HeatmapSpec, Scenario, ScenarioError, full_oxygenation_regional,
                                     oxygenation_comparison, phase_portrait, preset, run_timeseries,
                                     stability_region, theta_gamma_heatmap, worker_count)
from oncolattice.local_model import LocalModel, rhs_2d
from oncolattice.regional import default_initial_state, lattice_preset

K0 = DEFAULT_PARAMS.K


def test_every_preset_is_well_formed():
    for name, sc in PRESETS.items():
        assert sc.name == name
        assert sc.source
        assert len(sc.columns) == len(sc.initial) + 1
    with pytest.raises(KeyError, match="valid ids: fig1a"):
        preset("fig99")


def test_scenario_validation():
    m = LocalModel(DEFAULT_PARAMS)
    with pytest.raises(ValueError):
        Scenario("x", m, (1.0, 1.0, 1.0), 0.0)
    with pytest.raises(ValueError):
        Scenario("x", m, (1.0, 1.0), 10.0)
    with pytest.raises(ValueError):
        Scenario("x", m, (1.0, 1.0, 1.0), 10.0, outputs=("phase_portrait",))
    with pytest.raises(ValueError):
        Scenario("x", m, (1.0, -1.0, 1.0), 10.0)
    with pytest.raises(ValueError):
        Scenario("x", m, (1.0, 1.0, 1.0), 10.0, outputs=("movie",))


def test_constant_rates_settle_below_capacity():
    tab = run_timeseries(PRESETS["fig5"])
    assert tab.columns == ["t", "u", "n", "c"]
    assert tab.data[0, 0] == 0.0 and tab.data[-1, 0] == 200.0
    assert np.allclose(np.diff(tab.data[:, 0]), 2.0)
    total = tab.column("u") + tab.column("n")
    assert total[-1] < K0
    assert tab.data.min() >= -1e-9


def test_zero_tumour_is_invariant():
    sc = Scenario("zero", LocalModel(DEFAULT_PARAMS), (0.0, 0.0, INITIAL_C), 50.0)
    tab = run_timeseries(sc)
    assert np.all(tab.column("u") == 0.0) and np.all(tab.column("n") == 0.0)
    assert tab.column("c")[-1] == pytest.approx(DEFAULT_PARAMS.phi / DEFAULT_PARAMS.beta, rel=1e-8)


def test_slow_death_rate_drives_near_extinction():
    tab = run_timeseries(PRESETS["fig8b"])
    late = tab.column("t") >= 100.0
    u, n = tab.column("u")[late], tab.column("n")[late]
    assert np.all(u < 1.0)
    assert np.all(u + n < 0.1 * K0)


def test_infected_cells_dominate_with_strong_infection():
    tab = run_timeseries(PRESETS["fig6a"])
    assert tab.column("n")[-1] > tab.column("u")[-1]


def test_integrator_failure_names_the_scenario():
    from oncolattice.integrator import IntegratorConfig
    with pytest.raises(ScenarioError, match="fig5"):
        run_timeseries(PRESETS["fig5"], IntegratorConfig(t_end=1.0, max_steps=3))


def test_phase_portrait_fig1a_and_field():
    p = PRESETS["fig1a"].model
    pp = phase_portrait(p, resolution=25)
    assert np.abs(pp.endpoints - [1.0, 0.0]).max() < 1e-3
    assert pp.direction.shape == (25, 25, 2)
    norms = np.hypot(pp.direction[..., 0], pp.direction[..., 1])
    assert np.allclose(norms[norms > 0], 1.0)
    assert np.all(rhs_2d(1.0, 0.0, p)[0] == 0.0)
    assert len(pp.trajectories) == 12
    assert pp.trajectory_table().columns == ["start", "t", "x", "y"]


def test_stability_region_checks_agree():
    reg = stability_region(0.531107, 0.1)
    assert reg.all_agree
    assert reg.bound[0] < 1e-2  # boundary vanishes as gamma -> 0
    assert reg.gamma[-1] == pytest.approx(0.531107 - 1e-3)
    with pytest.raises(ValueError):
        stability_region(1.5, 0.1)


def test_heatmap_small_grid_is_worker_independent():
    spec = HeatmapSpec(n=6, step=0.2, horizon=100.0, chunk=8)
    base = lattice_preset("baseline")
    one = theta_gamma_heatmap(spec, base, workers=1)
    two = theta_gamma_heatmap(spec, base, workers=2)
    assert np.array_equal(one.values, two.values)
    assert one.values.shape == (7, 7)
    # no infection: logistic growth towards the primary capacity
    assert np.all(one.values[0] > 0.9 * K0) and np.all(one.values[0] <= K0 * (1 + 1e-9))
    # strong death rate, weak infection: unfavourable corner
    assert one.at(0.2, 1.2) > 0.9 * K0
    assert one.table().columns[:3] == ["theta", "gamma=0.00", "gamma=0.20"]


def test_worker_count_env(monkeypatch):
    monkeypatch.setenv("ONCOLATTICE_THREADS", "3")
    assert worker_count() == 3
    monkeypatch.setenv("ONCOLATTICE_THREADS", "0")
    assert worker_count() >= 1
    monkeypatch.setenv("ONCOLATTICE_THREADS", "many")
    with pytest.raises(ValueError):
        worker_count()


def test_oxygenation_comparison_reports_both_baselines():
    rep = oxygenation_comparison()
    assert rep.without.primary_final > 0.99 * K0
    assert rep.with_oxygen.primary_final < rep.without.primary_final
    assert 0 < rep.reduction_vs_peak < rep.reduction_vs_unoxygenated < 1
    tab = rep.table()
    assert tab.columns[:3] == ["phi0", "primary_final", "primary_peak"]
    assert set(tab.meta) == {"reduction_vs_unoxygenated", "reduction_vs_peak"}


def test_no_virus_gives_logistic_growth():
    base = lattice_preset("fig10", theta=Constant(0.0), gamma=Constant(0.0))
    rep = oxygenation_comparison(base, horizon=200.0)
    assert rep.without.primary_final == pytest.approx(K0 * (1 - 1e-4), rel=1e-3)


def test_full_oxygenation_keeps_lymph_nodes_below_capacity():
    rep = full_oxygenation_regional()
    assert all(rep.below_capacity)
    assert rep.table.columns[:3] == ["t", "u0", "n0"]
    unox = run_timeseries(PRESETS["fig10a"])
    for i in (1, 2, 3):
        total = unox.column(f"u{i}")[-1] + unox.column(f"n{i}")[-1]
        assert total > 0.9 * K0 / 10


def test_lymph_nodes_decouple_without_spreading():
    base = lattice_preset("fig10", ell=1, eta=0.0)
    s0 = default_initial_state(base)
    lat = run_timeseries(Scenario("lat", base, s0.as_array(), 40.0))
    loc = run_timeseries(Scenario("loc", LocalModel(base.local_dimensional(0)), (INITIAL_U, INITIAL_N, INITIAL_C), 40.0))
    assert np.allclose(lat.data[:, 1:4], loc.data[:, 1:4], rtol=1e-7, atol=1e-6)
