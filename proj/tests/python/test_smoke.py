import json
import os
import subprocess

import numpy as np
import pytest

import fractalvec as fv


def test_vertex_counts():
    for m, n in enumerate([3, 6, 15, 42, 123, 366]):
        g = fv.build_level("sg", m)
        assert g.num_vertices == n
        assert g.num_cells == 3**m
    assert fv.build_level("interval", 4).num_vertices == 17


def test_harmonic_extension_energy():
    g0 = fv.build_level("sg", 0)
    f = np.array([1.0, 0.0, 0.0])
    fine = fv.harmonic_extension(g0, f)
    form = fv.EnergyForm(fv.build_level("sg", 1))
    assert fv.energy(form, fine) == pytest.approx(2.0, rel=1e-12)
    assert sorted(fine) == pytest.approx([0.0, 0.0, 0.2, 0.4, 0.4, 1.0])


def test_energy_measure_total():
    form = fv.EnergyForm(fv.build_level("sg", 3))
    rng = np.random.default_rng(1)
    f, g = rng.normal(size=(2, form.graph.num_vertices))
    cells = fv.energy_measure(form, f, g)
    assert cells.mass.sum() == pytest.approx(fv.energy(form, f, g), rel=1e-12)
    assert fv.gradient_norm_squared(form, f) == pytest.approx(fv.energy(form, f), rel=1e-12)


def test_kusuoka_measure():
    form = fv.EnergyForm(fv.build_level("sg", 1))
    mu = fv.kusuoka_measure(form)
    assert mu.total() == pytest.approx(2.0, rel=1e-12)
    assert mu.mass == pytest.approx([2 / 3] * 3, rel=1e-12)
    stats = fv.kusuoka_statistics("sg", 3)
    assert stats["max_trace_error"] < 1e-13
    assert stats["median"] == pytest.approx(0.0118, abs=1e-4)


def test_spectrum_and_poincare():
    form = fv.EnergyForm(fv.build_level("sg", 4))
    mu = fv.self_similar_measure(form.graph)
    s = fv.spectrum(form, mu, 4)
    assert abs(s.eigenvalues[0]) < 1e-8
    assert s.eigenvalues[1] == pytest.approx(27.0752, abs=1e-3)
    pc = fv.poincare_constant(form, mu, 2.0)
    assert pc["best_constant"] * pc["lambda1"] == pytest.approx(1.0, rel=1e-12)


def test_solve_p_laplace():
    form = fv.EnergyForm(fv.build_level("sg", 3))
    mu = fv.kusuoka_measure(form)
    w = fv.vertex_weights(form.graph, mu)
    f = np.random.default_rng(2).normal(size=form.graph.num_vertices)
    f -= f @ w / w.sum()
    u, report = fv.solve_p_laplace(form, f, 4.0, mu, "zero_mean", 1e-10)
    assert report["converged"]
    assert abs(u @ w) < 1e-8
    with pytest.raises(fv.FractalvecError):
        fv.solve_p_laplace(form, f, 1.5, mu)


def test_simulate_reproducible():
    form = fv.EnergyForm(fv.build_level("sg", 2))
    mu = fv.self_similar_measure(form.graph)
    u0 = np.ones(form.graph.num_vertices)
    u0[0] = -1
    a = fv.simulate(form, mu, 4.0, u0, T=0.01, truncation=10, seed=3)
    b = fv.simulate(form, mu, 4.0, u0, T=0.01, truncation=10, seed=3)
    assert a["l2_norm"] == b["l2_norm"]


def test_config_validation():
    c = fv.resolve_config({"level": 2, "pde": {"p": 3}})
    assert c["level"] == 2 and c["pde"]["p"] == 3.0
    with pytest.raises(fv.FractalvecError):
        fv.resolve_config({"bogus": 1})


def test_invariants():
    assert all(r["passed"] for r in fv.run_invariants(0))


@pytest.mark.skipif("FRACTALVEC_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_hash(tmp_path):
    out = tmp_path / "run"
    subprocess.run([os.environ["FRACTALVEC_CLI"], "penergy", "--level", "3", "--out", str(out),
                    "--set", "penergy.max_level=4"], check=True, capture_output=True)
    resolved = (out / "resolved_config.json").read_text()
    header = (out / "penergy.csv").read_text().splitlines()[0]
    assert header == "# config_hash=" + fv.config_hash(resolved)
    assert json.loads(resolved)["penergy"]["max_level"] == 4
