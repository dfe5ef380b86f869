"""Acceptance criteria 1-10.

Each test runs one criterion at the seed used by the command line (7), with the
tolerances written out here rather than taken from the CLI defaults, and prints
a single PASS/FAIL line.  Run ``pytest tests/test_acceptance.py -v -s`` to see
the lines inline; they are also printed when output capture is off.
"""

import json

import pytest

from conicgeom import cli, conic_space, radon, tensorlab

SEED = 7


def _config(**tols):
    cfg = dict(cli.DEFAULTS)
    cfg["seed"] = SEED
    cfg.update(tols)
    return cfg


def _report_line(number, title, checks, extra=""):
    ok = all(c.passed for c in checks)
    worst = []
    for c in checks:
        w = c.minimum if c.lower_bound else c.maximum
        worst.append(f"{c.name}={w:.2e}")
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {title}  [{', '.join(worst)}]{extra}"
    return ok, line


def _emit(capsys, line):
    with capsys.disabled():
        print("\n" + line)


def _checks(rec, names):
    by_name = {c.name: c for c in rec.checks}
    missing = [n for n in names if n not in by_name]
    assert not missing, f"checks not produced: {missing}"
    return [by_name[n] for n in names]


def test_criterion_01_base_space(capsys):
    cfg = _config(**{"base.points": 20, "base.tol": 1e-8, "base.bracket_tol": 1e-10})
    rec = cli.Recorder()
    cli.run_base(cfg, rec)
    checks = _checks(rec, ["base.scalar_curvature", "base.einstein", "base.killing", "base.brackets"])
    # the scalar curvature itself, read off a fresh curvature computation
    x = conic_space.sample_box(1, SEED + 100)[0]
    R = tensorlab.curvature(conic_space.metric, x).scalar
    ok, line = _report_line(1, "Einstein base, R=-15/16, Killing fields, so(3) brackets", checks,
                            f" R={R:.12f}")
    _emit(capsys, line)
    assert ok
    assert R == pytest.approx(-15.0 / 16.0, abs=1e-8)
    assert all(c.n == 20 for c in checks)


def test_criterion_02_so3_structure(capsys):
    cfg = _config(**{"base.points": 20, "base.tol": 1e-8})
    rec = cli.Recorder()
    cli.run_base(cfg, rec)
    checks = _checks(rec, ["base.nabla_G", "base.trace_free", "base.quadratic_identity",
                           "base.GG_trace", "base.GG_full_trace"])
    ok, line = _report_line(2, "parallel trace-free cubic with quadratic identity", checks)
    _emit(capsys, line)
    assert ok


def test_criterion_03_radon_range(capsys):
    cfg = _config(**{"radon.points": 20, "radon.tol": 1e-7, "radon.closed_form_tol": 1e-9,
                     "radon.f1_draws": 5, "radon.harmonic_draws": 2, "jet.tol": 1e-6})
    rec = cli.Recorder()
    cli.run_radon(cfg, rec)
    names = ["radon.f1.laplace", "radon.f1.box", "radon.harmonic.laplace", "radon.harmonic.box",
             "radon.residue.closed_form", "radon.residue.laplace", "radon.residue.box",
             "radon.mu_kappa.base", "radon.mu_kappa.jet"]
    checks = _checks(rec, names)
    by = {c.name: c for c in checks}
    assert by["radon.f1.laplace"].n == 5 * 20
    assert by["radon.harmonic.laplace"].n == 2 * 20
    assert by["radon.residue.closed_form"].n == 3 * 20
    mu_base = radon.predicted_mu(1.0 / 24.0, -15.0 / 16.0)
    mu_jet = radon.predicted_mu(1.0 / 3.0, -60.0)
    ok, line = _report_line(3, "range of the transform, closed-form residues, mu-kappa", checks,
                            f" mu_base={mu_base:.6f} mu_jet={mu_jet:.6f}")
    _emit(capsys, line)
    assert ok
    assert mu_base == pytest.approx(-1.0 / 12.0, abs=1e-12)
    assert mu_jet == pytest.approx(-16.0 / 3.0, abs=1e-12)


def test_criterion_04_jet_cross_check(capsys):
    cfg = _config(**{"jet.points": 10, "jet.tol": 1e-6, "jet.delta_tol": 1e-9})
    rec = cli.Recorder()
    cli.run_jet(cfg, rec)
    checks = _checks(rec, ["jet.einstein", "jet.scalar_curvature", "jet.ode", "base.conic_delta"])
    ok, line = _report_line(4, "jet metric Einstein R=-60, fifth-order ODE, Delta=8i", checks)
    _emit(capsys, line)
    assert ok
    assert all(c.n == 10 for c in checks)


def test_criterion_05_asd_pipeline(capsys):
    cfg = _config(**{"asd.points": 10, "asd.weyl_tol": 1e-6, "asd.identity_tol": 1e-7,
                     "asd.closed_tol": 1e-7, "asd.frobenius_tol": 1e-6, "asd.control_margin": 1e-3})
    rec = cli.Recorder()
    cli.run_verify_asd(cfg, rec)
    checks = _checks(rec, ["asd.weyl_plus", "asd.identity", "asd.closedness", "asd.frobenius",
                           "asd.control_closedness"])
    margin = checks[-1].minimum
    ok, line = _report_line(5, "ASD conformal structure, closed forms, integrability, control", checks,
                            f" control_margin={margin:.3e}")
    _emit(capsys, line)
    assert ok
    assert margin >= 1e-3


def test_criterion_06_worked_metrics(capsys):
    cfg = _config(**{"examples.einstein_tol": 1e-7, "examples.kappa_tol": 1e-6,
                     "examples.ricci_tol": 1e-7, "examples.monopole_tol": 1e-8,
                     "examples.toda_tol": 1e-9})
    rec = cli.Recorder()
    for name in cli.EXAMPLE_NAMES:
        cli.run_example(cfg, rec, name)
    names = ["examples.einstein.scalar", "examples.einstein.einstein", "examples.einstein.weyl_plus",
             "examples.kappa.scalar", "examples.kappa.einstein", "examples.ricci_flat.ricci",
             "examples.ricci_flat.monopole", "examples.scalar_flat.scalar", "examples.scalar_flat.kahler",
             "examples.scalar_flat.toda"]
    checks = _checks(rec, names)
    kappas = {c.name: c for c in checks}["examples.kappa.scalar"].extra["kappas"]
    ok, line = _report_line(6, "Einstein, kappa family, Ricci-flat and scalar-flat examples", checks)
    _emit(capsys, line)
    assert ok
    assert sorted(float(k) for k in kappas) == [0.5, 1.0, 2.0]


def test_criterion_07_tri_kahler(capsys):
    cfg = _config(**{"asd.points": 10, "asd.kahler_tol": 1e-6})
    rec = cli.Recorder()
    cli.run_verify_asd(cfg, rec)
    checks = _checks(rec, ["asd.tri_kahler.scalar_flat", "asd.tri_kahler.parallel",
                           "asd.tri_kahler.J2", "asd.tri_kahler.cky"])
    used = rec.sample["asd"]["tri_kahler_solutions"]
    ok, line = _report_line(7, "three scalar-flat Kahler metrics and the barycenter", checks,
                            f" solutions={used}")
    _emit(capsys, line)
    assert ok
    assert len(set(used)) == 2


def test_criterion_08_projective(capsys):
    cfg = _config(**{"poncelet.lines": 50, "poncelet.starts": 5, "poncelet.invariant_tol": 1e-10,
                     "poncelet.closure_tol": 1e-8, "poncelet.control_conics": 50,
                     "poncelet.gergonne_triples": 100, "poncelet.gergonne_tol": 1e-9,
                     "poncelet.cayley_tol": 1e-12, "poncelet.moment_points": 20,
                     "poncelet.moment_tol": 1e-9})
    rec = cli.Recorder()
    cli.run_poncelet(cfg, rec)
    names = ["poncelet.image_invariant", "poncelet.closure", "poncelet.control_invariant",
             "poncelet.gergonne", "poncelet.cayley", "poncelet.moment_map"]
    checks = _checks(rec, names)
    by = {c.name: c for c in checks}
    q = by["poncelet.control_invariant"].extra["quantiles"]
    dist = " control |I| quantiles " + " ".join(f"{k}:{float(v):.3g}" for k, v in q.items())
    ok, line = _report_line(8, "Poncelet triangles, Gergonne point, Cayley, moment map", checks, dist)
    _emit(capsys, line)
    assert ok
    assert by["poncelet.closure"].n == 50 * 5
    assert by["poncelet.gergonne"].n == 100
    # the controls must stay well away from the image tolerance
    assert by["poncelet.control_invariant"].minimum > 1e3 * 1e-10


def test_criterion_09_legendre(capsys):
    cfg = _config(**{"legendre.pde_tol": 1e-7, "legendre.ma_tol": 1e-6, "legendre.ricci_tol": 1e-6})
    rec = cli.Recorder()
    cli.run_legendre(cfg, rec)
    checks = _checks(rec, ["legendre.pde", "legendre.monge_ampere", "legendre.ricci"])
    ok, line = _report_line(9, "flat system, Monge-Ampere and Ricci-flatness", checks)
    _emit(capsys, line)
    assert ok


@pytest.mark.slow
def test_criterion_10_determinism(capsys, tmp_path):
    hashes = []
    for k in range(2):
        out = tmp_path / f"run{k}.json"
        code = cli.main(["all", "--seed", str(SEED), "--out", str(out), "--quiet"])
        report = json.loads(out.read_text())
        assert code == 0
        assert cli.stable_hash(report) == report["stable_hash"]
        hashes.append(report["stable_hash"])
    ok = hashes[0] == hashes[1]
    _emit(capsys, f"criterion 10: {'PASS' if ok else 'FAIL'}  two runs of all --seed {SEED}  "
                  f"[{hashes[0][:16]} vs {hashes[1][:16]}]")
    assert ok
