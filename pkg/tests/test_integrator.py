import numpy as np
import pytest
from scipy.linalg import expm

from ltne import (Domain, IntegrationBlowupError, Params, SpectralField,
                  State, StepperConfig, assemble_linear, run, step,
                  write_snapshot)


def _params(**kw):
    base = dict(Ra=50.0, Pr=1.0, Da=1.0, C=1.0, lam=1.0, gamma=1.0,
                alpha=1.0, a=1.0)
    base.update(kw)
    return Params(**base)


def _decaying_state(dom, rng, scale=0.5):
    taper = np.exp(-0.4 * np.add.outer(np.arange(dom.Nx), np.arange(dom.Nz)))
    f = [SpectralField(scale * rng.uniform(-1.0, 1.0, (dom.Nx, dom.Nz))
                       * taper, dom) for _ in range(3)]
    return State(*f)


def _maxdiff(a, b):
    return max(np.max(np.abs(getattr(a, k).coeffs - getattr(b, k).coeffs))
               for k in ("psi", "theta", "phi"))


def test_zero_state_stays_zero():
    dom = Domain(a=1.0, Nx=4, Nz=4)
    p = _params()
    for scheme in ("imex_cnab2", "etd1", "rk4_explicit"):
        cfg = StepperConfig(dt=0.01, t_end=0.1, scheme=scheme)
        fin = run(State.zero(dom), p, cfg).final
        for k in ("psi", "theta", "phi"):
            assert np.all(getattr(fin, k).coeffs == 0.0)


def test_cnab2_matches_matrix_exponential():
    rng = np.random.default_rng(7)
    dom = Domain(a=1.0, Nx=4, Nz=4)
    p = _params(Ra=20.0)
    s0 = State(*(SpectralField(rng.uniform(-1, 1, (4, 4)), dom)
                 for _ in range(3)))
    vec0 = np.concatenate([getattr(s0, k).coeffs.ravel()
                           for k in ("psi", "theta", "phi")])
    T = 0.1
    exact = expm(T * assemble_linear(p, dom).dense()) @ vec0
    cfg = StepperConfig(dt=2.5e-4, t_end=T, linear_only=True,
                        sample_every=10 ** 9)
    fin = run(s0, p, cfg).final
    got = np.concatenate([getattr(fin, k).coeffs.ravel()
                          for k in ("psi", "theta", "phi")])
    assert np.max(np.abs(got - exact)) < 3e-6   # measured 6.0e-7 at this dt


def test_cnab2_second_order_self_convergence():
    rng = np.random.default_rng(7)
    dom = Domain(a=1.0, Nx=8, Nz=8)
    p = _params()
    s0 = _decaying_state(dom, rng)
    finals = {}
    for dt in (1e-3, 5e-4, 2.5e-4, 1.25e-4):
        cfg = StepperConfig(dt=dt, t_end=0.2, sample_every=10 ** 9)
        finals[dt] = run(s0, p, cfg).final
    e1 = _maxdiff(finals[1e-3], finals[5e-4])
    e2 = _maxdiff(finals[5e-4], finals[2.5e-4])
    e3 = _maxdiff(finals[2.5e-4], finals[1.25e-4])
    assert 3.5 < e1 / e2 < 4.5
    assert 3.5 < e2 / e3 < 4.5


def test_cnab2_agrees_with_rk4():
    rng = np.random.default_rng(7)
    dom = Domain(a=1.0, Nx=8, Nz=8)
    p = _params()
    s0 = _decaying_state(dom, rng)
    fa = run(s0, p, StepperConfig(dt=1e-4, t_end=0.05,
                                  sample_every=10 ** 9)).final
    fb = run(s0, p, StepperConfig(dt=1e-4, t_end=0.05, scheme="rk4_explicit",
                                  sample_every=10 ** 9)).final
    assert _maxdiff(fa, fb) < 2e-6   # measured 4.3e-7


def _block(p, mu):
    return np.array([[mu - p.lam, p.lam],
                     [p.gamma * p.lam / p.alpha,
                      (mu - p.gamma * p.lam) / p.alpha]])


def test_etd1_block_exact_any_dt():
    # with the Jacobian off nothing feeds theta-phi from psi, so the pair is
    # advanced by the exact per-mode exponential and even one huge step
    # lands on expm
    rng = np.random.default_rng(11)
    dom = Domain(a=1.0, Nx=3, Nz=3)
    for lam, gamma, alpha, dt, nsteps in ((1.3, 0.7, 2.0, 0.4, 1),
                                          (1.3, 0.7, 2.0, 0.1, 4),
                                          (1e-7, 1.0, 1.0, 0.4, 1)):
        p = _params(lam=lam, gamma=gamma, alpha=alpha)
        z = SpectralField.zero(dom)
        th = SpectralField(rng.uniform(-1, 1, (3, 3)), dom)
        ph = SpectralField(rng.uniform(-1, 1, (3, 3)), dom)
        cfg = StepperConfig(dt=dt, t_end=nsteps * dt, scheme="etd1",
                            linear_only=True)
        fin = run(State(z, th, ph), p, cfg).final
        for m in range(1, 4):
            for n in range(1, 4):
                mu = -((m * np.pi) ** 2 + (n * np.pi) ** 2)
                want = expm(nsteps * dt * _block(p, mu)) @ np.array(
                    [th.coeffs[m - 1, n - 1], ph.coeffs[m - 1, n - 1]])
                got = np.array([fin.theta.coeffs[m - 1, n - 1],
                                fin.phi.coeffs[m - 1, n - 1]])
                assert np.allclose(got, want, rtol=1e-9, atol=1e-30)


def test_etd1_pure_psi_exact_decay():
    rng = np.random.default_rng(13)
    dom = Domain(a=1.0, Nx=3, Nz=3)
    p = _params(Pr=2.0, Da=0.5, C=0.3)
    psi = SpectralField(rng.uniform(-1, 1, (3, 3)), dom)
    z = SpectralField.zero(dom)
    dt = 0.05
    fin = run(State(psi, z, z), p, StepperConfig(dt=dt, t_end=3 * dt,
                                                 scheme="etd1")).final
    for m in range(1, 4):
        for n in range(1, 4):
            mu = -((m * np.pi) ** 2 + (n * np.pi) ** 2)
            lmul = (p.Pr / p.Da) * (p.C * mu - 1.0)
            want = np.exp(3 * dt * lmul) * psi.coeffs[m - 1, n - 1]
            assert fin.psi.coeffs[m - 1, n - 1] == pytest.approx(
                want, rel=1e-12, abs=1e-30)
    assert np.all(fin.theta.coeffs == 0.0)
    assert np.all(fin.phi.coeffs == 0.0)


def test_cn_block_nonexpansive_at_huge_dt():
    # Crank-Nicolson of the dissipative theta-phi block contracts the
    # weighted energy ||theta||^2 + (alpha/gamma)||phi||^2 for any dt; only
    # the explicit bootstrap step is exempt
    rng = np.random.default_rng(17)
    dom = Domain(a=1.0, Nx=4, Nz=4)
    p = _params(Ra=1e-30, gamma=2.0, alpha=0.5)
    z = SpectralField.zero(dom)
    th = SpectralField(rng.uniform(-1, 1, (4, 4)), dom)
    ph = SpectralField(rng.uniform(-1, 1, (4, 4)), dom)
    cfg = StepperConfig(dt=10.0, t_end=300.0, linear_only=True)
    tr = run(State(z, th, ph), p, cfg)
    w = p.alpha / p.gamma
    energies = [float(np.sum(s.theta.coeffs ** 2) + w * np.sum(s.phi.coeffs ** 2))
                for s in tr.states]
    assert tr.failure is None
    for prev, nxt in zip(energies[1:], energies[2:]):
        assert nxt <= prev * (1.0 + 1e-12)


def test_blowup_returns_partial_trajectory():
    rng = np.random.default_rng(19)
    dom = Domain(a=1.0, Nx=4, Nz=4)
    p = _params(Ra=100.0)
    s0 = State(*(SpectralField(rng.uniform(-1, 1, (4, 4)), dom)
                 for _ in range(3)))
    cfg = StepperConfig(dt=1.0, t_end=20.0, scheme="rk4_explicit")
    with np.errstate(over="ignore", invalid="ignore"):
        tr = run(s0, p, cfg)
    assert tr.failure is not None
    assert set(tr.failure) == {"t", "field", "error"}
    assert tr.failure["t"] <= 20.0
    assert len(tr.times) >= 1   # initial sample retained
    with np.errstate(over="ignore", invalid="ignore"):
        with pytest.raises(IntegrationBlowupError, match="blew up"):
            s = s0
            for _ in range(50):
                s = step(s, p, cfg)


def test_run_is_deterministic():
    rng = np.random.default_rng(23)
    dom = Domain(a=1.0, Nx=6, Nz=6)
    p = _params()
    s0 = _decaying_state(dom, rng)
    cfg = StepperConfig(dt=1e-3, t_end=0.1)
    f1, f2 = run(s0, p, cfg).final, run(s0, p, cfg).final
    for k in ("psi", "theta", "phi"):
        assert np.array_equal(getattr(f1, k).coeffs, getattr(f2, k).coeffs)


def test_step_equals_single_step_run():
    rng = np.random.default_rng(29)
    dom = Domain(a=1.0, Nx=5, Nz=5)
    p = _params()
    s0 = _decaying_state(dom, rng)
    cfg = StepperConfig(dt=2e-3, t_end=2e-3)
    s1 = step(s0, p, cfg)
    fin = run(s0, p, cfg).final
    assert s1.t == fin.t
    for k in ("psi", "theta", "phi"):
        assert np.array_equal(getattr(s1, k).coeffs, getattr(fin, k).coeffs)


def test_snapshot_restart_is_bit_identical(tmp_path):
    # the snapshot step drops the multistep history, so a resumed run
    # reproduces the original continuation exactly
    rng = np.random.default_rng(31)
    dom = Domain(a=1.0, Nx=6, Nz=6)
    p = _params()
    s0 = _decaying_state(dom, rng)
    dt, t_half = 0.01, 0.1
    full = run(s0, p, StepperConfig(dt=dt, t_end=2 * t_half),
               snapshot_times=(t_half,))
    assert len(full.snapshots) == 1
    t_snap, s_snap = full.snapshots[0]
    assert t_snap == pytest.approx(t_half)
    path = tmp_path / "mid.snap"
    write_snapshot(path, s_snap.psi, s_snap.theta, s_snap.phi, t_snap)
    resumed = run(s_snap, p, StepperConfig(dt=dt, t_end=t_half)).final
    for k in ("psi", "theta", "phi"):
        assert np.array_equal(getattr(resumed, k).coeffs,
                              getattr(full.final, k).coeffs)


def test_run_validation():
    dom = Domain(a=1.0, Nx=3, Nz=3)
    p = _params()
    s0 = State.zero(dom)
    with pytest.raises(ValueError, match="integer multiple"):
        run(s0, p, StepperConfig(dt=0.3, t_end=1.0))
    with pytest.raises(ValueError, match="step-aligned"):
        run(s0, p, StepperConfig(dt=0.1, t_end=1.0), snapshot_times=(0.15,))
    with pytest.raises(ValueError, match="step-aligned"):
        run(s0, p, StepperConfig(dt=0.1, t_end=1.0), snapshot_times=(1.5,))
    with pytest.raises(ValueError, match="sample_every"):
        StepperConfig(dt=0.1, t_end=1.0, sample_every=0)
    with pytest.raises(ValueError, match="unknown scheme"):
        StepperConfig(dt=0.1, t_end=1.0, scheme="euler")


def test_sampling_cadence_and_prestates():
    rng = np.random.default_rng(37)
    dom = Domain(a=1.0, Nx=4, Nz=4)
    p = _params()
    s0 = _decaying_state(dom, rng)
    dt = 0.01
    tr = run(s0, p, StepperConfig(dt=dt, t_end=10 * dt, sample_every=3))
    assert tr.times == pytest.approx([0.0, 3 * dt, 6 * dt, 9 * dt, 10 * dt])
    assert tr.prestates[0] is None
    for t, pre in zip(tr.times[1:], tr.prestates[1:]):
        assert pre.t == pytest.approx(t - dt)
    assert tr.records == []
    assert tr.final is tr.states[-1]
