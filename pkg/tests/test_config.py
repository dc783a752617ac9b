import json

import numpy as np
import pytest

from ltne import (ConfigError, SpectralField, State, build_config,
                  build_initial_state, config_hash, energy_y, load_config,
                  state_norms, write_snapshot)


def _doc(**over):
    base = dict(Ra=10.0, Pr=1.0, Da=1.0, C=1.0, alpha=1.0, gamma=1.0)
    base["lambda"] = 1.0
    base.update(over)
    return base


_PHYS = dict(rho0=1.0, eps=0.5, K=1.0, mu_f=1.0, mu_c=1.0, beta=1.0, g=1.0,
             rhoc_f=1.0, rhoc_s=1.0, kappa_f=1.0, kappa_s=1.0, h=1.0,
             T_l=2.0, T_u=1.0)


def test_defaults_resolved():
    rc = build_config(_doc())
    assert (rc.dom.Nx, rc.dom.Nz) == (32, 32)
    assert (rc.dom.Mx, rc.dom.Mz) == (66, 66)
    assert rc.stepper.dt == 1e-3 and rc.stepper.t_end == 5.0
    assert rc.stepper.scheme == "imex_cnab2"
    assert rc.stepper.sample_every == 10
    assert rc.ic == {"kind": "zero"}
    assert rc.cert_enabled is True
    assert rc.cert_cfg.mso == 1.0 and rc.cert_cfg.r == 1.0
    assert all(rc.checks.values())
    assert rc.output["jsonl"] is None and rc.output["snapshot_at"] == []
    assert len(rc.config_hash) == 16
    # the resolved doc is itself a valid config that resolves identically
    rc2 = build_config(rc.resolved)
    assert rc2.config_hash == rc.config_hash
    assert rc2.resolved == rc.resolved


def test_unknown_keys_are_named():
    with pytest.raises(ConfigError, match="Rayleigh"):
        build_config(_doc(Rayleigh=1.0))
    with pytest.raises(ConfigError, match="foo"):
        build_config(_doc(certificates={"foo": 1}))
    with pytest.raises(ConfigError, match="bar"):
        build_config(_doc(output={"bar": "x"}))
    with pytest.raises(ConfigError, match="ic.kind"):
        build_config(_doc(ic={"kind": "bogus"}))
    with pytest.raises(ConfigError, match="loop_count"):
        build_config(_doc(physical=dict(_PHYS, loop_count=3)))
    with pytest.raises(ConfigError, match="kappa_s"):
        ph = dict(_PHYS)
        del ph["kappa_s"]
        build_config(_doc(physical=ph))
    with pytest.raises(ConfigError, match="toggle"):
        build_config(_doc(certificates={"checks": {"nope": True}}))


def test_missing_numbers_are_named():
    with pytest.raises(ConfigError, match="gamma"):
        build_config({"Ra": 1.0})


def test_physical_block_with_override():
    doc = {"physical": dict(_PHYS), "Ra": 7.0}
    rc = build_config(doc)
    assert rc.p.Ra == 7.0          # explicit key wins
    assert rc.p.lam == pytest.approx(2.0, rel=1e-14)   # derived
    assert rc.p.Pr == pytest.approx(0.5, rel=1e-14)
    bad = dict(_PHYS, eps=2.0)
    with pytest.raises(ConfigError, match="physical block"):
        build_config({"physical": bad})


def test_validation_errors_are_config_errors():
    with pytest.raises(ConfigError, match="Ra"):
        build_config(_doc(Ra=-1.0))
    with pytest.raises(ConfigError, match="dt"):
        build_config(_doc(dt=-0.1))
    with pytest.raises(ConfigError, match="scheme"):
        build_config(_doc(scheme="euler"))
    with pytest.raises(ConfigError, match="expected int"):
        build_config(_doc(Nx="many"))
    with pytest.raises(ConfigError, match="collocation"):
        build_config(_doc(Nx=8, Mx=10))


def test_random_ic_normalization_and_reproducibility():
    rc = build_config(_doc(Nx=8, Nz=8,
                           ic={"kind": "random", "seed": 42, "energy": 2.5}))
    s = build_initial_state(rc.ic, rc.dom, rc.p)
    assert energy_y(state_norms(s), rc.p) == pytest.approx(2.5, rel=1e-12)
    s2 = build_initial_state(rc.ic, rc.dom, rc.p)
    for k in ("psi", "theta", "phi"):
        assert np.array_equal(getattr(s, k).coeffs, getattr(s2, k).coeffs)
    rc3 = build_config(_doc(Nx=8, Nz=8, ic={"kind": "random", "seed": 43}))
    s3 = build_initial_state(rc3.ic, rc3.dom, rc3.p)
    assert not np.array_equal(s.psi.coeffs, s3.psi.coeffs)
    rc0 = build_config(_doc(Nx=8, Nz=8,
                            ic={"kind": "random", "seed": 42, "energy": 0.0}))
    s0 = build_initial_state(rc0.ic, rc0.dom, rc0.p)
    assert np.all(s0.psi.coeffs == 0.0)
    with pytest.raises(ConfigError, match="seed"):
        build_config(_doc(ic={"kind": "random"}))


def test_random_ic_spectrum_is_damped():
    rc = build_config(_doc(Nx=16, Nz=16,
                           ic={"kind": "random", "seed": 5, "decay": 1.0}))
    s = build_initial_state(rc.ic, rc.dom, rc.p)
    c = np.abs(s.theta.coeffs)
    # expected magnitude profile e^{-(m+n)}: high corner far below low corner
    assert c[15, 15] < c[0, 0] * 1e-8


def test_named_single_mode():
    rc = build_config(_doc(Nx=6, Nz=6,
                           ic={"kind": "named", "name": "single_mode",
                               "field": "phi", "m": 2, "n": 3,
                               "amplitude": -2.5}))
    s = build_initial_state(rc.ic, rc.dom, rc.p)
    assert s.phi.coeffs[1, 2] == -2.5
    assert np.count_nonzero(s.phi.coeffs) == 1
    assert np.all(s.psi.coeffs == 0.0) and np.all(s.theta.coeffs == 0.0)
    bad = build_config(_doc(Nx=6, Nz=6))  # baseline ok
    with pytest.raises(ConfigError, match="outside truncation"):
        build_initial_state({"kind": "named", "name": "single_mode", "m": 9},
                            bad.dom, bad.p)
    with pytest.raises(ConfigError, match="unknown named ic"):
        build_initial_state({"kind": "named", "name": "wavelet"},
                            bad.dom, bad.p)


def test_named_eigen_slow_is_block_eigenvector():
    rc = build_config(_doc(Nx=6, Nz=6, alpha=2.0,
                           ic={"kind": "named", "name": "eigen_slow",
                               "amplitude": 3.0}))
    s = build_initial_state(rc.ic, rc.dom, rc.p)
    v = np.array([s.theta.coeffs[0, 0], s.phi.coeffs[0, 0]])
    assert np.linalg.norm(v) == pytest.approx(3.0, rel=1e-13)
    p = rc.p
    mu = -(np.pi ** 2 + np.pi ** 2)
    A = np.array([[mu - p.lam, p.lam],
                  [p.gamma * p.lam / p.alpha,
                   (mu - p.gamma * p.lam) / p.alpha]])
    w = A @ v
    # A v parallel to v with the dominant (slowest) eigenvalue
    sigma = float(w @ v / (v @ v))
    assert np.allclose(w, sigma * v, atol=1e-10)
    assert sigma == pytest.approx(np.max(np.linalg.eigvals(A).real),
                                  rel=1e-12)
    assert np.all(s.psi.coeffs == 0.0)


def test_named_smooth_bump_band_limited():
    rc = build_config(_doc(Nx=8, Nz=8,
                           ic={"kind": "named", "name": "smooth_bump",
                               "band": 3, "amp_psi": 2.0, "amp_theta": 0.5,
                               "amp_phi": 0.0}))
    s = build_initial_state(rc.ic, rc.dom, rc.p)
    assert s.psi.coeffs[0, 0] == pytest.approx(2.0 * np.exp(-2.0), rel=1e-14)
    assert s.theta.coeffs[2, 1] == pytest.approx(0.5 * np.exp(-5.0),
                                                 rel=1e-14)
    assert np.all(s.psi.coeffs[3:, :] == 0.0)
    assert np.all(s.psi.coeffs[:, 3:] == 0.0)
    assert np.all(s.phi.coeffs == 0.0)


def test_config_hash_sensitivity():
    h0 = build_config(_doc()).config_hash
    assert h0 == build_config(_doc()).config_hash
    assert h0 == build_config(_doc(output={"jsonl": "x.jsonl"})).config_hash
    assert h0 != build_config(_doc(dt=2e-3)).config_hash
    assert h0 != build_config(_doc(Ra=10.000001)).config_hash
    assert config_hash(build_config(_doc()).resolved) == h0


def test_snapshot_ic_roundtrip_and_mismatch(tmp_path):
    rc = build_config(_doc(Nx=5, Nz=5))
    rng = np.random.default_rng(3)
    fields = [SpectralField(rng.uniform(-1, 1, (5, 5)), rc.dom)
              for _ in range(3)]
    snap = tmp_path / "state.snap"
    write_snapshot(snap, *fields, 1.25)
    rc2 = build_config(_doc(Nx=5, Nz=5,
                            ic={"kind": "snapshot", "path": "state.snap"}),
                       base_dir=tmp_path)
    s = build_initial_state(rc2.ic, rc2.dom, rc2.p)
    assert s.t == 1.25
    assert np.array_equal(s.psi.coeffs, fields[0].coeffs)
    rc3 = build_config(_doc(Nx=6, Nz=5,
                            ic={"kind": "snapshot", "path": str(snap)}))
    with pytest.raises(ConfigError, match="does not match"):
        build_initial_state(rc3.ic, rc3.dom, rc3.p)
    with pytest.raises(ConfigError, match="does not exist"):
        build_config(_doc(ic={"kind": "snapshot", "path": "missing.snap"}),
                     base_dir=tmp_path)


def test_load_config_error_positions(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text('{\n  "Ra": 1.0,\n  "Pr" 2.0\n}\n')
    with pytest.raises(ConfigError, match=r"bad\.json:3:"):
        load_config(bad)
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")
    good = tmp_path / "good.json"
    good.write_text(json.dumps(_doc()))
    rc = load_config(good)
    assert rc.p.Ra == 10.0
