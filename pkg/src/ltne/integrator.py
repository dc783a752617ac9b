"""Time integration of the spectral system with the stiff part implicit.

Default scheme `imex_cnab2`: Crank-Nicolson on the per-mode linear part (a
scalar solve for psi, a 2x2 solve for the theta-phi pair, both with
precomputed closed-form inverses) and 2nd-order Adams-Bashforth on the
explicit part (the Ra coupling and the Jacobian).  The first step has no
history and is one fully explicit RK2 (Heun) step.  `etd1` (exact per-mode
exponential, first-order on the explicit part) and `rk4_explicit` are
provided for cross-validation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .params import Domain, Params
from .spectral import SpectralField, _jacobian_coeffs, _plan
from .dynamics import State, _rhs_arrays

BLOWUP_NORM = 1e12

SCHEMES = ("imex_cnab2", "etd1", "rk4_explicit")


@dataclass(frozen=True)
class StepperConfig:
    dt: float
    t_end: float
    scheme: str = "imex_cnab2"
    sample_every: int = 1
    linear_only: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.t_end < 0:
            raise ValueError("t_end must be >= 0")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")


class IntegrationBlowupError(RuntimeError):
    """State left the representable range (NaN/Inf or norm > BLOWUP_NORM)."""

    def __init__(self, t: float, field_name: str, detail: str = ""):
        self.t = t
        self.field = field_name
        msg = f"integration blew up at t={t:.6g} in field {field_name}"
        super().__init__(msg + (f" ({detail})" if detail else ""))


@dataclass
class Trajectory:
    """Sampled output of one run.

    prestates[i] is the state one integrator step before samples[i] (None for
    the initial sample); certificate residuals are measured across that step.
    """

    times: list[float] = field(default_factory=list)
    states: list[State] = field(default_factory=list)
    prestates: list[State | None] = field(default_factory=list)
    records: list = field(default_factory=list)
    snapshots: list[tuple[float, State]] = field(default_factory=list)
    failure: dict | None = None

    @property
    def final(self) -> State:
        return self.states[-1]


def _sinhc(x: np.ndarray) -> np.ndarray:
    # sinh(x)/x, stable at 0 (the d -> 0 block degeneracy at lam -> 0, alpha=1)
    small = np.abs(x) < 1e-5
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 + x * x / 6.0, np.sinh(safe) / safe)


class _Cnab2:
    def __init__(self, p: Params, dom: Domain, dt: float, linear_only: bool):
        self.p, self.dom, self.dt = p, dom, dt
        self.linear_only = linear_only
        plan = _plan(dom)
        self.mu, self.D = plan["mu"], plan["Dx"]
        mu = self.mu
        self.lpsi = (p.Pr / p.Da) * (p.C * mu - 1.0)
        b11, b12 = mu - p.lam, p.lam
        b21, b22 = p.gamma * p.lam / p.alpha, (mu - p.gamma * p.lam) / p.alpha
        h = dt / 2.0
        self.psi_num = 1.0 + h * self.lpsi
        self.psi_den = 1.0 - h * self.lpsi
        gdet = (1.0 - h * b11) * (1.0 - h * b22) - h * h * b12 * b21
        self.gi11 = (1.0 - h * b22) / gdet
        self.gi12 = h * b12 / gdet
        self.gi21 = h * b21 / gdet
        self.gi22 = (1.0 - h * b11) / gdet
        self.f11 = 1.0 + h * b11
        self.f12 = h * b12
        self.f21 = h * b21
        self.f22 = 1.0 + h * b22

    def _explicit(self, cpsi, cth):
        p = self.p
        n_psi = (p.Pr / p.Da) * p.Ra * (self.D @ cth) / self.mu
        n_th = np.zeros_like(cth)
        if not self.linear_only:
            n_th = n_th - _jacobian_coeffs(cpsi, cth, self.dom)
        if p.conduction_coupling:
            n_th = n_th + self.D @ cpsi
        return n_psi, n_th

    def _heun(self, c):
        f0 = _rhs_arrays(*c, self.p, self.dom, not self.linear_only)
        c1 = tuple(u + self.dt * du for u, du in zip(c, f0))
        f1 = _rhs_arrays(*c1, self.p, self.dom, not self.linear_only)
        return tuple(u + 0.5 * self.dt * (d0 + d1)
                     for u, d0, d1 in zip(c, f0, f1))

    def advance(self, c, hist):
        n_cur = self._explicit(c[0], c[1])
        if hist is None:
            return self._heun(c), n_cur
        ex_psi = 1.5 * n_cur[0] - 0.5 * hist[0]
        ex_th = 1.5 * n_cur[1] - 0.5 * hist[1]
        cpsi, cth, cph = c
        psi_new = (self.psi_num * cpsi + self.dt * ex_psi) / self.psi_den
        r_th = self.f11 * cth + self.f12 * cph + self.dt * ex_th
        r_ph = self.f21 * cth + self.f22 * cph
        th_new = self.gi11 * r_th + self.gi12 * r_ph
        ph_new = self.gi21 * r_th + self.gi22 * r_ph
        return (psi_new, th_new, ph_new), n_cur


class _Etd1(_Cnab2):
    def __init__(self, p: Params, dom: Domain, dt: float, linear_only: bool):
        super().__init__(p, dom, dt, linear_only)
        mu = self.mu
        b11, b12 = mu - p.lam, p.lam
        b21, b22 = p.gamma * p.lam / p.alpha, (mu - p.gamma * p.lam) / p.alpha
        self.epsi = np.exp(dt * self.lpsi)
        self.phi1_psi = np.expm1(dt * self.lpsi) / self.lpsi
        m = (b11 + b22) / 2.0
        d = np.sqrt(((b11 - b22) / 2.0) ** 2 + b12 * b21)  # >= 0, real here
        emh = np.exp(m * dt)
        ch = np.cosh(d * dt)
        sc = dt * _sinhc(d * dt)
        self.E11 = emh * (ch + (b11 - m) * sc)
        self.E12 = emh * b12 * sc
        self.E21 = emh * b21 * sc
        self.E22 = emh * (ch + (b22 - m) * sc)
        det = b11 * b22 - b12 * b21
        self.P11 = (b22 * (self.E11 - 1.0) - b12 * self.E21) / det
        self.P21 = (-b21 * (self.E11 - 1.0) + b11 * self.E21) / det

    def advance(self, c, hist):
        n_psi, n_th = self._explicit(c[0], c[1])
        cpsi, cth, cph = c
        psi_new = self.epsi * cpsi + self.phi1_psi * n_psi
        th_new = self.E11 * cth + self.E12 * cph + self.P11 * n_th
        ph_new = self.E21 * cth + self.E22 * cph + self.P21 * n_th
        return (psi_new, th_new, ph_new), None


class _Rk4:
    def __init__(self, p: Params, dom: Domain, dt: float, linear_only: bool):
        self.p, self.dom, self.dt = p, dom, dt
        self.nonlinear = not linear_only

    def advance(self, c, hist):
        f = lambda u: _rhs_arrays(*u, self.p, self.dom, self.nonlinear)
        h = self.dt
        k1 = f(c)
        k2 = f(tuple(u + 0.5 * h * k for u, k in zip(c, k1)))
        k3 = f(tuple(u + 0.5 * h * k for u, k in zip(c, k2)))
        k4 = f(tuple(u + h * k for u, k in zip(c, k3)))
        new = tuple(u + h / 6.0 * (a + 2 * b + 2 * cc + d)
                    for u, a, b, cc, d in zip(c, k1, k2, k3, k4))
        return new, None


_STEPPERS = {"imex_cnab2": _Cnab2, "etd1": _Etd1, "rk4_explicit": _Rk4}


@lru_cache(maxsize=32)
def _stepper(p: Params, dom: Domain, dt: float, scheme: str, linear_only: bool):
    return _STEPPERS[scheme](p, dom, dt, linear_only)


def _check_blowup(c, dom: Domain, t: float):
    for name, arr in zip(("psi", "theta", "phi"), c):
        ss = float(np.sum(arr * arr))
        if not np.isfinite(ss):
            raise IntegrationBlowupError(t, name, "non-finite coefficients")
        if dom.a / 4.0 * ss > BLOWUP_NORM ** 2:
            raise IntegrationBlowupError(
                t, name, f"norm exceeded {BLOWUP_NORM:.0e}")


def step(s: State, p: Params, cfg: StepperConfig) -> State:
    """Advance one dt.  A single call has no multistep history, so for
    imex_cnab2 this is the RK2 bootstrap step; `run` threads the history."""
    st = _stepper(p, s.dom, cfg.dt, cfg.scheme, cfg.linear_only)
    c = (s.psi.coeffs, s.theta.coeffs, s.phi.coeffs)
    new, _ = st.advance(c, None)
    t = s.t + cfg.dt
    _check_blowup(new, s.dom, t)
    dom = s.dom
    return State(SpectralField(new[0], dom), SpectralField(new[1], dom),
                 SpectralField(new[2], dom), t)


def run(s0: State, p: Params, cfg: StepperConfig, monitors=None,
        snapshot_times: tuple[float, ...] = ()) -> Trajectory:
    """Integrate to t_end, sampling every `sample_every` steps (the final
    state is always sampled) and invoking `monitors.on_sample` per sample.

    Snapshot times must be step-aligned; each one is also an integrator
    restart barrier (the multistep history is dropped there), so a run
    resumed from a written snapshot continues bit-identically to the
    original.  On blowup the partial trajectory is returned with `failure`
    set instead of raising.
    """
    dom = s0.dom
    nsteps = int(round(cfg.t_end / cfg.dt))
    if abs(nsteps * cfg.dt - cfg.t_end) > 1e-9 * max(1.0, cfg.t_end):
        raise ValueError("t_end must be an integer multiple of dt")
    snap_steps = {}
    for ts in snapshot_times:
        k = int(round(ts / cfg.dt))
        if abs(k * cfg.dt - ts) > 1e-9 * max(1.0, abs(ts)) or not 0 <= k <= nsteps:
            raise ValueError(f"snapshot time {ts} is not step-aligned in [0, t_end]")
        snap_steps[k] = ts

    stepper = _stepper(p, dom, cfg.dt, cfg.scheme, cfg.linear_only)
    traj = Trajectory()

    def emit(t, state, prestate):
        traj.times.append(t)
        traj.states.append(state)
        traj.prestates.append(prestate)
        if monitors is not None:
            traj.records.append(monitors.on_sample(t, state, prestate, cfg.dt))

    def wrap(c, t):
        return State(SpectralField(c[0], dom), SpectralField(c[1], dom),
                     SpectralField(c[2], dom), t)

    c = (s0.psi.coeffs.copy(), s0.theta.coeffs.copy(), s0.phi.coeffs.copy())
    emit(s0.t, wrap(c, s0.t), None)
    if 0 in snap_steps:
        traj.snapshots.append((s0.t, wrap(c, s0.t)))
    hist = None
    for k in range(1, nsteps + 1):
        c_before = c
        try:
            c, hist = stepper.advance(c, hist)
            t = s0.t + k * cfg.dt
            _check_blowup(c, dom, t)
        except IntegrationBlowupError as e:
            traj.failure = {"t": e.t, "field": e.field, "error": str(e)}
            return traj
        if k % cfg.sample_every == 0 or k == nsteps:
            emit(t, wrap(c, t), wrap(c_before, t - cfg.dt))
        if k in snap_steps:
            traj.snapshots.append((t, wrap(c, t)))
            hist = None  # restart barrier: resumed runs reproduce exactly
    return traj
