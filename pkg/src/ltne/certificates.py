"""Runtime certificates: a priori energy estimates checked along trajectories.

Each certificate turns one quantitative bound into a pass/fail flag with a
reported slack: exponential decay of the temperature pair, the absorbing-ball
bounds for ||lap psi||^2 (with and without the decaying transient) and for the
H1-level energy (uniform-Gronwall window bound), the dissipation-integral
bound, the energy-balance identity/inequality, a continuous-dependence
envelope for pairs of runs, and a spectral-tail proxy for instantaneous
smoothing.

Envelope comparisons are done in log space: the Gronwall exponents reach
~1e5 at large Ra and overflow float64 if exponentiated.  Time integrals use
trapezoid quadrature at the sample cadence with a second-difference error
estimate added on the bound side.  Trapezoid overestimates convex decaying
integrands, so an under-resolved fast transient can only flag a spurious
FAIL, never hide a violation larger than the reported allowance; sample
densely enough to resolve the fastest retained decay rate if the
dissipation integral matters.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields as dc_fields

import numpy as np

from .params import Domain, Params, poincare_constant
from .spectral import SpectralField, _plan, tail_fraction
from .dynamics import State, energy_identity_rhs

_REL_TOL = 1e-9     # roundoff allowance on certified inequalities


@dataclass(frozen=True)
class CertificateConfig:
    """Knobs the bounds depend on but the problem data does not fix.

    M_so is the Sobolev-type embedding constant the H1 and uniqueness bounds
    carry; it is never quantified analytically, so certificates hold
    relative to the configured value (default 1.0).  c_tilde is the
    auxiliary dissipation-splitting factor, None meaning min(1, 1/alpha)/2.
    r is the uniform-Gronwall window length.
    """

    mso: float = 1.0
    ctilde: float | None = None
    r: float = 1.0
    tail_k: int = 2
    tail_cutoff: int | None = None
    tail_threshold: float = 1e-3
    tail_warmup: float = 0.5


@dataclass(frozen=True)
class CertificateConstants:
    M_P: float
    M7: float
    M8: float
    M9: float
    t0: float
    rho0_sq: float
    rho_R_sq: float
    M1: float
    M2: float
    M10_const: float
    M10_lap_coef: float
    M11: float
    M12: float
    c_tilde: float
    M_so: float
    r: float


def compute_constants(p: Params, dom: Domain, cfg: CertificateConfig,
                      *, rho0_sq: float = 0.0,
                      lap_psi0_sq: float = 0.0) -> CertificateConstants:
    """Evaluate every derived constant.

    t0 = ln(M8)/M7 and rho0^2 = ||theta(0)||^2 + ||phi(0)||^2 make the decay
    bound deliver exactly ||theta||^2 + ||phi||^2 <= rho0^2 for t >= t0.
    """
    lam, gam, al = p.lam, p.gamma, p.alpha
    M_P = poincare_constant(dom)
    M7 = (1.0 / M_P) * min(1.0, 1.0 / al)
    w_th, w_ph = 1.0 / (2 * lam), al / (2 * gam * lam)
    M8 = max(w_th, w_ph) / min(w_th, w_ph)
    ct = cfg.ctilde if cfg.ctilde is not None else min(1.0, 1.0 / al) / 2.0
    if not (0 < ct < 1 and 0 < ct * al < 1):
        raise ValueError(
            f"c_tilde={ct} out of range: need 0 < c_tilde < 1 and "
            f"0 < c_tilde*alpha < 1")
    M9 = min(w_th, w_ph) / (min(1.0 / (2 * lam), 1.0 / (2 * gam * lam)) * ct)
    t0 = math.log(M8) / M7
    rho_R_sq = rho0_sq + p.Ra ** 2 * rho0_sq / (4 * p.C)
    M1 = 2.0 * min(p.Pr * p.C / (2 * p.Da), 1.0, 1.0 / al)
    M2 = 2.0 * max(1.0, p.Ra ** 2 / (2 * p.C) + lam * gam / 4.0,
                   lam / (4 * al))
    M10_const = p.Ra ** 2 / (2 * p.C) + 2 * lam + 2.0 + (4 * gam * lam + lam ** 2) / (2 * al)
    M10_lap_coef = 2.0 * cfg.mso   # norm-equivalence constant c = 1 here
    M11 = M10_lap_coef * rho_R_sq + M10_const
    M12 = (p.Da ** 2 / (p.Pr ** 2 * p.C)) * lap_psi0_sq + (
        p.Ra ** 2 * M8 * p.Da * p.Pr / (p.C ** 2 * M7) + (1 + al) * M9) * rho0_sq
    return CertificateConstants(
        M_P=M_P, M7=M7, M8=M8, M9=M9, t0=t0, rho0_sq=rho0_sq,
        rho_R_sq=rho_R_sq, M1=M1, M2=M2, M10_const=M10_const,
        M10_lap_coef=M10_lap_coef, M11=M11, M12=M12, c_tilde=ct,
        M_so=cfg.mso, r=cfg.r)


@dataclass
class TrajectoryRecord:
    """Per-sample norms, energies and certificate verdicts.

    Flags are True/False when the certificate was evaluated at this sample
    and None when not applicable (before an anchor time, no paired run, ...).
    """

    t: float
    lap_psi_sq: float
    theta_sq: float
    phi_sq: float
    grad_theta_sq: float
    grad_phi_sq: float
    gradlap_psi_sq: float
    E_Y: float
    E_half: float
    dEY_dt_disc: float | None = None
    decay_ok: bool | None = None
    decay_slack: float | None = None
    diss_ok: bool | None = None
    diss_slack: float | None = None
    psi_absorb_ok: bool | None = None
    psi_absorb_slack: float | None = None
    psi_absorb_ball_ok: bool | None = None
    h1_absorb_ok: bool | None = None
    h1_absorb_slack: float | None = None
    cdep_ok: bool | None = None
    ebal_resid: float | None = None
    ebal_ineq_ok: bool | None = None
    tail_frac_k2: float | None = None
    tail_ok: bool | None = None
    config_hash: str = ""

    def to_json_dict(self) -> dict:
        out = {}
        for f in dc_fields(self):
            v = getattr(self, f.name)
            if isinstance(v, (np.floating, np.bool_)):
                v = v.item()
            out[f.name] = v
        return out

    @staticmethod
    def from_json_dict(d: dict) -> "TrajectoryRecord":
        names = {f.name for f in dc_fields(TrajectoryRecord)}
        return TrajectoryRecord(**{k: v for k, v in d.items() if k in names})


def state_norms(s: State) -> dict:
    """The squared norms every certificate consumes, in one pass."""
    plan = _plan(s.dom)
    absmu = plan["absmu"]
    a4 = s.dom.a / 4.0
    cpsi, cth, cph = s.psi.coeffs, s.theta.coeffs, s.phi.coeffs
    return {
        "lap_psi_sq": float(a4 * np.sum(absmu ** 2 * cpsi ** 2)),
        "gradlap_psi_sq": float(a4 * np.sum(absmu ** 3 * cpsi ** 2)),
        "grad_psi_sq": float(a4 * np.sum(absmu * cpsi ** 2)),
        "theta_sq": float(a4 * np.sum(cth ** 2)),
        "phi_sq": float(a4 * np.sum(cph ** 2)),
        "grad_theta_sq": float(a4 * np.sum(absmu * cth ** 2)),
        "grad_phi_sq": float(a4 * np.sum(absmu * cph ** 2)),
    }


def energy_y(norms: dict, p: Params) -> float:
    return (p.Da / p.Pr) * norms["lap_psi_sq"] + norms["theta_sq"] \
        + p.alpha * norms["phi_sq"]


def energy_half(norms: dict, p: Params) -> float:
    return (p.Da / p.Pr) * norms["gradlap_psi_sq"] + norms["grad_theta_sq"] \
        + p.alpha * norms["grad_phi_sq"]


def _trapz_with_err(ts: np.ndarray, fs: np.ndarray) -> tuple[float, float]:
    """Trapezoid integral plus an error estimate from second differences:
    per-interval error ~ h^3 |f''|/12 with f'' ~ second difference / h^2."""
    if len(ts) < 2:
        return 0.0, 0.0
    integral = float(np.trapezoid(fs, ts))
    h = np.diff(ts)
    if len(ts) == 2:
        return integral, 0.25 * float(abs(fs[1] - fs[0]) * h[0])
    d2 = np.abs(np.diff(fs, 2))          # ~ h^2 |f''| at interior points
    d2 = np.concatenate([d2[:1], d2, d2[-1:]])   # reuse neighbors at edges
    err = float(np.sum(h * 0.5 * (d2[:-1] + d2[1:])) / 12.0)
    return integral, err


# -- individual certificates -------------------------------------------------

def check_decay(rec: TrajectoryRecord, init: TrajectoryRecord,
                k: CertificateConstants) -> tuple[bool, float]:
    """||theta(t)||^2 + ||phi(t)||^2 <= M8 e^{-M7 (t - t_init)} (initial).
    Slack is (rhs - lhs)/rhs; compared in log space against underflow."""
    S = rec.theta_sq + rec.phi_sq
    S0 = init.theta_sq + init.phi_sq
    if S == 0.0:
        return True, 1.0
    if S0 == 0.0:
        return False, -math.inf
    log_rhs = math.log(k.M8) - k.M7 * (rec.t - init.t) + math.log(S0)
    log_lhs = math.log(S)
    ok = log_lhs <= log_rhs + math.log1p(_REL_TOL)
    slack = 1.0 - math.exp(min(log_lhs - log_rhs, 700.0))
    return ok, slack


def check_dissipation_integral(recs: list, k: CertificateConstants
                               ) -> tuple[bool, float]:
    """int_0^t (||grad theta||^2 + ||grad phi||^2) <= M9 (initial), checked
    cumulatively with the quadrature error credited to the bound side.

    The integrand is convex once the fast modes dominate, so trapezoid
    overestimates it and a FAIL on a coarse sample cadence is conservative:
    rough initial data whose gradient norm collapses inside one sampling
    interval can fail here even though the exact integral is within bound.
    """
    ts = np.array([r.t for r in recs])
    fs = np.array([r.grad_theta_sq + r.grad_phi_sq for r in recs])
    integral, qerr = _trapz_with_err(ts, fs)
    bound = k.M9 * (recs[0].theta_sq + recs[0].phi_sq)
    rhs = bound + qerr
    ok = integral <= rhs * (1 + _REL_TOL) or integral == rhs == 0.0
    slack = 1.0 if rhs == 0.0 and integral == 0.0 else (rhs - integral) / max(rhs, 1e-300)
    return ok, slack


def check_psi_absorbing(rec: TrajectoryRecord, rec_anchor: TrajectoryRecord,
                        k: CertificateConstants, p: Params
                        ) -> tuple[bool, float, bool]:
    """Full-Gronwall form: ||lap psi(t)||^2 <= e^{-2Pr (t-ta)/Da}
    ||lap psi(ta)||^2 + (1 - e^{...}) Ra^2 rho0^2 / (4C), anchored at the
    first sample past t0.  The third return is the transient-free form the
    asymptotic statement uses."""
    decay = math.exp(-2.0 * p.Pr * (rec.t - rec_anchor.t) / p.Da)
    ball = p.Ra ** 2 * k.rho0_sq / (4.0 * p.C)
    rhs = decay * rec_anchor.lap_psi_sq + (1.0 - decay) * ball
    lhs = rec.lap_psi_sq
    if rhs == 0.0:
        return (lhs == 0.0, 1.0 if lhs == 0.0 else -math.inf, lhs <= 0.0)
    ok = lhs <= rhs * (1 + _REL_TOL)
    ball_ok = lhs <= ball * (1 + _REL_TOL) if ball > 0 else lhs == 0.0
    return ok, (rhs - lhs) / rhs, ball_ok


def check_h1_absorbing(window: list, k: CertificateConstants, p: Params
                       ) -> tuple[bool, float]:
    """Uniform-Gronwall bound over a window [t - r, t] of records:
    y(t) <= (a3/r + a2) e^{a1} with y the H1-level energy,
    a1 = int M10, a2 = (lam^2 + gamma^2 lam^2) rho_R^2 r / 2, a3 = int y.
    Compared in log space; quadrature error enlarges the bound side."""
    ts = np.array([r.t for r in window])
    ys = np.array([r.E_half for r in window])
    m10 = k.M10_const + k.M10_lap_coef * np.array([r.lap_psi_sq for r in window])
    r_eff = float(ts[-1] - ts[0])
    a1, e1 = _trapz_with_err(ts, m10)
    a3, e3 = _trapz_with_err(ts, ys)
    a2 = (p.lam ** 2 + p.gamma ** 2 * p.lam ** 2) * k.rho_R_sq * r_eff / 2.0
    y_t = float(ys[-1])
    if y_t == 0.0:
        return True, math.inf
    base = (a3 + e3) / r_eff + a2
    if base <= 0.0:
        return False, -math.inf
    log_rhs = math.log(base) + (a1 + e1)
    slack = log_rhs - math.log(y_t)
    return slack >= -math.log1p(_REL_TOL), slack


def check_energy_balance(s_prev: State, s_next: State, dt: float, p: Params
                         ) -> tuple[bool, float]:
    """Residual of the discrete energy identity across one integrator step,
    |(E_Y(next) - E_Y(prev))/(2 dt) - R(mid)| with R the closed-form
    dissipation functional; O(dt^2) by the midpoint pairing.  The flag is
    the dissipation inequality 2 R(mid) <= -M1 E_half(mid) + M2 E_Y(mid)
    evaluated algebraically at the midpoint state."""
    dom = s_prev.dom
    mid = State(
        psi=_avg(s_prev.psi, s_next.psi),
        theta=_avg(s_prev.theta, s_next.theta),
        phi=_avg(s_prev.phi, s_next.phi),
        t=0.5 * (s_prev.t + s_next.t))
    R = energy_identity_rhs(mid, p)
    n_prev, n_next = state_norms(s_prev), state_norms(s_next)
    dE = energy_y(n_next, p) - energy_y(n_prev, p)
    resid = abs(dE / (2.0 * dt) - R)
    n_mid = state_norms(mid)
    ey, eh = energy_y(n_mid, p), energy_half(n_mid, p)
    lam, gam, al = p.lam, p.gamma, p.alpha
    M1 = 2.0 * min(p.Pr * p.C / (2 * p.Da), 1.0, 1.0 / al)
    M2 = 2.0 * max(1.0, p.Ra ** 2 / (2 * p.C) + lam * gam / 4.0, lam / (4 * al))
    bound = -M1 * eh + M2 * ey
    scale = max(abs(2.0 * R), M1 * eh, M2 * ey, 1e-300)
    ok = 2.0 * R <= bound + _REL_TOL * scale
    return ok, resid


def _avg(u, v):
    return SpectralField(0.5 * (u.coeffs + v.coeffs), u.dom)


def check_tail_regularity(s: State, k: int, cutoff: int, threshold: float
                          ) -> tuple[bool, float]:
    """Largest tail fraction over the three fields against the threshold."""
    frac = max(tail_fraction(s.psi, k, cutoff),
               tail_fraction(s.theta, k, cutoff),
               tail_fraction(s.phi, k, cutoff))
    return frac <= threshold, frac


def check_continuous_dependence(trajA, trajB, k: CertificateConstants,
                                p: Params) -> tuple[bool, float]:
    """Uniqueness envelope for two runs of the same configuration:
    D(t) <= D(0) exp(int_0^t alpha(tau) dtau) with
    D = (Da/Pr)||grad psi-diff||^2 + ||theta-diff||^2 + alpha ||phi-diff||^2,
    alpha(tau) = max(M_so^2 ||grad theta_A||^2 Pr/Da, (Ra^2 + gamma lam)/4,
    lam/(4 alpha)).  Log-space; returns the worst slack over all samples."""
    if len(trajA.times) != len(trajB.times) or any(
            abs(ta - tb) > 1e-12 * max(1.0, abs(ta))
            for ta, tb in zip(trajA.times, trajB.times)):
        raise ValueError("trajectories have different sample grids")
    ts = np.array(trajA.times)
    Ds = np.empty(len(ts))
    alphas = np.empty(len(ts))
    for i, (sa, sb) in enumerate(zip(trajA.states, trajB.states)):
        diff = state_norms(State(
            psi=_diff(sa.psi, sb.psi), theta=_diff(sa.theta, sb.theta),
            phi=_diff(sa.phi, sb.phi), t=sa.t))
        Ds[i] = (p.Da / p.Pr) * diff["grad_psi_sq"] + diff["theta_sq"] \
            + p.alpha * diff["phi_sq"]
        na = state_norms(sa)
        alphas[i] = max(k.M_so ** 2 * na["grad_theta_sq"] * p.Pr / p.Da,
                        (p.Ra ** 2 + p.gamma * p.lam) / 4.0,
                        p.lam / (4.0 * p.alpha))
    D0 = Ds[0]
    if D0 == 0.0:
        ok = bool(np.all(Ds == 0.0))
        return ok, math.inf if ok else -math.inf
    worst = math.inf
    for i in range(len(ts)):
        if Ds[i] == 0.0:
            continue
        integral, qerr = _trapz_with_err(ts[:i + 1], alphas[:i + 1])
        slack = math.log(D0) + integral + qerr - math.log(Ds[i])
        worst = min(worst, slack)
    return worst >= -math.log1p(_REL_TOL), worst


def _diff(u, v):
    return SpectralField(u.coeffs - v.coeffs, u.dom)


def measured_decay_rate(times, values, t_lo: float = 1.0, t_hi: float = 5.0
                        ) -> float:
    """Exponential rate of `values` fitted by log-linear regression over
    [t_lo, t_hi]; NaN when the window has fewer than two positive samples."""
    ts = np.asarray(times, dtype=float)
    vs = np.asarray(values, dtype=float)
    keep = (ts >= t_lo) & (ts <= t_hi) & (vs > 0.0)
    if np.count_nonzero(keep) < 2:
        return math.nan
    slope = np.polyfit(ts[keep], np.log(vs[keep]), 1)[0]
    return float(-slope)


# -- per-run evaluation ------------------------------------------------------

class CertificateSuite:
    """Stateful per-run evaluator handed to the integrator as `monitors`.

    Keeps the running accumulators the window/integral certificates need and
    produces one TrajectoryRecord per sample.  Re-running it over the same
    trajectory reproduces all flags bit-identically (pure functions of the
    sampled data).
    """

    CHECK_NAMES = ("decay", "diss", "psi_absorb", "h1_absorb", "ebal", "tail")

    def __init__(self, p: Params, dom: Domain, cfg: CertificateConfig,
                 s0: State, config_hash: str = "",
                 checks: dict | None = None):
        self.p, self.dom, self.cfg = p, dom, cfg
        self.config_hash = config_hash
        self.checks = {name: True for name in self.CHECK_NAMES}
        if checks:
            unknown = set(checks) - set(self.CHECK_NAMES)
            if unknown:
                raise ValueError(f"unknown certificate toggles: {sorted(unknown)}")
            self.checks.update({k: bool(v) for k, v in checks.items()})
        n0 = state_norms(s0)
        self.k = compute_constants(
            p, dom, cfg, rho0_sq=n0["theta_sq"] + n0["phi_sq"],
            lap_psi0_sq=n0["lap_psi_sq"])
        self.cutoff = cfg.tail_cutoff
        if self.cutoff is None:
            self.cutoff = max(1, min(dom.Nx, dom.Nz) // 2)
        if not 1 <= self.cutoff < min(dom.Nx, dom.Nz):
            raise ValueError(f"tail cutoff {self.cutoff} out of range")
        self.init_rec: TrajectoryRecord | None = None
        self.anchor_rec: TrajectoryRecord | None = None
        self._recs: list[TrajectoryRecord] = []
        self._window: list[TrajectoryRecord] = []

    def on_sample(self, t: float, s: State, s_pre: State | None,
                  dt: float) -> TrajectoryRecord:
        p, k, cfg = self.p, self.k, self.cfg
        n = state_norms(s)
        rec = TrajectoryRecord(
            t=t, lap_psi_sq=n["lap_psi_sq"], theta_sq=n["theta_sq"],
            phi_sq=n["phi_sq"], grad_theta_sq=n["grad_theta_sq"],
            grad_phi_sq=n["grad_phi_sq"], gradlap_psi_sq=n["gradlap_psi_sq"],
            E_Y=energy_y(n, p), E_half=energy_half(n, p),
            config_hash=self.config_hash)
        if self.init_rec is None:
            self.init_rec = rec
        if self.checks["decay"]:
            rec.decay_ok, rec.decay_slack = check_decay(rec, self.init_rec, k)
        self._recs.append(rec)
        if self.checks["diss"]:
            rec.diss_ok, rec.diss_slack = \
                check_dissipation_integral(self._recs, k)
        if t >= k.t0 * (1.0 - 1e-12):
            if self.anchor_rec is None:
                self.anchor_rec = rec
            if self.checks["psi_absorb"]:
                rec.psi_absorb_ok, rec.psi_absorb_slack, \
                    rec.psi_absorb_ball_ok = \
                    check_psi_absorbing(rec, self.anchor_rec, k, p)
            self._window.append(rec)
            while len(self._window) > 1 and \
                    self._window[1].t <= t - cfg.r * (1 - 1e-12):
                self._window.pop(0)
            if self.checks["h1_absorb"] and \
                    self._window[0].t <= t - cfg.r * (1 - 1e-12):
                rec.h1_absorb_ok, rec.h1_absorb_slack = \
                    check_h1_absorbing(self._window, k, p)
        if s_pre is not None:
            n_pre = state_norms(s_pre)
            rec.dEY_dt_disc = (rec.E_Y - energy_y(n_pre, p)) / dt
            if self.checks["ebal"]:
                rec.ebal_ineq_ok, rec.ebal_resid = \
                    check_energy_balance(s_pre, s, dt, p)
        if self.checks["tail"] and t >= cfg.tail_warmup:
            rec.tail_ok, rec.tail_frac_k2 = check_tail_regularity(
                s, cfg.tail_k, self.cutoff, cfg.tail_threshold)
        return rec

    def verdict(self) -> dict:
        """Overall pass/fail per certificate over everything sampled so far
        (None = never applicable)."""
        out = {}
        for key in ("decay_ok", "diss_ok", "psi_absorb_ok", "h1_absorb_ok",
                    "ebal_ineq_ok", "tail_ok"):
            vals = [getattr(r, key) for r in self._recs
                    if getattr(r, key) is not None]
            out[key] = None if not vals else all(vals)
        return out

    @property
    def records(self) -> list:
        return self._recs


# -- offline re-certification ------------------------------------------------

def replay_certificates(stored: list, p: Params, dom: Domain,
                        cfg: CertificateConfig, checks: dict | None = None
                        ) -> tuple[list, CertificateConstants]:
    """Re-evaluate the norm-reconstructible certificates (decay, dissipation
    integral, both absorbing bounds) from a stored record stream, mirroring
    the online suite step for step.  State-dependent results (energy balance,
    tail fraction) cannot be recomputed from norms and are carried over
    unchanged.  Returns fresh records plus the constants used."""
    if not stored:
        raise ValueError("empty record stream")
    first = stored[0]
    k = compute_constants(p, dom, cfg,
                          rho0_sq=first.theta_sq + first.phi_sq,
                          lap_psi0_sq=first.lap_psi_sq)
    en = {name: True for name in CertificateSuite.CHECK_NAMES}
    if checks:
        en.update({kk: bool(v) for kk, v in checks.items()})
    out: list[TrajectoryRecord] = []
    anchor = None
    window: list[TrajectoryRecord] = []
    for r0 in stored:
        rec = TrajectoryRecord.from_json_dict(r0.to_json_dict())
        rec.decay_ok = rec.decay_slack = None
        rec.diss_ok = rec.diss_slack = None
        rec.psi_absorb_ok = rec.psi_absorb_slack = None
        rec.psi_absorb_ball_ok = None
        rec.h1_absorb_ok = rec.h1_absorb_slack = None
        if en["decay"]:
            rec.decay_ok, rec.decay_slack = \
                check_decay(rec, out[0] if out else rec, k)
        out.append(rec)
        if en["diss"]:
            rec.diss_ok, rec.diss_slack = check_dissipation_integral(out, k)
        if rec.t >= k.t0 * (1.0 - 1e-12):
            if anchor is None:
                anchor = rec
            if en["psi_absorb"]:
                rec.psi_absorb_ok, rec.psi_absorb_slack, \
                    rec.psi_absorb_ball_ok = \
                    check_psi_absorbing(rec, anchor, k, p)
            window.append(rec)
            while len(window) > 1 and \
                    window[1].t <= rec.t - cfg.r * (1 - 1e-12):
                window.pop(0)
            if en["h1_absorb"] and window[0].t <= rec.t - cfg.r * (1 - 1e-12):
                rec.h1_absorb_ok, rec.h1_absorb_slack = \
                    check_h1_absorbing(window, k, p)
        if not en["ebal"]:
            rec.ebal_ineq_ok = None
        if not en["tail"]:
            rec.tail_ok = None
    return out, k


_CERT_ROWS = (
    ("decay", "||th||^2 + ||ph||^2 <= M8 e^{-M7 t} (initial)",
     "decay_ok", "decay_slack"),
    ("diss", "int ||grad th||^2 + ||grad ph||^2 <= M9 rho0^2",
     "diss_ok", "diss_slack"),
    ("psi_absorb", "||lap psi||^2 <= Gronwall envelope -> Ra^2 rho0^2 / 4C",
     "psi_absorb_ok", "psi_absorb_slack"),
    ("h1_absorb", "E_half <= (a3/r + a2) e^{a1}  (log-space slack)",
     "h1_absorb_ok", "h1_absorb_slack"),
    ("ebal", "2 R(mid) <= -M1 E_half + M2 E_Y  (+ identity residual)",
     "ebal_ineq_ok", None),
    ("tail", "max field tail fraction <= threshold",
     "tail_ok", "tail_frac_k2"),
)


def summarize_records(recs: list) -> list[dict]:
    """Per-certificate roll-up over a record stream: counts, worst sample,
    and, where slack determines them, the two sides of the inequality at the
    worst sample.  Slack conventions per certificate:
    decay/psi_absorb: (rhs - lhs)/rhs, so rhs = lhs / (1 - slack);
    h1_absorb: log(rhs) - log(lhs); tail: the fraction itself (rhs is the
    threshold); ebal rolls up the max identity residual instead."""
    rows = []
    for name, ineq, ok_field, slack_field in _CERT_ROWS:
        hits = [r for r in recs if getattr(r, ok_field) is not None]
        row = {"name": name, "inequality": ineq, "checked": len(hits),
               "passed": sum(bool(getattr(r, ok_field)) for r in hits),
               "ok": all(getattr(r, ok_field) for r in hits) if hits else None,
               "worst_t": None, "worst_slack": None, "lhs": None, "rhs": None}
        if name == "ebal":
            resids = [(r.ebal_resid, r.t) for r in recs
                      if r.ebal_resid is not None]
            if resids:
                row["worst_slack"], row["worst_t"] = max(resids)
        elif hits:
            if name == "tail":
                worst = max(hits, key=lambda r: r.tail_frac_k2)
                row["lhs"], row["rhs"] = worst.tail_frac_k2, None
                row["worst_slack"] = worst.tail_frac_k2
            else:
                worst = min(hits, key=lambda r: getattr(r, slack_field))
                sl = getattr(worst, slack_field)
                row["worst_slack"] = sl
                if name == "decay":
                    lhs = worst.theta_sq + worst.phi_sq
                    row["lhs"] = lhs
                    if sl < 1.0:
                        row["rhs"] = lhs / (1.0 - sl)
                elif name == "psi_absorb":
                    row["lhs"] = worst.lap_psi_sq
                    if sl < 1.0:
                        row["rhs"] = worst.lap_psi_sq / (1.0 - sl)
                elif name == "h1_absorb":
                    row["lhs"] = worst.E_half
                    if worst.E_half > 0 and sl < 700:
                        row["rhs"] = worst.E_half * math.exp(sl)
            row["worst_t"] = worst.t
        rows.append(row)
    return rows
