"""Right-hand side of the spectral ODE system, its linear part, residuals.

Per mode (m, n) with mu the Laplacian eigenvalue, the evolved system is

    d psi_mn /dt = (Pr/Da) [ (C mu - 1) psi_mn + Ra (D theta)_mn / mu ]
    d theta_mn/dt = mu theta_mn + lam (phi_mn - theta_mn) - P(J(psi, theta))_mn
    d phi_mn  /dt = ( mu phi_mn + gamma lam (theta_mn - phi_mn) ) / alpha

where D is the exact sine projection of d/dx and the 1/mu factor applies the
inverse Laplacian after the curl.  The linear part is block-triangular: the
theta-phi pair feeds psi through the Ra coupling, nothing feeds back, so its
spectrum is the union of the per-mode spectra (2x2 blocks and psi multipliers).
With `conduction_coupling` on, a +D psi source enters the theta equation and
that triangular structure is lost.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import Domain, Params
from .spectral import (SpectralField, _jacobian_coeffs, _plan, inner_l2,
                       norm_l2)


@dataclass(frozen=True)
class State:
    psi: SpectralField
    theta: SpectralField
    phi: SpectralField
    t: float = 0.0

    def __post_init__(self):
        if not (self.psi.dom == self.theta.dom == self.phi.dom):
            raise ValueError("state fields live on different domains")
        for name in ("psi", "theta", "phi"):
            if not np.all(np.isfinite(getattr(self, name).coeffs)):
                raise ValueError(f"non-finite coefficients in {name}")

    @property
    def dom(self) -> Domain:
        return self.psi.dom

    @staticmethod
    def zero(dom: Domain, t: float = 0.0) -> "State":
        z = SpectralField.zero(dom)
        return State(z, z, z, t)


@dataclass(frozen=True)
class Tangent:
    dpsi: SpectralField
    dtheta: SpectralField
    dphi: SpectralField


def _check(p: Params, dom: Domain):
    if p.a != dom.a:
        raise ValueError(f"aspect mismatch: Params a={p.a}, Domain a={dom.a}")


def _rhs_arrays(cpsi: np.ndarray, cth: np.ndarray, cph: np.ndarray,
                p: Params, dom: Domain, include_jacobian: bool = True):
    plan = _plan(dom)
    mu, D = plan["mu"], plan["Dx"]
    dpsi = (p.Pr / p.Da) * ((p.C * mu - 1.0) * cpsi + p.Ra * (D @ cth) / mu)
    dth = mu * cth + p.lam * (cph - cth)
    if include_jacobian:
        dth = dth - _jacobian_coeffs(cpsi, cth, dom)
    if p.conduction_coupling:
        dth = dth + D @ cpsi
    dph = (mu * cph + p.gamma * p.lam * (cth - cph)) / p.alpha
    return dpsi, dth, dph


def rhs(s: State, p: Params, include_jacobian: bool = True) -> Tangent:
    """Time derivative of a state.  `include_jacobian=False` drops the
    nonlinearity, leaving exactly the assembled linear operator's action."""
    _check(p, s.dom)
    dpsi, dth, dph = _rhs_arrays(s.psi.coeffs, s.theta.coeffs, s.phi.coeffs,
                                 p, s.dom, include_jacobian)
    dom = s.dom
    return Tangent(SpectralField(dpsi, dom), SpectralField(dth, dom),
                   SpectralField(dph, dom))


@dataclass(frozen=True)
class LinearOperator:
    """Linear part of the system for one (Params, Domain) pair.

    lpsi: per-mode psi multipliers (Pr/Da)(C mu - 1), all negative.
    b11..b22: entries of the per-mode theta-phi blocks
    [[mu - lam, lam], [gamma lam / alpha, (mu - gamma lam)/alpha]]
    (b12, b21 are mode-independent scalars).
    coupling: Ra (Pr/Da) / mu times the d/dx projection, theta -> psi.
    conduction: the optional D map theta-equation source from psi.
    """

    dom: Domain
    p: Params
    lpsi: np.ndarray
    b11: np.ndarray
    b12: float
    b21: float
    b22: np.ndarray
    coupling_scale: np.ndarray   # Ra*(Pr/Da)/mu, applied after D
    has_conduction: bool

    def apply(self, s: State) -> Tangent:
        D = _plan(self.dom)["Dx"]
        cpsi, cth, cph = s.psi.coeffs, s.theta.coeffs, s.phi.coeffs
        dpsi = self.lpsi * cpsi + self.coupling_scale * (D @ cth)
        dth = self.b11 * cth + self.b12 * cph
        if self.has_conduction:
            dth = dth + D @ cpsi
        dph = self.b21 * cth + self.b22 * cph
        return Tangent(SpectralField(dpsi, self.dom),
                       SpectralField(dth, self.dom),
                       SpectralField(dph, self.dom))

    def block_eigenvalues(self) -> np.ndarray:
        """(Nx, Nz, 2) complex eigenvalues of the theta-phi blocks."""
        tr = self.b11 + self.b22
        det = self.b11 * self.b22 - self.b12 * self.b21
        disc = (tr / 2.0) ** 2 - det
        root = np.sqrt(disc.astype(complex))
        return np.stack([tr / 2.0 + root, tr / 2.0 - root], axis=-1)

    def dense(self) -> np.ndarray:
        """Dense (3K, 3K) assembly, K = Nx*Nz, ordering [psi; theta; phi],
        each block flattened row-major.  For small-N spectrum checks."""
        dom = self.dom
        K = dom.Nx * dom.Nz
        D = _plan(dom)["Dx"]
        A = np.zeros((3 * K, 3 * K))
        A[:K, :K] = np.diag(self.lpsi.ravel())
        # theta -> psi: (coupling_scale * (D @ th)) is dense in m, diagonal in n
        cs = self.coupling_scale
        for n in range(dom.Nz):
            idx = n + dom.Nz * np.arange(dom.Nx)
            A[np.ix_(idx, K + idx)] = cs[:, n][:, None] * D
        A[K:2 * K, K:2 * K] = np.diag(self.b11.ravel())
        A[K:2 * K, 2 * K:] = self.b12 * np.eye(K)
        if self.has_conduction:
            for n in range(dom.Nz):
                idx = n + dom.Nz * np.arange(dom.Nx)
                A[np.ix_(K + idx, idx)] = D
        A[2 * K:, K:2 * K] = self.b21 * np.eye(K)
        A[2 * K:, 2 * K:] = np.diag(self.b22.ravel())
        return A


def assemble_linear(p: Params, dom: Domain) -> LinearOperator:
    _check(p, dom)
    mu = _plan(dom)["mu"]
    return LinearOperator(
        dom=dom, p=p,
        lpsi=(p.Pr / p.Da) * (p.C * mu - 1.0),
        b11=mu - p.lam,
        b12=p.lam,
        b21=p.gamma * p.lam / p.alpha,
        b22=(mu - p.gamma * p.lam) / p.alpha,
        coupling_scale=p.Ra * (p.Pr / p.Da) / mu,
        has_conduction=p.conduction_coupling,
    )


_DENSE_ABSCISSA_CAP = 256


def spectral_abscissa(L: LinearOperator) -> float:
    """Largest real part over the operator's spectrum.

    Without conduction coupling the operator is block-triangular, so this is
    max over modes of max(Re eig(2x2 block), lpsi).  With conduction on the
    triangular structure is gone and a dense eigensolve is used, which is only
    allowed at small truncations.
    """
    if L.has_conduction:
        K = L.dom.Nx * L.dom.Nz
        if K > _DENSE_ABSCISSA_CAP:
            raise ValueError(
                "spectral_abscissa with conduction_coupling needs a dense "
                f"eigensolve; refusing at Nx*Nz = {K} > {_DENSE_ABSCISSA_CAP}")
        return float(np.max(np.linalg.eigvals(L.dense()).real))
    eigs = L.block_eigenvalues()
    return float(max(np.max(eigs.real), np.max(L.lpsi)))


def weak_residual(s_prev: State, s_next: State, dt: float, p: Params) -> float:
    """Norm of the mass-weighted midpoint defect between two consecutive
    states: M ((s_next - s_prev)/dt - rhs(s_mid)) with M = diag(Da/Pr, 1,
    alpha) on (psi, theta, phi).  O(dt^2) along smooth trajectories of the
    second-order integrator; O(1) for mismatched inputs."""
    if dt <= 0:
        raise ValueError("dt must be > 0")
    _check(p, s_prev.dom)
    if s_prev.dom != s_next.dom:
        raise ValueError("states live on different domains")
    dom = s_prev.dom
    mid = [(s_prev.psi.coeffs + s_next.psi.coeffs) / 2.0,
           (s_prev.theta.coeffs + s_next.theta.coeffs) / 2.0,
           (s_prev.phi.coeffs + s_next.phi.coeffs) / 2.0]
    f = _rhs_arrays(mid[0], mid[1], mid[2], p, dom)
    masses = (p.Da / p.Pr, 1.0, p.alpha)
    prev = (s_prev.psi.coeffs, s_prev.theta.coeffs, s_prev.phi.coeffs)
    nxt = (s_next.psi.coeffs, s_next.theta.coeffs, s_next.phi.coeffs)
    total = 0.0
    for w, cp, cn, df in zip(masses, prev, nxt, f):
        r = w * ((cn - cp) / dt - df)
        total += norm_l2(SpectralField(r, dom)) ** 2
    return float(np.sqrt(total))


def energy_pairing(s: State, p: Params) -> float:
    """(1/2) d/dt of E_Y = (Da/Pr)||lap psi||^2 + ||theta||^2 + alpha ||phi||^2
    evaluated through the rhs: (Da/Pr)<lap dpsi, lap psi> + <dtheta, theta>
    + alpha <dphi, phi>."""
    _check(p, s.dom)
    mu = _plan(s.dom)["mu"]
    dpsi, dth, dph = _rhs_arrays(s.psi.coeffs, s.theta.coeffs, s.phi.coeffs,
                                 p, s.dom)
    a4 = s.dom.a / 4.0
    return float(
        (p.Da / p.Pr) * a4 * np.sum(mu * dpsi * mu * s.psi.coeffs)
        + a4 * np.sum(dth * s.theta.coeffs)
        + p.alpha * a4 * np.sum(dph * s.phi.coeffs))


def energy_identity_rhs(s: State, p: Params) -> float:
    """Closed-form value the pairing must equal: -C||grad lap psi||^2
    - ||lap psi||^2 - ||grad theta||^2 - ||grad phi||^2 - lam||theta||^2
    - gamma lam||phi||^2 - Ra <theta, d(lap psi)/dx>
    + (lam + gamma lam)<phi, theta> (plus the conduction source term when
    that switch is on).  The Jacobian contributes nothing by skew-symmetry."""
    _check(p, s.dom)
    plan = _plan(s.dom)
    mu, absmu, D = plan["mu"], plan["absmu"], plan["Dx"]
    a4 = s.dom.a / 4.0
    cpsi, cth, cph = s.psi.coeffs, s.theta.coeffs, s.phi.coeffs
    gradlap_sq = a4 * np.sum(absmu ** 3 * cpsi ** 2)
    lap_sq = a4 * np.sum(absmu ** 2 * cpsi ** 2)
    gth_sq = a4 * np.sum(absmu * cth ** 2)
    gph_sq = a4 * np.sum(absmu * cph ** 2)
    th_sq = a4 * np.sum(cth ** 2)
    ph_sq = a4 * np.sum(cph ** 2)
    cross = a4 * np.sum(cth * (D @ (mu * cpsi)))   # <theta, d(lap psi)/dx>
    thph = a4 * np.sum(cth * cph)
    out = (-p.C * gradlap_sq - lap_sq - gth_sq - gph_sq
           - p.lam * th_sq - p.gamma * p.lam * ph_sq
           - p.Ra * cross + (p.lam + p.gamma * p.lam) * thph)
    if p.conduction_coupling:
        out += a4 * np.sum((D @ cpsi) * cth)
    return float(out)
