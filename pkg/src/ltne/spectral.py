"""Sine-basis fields on (0, a) x (0, 1): transforms, derivatives, norms.

Every scalar field is u(x, z) = sum_{m=1..Nx, n=1..Nz} u_mn sin(m pi x / a)
sin(n pi z), which vanishes on the boundary by construction.  Coefficients are
stored as an (Nx, Nz) array with u_mn at [m-1, n-1]; flattened views are
row-major (m outer).

Conventions and the two exactness facts everything else leans on:

* Parseval with plain (non-normalized) sine products: ||u||^2 = (a/4) sum u_mn^2,
  and each Laplacian application multiplies mode (m, n) by
  mu_mn = -((m pi / a)^2 + (n pi)^2), so the H^k-level seminorms are
  (a/4) sum |mu|^k u_mn^2.

* Collocation uses the Mx x Mz interior grid x_j = j a / Px (Px = Mx + 1),
  z_k = k / Pz.  The discrete orthogonality
  sum_{j=1}^{P-1} sin(pi m j / P) sin(pi m' j / P) = (P/2) delta_mm'
  holds for 1 <= m, m' <= P - 1, so analysis of any function that *is* a sine
  polynomial of band <= P - 1 recovers its coefficients exactly.  Quadratic
  products of retained modes have band <= 2N, hence with M >= 2N + 1 interior
  points the pseudo-spectral Jacobian below is the exact Galerkin projection
  (no aliasing, and the skew-symmetry identity holds to roundoff).

A cosine series (an x-derivative) sampled on this grid is *not* recovered
exactly by sine analysis; the exact projection of d/dx lives in
`dx_projection_matrix` instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .params import Domain


@dataclass(frozen=True)
class SpectralField:
    """Sine coefficients of one scalar field."""

    coeffs: np.ndarray
    dom: Domain

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.dom.Nx, self.dom.Nz):
            raise ValueError(
                f"coefficient shape {c.shape} does not match domain "
                f"({self.dom.Nx}, {self.dom.Nz})")
        if not np.isfinite(c).all():
            raise ValueError("non-finite coefficient")
        object.__setattr__(self, "coeffs", c)

    @staticmethod
    def zero(dom: Domain) -> "SpectralField":
        return SpectralField(np.zeros((dom.Nx, dom.Nz)), dom)


@dataclass(frozen=True)
class GridField:
    """Values on the interior collocation grid."""

    values: np.ndarray
    dom: Domain

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.dom.Mx, self.dom.Mz):
            raise ValueError(
                f"grid shape {v.shape} does not match domain "
                f"({self.dom.Mx}, {self.dom.Mz})")
        object.__setattr__(self, "values", v)


def laplacian_eigenvalue(m: int, n: int, a: float) -> float:
    """mu_mn = -((m pi / a)^2 + (n pi)^2) for the (m, n) sine mode."""
    if m < 1 or n < 1 or a <= 0:
        raise ValueError("need m, n >= 1 and a > 0")
    return -((m * np.pi / a) ** 2 + (n * np.pi) ** 2)


@lru_cache(maxsize=None)
def _plan(dom: Domain) -> dict:
    """Precomputed matrices for one Domain: synthesis/analysis, derivative
    evaluation, eigenvalue grids, quadrature weight."""
    a, Nx, Nz, Mx, Mz = dom.a, dom.Nx, dom.Nz, dom.Mx, dom.Mz
    Px, Pz = Mx + 1, Mz + 1
    jx = np.arange(1, Mx + 1)
    jz = np.arange(1, Mz + 1)
    mm = np.arange(1, Nx + 1)
    nn = np.arange(1, Nz + 1)
    # Sx[j-1, m-1] = sin(pi m j / Px); synthesis is Sx @ C @ Sz.T
    Sx = np.sin(np.pi * np.outer(jx, mm) / Px)
    Sz = np.sin(np.pi * np.outer(jz, nn) / Pz)
    kx = mm * np.pi / a
    kz = nn * np.pi
    # cosine evaluation with the derivative factor folded in
    Cx = np.cos(np.pi * np.outer(jx, mm) / Px) * kx
    Cz = np.cos(np.pi * np.outer(jz, nn) / Pz) * kz
    mu = -(kx[:, None] ** 2 + kz[None, :] ** 2)
    # exact L2 sine projection of d/dx: target m', source m, nonzero for
    # m + m' odd with coefficient 4 m m' / (a (m'^2 - m^2))
    mp = mm[:, None]
    ms = mm[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        D = 4.0 * ms * mp / (a * (mp ** 2 - ms ** 2))
    D[(mp + ms) % 2 == 0] = 0.0
    return {
        "Sx": Sx, "Sz": Sz, "Cx": Cx, "Cz": Cz,
        "analysis_scale": 4.0 / (Px * Pz),
        "mu": mu, "absmu": -mu, "Dx": D,
        "weight": (a / Px) * (1.0 / Pz),
        "x": jx * a / Px, "z": jz / Pz,
    }


def dx_projection_matrix(dom: Domain) -> np.ndarray:
    """(Nx, Nx) matrix of the exact sine-basis projection of d/dx.

    Acting on the m-index of a coefficient array: (D @ c)[m'-1, :] are the
    coefficients of the projection of du/dx.  Antisymmetric up to the m m'
    weighting; couples only modes of opposite parity.
    """
    return _plan(dom)["Dx"]


def grid_points(dom: Domain) -> tuple[np.ndarray, np.ndarray]:
    """Interior collocation nodes (x_j, z_k)."""
    p = _plan(dom)
    return p["x"], p["z"]


def quadrature_weight(dom: Domain) -> float:
    """Weight per interior node; sum w * f(x_j, z_k) integrates sine
    polynomials of band <= (Mx, Mz) exactly."""
    return _plan(dom)["weight"]


def eigenvalue_grid(dom: Domain) -> np.ndarray:
    """(Nx, Nz) array of mu_mn."""
    return _plan(dom)["mu"]


def _check_same_domain(u: SpectralField, v: SpectralField):
    if u.dom != v.dom:
        raise ValueError("fields live on different domains")


def to_grid(u: SpectralField) -> GridField:
    p = _plan(u.dom)
    return GridField(p["Sx"] @ u.coeffs @ p["Sz"].T, u.dom)


def to_spectral(v: GridField) -> SpectralField:
    p = _plan(v.dom)
    c = p["analysis_scale"] * (p["Sx"].T @ v.values @ p["Sz"])
    return SpectralField(c, v.dom)


def derivative_x(u: SpectralField) -> GridField:
    """du/dx on the grid (a cosine series in x; exact pointwise)."""
    p = _plan(u.dom)
    return GridField(p["Cx"] @ u.coeffs @ p["Sz"].T, u.dom)


def derivative_z(u: SpectralField) -> GridField:
    """du/dz on the grid (a cosine series in z; exact pointwise)."""
    p = _plan(u.dom)
    return GridField(p["Sx"] @ u.coeffs @ p["Cz"].T, u.dom)


def jacobian(psi: SpectralField, theta: SpectralField) -> SpectralField:
    """Galerkin projection of J(psi, theta) = psi_x theta_z - psi_z theta_x.

    Each product is odd x odd in both directions, i.e. a sine polynomial of
    band <= 2N, so with the Domain invariant M >= 2N + 1 the grid analysis
    returns the exact projection onto the retained modes.
    """
    _check_same_domain(psi, theta)
    return to_spectral(GridField(_jacobian_values(psi.coeffs, theta.coeffs,
                                                  psi.dom), psi.dom))


def _jacobian_values(cpsi: np.ndarray, cth: np.ndarray, dom: Domain) -> np.ndarray:
    p = _plan(dom)
    psi_x = p["Cx"] @ cpsi @ p["Sz"].T
    psi_z = p["Sx"] @ cpsi @ p["Cz"].T
    th_x = p["Cx"] @ cth @ p["Sz"].T
    th_z = p["Sx"] @ cth @ p["Cz"].T
    return psi_x * th_z - psi_z * th_x


def _jacobian_coeffs(cpsi: np.ndarray, cth: np.ndarray, dom: Domain) -> np.ndarray:
    p = _plan(dom)
    return p["analysis_scale"] * (
        p["Sx"].T @ _jacobian_values(cpsi, cth, dom) @ p["Sz"])


def _sumsq(c: np.ndarray, w: np.ndarray | None = None) -> float:
    return float(np.sum(c * c if w is None else w * c * c))


def norm_l2(u: SpectralField) -> float:
    """||u|| with ||u||^2 = (a/4) sum u_mn^2."""
    return np.sqrt(u.dom.a / 4.0 * _sumsq(u.coeffs))


def norm_grad(u: SpectralField) -> float:
    p = _plan(u.dom)
    return np.sqrt(u.dom.a / 4.0 * _sumsq(u.coeffs, p["absmu"]))


def norm_lap(u: SpectralField) -> float:
    p = _plan(u.dom)
    return np.sqrt(u.dom.a / 4.0 * _sumsq(u.coeffs, p["absmu"] ** 2))


def norm_gradlap(u: SpectralField) -> float:
    p = _plan(u.dom)
    return np.sqrt(u.dom.a / 4.0 * _sumsq(u.coeffs, p["absmu"] ** 3))


def norm_hk(u: SpectralField, k: int) -> float:
    """Spectral H^k seminorm: ((a/4) sum |mu|^k u_mn^2)^(1/2); k = 0, 1, 2, 3
    reproduce the four named norms."""
    if k < 0:
        raise ValueError("k must be >= 0")
    p = _plan(u.dom)
    return np.sqrt(u.dom.a / 4.0 * _sumsq(u.coeffs, p["absmu"] ** k))


def inner_l2(u: SpectralField, v: SpectralField) -> float:
    """<u, v> = (a/4) sum u_mn v_mn."""
    _check_same_domain(u, v)
    return float(u.dom.a / 4.0 * np.sum(u.coeffs * v.coeffs))


def velocity_from_stream(psi: SpectralField) -> tuple[GridField, GridField]:
    """(v1, v2) = (-psi_z, psi_x) on the grid; divergence-free by construction."""
    vz = derivative_z(psi)
    vx = derivative_x(psi)
    return GridField(-vz.values, psi.dom), vx


def tail_fraction(u: SpectralField, k: int, cutoff: int) -> float:
    """Share of the |mu|^k-weighted energy in modes with m > cutoff or
    n > cutoff; 0 for the zero field."""
    dom = u.dom
    if not 1 <= cutoff < min(dom.Nx, dom.Nz):
        raise ValueError("need 1 <= cutoff < min(Nx, Nz)")
    p = _plan(dom)
    w = p["absmu"] ** k
    total = _sumsq(u.coeffs, w)
    if total == 0.0:
        return 0.0
    head = _sumsq(u.coeffs[:cutoff, :cutoff], w[:cutoff, :cutoff])
    return (total - head) / total


# -- snapshot files ----------------------------------------------------------
#
# Plain text: a header line `LTNE-SNAP v1 Nx Nz a t`, then for each of the
# three fields a `FIELD psi|theta|phi` marker followed by Nx*Nz lines
# `m n value` in row-major order.  %.17g keeps float64 round trips exact.

SNAP_MAGIC = "LTNE-SNAP"
_FIELD_ORDER = ("psi", "theta", "phi")


def write_snapshot(path, psi: SpectralField, theta: SpectralField,
                   phi: SpectralField, t: float):
    _check_same_domain(psi, theta)
    _check_same_domain(psi, phi)
    dom = psi.dom
    lines = [f"{SNAP_MAGIC} v1 {dom.Nx} {dom.Nz} {dom.a:.17g} {t:.17g}"]
    for name, f in zip(_FIELD_ORDER, (psi, theta, phi)):
        lines.append(f"FIELD {name}")
        for i in range(dom.Nx):
            for j in range(dom.Nz):
                lines.append(f"{i + 1} {j + 1} {f.coeffs[i, j]:.17g}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot(path, Mx: int = 0, Mz: int = 0):
    """Returns (psi, theta, phi, t).  Collocation sizes are not stored in the
    file; pass Mx/Mz to override the defaults for the restored Domain."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines:
        raise ValueError(f"{path}: empty snapshot file")
    head = lines[0].split()
    try:
        if len(head) != 6 or head[0] != SNAP_MAGIC or head[1] != "v1":
            raise ValueError
        Nx, Nz = int(head[2]), int(head[3])
        a, t = float(head[4]), float(head[5])
    except ValueError:
        raise ValueError(
            f"{path}: not a v1 snapshot (header {lines[0]!r})") from None
    dom = Domain(a=a, Nx=Nx, Nz=Nz, Mx=Mx, Mz=Mz)
    fields = {}
    pos = 1
    for name in _FIELD_ORDER:
        if pos >= len(lines) or lines[pos] != f"FIELD {name}":
            raise ValueError(f"{path}:{pos + 1}: expected 'FIELD {name}'")
        pos += 1
        c = np.zeros((Nx, Nz))
        for i in range(Nx):
            for j in range(Nz):
                if pos >= len(lines):
                    raise ValueError(f"{path}: truncated in field {name}")
                parts = lines[pos].split()
                try:
                    if len(parts) != 3 or int(parts[0]) != i + 1 \
                            or int(parts[1]) != j + 1:
                        raise ValueError
                    c[i, j] = float(parts[2])
                except ValueError:
                    raise ValueError(
                        f"{path}:{pos + 1}: expected coefficient "
                        f"({i + 1}, {j + 1})") from None
                pos += 1
        fields[name] = SpectralField(c, dom)
    return fields["psi"], fields["theta"], fields["phi"], t
