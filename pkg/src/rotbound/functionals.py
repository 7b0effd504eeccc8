"""Physical functionals and the stationary-equation machinery.

Energy convention: E(u) = int (1/2)|grad u|^2 + V|u|^2 + lam/(sigma+1) |u|^(2 sigma + 2)
with V(x) = |x|^k, and the rotating-frame energy E_Omega = E - Omega * L.

The first variation is dE(u)[h] = 2 Re<h, EL(u)> with
EL(u) = -(1/2) Lap u + V u + lam |u|^(2 sigma) u, so a constrained critical
point satisfies EL(u) = omega u + Omega L_z u for real multipliers
(omega, Omega); that equation also yields the scalar identity
E + lam*sigma/(sigma+1) * ||u||_{2s+2}^{2s+2} = omega*m + Omega*l, which
`identity_check` measures.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fields import (
    WaveField,
    _apply_lz,
    _kinetic,
    _laplacian,
    inner_product,
)


@dataclass(frozen=True)
class PhysicsParams:
    """Nonlinearity coupling `lam`, power `sigma`, potential exponent `k`."""

    lam: float = 1.0
    sigma: float = 1.0
    k: float = 4.0
    dim: int = 2

    def __post_init__(self):
        if self.dim != 2:
            raise ValueError("only dim=2 is supported")
        if not self.k > 2:
            raise ValueError(
                f"potential exponent k must exceed 2 for super-quadratic confinement, got {self.k}"
            )
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.lam < 0 and not self.sigma < 1:
            raise ValueError(
                "lam <= 0 requires sigma < 1 in two dimensions; "
                f"got lam={self.lam}, sigma={self.sigma}"
            )
        if self.lam > 0 and self.sigma > 4:
            raise ValueError(f"sigma capped at 4 for numerical sanity, got {self.sigma}")


@dataclass(frozen=True)
class Constraints:
    """Targets for the two conserved quantities: mass m and angular momentum l."""

    m: float
    l: float = 0.0

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"mass target must be positive, got {self.m}")


@dataclass
class Multipliers:
    omega: float
    Omega: float
    degenerate: bool = False


# -- basic functionals ---------------------------------------------------------

def mass(f: WaveField) -> float:
    return float(f.grid.spacing**2 * np.sum(np.abs(f.values) ** 2))


def interaction_norm(f: WaveField, sigma: float) -> float:
    """||f||_{2 sigma + 2}^{2 sigma + 2} by grid quadrature."""
    dens = np.abs(f.values) ** 2
    if sigma == 1.0:
        integrand = dens * dens
    else:
        integrand = dens ** (sigma + 1.0)
    return float(f.grid.spacing**2 * np.sum(integrand))


def energy(f: WaveField, p: PhysicsParams) -> float:
    g = f.grid
    kin = _kinetic(g, f.values)
    pot = float(g.spacing**2 * np.sum(g.potential(p.k) * np.abs(f.values) ** 2))
    nl = p.lam / (p.sigma + 1.0) * interaction_norm(f, p.sigma) if p.lam else 0.0
    return kin + pot + nl


def angular_momentum(f: WaveField) -> float:
    """Mean angular momentum <f, L_z f>; the imaginary part must vanish."""
    val = inner_product(f, WaveField(f.grid, _apply_lz(f.grid, f.values)))
    m = mass(f)
    if abs(val.imag) > 1e-10 * max(m, 1e-300):
        raise ValueError(
            f"angular momentum has spurious imaginary part {val.imag:.3e} "
            "(field is broken or boundary-contaminated)"
        )
    return val.real


def rotating_energy(f: WaveField, p: PhysicsParams, Omega: float) -> float:
    return energy(f, p) - Omega * angular_momentum(f)


# -- stationary equation -------------------------------------------------------

def _el_values(grid, v: np.ndarray, p: PhysicsParams) -> np.ndarray:
    out = -0.5 * _laplacian(grid, v) + grid.potential(p.k) * v
    if p.lam:
        dens = np.abs(v) ** 2
        if p.sigma != 1.0:
            dens = dens**p.sigma
        out += p.lam * dens * v
    return out


def euler_lagrange_apply(f: WaveField, p: PhysicsParams) -> WaveField:
    """-(1/2) Lap f + V f + lam |f|^(2 sigma) f; half the real L2 gradient of E."""
    return WaveField(f.grid, _el_values(f.grid, f.values, p))


def _gram_system(grid, fv, afv, rv, spacing_sq):
    g11 = spacing_sq * np.vdot(fv, fv).real
    g12 = spacing_sq * np.vdot(fv, afv).real
    g22 = spacing_sq * np.vdot(afv, afv).real
    b1 = spacing_sq * np.vdot(fv, rv).real
    b2 = spacing_sq * np.vdot(afv, rv).real
    return np.array([[g11, g12], [g12, g22]]), np.array([b1, b2])


def multipliers_estimate(f: WaveField, p: PhysicsParams) -> Multipliers:
    """Least-squares fit of EL(f) against span{f, L_z f}.

    Returns the minimal-norm solution with degenerate=True when the 2x2 Gram
    matrix is rank-deficient (radial fields, pure L_z eigenmodes): only the
    combination omega + n*Omega is then identifiable.
    """
    if mass(f) <= 0:
        raise ValueError("cannot estimate multipliers for the zero field")
    g = f.grid
    fv = f.values
    afv = _apply_lz(g, fv)
    rv = _el_values(g, fv, p)
    G, b = _gram_system(g, fv, afv, rv, g.spacing**2)
    evals, evecs = np.linalg.eigh(G)
    cutoff = 1e-10 * evals[-1]
    keep = evals > cutoff
    degenerate = not bool(keep.all())
    inv = np.where(keep, 1.0 / np.where(keep, evals, 1.0), 0.0)
    omega, Omega = evecs @ (inv * (evecs.T @ b))
    return Multipliers(omega=float(omega), Omega=float(Omega), degenerate=degenerate)


def stationary_residual(f: WaveField, p: PhysicsParams, mu: Multipliers) -> float:
    """||EL(f) - omega f - Omega L_z f|| / max(1, ||f||)."""
    g = f.grid
    fv = f.values
    rv = _el_values(g, fv, p) - mu.omega * fv - mu.Omega * _apply_lz(g, fv)
    rnorm = g.spacing * np.linalg.norm(rv)
    fnorm = g.spacing * np.linalg.norm(fv)
    return float(rnorm / max(1.0, fnorm))


def identity_check(f: WaveField, p: PhysicsParams, c: Constraints, mu: Multipliers) -> float:
    """Relative gap in E + lam*sigma/(sigma+1)*||f||_{2s+2}^{2s+2} = omega*m + Omega*l."""
    e = energy(f, p)
    lhs = e + p.lam * p.sigma / (p.sigma + 1.0) * interaction_norm(f, p.sigma)
    rhs = mu.omega * c.m + mu.Omega * c.l
    return float(abs(lhs - rhs) / max(1.0, abs(e)))
