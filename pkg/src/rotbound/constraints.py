"""Constructive access to the doubly constrained set {M(f)=m, L(f)=l}.

Two-mode seed states solve the 2x2 linear system
    M(f1) + M(f2) = m,   n1 M(f1) + n2 M(f2) = l
in closed form; `retract` sends a nearby field back onto the constraint set,
and `tangent_project` removes the components along both constraint gradients.

The retraction acts per angular mode (only mode amplitudes change, radial
shapes are preserved). The primary path reweights mode n by s*(1 + beta*n),
solving a scalar quadratic for beta on exact grid quantities; when the target
mass/momentum ratio is too far for that family, an exponential tilt
exp((a + b*n)/2) in mode-mass space provides a positivity-preserving jump,
followed by the quadratic polish.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import Grid, WaveField, _apply_lz
from .functionals import Constraints, mass
from .modes import AngularModes, from_modes, to_modes


class MassSplitNegative(ValueError):
    """The closed-form two-mode mass split has a non-positive component."""


class ConstraintInfeasible(RuntimeError):
    """The mode-mass profile cannot be reweighted to the requested (m, l)."""


class NewtonDiverged(RuntimeError):
    """The tilt solve did not reach tolerance within the iteration budget."""


class _RatioUnreachable(Exception):
    """Internal: quadratic reweighting cannot reach the target ratio."""


# -- mode-mass profiles and feasibility -----------------------------------------

@dataclass
class ModeMassProfile:
    """Nonnegative mass per angular index; M and L are linear in these."""

    mu: dict

    @property
    def total(self) -> float:
        return sum(self.mu.values())

    @property
    def first_moment(self) -> float:
        return sum(n * v for n, v in self.mu.items())

    def support(self, rel_tol: float = 1e-12) -> list:
        thresh = rel_tol * max(self.total, 1e-300)
        return sorted(n for n, v in self.mu.items() if v > thresh)

    @classmethod
    def from_field(cls, f: WaveField, n_max: int = 8) -> "ModeMassProfile":
        return cls(to_modes(f, n_max).mode_masses())


@dataclass
class Feasibility:
    feasible: bool
    reason: str | None = None


def _matches_mode(c: Constraints, n: int) -> bool:
    return abs(c.l - n * c.m) <= 1e-12 * max(1.0, abs(c.l), abs(n * c.m))


def feasibility(profile: ModeMassProfile, c: Constraints) -> Feasibility:
    """Nonnegative reweighting of the occupied modes can reach (m, l) iff the
    ratio l/m lies in the convex hull of the occupied angular indices, with
    hull endpoints reachable only by exact single-mode match."""
    support = profile.support()
    if not support:
        return Feasibility(False, "empty mode-mass profile")
    if any(_matches_mode(c, n) for n in support):
        return Feasibility(True)
    ratio = c.l / c.m
    lo, hi = support[0], support[-1]
    if ratio < lo:
        return Feasibility(False, f"target l/m = {ratio:.6g} below lowest occupied mode {lo}")
    if ratio > hi:
        return Feasibility(False, f"target l/m = {ratio:.6g} above highest occupied mode {hi}")
    if ratio == lo or ratio == hi:
        return Feasibility(False, f"target l/m = {ratio:.6g} sits on the support boundary")
    return Feasibility(True)


# -- seed construction -----------------------------------------------------------

def mass_split(c: Constraints, n1: int, n2: int):
    """Closed-form masses solving M1 + M2 = m, n1 M1 + n2 M2 = l."""
    if n1 == n2:
        raise ValueError("mode indices must differ")
    m1 = (c.m * n2 - c.l) / (n2 - n1)
    m2 = (c.l - c.m * n1) / (n2 - n1)
    if m1 <= 0 or m2 <= 0:
        raise MassSplitNegative(
            f"mode pair ({n1}, {n2}) gives masses ({m1:.6g}, {m2:.6g}) for "
            f"(m, l) = ({c.m:.6g}, {c.l:.6g})"
        )
    return m1, m2


def _mode_shape(grid: Grid, n: int, envelope=None) -> np.ndarray:
    r = np.sqrt(grid.rsq)
    env = np.exp(-grid.rsq / 2.0) if envelope is None else envelope(r)
    return env * r ** abs(n) * np.exp(1j * n * grid.theta)


def single_mode_seed(grid: Grid, mass_target: float, n: int, envelope=None) -> WaveField:
    """Normalized field env(r) * r^|n| * exp(i n theta) carrying the given mass."""
    if mass_target <= 0:
        raise MassSplitNegative(f"requested mode mass {mass_target:.6g} is not positive")
    f = WaveField(grid, _mode_shape(grid, n, envelope))
    return (math.sqrt(mass_target / mass(f))) * f


def two_mode_seed(grid: Grid, c: Constraints, n1: int, n2: int, envelope=None) -> WaveField:
    """Seed in the constraint set built from two angular modes (Gaussian envelope)."""
    m1, m2 = mass_split(c, n1, n2)
    return single_mode_seed(grid, m1, n1, envelope) + single_mode_seed(grid, m2, n2, envelope)


# -- tangent projection ----------------------------------------------------------

def _tangent_project_values(grid, gv, fv, afv):
    """Remove the real-span{f, Lz f} components of g (Gram-Schmidt, rank-safe)."""
    sp2 = grid.spacing**2
    nf2 = sp2 * np.vdot(fv, fv).real
    if nf2 <= 0:
        raise ValueError("cannot project against the zero field")
    q1 = fv / math.sqrt(nf2)
    out = gv - (sp2 * np.vdot(q1, gv).real) * q1
    v = afv - (sp2 * np.vdot(q1, afv).real) * q1
    nv2 = sp2 * np.vdot(v, v).real
    if nv2 > 0:
        q2 = v / math.sqrt(nv2)
        out = out - (sp2 * np.vdot(q2, out).real) * q2
    return out


def tangent_project(g: WaveField, f: WaveField) -> WaveField:
    """Project g to be L2-orthogonal (real inner product) to f and L_z f."""
    afv = _apply_lz(f.grid, f.values)
    return WaveField(f.grid, _tangent_project_values(f.grid, g.values, f.values, afv))


# -- retraction ------------------------------------------------------------------

def _beta_root(a: float, b: float, c: float) -> float:
    """Smallest-magnitude root of a x^2 + 2 b x + c = 0, numerically stable."""
    big = max(abs(a), abs(b), abs(c))
    if big < 1e-12:
        return 0.0
    if abs(a) < 1e-13 * big and abs(b) < 1e-13 * big:
        raise _RatioUnreachable()
    if abs(a) < 1e-13 * big:
        return -c / (2.0 * b)
    disc = b * b - a * c
    if disc < -1e-12 * (b * b + abs(a * c)):
        raise _RatioUnreachable()
    sq = math.sqrt(max(disc, 0.0))
    q = -(b + sq) if b >= 0 else -(b - sq)
    r1 = q / a
    r2 = c / q if q != 0 else math.inf
    return r2 if abs(r2) < abs(r1) else r1


def _retract_values(grid, hv, c: Constraints, ahv=None):
    """Exact-on-grid retraction g = s (h + beta * Lz h); raises _RatioUnreachable."""
    sp2 = grid.spacing**2
    if ahv is None:
        ahv = _apply_lz(grid, hv)
    m0 = sp2 * np.vdot(hv, hv).real
    if m0 <= 0:
        raise ValueError("cannot retract the zero field")
    l0 = sp2 * np.vdot(hv, ahv).real
    q0 = sp2 * np.vdot(ahv, ahv).real
    aahv = _apply_lz(grid, ahv)
    c0 = sp2 * np.vdot(ahv, aahv).real
    sc = c.m * m0
    qa = (c.m * c0 - c.l * q0) / sc
    qb = (c.m * q0 - c.l * l0) / sc
    qc = (c.m * l0 - c.l * m0) / sc
    # qc is the relative ratio violation; below this floor a rescale suffices
    beta = 0.0 if abs(qc) < 5e-11 else _beta_root(qa, qb, qc)
    gv = hv if beta == 0.0 else hv + beta * ahv
    mg = sp2 * np.vdot(gv, gv).real
    if not mg > 1e-12 * m0:
        raise _RatioUnreachable()  # root annihilates the field
    return math.sqrt(c.m / mg) * gv


def solve_tilt(mu: dict, m: float, l: float, tol: float = 1e-12, max_iters: int = 100):
    """Solve sum mu_n e^(a + b n) = m, sum n mu_n e^(a + b n) = l for (a, b).

    The ratio map b -> sum n mu e^(bn) / sum mu e^(bn) is strictly increasing
    on profiles with at least two occupied modes, so a safeguarded Newton on b
    converges for any target ratio strictly inside the support hull.
    """
    occupied = sorted((n, v) for n, v in mu.items() if v > 0)
    if not occupied:
        raise ConstraintInfeasible("empty mode-mass profile")
    ns = np.array([n for n, _ in occupied], dtype=float)
    mus = np.array([v for _, v in occupied], dtype=float)
    ratio_target = l / m

    def _ratio(b):
        w = b * ns
        w -= w.max()  # log-sum-exp shift
        e = mus * np.exp(w)
        return float((ns * e).sum() / e.sum())

    if len(occupied) == 1:
        n0 = occupied[0][0]
        if abs(l - n0 * m) > 1e-12 * max(1.0, abs(l), abs(n0 * m)):
            raise ConstraintInfeasible(
                f"single occupied mode {n0} cannot reach l/m = {ratio_target:.6g}"
            )
        b = 0.0
    else:
        lo_n, hi_n = ns[0], ns[-1]
        if not lo_n < ratio_target < hi_n:
            exact = [n for n in ns if abs(l - n * m) <= 1e-12 * max(1.0, abs(l), abs(n * m))]
            if not exact:
                raise ConstraintInfeasible(
                    f"target ratio {ratio_target:.6g} outside occupied hull [{lo_n:g}, {hi_n:g}]"
                )
            raise ConstraintInfeasible(
                "target ratio on the support boundary; collapse to the matching mode instead"
            )
        # expand a bracket around b = 0
        if _ratio(0.0) < ratio_target:
            blo, bhi = 0.0, 1.0
            while _ratio(bhi) < ratio_target:
                bhi *= 2.0
                if bhi > 1e4:
                    raise NewtonDiverged("tilt bracket expansion failed upward")
        else:
            blo, bhi = -1.0, 0.0
            while _ratio(blo) > ratio_target:
                blo *= 2.0
                if blo < -1e4:
                    raise NewtonDiverged("tilt bracket expansion failed downward")
        b = 0.5 * (blo + bhi)
        converged = False
        for _ in range(max_iters):
            w = b * ns
            w -= w.max()
            e = mus * np.exp(w)
            tot = e.sum()
            r = float((ns * e).sum() / tot)
            resid = r - ratio_target
            if abs(resid) <= tol * max(1.0, abs(ratio_target)):
                converged = True
                break
            if resid < 0:
                blo = b
            else:
                bhi = b
            var = float((ns * ns * e).sum() / tot) - r * r  # d ratio / d b
            b_new = b - resid / var if var > 0 else None
            if b_new is None or not blo < b_new < bhi:
                b_new = 0.5 * (blo + bhi)  # damped fallback keeps the bracket
            b = b_new
        if not converged:
            raise NewtonDiverged(
                f"tilt Newton stalled at ratio residual {resid:.3e} after {max_iters} iterations"
            )
    w = b * ns
    shift = w.max()
    log_total = shift + math.log(float((mus * np.exp(w - shift)).sum()))
    a = math.log(m) - log_total
    return a, b


def retract(f: WaveField, c: Constraints, n_max: int = 8) -> WaveField:
    """Return the nearest-in-family field satisfying M = m, L = l on the grid.

    Idempotent up to roundoff, preserves each mode's normalized radial shape,
    and reduces to plain mass rescaling when the momentum constraint is
    already met.
    """
    grid = f.grid
    try:
        return WaveField(grid, _retract_values(grid, f.values, c))
    except _RatioUnreachable:
        pass
    modes = to_modes(f, n_max)
    mu = modes.mode_masses()
    profile = ModeMassProfile(mu)
    feas = feasibility(profile, c)
    if not feas.feasible:
        raise ConstraintInfeasible(feas.reason)
    match = [n for n in profile.support() if _matches_mode(c, n)]
    ratio = c.l / c.m
    support = profile.support()
    if match and not support[0] < ratio < support[-1]:
        # boundary target: collapse onto the matching mode
        n0 = match[0]
        lone = AngularModes(modes.n_max, modes.radii, modes.weights, {n0: modes.coeffs[n0]})
        g = from_modes(lone, grid)
        gv = math.sqrt(c.m / mass(g)) * g.values
        return WaveField(grid, _retract_values(grid, gv, c))
    a, b = solve_tilt(mu, c.m, c.l)
    out = f.values.copy()
    for n in modes.coeffs:
        w = math.exp((a + b * n) / 2.0)
        if w == 1.0 or mu.get(n, 0.0) == 0.0:
            continue
        lone = AngularModes(modes.n_max, modes.radii, modes.weights, {n: modes.coeffs[n]})
        out += (w - 1.0) * from_modes(lone, grid).values
    try:
        return WaveField(grid, _retract_values(grid, out, c))
    except _RatioUnreachable as exc:
        raise NewtonDiverged("tilt landed outside the quadratic polish basin") from exc
