"""Squeezing metrology: Ramsey squeezing parameter, Husimi field, minima.

The squeezing parameter follows the Ramsey convention

    xi^2 = N * min_perp Var(S_perp) / |<S>|^2,

where the minimum runs over directions perpendicular to the mean spin. It is
computed as the smaller eigenvalue of the 2x2 covariance block in that plane,
which makes it invariant under global rotations. For a mean spin along +x it
reduces to the closed form

    min Var = ( <Sy^2+Sz^2> - sqrt(<Sy^2-Sz^2>^2 + <{Sy,Sz}>^2) ) / 2.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dicke import polar_rotation_amplitudes
from .errors import BoundaryWarning, DegenerateSpinError, DomainError

# Mean spin lengths below DEGENERATE_RTOL*N leave the squeezing direction
# undefined.
DEGENERATE_RTOL = 1e-12


def xi2_to_db(xi2: float) -> float:
    """10 log10(xi^2); negative means squeezed."""
    if xi2 <= 0:
        raise DomainError(f"xi^2 must be positive, got {xi2}")
    return 10.0 * math.log10(xi2)


@dataclass(frozen=True)
class SqueezingRecord:
    """Squeezing parameter with the covariance data that produced it."""

    N: int
    mean_spin: np.ndarray              # <(Sx, Sy, Sz)>
    second_moments: np.ndarray         # 3x3, [k,l] = <{S_k,S_l}>/2
    var_perp_min: float                # minimal perpendicular variance
    var_perp_max: float                # maximal perpendicular variance
    optimal_quadrature_angle: float    # rad, in the (e1, e2) plane basis
    direction_min: np.ndarray          # unit vector of the squeezed quadrature
    xi2: float

    @property
    def xi2_dB(self) -> float:
        return xi2_to_db(self.xi2)

    @property
    def anisotropy(self) -> float:
        """var_max/var_min of the perpendicular plane; ~1 for coherent states."""
        return self.var_perp_max / self.var_perp_min


def _perp_basis(n: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic orthonormal pair spanning the plane perpendicular to n."""
    zxn = np.array([-n[1], n[0], 0.0])
    norm = np.linalg.norm(zxn)
    if norm < 1e-12:
        e1 = np.array([1.0, 0.0, 0.0])
    else:
        e1 = zxn / norm
    e2 = np.cross(n, e1)
    return e1, e2


def squeezing_parameter(
    mean_spin: np.ndarray, second_moments: np.ndarray, N: int
) -> SqueezingRecord:
    """Ramsey squeezing parameter from first and symmetrized second moments.

    mean_spin: length-3 vector <S_k>. second_moments: 3x3 matrix of
    <{S_k,S_l}>/2 (about the origin, not the mean). N: number of spins.
    Raises DegenerateSpinError when |<S>| <= 1e-12 N.
    """
    mean_spin = np.asarray(mean_spin, dtype=float)
    m2 = np.asarray(second_moments, dtype=float)
    if mean_spin.shape != (3,) or m2.shape != (3, 3):
        raise DomainError("moment bundle must be a length-3 vector and 3x3 matrix")
    length = float(np.linalg.norm(mean_spin))
    if length <= DEGENERATE_RTOL * N:
        raise DegenerateSpinError(
            f"|<S>|={length:.3e} vanishes (N={N}); squeezing plane undefined"
        )
    n = mean_spin / length
    e1, e2 = _perp_basis(n)
    # components along e1/e2 have zero mean, so second moments are variances
    c11 = float(e1 @ m2 @ e1)
    c22 = float(e2 @ m2 @ e2)
    c12 = float(e1 @ m2 @ e2)
    half_tr = 0.5 * (c11 + c22)
    disc = math.hypot(0.5 * (c11 - c22), c12)
    var_min = half_tr - disc
    var_max = half_tr + disc
    # eigenvector of the 2x2 problem for the minimal-variance quadrature,
    # folded into (-pi/2, pi/2] for determinism
    angle = 0.5 * math.atan2(2.0 * c12, c11 - c22) + 0.5 * math.pi
    angle = math.remainder(angle, math.pi)
    if angle <= -0.5 * math.pi:
        angle += math.pi
    direction = math.cos(angle) * e1 + math.sin(angle) * e2
    xi2 = N * var_min / (length * length)
    return SqueezingRecord(
        N=N,
        mean_spin=mean_spin,
        second_moments=m2,
        var_perp_min=var_min,
        var_perp_max=var_max,
        optimal_quadrature_angle=angle,
        direction_min=direction,
        xi2=xi2,
    )


# --------------------------------------------------------------------------
# Husimi distribution
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class HusimiField:
    """Q(theta, phi) on a product quadrature grid for one spin-j block.

    ``weight`` is the block's trace; integral_estimate should reproduce it
    (quadrature is exact once n_theta >= 2j+1 and n_phi >= 4j+2).
    """

    j: float
    weight: float
    theta: np.ndarray        # Gauss-Legendre nodes in cos(theta), ascending theta
    phi: np.ndarray          # uniform grid on [0, 2pi)
    theta_weights: np.ndarray
    Q: np.ndarray            # shape (n_theta, n_phi)

    @property
    def integral_estimate(self) -> float:
        dphi = 2.0 * math.pi / self.phi.size
        return float(self.theta_weights @ self.Q.sum(axis=1)) * dphi


def husimi_q(
    rho, j: float | None = None, n_theta: int = 64, n_phi: int = 128
) -> HusimiField:
    """Husimi distribution Q = (2j+1)/(4pi) <theta,phi|rho|theta,phi>.

    rho is a single spin-j block (its trace may be < 1 for a sector of a
    larger mixed state; the integral then matches that weight). A multi-block
    state object is reduced to its maximal-j block, reported with that
    block's trace weight -- a visualization convention for mixed states.
    """
    if n_theta < 16 or n_phi < 16:
        raise DomainError("grid resolution must be at least 16 x 16")
    if hasattr(rho, "blocks") and hasattr(rho, "layout"):
        j = rho.layout.blocks[0].j
        rho = rho.blocks[0]
    elif j is None:
        raise DomainError("j is required when rho is a bare matrix")
    rho = np.asarray(rho, dtype=complex)
    dim = round(2 * j) + 1
    if rho.shape != (dim, dim):
        raise DomainError(f"block shape {rho.shape} does not match j={j}")
    nodes, gl_weights = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(nodes[::-1])
    weights = gl_weights[::-1].copy()
    phi = np.arange(n_phi) * (2.0 * math.pi / n_phi)
    # Q(theta, phi) = sum_d s_d(theta) e^{i d phi} with s_d the d-th
    # off-diagonal sum of (a a^T) * rho; only d >= 0 needed by Hermiticity.
    offsets = np.arange(1, dim)
    phase = np.exp(1j * np.outer(offsets, phi))  # (dim-1, n_phi)
    prefactor = dim / (4.0 * math.pi)
    Q = np.empty((n_theta, n_phi))
    for i, th in enumerate(theta):
        a = polar_rotation_amplitudes(j, th)
        M = (a[:, None] * a[None, :]) * rho
        s0 = np.trace(M).real
        if dim > 1:
            s = np.array([np.trace(M, offset=d) for d in offsets])
            Q[i] = prefactor * (s0 + 2.0 * np.real(s @ phase))
        else:
            Q[i] = prefactor * s0
    weight = float(np.trace(rho).real)
    return HusimiField(
        j=j, weight=weight, theta=theta, phi=phi, theta_weights=weights, Q=Q
    )


# --------------------------------------------------------------------------
# Minimum location
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MinimumResult:
    """Grid minimum with local quadratic refinement."""

    index: int
    t_grid: float
    y_grid: float
    t_min: float
    y_min: float
    on_boundary: bool


def find_minimum(t, y: np.ndarray | None = None) -> MinimumResult:
    """Locate the minimum of y(t) on a grid, refined through 3-point parabola.

    Accepts either (t, y) arrays or a trajectory object exposing ``t`` and
    ``xi2``. NaN entries (degenerate-spin points) are ignored. Emits
    BoundaryWarning (and skips refinement) when the raw minimum sits on the
    first or last grid point or is flanked by NaN.
    """
    if y is None and hasattr(t, "xi2"):
        y = t.xi2
        t = t.t
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if t.ndim != 1 or t.shape != y.shape or t.size < 1:
        raise DomainError("t and y must be equal-length 1-D arrays")
    if not np.isfinite(y).any():
        raise DomainError("no finite values in y")
    i = int(np.nanargmin(y))
    edge = i == 0 or i == t.size - 1
    if not edge and not (np.isfinite(y[i - 1]) and np.isfinite(y[i + 1])):
        edge = True
    if edge:
        warnings.warn(
            f"minimum at grid edge (index {i} of {t.size})",
            BoundaryWarning,
            stacklevel=2,
        )
        return MinimumResult(
            index=i, t_grid=t[i], y_grid=y[i], t_min=t[i], y_min=y[i], on_boundary=True
        )
    t0, t1, t2 = t[i - 1], t[i], t[i + 1]
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    # vertex of the parabola through the bracketing triple (non-uniform safe)
    denom = (t1 - t0) * (y1 - y2) - (t1 - t2) * (y1 - y0)
    if abs(denom) < 1e-300:
        t_ref, y_ref = t1, y1
    else:
        t_ref = t1 - 0.5 * (
            (t1 - t0) ** 2 * (y1 - y2) - (t1 - t2) ** 2 * (y1 - y0)
        ) / denom
        t_ref = min(max(t_ref, t0), t2)
        # evaluate the same parabola at its vertex (Lagrange form)
        l0 = (t_ref - t1) * (t_ref - t2) / ((t0 - t1) * (t0 - t2))
        l1 = (t_ref - t0) * (t_ref - t2) / ((t1 - t0) * (t1 - t2))
        l2 = (t_ref - t0) * (t_ref - t1) / ((t2 - t0) * (t2 - t1))
        y_ref = y0 * l0 + y1 * l1 + y2 * l2
    return MinimumResult(
        index=i, t_grid=t1, y_grid=y1, t_min=t_ref, y_min=y_ref, on_boundary=False
    )
