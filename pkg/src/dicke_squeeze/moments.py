"""Linearized second-moment dynamics for the y-z two-axis scheme.

Kubo factorization of third-order correlations closes the master equation on
X = (<Sy^2>, <Sz^2>, <{Sy,Sz}>/2):

    dX/dt = A X + M,
    A = [[-(c+2/T2),      c,        sqrt2 chi N],
         [      c,      -5c,        sqrt2 chi N],
         [sqrt2 chi N/2, sqrt2 chi N/2, -(4c+1/T2)]],
    M = (N/2T2, cN(N+2), 0),    X(0) = (N/4, N/4, 0),

with c = Gamma_gamma (n_th + 1/2). The squeezing parameter uses the large-N
polarization assumption |<S>|^2 = N^2/4 (the module's validity boundary).

The weak-noise closed form keeps only the sqrt2 chi N coupling:

    <Sy^2 - Sz^2> = -P t,
    <Sy^2 + Sz^2> = 2A+ e^{x} + 2A- e^{-x},        x = sqrt2 N chi t,
    C_yz          = A+ (e^{x}-1) - A- (e^{-x}-1),

whose stationary point gives the analytic optimum

    Theta = ln[1 - (2 chi A- + sqrt2/(2T2)) / (2 chi A+)]   (< 0 here),
    t_min = |Theta| / (sqrt2 N chi),
    xi2_min = M_factor * [sqrt2 c/chi + (1/N)(2 sqrt2 c - sqrt2/(2T2))/chi],

and, as N -> infinity, the dissipative floor

    xi2_lb = eps/(2-eps) [1 + (1-eps)/eps^2
                          - sqrt(ln^2 eps + (1-eps)^2/eps^4)],
    eps = 4c / (sqrt2 chi + 2c).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .dynamics import Trajectory, _trajectory_from_records
from .errors import DomainError, RegimeWarning, SchemeError
from .params import DerivedParams, Scheme

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class MomentSystem:
    """Closed linear system dX/dt = AX + M for the y-z two-axis scheme."""

    A: np.ndarray   # 3x3
    M: np.ndarray   # 3-vector
    X0: np.ndarray  # 3-vector, CSS initial condition
    chi: float
    c: float
    T2: float
    N: int


def build_moment_system(params: DerivedParams, N: int | None = None) -> MomentSystem:
    """Assemble (A, M, X0); only the y-z two-axis scheme is supported."""
    if params.scheme is not Scheme.TAT_YZ:
        raise SchemeError(
            f"moment system is derived for the y-z two-axis scheme, "
            f"got {params.scheme.value}"
        )
    N = params.N if N is None else int(N)
    chi, c, T2 = params.chi, params.c, params.T2
    inv_t2 = 0.0 if math.isinf(T2) else 1.0 / T2
    k = SQRT2 * chi * N
    A = np.array(
        [
            [-(c + 2.0 * inv_t2), c, k],
            [c, -5.0 * c, k],
            [0.5 * k, 0.5 * k, -(4.0 * c + inv_t2)],
        ]
    )
    M = np.array([0.5 * N * inv_t2, c * N * (N + 2.0), 0.0])
    X0 = np.array([N / 4.0, N / 4.0, 0.0])
    return MomentSystem(A=A, M=M, X0=X0, chi=chi, c=c, T2=T2, N=N)


def _records_from_X(sys: MomentSystem, X: np.ndarray):
    """Trajectory records under the frozen-polarization assumption."""
    N = sys.N
    records = []
    for row in X:
        mean = np.array([N / 2.0, 0.0, 0.0])
        m2 = np.array(
            [
                [N * N / 4.0, 0.0, 0.0],
                [0.0, row[0], row[2]],
                [0.0, row[2], row[1]],
            ]
        )
        records.append((mean, m2, 1.0, math.nan))
    return records


def solve_moments(sys: MomentSystem, t_grid) -> Trajectory:
    """Exact solution X(t) = e^{At} X0 + int_0^t e^{As} M ds via the
    augmented propagator exp([[A, M], [0, 0]] t), which remains valid for
    singular A (it evaluates the series for the inhomogeneous term)."""
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise DomainError("t_grid must be a non-empty 1-D array")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    aug = np.zeros((4, 4))
    aug[:3, :3] = sys.A
    aug[:3, 3] = sys.M
    y0 = np.append(sys.X0, 1.0)
    X = np.empty((t.size, 3))
    for k, tk in enumerate(t):
        X[k] = (expm(aug * tk) @ y0)[:3]
    return _trajectory_from_records(
        sys.N, t, _records_from_X(sys, X), "cumulant"
    )


def closed_form_moments(sys: MomentSystem, t_grid) -> Trajectory:
    """Weak-noise closed form (drops the diagonal decay against sqrt2 chi N).

    Compared against solve_moments, never substituted for it.
    """
    t = np.asarray(t_grid, dtype=float)
    ap, am, p = _plus_minus_coefficients(sys)
    x = SQRT2 * sys.N * sys.chi * t
    u = 2.0 * ap * np.exp(x) + 2.0 * am * np.exp(-x)
    v = -p * t
    w = ap * (np.exp(x) - 1.0) - am * (np.exp(-x) - 1.0)
    X = np.column_stack([(u + v) / 2.0, (u - v) / 2.0, w])
    return _trajectory_from_records(
        sys.N, t, _records_from_X(sys, X), "cumulant-asymptotic"
    )


def _plus_minus_coefficients(sys: MomentSystem):
    chi, c, T2, N = sys.chi, sys.c, sys.T2, sys.N
    inv_t2 = 0.0 if math.isinf(T2) else 1.0 / T2
    gain = SQRT2 * c / chi
    offset = SQRT2 * (c + 0.25 * inv_t2) / (4.0 * chi)
    a_plus = N * (1.0 + gain) / 8.0 + offset
    a_minus = N * (1.0 - gain) / 8.0 - offset
    p = N * (c * N + 2.0 * c - 0.5 * inv_t2)
    return a_plus, a_minus, p


# --------------------------------------------------------------------------
# Analytic optimum and asymptotic bound
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AnalyticOptimum:
    """Weak-noise optimum of the y-z two-axis squeezing parameter."""

    N: int
    t_min: float
    xi2_min: float
    Theta: float        # signed log; negative in the physical regime
    M_factor: float
    A_plus: float
    A_minus: float
    P: float


def analytic_optimum(params: DerivedParams, N: int | None = None) -> AnalyticOptimum:
    """Closed-form (t_min, xi2_min) in the N >> N chi t >> 1 regime."""
    sys = build_moment_system(params, N)
    N = sys.N
    if N < 20:
        warnings.warn(
            f"analytic optimum derived for large N, got N={N}",
            RegimeWarning,
            stacklevel=2,
        )
    chi, c, T2 = sys.chi, sys.c, sys.T2
    inv_t2 = 0.0 if math.isinf(T2) else 1.0 / T2
    a_plus, a_minus, p = _plus_minus_coefficients(sys)
    arg = 1.0 - (2.0 * chi * a_minus + SQRT2 * 0.5 * inv_t2) / (2.0 * chi * a_plus)
    if arg <= 0.0:
        raise DomainError(
            f"optimum log argument {arg:.3e} <= 0; outside the weak-noise regime"
        )
    theta = math.log(arg)
    # theta < 0 here; the printed t_min formula carries a sign slip, the
    # positive root is the physical one (theta -> ln eps < 1 at large N)
    t_min = -theta / (SQRT2 * N * chi)
    ratio = a_minus / a_plus
    e_th = math.exp(theta)
    m_factor = (
        1.0
        + ratio / (e_th * e_th)
        - math.sqrt(
            theta * theta
            + (1.0 - 1.0 / e_th) ** 2 * (1.0 + ratio / e_th) ** 2
        )
    )
    prefactor = SQRT2 * c / chi + (2.0 * SQRT2 * c - SQRT2 * 0.5 * inv_t2) / (
        N * chi
    )
    return AnalyticOptimum(
        N=N,
        t_min=t_min,
        xi2_min=m_factor * prefactor,
        Theta=theta,
        M_factor=m_factor,
        A_plus=a_plus,
        A_minus=a_minus,
        P=p,
    )


def bound_from_epsilon(eps: float) -> float:
    """Dissipative squeezing floor as a function of eps = 4c/(sqrt2 chi + 2c).

    eps = 0 returns 0 by continuous extension (the ideal-dynamics limit).
    """
    if eps < 0.0 or eps >= 2.0:
        raise DomainError(f"eps must lie in [0, 2), got {eps}")
    if eps == 0.0:
        return 0.0
    # bracket = 1 + Y - sqrt(L^2 + Y^2), Y = (1-eps)/eps^2, L = ln eps;
    # rewritten as 1 - L^2/(hypot(L, Y) + Y) to survive eps -> 0, where the
    # direct form cancels catastrophically (bound ~ eps/2 there)
    y = (1.0 - eps) / eps**2
    el = math.log(eps)
    if el == 0.0:
        return 1.0
    bracket = 1.0 - el * el / (math.hypot(el, y) + y)
    return eps / (2.0 - eps) * bracket


def asymptotic_bound(params: DerivedParams) -> float:
    """Large-N floor of the minimal squeezing parameter for these rates."""
    return bound_from_epsilon(params.eps)
