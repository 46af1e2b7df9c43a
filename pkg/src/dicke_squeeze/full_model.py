"""Truncated cavity-phonon-spin simulator for the linearized tripartite model.

Provides the mean-field steady state of the driven cavity, the dense
linearized Hamiltonian

    H_L = Delta a^dag a + omega_b b^dag b + G (a + a^dag)(b + b^dag)
          + Omega Sz + g (b S+ + b^dag S-),

and a numerical check that its spin dynamics reduces to the effective
twisting model in the dispersive hierarchy G << |Delta - omega_b|,
g << |omega_r - Omega|. Propagation is spectral (dense eigh), exact to
machine precision on the truncated space; Fock-cutoff adequacy is monitored
through the population of the top two levels of each bosonic mode.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.linalg import eigh, expm

from . import dynamics
from .dicke import build_collective_ops, css_state
from .errors import (
    ConfigError,
    ConvergenceError,
    CutoffWarning,
    RegimeError,
    RegimeWarning,
    ResourceError,
)
from .hamiltonian import build_spin_hamiltonian
from .params import RawParams, derive_chain

MAX_TOTAL_DIM = 200_000


@dataclass(frozen=True)
class MeanField:
    """Classical steady state of the driven cavity-phonon pair."""

    alpha: complex
    beta: complex
    residual: float


def _mean_field_residual(raw: RawParams, s_minus: complex, alpha, beta) -> float:
    eq_a = -(1j * raw.Delta_a + raw.kappa_a / 2.0) * alpha \
        - 1j * raw.g0 * alpha * (beta + np.conj(beta)) - 1j * raw.Omega_p
    eq_b = -(1j * raw.omega_b + raw.kappa_b / 2.0) * beta \
        - 1j * raw.g0 * abs(alpha) ** 2 - 1j * raw.g * s_minus
    return math.hypot(abs(eq_a), abs(eq_b))


def mean_field_steady_state(
    raw: RawParams,
    s_minus_expectation: complex = 0.0,
    *,
    damping: float = 0.5,
    max_iter: int = 10_000,
) -> MeanField:
    """Damped fixed-point solve of the steady-state Langevin equations.

    Convergence target: residual < 1e-10 |Omega_p|, or 1e-12 absolute when
    the drive vanishes.
    """
    if raw.kappa_a <= 0.0 and raw.Delta_a == 0.0:
        raise ConfigError(
            "mean-field cavity equation is degenerate: kappa_a = Delta_a = 0"
        )
    if not 0.0 < damping <= 1.0:
        raise ConfigError(f"damping must lie in (0, 1], got {damping}")
    tol = 1e-10 * abs(raw.Omega_p) if raw.Omega_p != 0.0 else 1e-12
    denom_b = 1j * raw.omega_b + raw.kappa_b / 2.0
    alpha = 0.0 + 0.0j
    beta = 0.0 + 0.0j
    residual = _mean_field_residual(raw, s_minus_expectation, alpha, beta)
    for _ in range(max_iter):
        if residual < tol:
            return MeanField(alpha=complex(alpha), beta=complex(beta),
                             residual=residual)
        denom_a = 1j * (raw.Delta_a + raw.g0 * (beta + np.conj(beta))) \
            + raw.kappa_a / 2.0
        new_alpha = -1j * raw.Omega_p / denom_a
        new_beta = -1j * (raw.g0 * abs(alpha) ** 2
                          + raw.g * s_minus_expectation) / denom_b
        alpha = (1.0 - damping) * alpha + damping * new_alpha
        beta = (1.0 - damping) * beta + damping * new_beta
        residual = _mean_field_residual(raw, s_minus_expectation, alpha, beta)
    raise ConvergenceError(
        f"mean-field iteration did not reach residual {tol:.3e} after "
        f"{max_iter} steps (last residual {residual:.3e})"
    )


def with_mean_field_couplings(raw: RawParams, mf: MeanField) -> RawParams:
    """Fill the linearized couplings: G = g0 |alpha|, Delta = Delta_a + 2 g0 Re beta."""
    return replace(
        raw,
        G=raw.g0 * abs(mf.alpha),
        Delta=raw.Delta_a + 2.0 * raw.g0 * mf.beta.real,
        Gamma=None,
        scheme_override=None,
    )


# --------------------------------------------------------------------------
# Truncated tripartite Hamiltonian
# --------------------------------------------------------------------------


def _ladder(n: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1)


@dataclass(frozen=True)
class TruncatedModel:
    """Dense H_L on cavity (n_a) x phonon (n_b) x spin (j = N/2)."""

    n_a: int
    n_b: int
    j: float
    H_L: np.ndarray
    raw: RawParams

    @property
    def dim(self) -> int:
        return self.H_L.shape[0]

    @property
    def spin_dim(self) -> int:
        return int(round(2 * self.j)) + 1


def build_linearized_hamiltonian(
    raw: RawParams,
    N: int | None = None,
    n_a: int = 8,
    n_b: int = 12,
    *,
    max_dim: int = MAX_TOTAL_DIM,
) -> TruncatedModel:
    """Assemble H_L with explicit couplings (Delta, G) from raw."""
    if raw.Delta is None or raw.G is None:
        raise ConfigError(
            "the truncated model needs explicit linearized couplings "
            "(Delta, G); fill them directly or via with_mean_field_couplings"
        )
    if n_a < 2 or n_b < 2:
        raise ConfigError(f"Fock cutoffs must be >= 2, got n_a={n_a}, n_b={n_b}")
    N = raw.N if N is None else int(N)
    spin_dim = N + 1
    total = n_a * n_b * spin_dim
    if total > max_dim:
        raise ResourceError(
            f"truncated dimension {total} exceeds the {max_dim} bound"
        )
    j = N / 2.0
    Omega = raw.Omega if raw.Omega is not None else 0.0

    a = _ladder(n_a)
    b = _ladder(n_b)
    num_a = a.T @ a
    num_b = b.T @ b
    x_a = a + a.T
    x_b = b + b.T
    eye_a = np.eye(n_a)
    eye_b = np.eye(n_b)

    spin = build_collective_ops(j)
    sz = spin.sz.real
    sp = spin.sp.real
    eye_s = np.eye(spin_dim)

    H = raw.Delta * np.kron(np.kron(num_a, eye_b), eye_s)
    H = H + raw.omega_b * np.kron(np.kron(eye_a, num_b), eye_s)
    H = H + raw.G * np.kron(np.kron(x_a, x_b), eye_s)
    H = H.astype(complex)
    if Omega != 0.0:
        H += Omega * np.kron(np.kron(eye_a, eye_b), sz)
    H += raw.g * np.kron(np.kron(eye_a, b), sp)
    H += raw.g * np.kron(np.kron(eye_a, b.T), sp.T)
    herm = np.max(np.abs(H - H.conj().T))
    if herm > 1e-12 * max(1.0, np.max(np.abs(H))):
        raise ConfigError(f"H_L lost Hermiticity: {herm:.3e}")
    return TruncatedModel(n_a=n_a, n_b=n_b, j=j, H_L=H, raw=raw)


def squeezed_vacuum(n_b: int, r: float) -> np.ndarray:
    """Lab-basis Fock amplitudes of S(r)|0>, S(r) = exp[(r/2)(b^2 - b^dag^2)].

    This is the vacuum of the Bogoliubov mode cosh(r) b + sinh(r) b^dag.
    """
    b = _ladder(n_b)
    gen = 0.5 * r * (b @ b - b.T @ b.T)
    vac = np.zeros(n_b)
    vac[0] = 1.0
    psi = expm(gen) @ vac
    return psi / np.linalg.norm(psi)


# --------------------------------------------------------------------------
# Reduction verification
# --------------------------------------------------------------------------


@dataclass
class ComparisonReport:
    """Full-model vs effective-model squeezing comparison."""

    N: int
    t: np.ndarray
    xi2_full: np.ndarray
    xi2_eff: np.ndarray
    max_abs_deviation: float
    max_rel_deviation: float
    max_rel_deviation_to_min: float
    ratio_photon: float      # G / |Delta - omega_b|
    ratio_spin: float        # g / |omega_r - Omega|
    regime_ok: bool
    leakage_a: float
    leakage_b: float
    squeezed_phonon: bool
    n_a: int
    n_b: int

    def to_json(self, path) -> None:
        payload = {
            "N": self.N,
            "t": self.t.tolist(),
            "xi2_full": self.xi2_full.tolist(),
            "xi2_eff": self.xi2_eff.tolist(),
            "max_abs_deviation": self.max_abs_deviation,
            "max_rel_deviation": self.max_rel_deviation,
            "max_rel_deviation_to_min": self.max_rel_deviation_to_min,
            "ratio_photon": self.ratio_photon,
            "ratio_spin": self.ratio_spin,
            "regime_ok": self.regime_ok,
            "leakage_a": self.leakage_a,
            "leakage_b": self.leakage_b,
            "squeezed_phonon": self.squeezed_phonon,
            "n_a": self.n_a,
            "n_b": self.n_b,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2)


def verify_effective_reduction(
    raw: RawParams,
    N: int | None = None,
    t_grid=None,
    *,
    n_a: int = 8,
    n_b: int = 12,
    squeezed_phonon: bool = True,
    regime_factor: float = 0.1,
    strict_regime: bool = False,
    leak_tol: float = 1e-6,
) -> ComparisonReport:
    """Evolve vac x (squeezed) vac x CSS under H_L and the CSS under the
    effective twisting Hamiltonian; compare xi2(t).

    The dispersive hierarchy G <= regime_factor |Delta - omega_b| and
    g <= regime_factor |omega_r - Omega| is checked first; violations raise
    RegimeError when strict_regime, otherwise warn and flag the report.
    """
    N = raw.N if N is None else int(N)
    model = build_linearized_hamiltonian(raw, N, n_a, n_b)
    derived = derive_chain(raw)
    Omega = raw.Omega if raw.Omega is not None else 0.0

    det_photon = abs(raw.Delta - raw.omega_b)
    det_spin = abs(derived.omega_r - Omega)
    ratio_photon = abs(raw.G) / det_photon if det_photon > 0 else math.inf
    ratio_spin = abs(raw.g) / det_spin if det_spin > 0 else math.inf
    regime_ok = ratio_photon <= regime_factor and ratio_spin <= regime_factor
    if not regime_ok:
        msg = (
            f"dispersive hierarchy violated: G/|Delta-omega_b| = "
            f"{ratio_photon:.3g}, g/|omega_r-Omega| = {ratio_spin:.3g} "
            f"(factor {regime_factor})"
        )
        if strict_regime:
            raise RegimeError(msg)
        warnings.warn(msg, RegimeWarning, stacklevel=2)

    if t_grid is None:
        span = 0.2 / (N * derived.chi) if derived.chi > 0 \
            else 10.0 * math.pi / raw.omega_b
        t_grid = np.linspace(0.0, span, 200)
    t = np.asarray(t_grid, dtype=float)

    # initial product state
    vac_a = np.zeros(n_a)
    vac_a[0] = 1.0
    phonon0 = squeezed_vacuum(n_b, derived.r) if squeezed_phonon \
        else np.concatenate([[1.0], np.zeros(n_b - 1)])
    spin0 = css_state(N / 2.0, math.pi / 2.0, 0.0)
    psi0 = np.kron(np.kron(vac_a, phonon0), spin0).astype(complex)

    evals, vecs = eigh(model.H_L)
    coeff = vecs.conj().T @ psi0
    spin_dim = N + 1
    ops = dynamics._moment_ops(N)

    xi2_full = np.empty(t.size)
    leak_a = 0.0
    leak_b = 0.0
    for k, tk in enumerate(t):
        psi = vecs @ (np.exp(-1j * evals * tk) * coeff)
        norm = np.linalg.norm(psi)
        if abs(norm - 1.0) > 1e-10:
            raise ConfigError(f"norm drift {abs(norm-1.0):.3e} at t={tk:g}")
        pops = np.abs(psi.reshape(n_a, n_b, spin_dim)) ** 2
        leak_a = max(leak_a, float(pops[-2:, :, :].sum()))
        leak_b = max(leak_b, float(pops[:, -2:, :].sum()))
        env = psi.reshape(n_a * n_b, spin_dim)
        rho_spin = env.T @ env.conj()
        vals = [
            (op.multiply(rho_spin.T)).sum().real
            for op in ops
        ]
        mean, m2 = dynamics._bundle_from_values(vals)
        xi2_full[k] = dynamics._xi2_of(N, mean, m2)

    if leak_a > leak_tol or leak_b > leak_tol:
        warnings.warn(
            f"Fock-cutoff leakage: top-two-level population a={leak_a:.3e}, "
            f"b={leak_b:.3e} exceeds {leak_tol:.1e}",
            CutoffWarning,
            stacklevel=2,
        )

    h_eff = build_spin_hamiltonian(N / 2.0, derived)
    traj = dynamics.evolve_unitary(h_eff, spin0, t)
    xi2_eff = traj.xi2

    dev = np.abs(xi2_full - xi2_eff)
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = dev / xi2_eff
    k_min = int(np.nanargmin(xi2_eff))
    return ComparisonReport(
        N=N,
        t=t,
        xi2_full=xi2_full,
        xi2_eff=xi2_eff,
        max_abs_deviation=float(np.nanmax(dev)),
        max_rel_deviation=float(np.nanmax(rel)),
        max_rel_deviation_to_min=float(np.nanmax(rel[: k_min + 1])),
        ratio_photon=ratio_photon,
        ratio_spin=ratio_spin,
        regime_ok=regime_ok,
        leakage_a=leak_a,
        leakage_b=leak_b,
        squeezed_phonon=squeezed_phonon,
        n_a=n_a,
        n_b=n_b,
    )
