"""Effective collective-spin Hamiltonian and transformed-frame operators.

The phonon-mediated spin Hamiltonian on a spin-j block:

    H_s = -chi_tilde [ (S^2 - S_z^2) - tanh(2r) (S_x^2 - S_y^2) ] + Omega_tilde S_z

tanh(2r) = 0 gives one-axis twisting; +1/3 the two-axis y-z form
-(sqrt2/2) chi (S^2 + S_y^2 - S_z^2); -1/3 its x-z mirror.

The Bogoliubov quasimode of the squeezed phonon couples to

    Xi = S_- cosh r - S_+ sinh r,

and tracing the phonon out leaves the collective jump operator

    Z = e^{-2r} S_x - i e^{2r} S_y = cosh(r) Xi - sinh(r) Xi^dag.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dicke import build_collective_ops
from .params import DerivedParams, Scheme

_SCHEME_TANH2R = {Scheme.OAT: 0.0, Scheme.TAT_YZ: 1.0 / 3.0, Scheme.TAT_XZ: -1.0 / 3.0}


@dataclass(frozen=True)
class SpinHamiltonian:
    """Spin-j block Hamiltonian with the couplings that built it."""

    j: float
    chi: float
    chi_tilde: float
    tanh2r: float
    Omega_tilde: float
    scheme: Scheme
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _resolve_couplings(params: DerivedParams | None, chi, tanh2r, Omega_tilde):
    if params is not None:
        return params.chi, params.tanh2r, params.Omega_tilde, params.scheme
    if chi is None or tanh2r is None:
        raise ValueError("either params or explicit (chi, tanh2r) required")
    Omega_tilde = 0.0 if Omega_tilde is None else Omega_tilde
    # classify from the tanh2r value alone (scale-free)
    for scheme, t in _SCHEME_TANH2R.items():
        if abs(tanh2r - t) <= 1e-9:
            return chi, tanh2r, Omega_tilde, scheme
    return chi, tanh2r, Omega_tilde, Scheme.MIXED


def build_spin_hamiltonian(
    j: float,
    params: DerivedParams | None = None,
    *,
    chi: float | None = None,
    tanh2r: float | None = None,
    Omega_tilde: float | None = None,
) -> SpinHamiltonian:
    """Assemble H_s on the spin-j block.

    Couplings come from a derived-parameter record, or explicitly via
    (chi, tanh2r, Omega_tilde) with chi_tilde = chi cosh2r computed from
    tanh2r. |tanh2r| < 1 is required (it is, for any finite squeeze).
    """
    chi, tanh2r, Omega_tilde, scheme = _resolve_couplings(
        params, chi, tanh2r, Omega_tilde
    )
    if not abs(tanh2r) < 1.0:
        raise ValueError(f"|tanh 2r| must be < 1, got {tanh2r}")
    cosh2r = 1.0 / math.sqrt(1.0 - tanh2r * tanh2r)
    chi_tilde = chi * cosh2r
    ops = build_collective_ops(j)
    sx2 = ops.sx @ ops.sx
    sy2 = ops.sy @ ops.sy
    sz2 = ops.sz @ ops.sz
    h = (
        -chi_tilde * ((ops.s2 - sz2) - tanh2r * (sx2 - sy2))
        + Omega_tilde * ops.sz
    )
    return SpinHamiltonian(
        j=ops.j,
        chi=chi,
        chi_tilde=chi_tilde,
        tanh2r=tanh2r,
        Omega_tilde=Omega_tilde,
        scheme=scheme,
        matrix=h,
    )


def build_bogoliubov_operator(j: float, r: float) -> np.ndarray:
    """Xi = S_- cosh r - S_+ sinh r on the spin-j block."""
    ops = build_collective_ops(j)
    return math.cosh(r) * ops.sm - math.sinh(r) * ops.sp


def build_jump_operator(j: float, r: float) -> np.ndarray:
    """Collective jump operator Z = e^{-2r} S_x - i e^{2r} S_y.

    Equals cosh(r) Xi - sinh(r) Xi^dag with Xi the Bogoliubov operator; the
    r = 0 limit is the bare lowering operator S_-.
    """
    ops = build_collective_ops(j)
    return math.exp(-2.0 * r) * ops.sx - 1j * math.exp(2.0 * r) * ops.sy
