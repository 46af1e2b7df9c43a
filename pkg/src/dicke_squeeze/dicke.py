"""Collective spin algebra on Dicke blocks.

Basis convention everywhere: within a spin-j block the basis is |j,m> with m
descending from +j to -j, so index i corresponds to m = j - i. An ensemble of
N spin-1/2 particles decomposes into blocks j = N/2, N/2-1, ..., (N mod 2)/2,
the block with total spin j appearing with multiplicity

    d_{N,j} = C(N, N/2-j) - C(N, N/2-j-1).

Degeneracies are kept as exact Python integers (they exceed 2^300 for large N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, ResourceError

# Hard cap on ensemble size for block bookkeeping; protects against absurd
# requests long before memory would.
MAX_SPINS = 512


def _two_j(j: float) -> int:
    two_j = round(2 * j)
    if abs(2 * j - two_j) > 1e-9 or two_j < 0:
        raise DomainError(f"j must be a non-negative multiple of 1/2, got {j}")
    return int(two_j)


@dataclass(frozen=True)
class SpinOps:
    """Dense spin-j matrices (complex), m ordered +j..-j."""

    j: float
    dim: int
    sx: np.ndarray
    sy: np.ndarray
    sz: np.ndarray
    sp: np.ndarray
    sm: np.ndarray
    s2: np.ndarray

    @property
    def m_values(self) -> np.ndarray:
        return self.j - np.arange(self.dim)


@lru_cache(maxsize=None)
def _build_ops_cached(two_j: int) -> SpinOps:
    j = two_j / 2.0
    dim = two_j + 1
    m = j - np.arange(dim)
    sz = np.diag(m.astype(complex))
    # S+|j,m> = sqrt((j-m)(j+m+1)) |j,m+1>; with m_i = j-i this is the
    # superdiagonal element sp[i-1, i] = sqrt(i (2j-i+1)).
    i = np.arange(1, dim)
    ladder = np.sqrt(i * (two_j - i + 1.0))
    sp = np.zeros((dim, dim), dtype=complex)
    sp[i - 1, i] = ladder
    sm = sp.conj().T.copy()
    sx = 0.5 * (sp + sm)
    sy = -0.5j * (sp - sm)
    s2 = (j * (j + 1)) * np.eye(dim, dtype=complex)
    for a in (sx, sy, sz, sp, sm, s2):
        a.setflags(write=False)
    return SpinOps(j=j, dim=dim, sx=sx, sy=sy, sz=sz, sp=sp, sm=sm, s2=s2)


def build_collective_ops(j: float) -> SpinOps:
    """Spin-j operator set; cached, arrays read-only."""
    return _build_ops_cached(_two_j(j))


@dataclass(frozen=True)
class BlockSpec:
    """One total-spin sector of the N-spin decomposition."""

    two_j: int
    dim: int
    degeneracy: int  # exact integer multiplicity d_{N,j}

    @property
    def j(self) -> float:
        return self.two_j / 2.0


@dataclass(frozen=True)
class BlockLayout:
    """Block structure of the permutation-invariant state space for N spins.

    ``blocks`` is ordered by descending j; ``blocks[0]`` is the symmetric
    (maximal-j) sector with degeneracy 1.
    """

    N: int
    blocks: tuple[BlockSpec, ...]

    def index_of_two_j(self, two_j: int) -> int:
        idx = (self.blocks[0].two_j - two_j) // 2
        if idx < 0 or idx >= len(self.blocks) or self.blocks[idx].two_j != two_j:
            raise DomainError(f"no block with 2j={two_j} for N={self.N}")
        return idx

    @property
    def total_dim(self) -> int:
        """Dimension of the permutation-invariant operator space sum((2j+1)^2)."""
        return sum(b.dim * b.dim for b in self.blocks)


def block_degeneracy(N: int, two_j: int) -> int:
    """Exact multiplicity d_{N,j} of the spin-j sector (0 when out of range)."""
    if two_j < 0 or two_j > N or (N - two_j) % 2:
        return 0
    k = (N - two_j) // 2
    return math.comb(N, k) - (math.comb(N, k - 1) if k >= 1 else 0)


@lru_cache(maxsize=None)
def dicke_block_structure(N: int) -> BlockLayout:
    """Block layout for N spin-1/2 particles, with the 2^N sum rule checked."""
    if int(N) != N or N < 1:
        raise DomainError(f"N must be a positive integer, got {N}")
    if N > MAX_SPINS:
        raise ResourceError(f"N={N} exceeds the configured maximum {MAX_SPINS}")
    N = int(N)
    blocks = []
    total = 0
    for two_j in range(N, -1 if N % 2 == 0 else 0, -2):
        d = block_degeneracy(N, two_j)
        blocks.append(BlockSpec(two_j=two_j, dim=two_j + 1, degeneracy=d))
        total += d * (two_j + 1)
    if total != 2**N:
        raise AssertionError(f"degeneracy sum rule broken for N={N}")
    return BlockLayout(N=N, blocks=tuple(blocks))


# --------------------------------------------------------------------------
# Spin coherent states
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _sy_eigensystem(two_j: int):
    """Eigenbasis of S_y plus the rotated |j,j> column, for CSS construction."""
    ops = _build_ops_cached(two_j)
    evals, evecs = np.linalg.eigh(ops.sy)
    w0 = evecs.conj().T[:, 0].copy()  # U^dag |j, j>
    evals.setflags(write=False)
    evecs.setflags(write=False)
    w0.setflags(write=False)
    return evals, evecs, w0


def polar_rotation_amplitudes(j: float, theta: float) -> np.ndarray:
    """Real amplitudes of exp(-i theta S_y)|j,j> in the m basis."""
    two_j = _two_j(j)
    evals, evecs, w0 = _sy_eigensystem(two_j)
    amp = evecs @ (np.exp(-1j * theta * evals) * w0)
    # S_y is purely imaginary, so the rotation matrix is real; discard the
    # rounding-level imaginary residue.
    return amp.real


def css_state(j: float, theta: float, phi: float) -> np.ndarray:
    """Spin coherent state exp(-i phi S_z) exp(-i theta S_y) |j,j>.

    theta in [0, pi], phi unrestricted. Includes the rotation's global phase
    e^{-i j phi}, so the output literally equals the composed rotations.
    """
    if not 0.0 <= theta <= math.pi:
        raise DomainError(f"theta must lie in [0, pi], got {theta}")
    two_j = _two_j(j)
    m = (two_j / 2.0) - np.arange(two_j + 1)
    return np.exp(-1j * phi * m) * polar_rotation_amplitudes(j, theta)


def block_expectation(op: np.ndarray, rho: np.ndarray) -> complex:
    """tr(op @ rho) without forming the product."""
    return complex(np.sum(op.T * rho))
