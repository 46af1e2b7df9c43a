"""Master-equation integration in the permutation-invariant block picture.

The state of N spins under permutation-invariant dynamics decomposes into
total-spin sectors: rho = sum_j (rho_j / d_j) x Identity(d_j) with d_j the
multiplicity of spin-j. We store the weighted blocks rho~_j = d_j q_j, so

    trace  = sum_j tr(rho~_j),      purity = sum_j tr(rho~_j^2) / d_j.

The evolution

    drho/dt = -i[H_s, rho] + (1/2T2) sum_k D[sigma_z^(k)]
              + gamma1 D[Z] + gamma2 D[Z^dag]

keeps this structure. The collective pieces act within each block. Local
dephasing couples neighbouring sectors; writing d'_J for the multiplicity of
spin-J among N-1 spins, the channel sum_k sigma_z^(k) rho sigma_z^(k) maps the
weighted blocks elementwise through outer-product weights

    j -> j   :  v_m v_m',   v_m = m sqrt( N (d'_{j-1/2}/j^2
                                          + d'_{j+1/2}/(j+1)^2) / d_j )
    j -> j-1 :  w_m w_m',   w_m = sqrt( N d'_{j-1/2} / d_j ) sqrt(j^2-m^2)/j
    j -> j+1 :  u_m u_m',   u_m = sqrt( N d'_{j+1/2} / d_j )
                                  sqrt((j+1)^2-m^2)/(j+1)

(derived from the Clebsch-Gordan action of sigma_z on the last spin in the
subduction basis; the sum rule v_m^2 + w_m^2 + u_m^2 = N guarantees exact
trace preservation). These formulas are validated against a brute-force
2^N-space oracle for N <= 6.
"""

from __future__ import annotations

import math
import warnings
from collections import namedtuple
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.integrate import DOP853
from scipy.stats import poisson

from . import metrics
from .dicke import (
    BlockLayout,
    block_degeneracy,
    build_collective_ops,
    css_state,
    dicke_block_structure,
)
from .errors import (
    CutoffWarning,
    DegenerateSpinError,
    DomainError,
    IntegratorError,
    PositivityWarning,
    ResourceError,
)
from .hamiltonian import SpinHamiltonian, build_jump_operator, build_spin_hamiltonian
from .params import DerivedParams

BRUTE_FORCE_MAX = 6
# Poisson tail cut for the automatic block-depth choice: dephasing moves
# weight at most one sector per event at total rate <= N/(2 T2)
TRUNCATION_TAIL = 1e-12


# --------------------------------------------------------------------------
# Block density matrix
# --------------------------------------------------------------------------


@dataclass
class BlockDensityMatrix:
    """Weighted total-spin blocks rho~_j = d_j q_j, ordered by descending j."""

    N: int
    layout: BlockLayout
    blocks: list[np.ndarray]

    @classmethod
    def from_css(cls, N: int, theta: float = math.pi / 2, phi: float = 0.0):
        """Coherent spin state; lives entirely in the maximal-j block."""
        layout = dicke_block_structure(N)
        psi = css_state(N / 2.0, theta, phi)
        blocks = [np.zeros((b.dim, b.dim), dtype=complex) for b in layout.blocks]
        blocks[0] = np.outer(psi, psi.conj())
        return cls(N=int(N), layout=layout, blocks=blocks)

    @classmethod
    def maximally_mixed(cls, N: int):
        layout = dicke_block_structure(N)
        scale = 2.0 ** (-N)
        blocks = [
            np.eye(b.dim, dtype=complex) * (b.degeneracy * scale)
            for b in layout.blocks
        ]
        return cls(N=int(N), layout=layout, blocks=blocks)

    def copy(self) -> "BlockDensityMatrix":
        return BlockDensityMatrix(
            N=self.N, layout=self.layout, blocks=[b.copy() for b in self.blocks]
        )

    def block(self, j: float) -> np.ndarray:
        return self.blocks[self.layout.index_of_two_j(round(2 * j))]

    def trace(self) -> float:
        return float(sum(np.trace(b).real for b in self.blocks))

    def purity(self) -> float:
        return float(
            sum(
                np.vdot(b, b).real / spec.degeneracy
                for b, spec in zip(self.blocks, self.layout.blocks)
            )
        )

    def assert_valid(self, trace_tol=1e-9, herm_tol=1e-9, eig_floor=-1e-8):
        if len(self.blocks) != len(self.layout.blocks):
            raise DomainError("block count does not match layout")
        for b, spec in zip(self.blocks, self.layout.blocks):
            if b.shape != (spec.dim, spec.dim):
                raise DomainError(f"block 2j={spec.two_j} has shape {b.shape}")
            if np.abs(b - b.conj().T).max() > herm_tol:
                raise DomainError(f"block 2j={spec.two_j} not Hermitian")
            if np.linalg.eigvalsh(b).min() < eig_floor:
                raise DomainError(f"block 2j={spec.two_j} not positive")
        if abs(self.trace() - 1.0) > trace_tol:
            raise DomainError(f"trace {self.trace()} != 1")


def project_positive(state: BlockDensityMatrix) -> BlockDensityMatrix:
    """Clip negative block eigenvalues, renormalizing the global trace."""
    out = []
    for b in state.blocks:
        evals, vecs = np.linalg.eigh(0.5 * (b + b.conj().T))
        out.append((vecs * np.maximum(evals, 0.0)) @ vecs.conj().T)
    total = sum(np.trace(b).real for b in out)
    if total <= 0:
        raise DomainError("state has no positive weight after projection")
    scale = state.trace() / total
    return BlockDensityMatrix(
        N=state.N, layout=state.layout, blocks=[b * scale for b in out]
    )


def trace_distance(a: BlockDensityMatrix, b: BlockDensityMatrix) -> float:
    """(1/2)||rho_a - rho_b||_1 in the full 2^N space, computed blockwise."""
    if a.N != b.N:
        raise DomainError("states have different N")
    total = 0.0
    for ba, bb in zip(a.blocks, b.blocks):
        diff = ba - bb
        diff = 0.5 * (diff + diff.conj().T)
        total += np.abs(np.linalg.eigvalsh(diff)).sum()
    return 0.5 * total


# --------------------------------------------------------------------------
# Moments
# --------------------------------------------------------------------------

MomentOps = namedtuple("MomentOps", "sx sy sz sy2 sz2 sx2 cyz cxy cxz")


@lru_cache(maxsize=None)
def _moment_ops(two_j: int) -> MomentOps:
    ops = build_collective_ops(two_j / 2.0)
    sym = lambda a, b: 0.5 * (a @ b + b @ a)
    mats = (
        ops.sx,
        ops.sy,
        ops.sz,
        ops.sy @ ops.sy,
        ops.sz @ ops.sz,
        ops.sx @ ops.sx,
        sym(ops.sy, ops.sz),
        sym(ops.sx, ops.sy),
        sym(ops.sx, ops.sz),
    )
    return MomentOps(*(sp.csr_matrix(m) for m in mats))


@lru_cache(maxsize=None)
def _moment_bands(two_j: int) -> np.ndarray:
    """Band table of the moment operators: every one of them has bandwidth
    <= 2, so tr(op rho) reduces to five diagonal contractions. Entry
    [k, d+2, :dim-|d|] holds op_k[i, i+d]."""
    ops = _moment_ops(two_j)
    dim = two_j + 1
    bands = np.zeros((9, 5, dim), dtype=complex)
    for k, op in enumerate(ops):
        dense = op.toarray()
        for d in range(-2, 3):
            band = np.diagonal(dense, offset=d)
            bands[k, d + 2, : band.size] = band
    return bands


def _accumulate_moments(blocks, layout, depth) -> np.ndarray:
    vals = np.zeros(9)
    for idx in range(depth):
        rho = blocks[idx]
        bands = _moment_bands(layout.blocks[idx].two_j)
        dim = rho.shape[0]
        for d in range(-2, 3):
            rd = np.diagonal(rho, offset=-d)
            if rd.size:
                vals += (bands[:, d + 2, : rd.size] @ rd).real
    return vals


def collective_moments(state: BlockDensityMatrix):
    """Mean spin vector and symmetrized second-moment matrix of a state."""
    vals = _accumulate_moments(state.blocks, state.layout, len(state.blocks))
    return _bundle_from_values(vals)


def _bundle_from_values(vals):
    sx, sy, sz, sy2, sz2, sx2, cyz, cxy, cxz = vals
    mean = np.array([sx, sy, sz])
    m2 = np.array([[sx2, cxy, cxz], [cxy, sy2, cyz], [cxz, cyz, sz2]])
    return mean, m2


def squeezing_of_state(state: BlockDensityMatrix) -> metrics.SqueezingRecord:
    mean, m2 = collective_moments(state)
    return metrics.squeezing_parameter(mean, m2, state.N)


# --------------------------------------------------------------------------
# Trajectory
# --------------------------------------------------------------------------

_CSV_COLUMNS = (
    "t",
    "Sx",
    "Sy",
    "Sz",
    "Sy2",
    "Sz2",
    "Sx2",
    "Cyz",
    "Cxy",
    "Cxz",
    "xi2",
    "xi2_dB",
    "trace",
    "purity",
)


@dataclass
class Trajectory:
    """Time grid with per-time moment records and derived squeezing."""

    N: int
    t: np.ndarray
    mean: np.ndarray        # (n, 3)
    second: np.ndarray      # (n, 3, 3) symmetrized second moments
    trace: np.ndarray
    purity: np.ndarray
    xi2: np.ndarray         # NaN where the mean spin is degenerate
    source: str = "exact"
    states: list | None = None
    final_state: BlockDensityMatrix | None = None
    final_psi: np.ndarray | None = None

    def __post_init__(self):
        if self.t.ndim != 1:
            raise DomainError("trajectory times must be a 1-D array")
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise DomainError("trajectory times must be strictly increasing")

    @property
    def Sx(self):
        return self.mean[:, 0]

    @property
    def Sy(self):
        return self.mean[:, 1]

    @property
    def Sz(self):
        return self.mean[:, 2]

    @property
    def xi2_dB(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.xi2 > 0, 10.0 * np.log10(self.xi2), np.nan)

    def minimum(self) -> metrics.MinimumResult:
        return metrics.find_minimum(self.t, self.xi2)

    def columns(self) -> dict:
        s = self.second
        return {
            "t": self.t,
            "Sx": self.Sx,
            "Sy": self.Sy,
            "Sz": self.Sz,
            "Sy2": s[:, 1, 1],
            "Sz2": s[:, 2, 2],
            "Sx2": s[:, 0, 0],
            "Cyz": s[:, 1, 2],
            "Cxy": s[:, 0, 1],
            "Cxz": s[:, 0, 2],
            "xi2": self.xi2,
            "xi2_dB": self.xi2_dB,
            "trace": self.trace,
            "purity": self.purity,
        }

    def to_csv(self, path) -> None:
        cols = self.columns()
        table = np.column_stack([cols[name] for name in _CSV_COLUMNS])
        np.savetxt(
            path,
            table,
            delimiter=",",
            fmt="%.17g",
            header=",".join(_CSV_COLUMNS),
            comments="",
            footer=f"# source={self.source}",
        )


def _xi2_of(N, mean, m2) -> float:
    try:
        return metrics.squeezing_parameter(mean, m2, N).xi2
    except DegenerateSpinError:
        return math.nan


def _trajectory_from_records(N, t, records, source, **extra) -> Trajectory:
    mean = np.array([r[0] for r in records])
    second = np.array([r[1] for r in records])
    trace = np.array([r[2] for r in records])
    purity = np.array([r[3] for r in records])
    xi2 = np.array([_xi2_of(N, mean[k], second[k]) for k in range(len(records))])
    return Trajectory(
        N=N,
        t=np.asarray(t, dtype=float),
        mean=mean,
        second=second,
        trace=trace,
        purity=purity,
        xi2=xi2,
        source=source,
        **extra,
    )


# --------------------------------------------------------------------------
# Liouvillian
# --------------------------------------------------------------------------

_BlockOps = namedtuple("_BlockOps", "h z zdag k v w u")


@dataclass
class Liouvillian:
    """Matrix-free generator acting on weighted blocks; immutable after build.

    kappa_phi = 1/(2 T2); gamma1 = Gamma_gamma (n+1); gamma2 = Gamma_gamma n;
    r sets the jump operator Z = e^{-2r} Sx - i e^{2r} Sy per block.
    """

    N: int
    layout: BlockLayout
    kappa_phi: float
    gamma1: float
    gamma2: float
    r: float
    h_builder: object
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if min(self.kappa_phi, self.gamma1, self.gamma2) < 0:
            raise DomainError("rates must be non-negative")

    def _bundle(self, idx: int) -> _BlockOps:
        if idx in self._cache:
            return self._cache[idx]
        spec = self.layout.blocks[idx]
        j = spec.two_j / 2.0
        h_mat = self.h_builder(j)
        if isinstance(h_mat, SpinHamiltonian):
            h_mat = h_mat.matrix
        h = sp.csr_matrix(h_mat)
        if self.gamma1 > 0 or self.gamma2 > 0:
            z_mat = build_jump_operator(j, self.r)
            z = sp.csr_matrix(z_mat)
            zdag = sp.csr_matrix(z_mat.conj().T)
            k_mat = 0.5 * (
                self.gamma1 * (z_mat.conj().T @ z_mat)
                + self.gamma2 * (z_mat @ z_mat.conj().T)
            )
            k = sp.csr_matrix(k_mat)
        else:
            z = zdag = k = None
        v, w, u = _dephasing_weights(self.N, spec.two_j)
        bundle = _BlockOps(h=h, z=z, zdag=zdag, k=k, v=v, w=w, u=u)
        self._cache[idx] = bundle
        return bundle

    def apply(self, blocks: list, out: list, depth: int) -> None:
        """Accumulate d(blocks)/dt into ``out`` for the first ``depth`` blocks."""
        for idx in range(depth):
            b = self._bundle(idx)
            rho = blocks[idx]
            acc = out[idx]
            acc += -1j * (b.h @ rho - rho @ b.h)
            if b.z is not None:
                if self.gamma1 > 0:
                    acc += self.gamma1 * ((b.z @ rho) @ b.zdag)
                if self.gamma2 > 0:
                    acc += self.gamma2 * ((b.zdag @ rho) @ b.z)
                acc -= b.k @ rho + rho @ b.k
            if self.kappa_phi > 0:
                kp = self.kappa_phi
                acc += kp * (b.v[:, None] * rho * b.v[None, :] - self.N * rho)
                if idx + 1 < depth and b.w is not None:
                    t = b.w[:, None] * rho * b.w[None, :]
                    out[idx + 1] += kp * t[1:-1, 1:-1]
                if idx > 0 and b.u is not None:
                    dim = rho.shape[0]
                    out[idx - 1][1 : dim + 1, 1 : dim + 1] += kp * (
                        b.u[:, None] * rho * b.u[None, :]
                    )


@lru_cache(maxsize=None)
def _dephasing_weights(N: int, two_j: int):
    """Outer-product weight vectors (v, w, u) for sector 2j of N spins."""
    j = two_j / 2.0
    dim = two_j + 1
    d = block_degeneracy(N, two_j)
    d_lo = block_degeneracy(N - 1, two_j - 1)   # parent J = j - 1/2
    d_hi = block_degeneracy(N - 1, two_j + 1)   # parent J = j + 1/2
    m = j - np.arange(dim)
    self_rate = d_hi / (j + 1.0) ** 2
    if two_j > 0:
        self_rate += d_lo / (j * j)
    v = m * math.sqrt(N * self_rate / d)
    w = None
    if two_j > 0 and d_lo > 0:
        w = math.sqrt(N * d_lo / d) * np.sqrt(np.maximum(j * j - m * m, 0.0)) / j
    u = None
    if d_hi > 0:
        u = (
            math.sqrt(N * d_hi / d)
            * np.sqrt((j + 1.0) ** 2 - m * m)
            / (j + 1.0)
        )
    return v, w, u


def build_liouvillian(
    N: int, params: DerivedParams | None = None, *, h_builder=None, rates=None
) -> Liouvillian:
    """Assemble the block-space generator.

    ``h_builder(j)`` may override the Hamiltonian per block (e.g. for a free
    evolution pass None Hamiltonian via params=None and rates explicitly).
    ``rates`` is an optional (kappa_phi, gamma1, gamma2, r) tuple taking
    precedence over the params-derived values.
    """
    layout = dicke_block_structure(N)
    if rates is not None:
        kappa_phi, gamma1, gamma2, r = rates
    elif params is not None:
        kappa_phi = 0.0 if math.isinf(params.T2) else 0.5 / params.T2
        gamma1 = params.Gamma_gamma * (params.n_th + 1.0)
        gamma2 = params.Gamma_gamma * params.n_th
        r = params.r
    else:
        raise DomainError("either params or rates is required")
    if h_builder is None:
        if params is None:
            raise DomainError("h_builder is required when params is None")
        h_builder = lambda j: build_spin_hamiltonian(j, params).matrix
    return Liouvillian(
        N=int(N),
        layout=layout,
        kappa_phi=kappa_phi,
        gamma1=gamma1,
        gamma2=gamma2,
        r=r,
        h_builder=h_builder,
    )


# --------------------------------------------------------------------------
# Integration
# --------------------------------------------------------------------------


def default_block_depth(N: int, kappa_phi: float, t_span: float) -> int:
    """Sectors reachable from the top block with leak below TRUNCATION_TAIL.

    Dephasing lowers j by at most one per event at total rate <= N/(2 T2),
    so the depth explored in time t is dominated by a Poisson variable with
    lam = N kappa_phi t.
    """
    layout = dicke_block_structure(N)
    n_blocks = len(layout.blocks)
    if kappa_phi <= 0 or t_span <= 0:
        return 1
    lam = N * kappa_phi * t_span
    extra = int(poisson.ppf(1.0 - TRUNCATION_TAIL, lam)) + 2
    return min(n_blocks, 1 + extra)


def evolve(
    rho0: BlockDensityMatrix,
    L: Liouvillian,
    t_grid,
    *,
    rtol: float = 1e-9,
    atol: float = 1e-12,
    block_depth: int | None = None,
    store_states: bool = False,
    project_final: bool = False,
    check_positivity: bool = True,
) -> Trajectory:
    """Integrate the master equation, recording moments at the grid points.

    block_depth=None truncates the sector ladder using the Poisson bound on
    dephasing transport (exact dynamics keeps the dropped weight below
    TRUNCATION_TAIL); pass len(layout.blocks) to disable truncation.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or t.size < 1:
        raise DomainError("t_grid must be a non-empty 1-D array")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    if rho0.N != L.N:
        raise DomainError(f"state N={rho0.N} does not match Liouvillian N={L.N}")
    layout = L.layout
    n_blocks = len(layout.blocks)
    nonzero = [
        idx
        for idx, b in enumerate(rho0.blocks)
        if np.abs(b).max() > 0.0
    ]
    base = (max(nonzero) + 1) if nonzero else 1
    if block_depth is None:
        span = float(t[-1] - t[0])
        depth = min(n_blocks, base - 1 + default_block_depth(L.N, L.kappa_phi, span))
    else:
        depth = int(block_depth)
        if not 1 <= depth <= n_blocks:
            raise DomainError(f"block_depth must be in [1, {n_blocks}]")
        if depth < base:
            raise DomainError("block_depth discards initially occupied sectors")
    dims = [layout.blocks[idx].dim for idx in range(depth)]
    sizes = [d * d for d in dims]
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    def split(y):
        return [
            y[offsets[i] : offsets[i + 1]].reshape(dims[i], dims[i])
            for i in range(depth)
        ]

    def rhs(_t, y):
        out = np.zeros_like(y)
        L.apply(split(y), split(out), depth)
        return out

    def snapshot(y):
        blocks = split(y)
        vals = _accumulate_moments(blocks, layout, depth)
        tr = float(sum(np.trace(b).real for b in blocks))
        pur = float(
            sum(
                np.vdot(b, b).real / layout.blocks[i].degeneracy
                for i, b in enumerate(blocks)
            )
        )
        mean, m2 = _bundle_from_values(vals)
        return mean, m2, tr, pur

    def as_state(y):
        blocks = [b.copy() for b in split(y)]
        blocks += [
            np.zeros((layout.blocks[i].dim,) * 2, dtype=complex)
            for i in range(depth, n_blocks)
        ]
        return BlockDensityMatrix(N=L.N, layout=layout, blocks=blocks)

    y0 = np.concatenate([rho0.blocks[i].ravel() for i in range(depth)]).astype(
        complex
    )
    records = [snapshot(y0)]
    states = [as_state(y0)] if store_states else None
    y_final = y0
    if t.size > 1:
        solver = DOP853(rhs, t[0], y0, t_bound=t[-1], rtol=rtol, atol=atol)
        next_idx = 1
        while solver.status == "running":
            message = solver.step()
            if solver.status == "failed":
                raise IntegratorError(f"integration failed at t={solver.t}: {message}")
            if next_idx < t.size and t[next_idx] <= solver.t:
                interp = solver.dense_output()
                while next_idx < t.size and t[next_idx] <= solver.t:
                    yk = interp(t[next_idx])
                    records.append(snapshot(yk))
                    if store_states:
                        states.append(as_state(yk))
                    next_idx += 1
                    if next_idx == t.size:
                        y_final = yk
        if next_idx != t.size:
            raise IntegratorError(
                f"integrator stopped at t={solver.t} before reaching {t[-1]}"
            )

    final_state = as_state(y_final)
    trace0, trace1 = records[0][2], records[-1][2]
    drift = abs(trace1 - trace0)
    if drift > 1e-6:
        raise IntegratorError(f"trace drifted by {drift:.3e}; dynamics unreliable")
    if depth < n_blocks and drift > 1e-9:
        warnings.warn(
            f"trace leaked {drift:.2e} through the sector cutoff (depth {depth}); "
            "increase block_depth",
            CutoffWarning,
            stacklevel=2,
        )
    if check_positivity:
        floor = -10.0 * rtol
        for b, spec in zip(final_state.blocks, layout.blocks):
            if b.shape[0] and np.linalg.eigvalsh(b).min() < floor:
                warnings.warn(
                    f"block 2j={spec.two_j} eigenvalue below {floor:.1e}",
                    PositivityWarning,
                    stacklevel=2,
                )
                break
    if project_final:
        final_state = project_positive(final_state)
    return _trajectory_from_records(
        L.N, t, records, "exact", states=states, final_state=final_state
    )


# --------------------------------------------------------------------------
# Unitary fast path
# --------------------------------------------------------------------------


class UnitaryPropagator:
    """Spectral propagator for closed dynamics in one spin-j block."""

    def __init__(self, h, j: float | None = None):
        if isinstance(h, SpinHamiltonian):
            j = h.j
            h = h.matrix
        if j is None:
            raise DomainError("j is required when h is a bare matrix")
        self.two_j = round(2 * j)
        self.evals, self.evecs = np.linalg.eigh(h)

    def states(self, psi0: np.ndarray, t_grid) -> np.ndarray:
        c0 = self.evecs.conj().T @ np.asarray(psi0, dtype=complex)
        t = np.asarray(t_grid, dtype=float)
        phases = np.exp(-1j * np.outer(self.evals, t))
        return self.evecs @ (phases * c0[:, None])  # (dim, n_t)

    def trajectory(self, psi0: np.ndarray, t_grid) -> Trajectory:
        t = np.asarray(t_grid, dtype=float)
        if t.size > 1 and np.any(np.diff(t) <= 0):
            raise DomainError("t_grid must be strictly increasing")
        amps = self.states(psi0, t)
        ops = _moment_ops(self.two_j)
        records = []
        for k in range(t.size):
            psi = amps[:, k]
            vals = np.array([np.vdot(psi, op @ psi).real for op in ops])
            mean, m2 = _bundle_from_values(vals)
            norm = float(np.vdot(psi, psi).real)
            records.append((mean, m2, norm, norm * norm))
        N = self.two_j
        return _trajectory_from_records(
            N, t, records, "unitary", final_psi=amps[:, -1].copy()
        )


def evolve_unitary(h, psi0: np.ndarray, t_grid, j: float | None = None) -> Trajectory:
    """Closed-system evolution of a pure state in a single block."""
    return UnitaryPropagator(h, j=j).trajectory(psi0, t_grid)


# --------------------------------------------------------------------------
# Brute-force oracle on the full 2^N product space
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _product_space_ops(N: int):
    """Collective and single-site operators on the full 2^N space."""
    if N > BRUTE_FORCE_MAX:
        raise ResourceError(f"full-space operators capped at N={BRUTE_FORCE_MAX}")
    dim = 2**N
    sx1 = np.array([[0, 0.5], [0.5, 0]], dtype=complex)
    sy1 = np.array([[0, -0.5j], [0.5j, 0]], dtype=complex)
    sz1 = np.array([[0.5, 0], [0, -0.5]], dtype=complex)
    sigz = []
    Sx = np.zeros((dim, dim), dtype=complex)
    Sy = np.zeros_like(Sx)
    Sz = np.zeros_like(Sx)
    for k in range(N):
        left = np.eye(2**k)
        right = np.eye(2 ** (N - k - 1))
        Sx += np.kron(np.kron(left, sx1), right)
        Sy += np.kron(np.kron(left, sy1), right)
        Sz += np.kron(np.kron(left, sz1), right)
        sigz.append(np.kron(np.kron(left, 2.0 * sz1), right))
    S2 = Sx @ Sx + Sy @ Sy + Sz @ Sz
    Sm = Sx - 1j * Sy
    return Sx, Sy, Sz, S2, Sm, tuple(sigz)


@lru_cache(maxsize=None)
def _schur_basis(N: int):
    """Isometries W_j of shape (2^N, 2j+1, d_j) mapping block to full space.

    Built by diagonalizing S^2 in each highest-weight (Sz = j) subspace and
    lowering with S_-; the alpha labelling is therefore consistent across m.
    """
    Sx, Sy, Sz, S2, Sm, _ = _product_space_ops(N)
    layout = dicke_block_structure(N)
    sz_diag = np.diag(Sz).real
    isometries = []
    for spec in layout.blocks:
        j = spec.two_j / 2.0
        sel = np.where(np.abs(sz_diag - j) < 1e-9)[0]
        s2_sub = S2[np.ix_(sel, sel)]
        evals, vecs = np.linalg.eigh(s2_sub)
        keep = np.abs(evals - j * (j + 1)) < 1e-8
        if keep.sum() != spec.degeneracy:
            raise AssertionError(
                f"found {keep.sum()} highest-weight states for 2j={spec.two_j}, "
                f"expected {spec.degeneracy}"
            )
        hw = np.zeros((2**N, spec.degeneracy), dtype=complex)
        hw[sel] = vecs[:, keep]
        cols = [hw]
        cur = hw
        m = j
        while m > -j + 0.5:
            cur = (Sm @ cur) / math.sqrt((j + m) * (j - m + 1))
            cols.append(cur)
            m -= 1.0
        isometries.append(np.stack(cols, axis=1))  # (2^N, dim, d)
    return tuple(isometries)


def blocks_from_full(N: int, rho_full: np.ndarray) -> BlockDensityMatrix:
    """Project a full-space density matrix onto weighted PI blocks."""
    layout = dicke_block_structure(N)
    isom = _schur_basis(N)
    blocks = [
        np.einsum("pia,pq,qka->ik", W.conj(), rho_full, W, optimize=True)
        for W in isom
    ]
    return BlockDensityMatrix(N=N, layout=layout, blocks=blocks)


def full_from_blocks(state: BlockDensityMatrix) -> np.ndarray:
    """Embed weighted PI blocks back into the full 2^N space."""
    isom = _schur_basis(state.N)
    dim = 2**state.N
    rho = np.zeros((dim, dim), dtype=complex)
    for W, b, spec in zip(isom, state.blocks, state.layout.blocks):
        rho += np.einsum("pia,ik,qka->pq", W, b, W.conj(), optimize=True) / (
            spec.degeneracy
        )
    return rho


def product_css(N: int, theta: float, phi: float) -> np.ndarray:
    """Product coherent state on the full 2^N space (matches css_state phase)."""
    chi = np.array(
        [
            np.exp(-0.5j * phi) * math.cos(theta / 2.0),
            np.exp(0.5j * phi) * math.sin(theta / 2.0),
        ]
    )
    psi = np.array([1.0 + 0.0j])
    for _ in range(N):
        psi = np.kron(psi, chi)
    return psi


def brute_force_evolve(
    N: int,
    params: DerivedParams | None,
    t_grid,
    *,
    theta: float = math.pi / 2,
    phi: float = 0.0,
    rho0: np.ndarray | None = None,
    rates: tuple | None = None,
    include_hamiltonian: bool = True,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    store_states: bool = False,
) -> Trajectory:
    """Full 2^N-space Lindblad integration (validation oracle, N <= 6)."""
    if N > BRUTE_FORCE_MAX:
        raise ResourceError(f"brute force capped at N={BRUTE_FORCE_MAX}")
    t = np.asarray(t_grid, dtype=float)
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise DomainError("t_grid must be strictly increasing")
    Sx, Sy, Sz, S2, Sm, sigz = _product_space_ops(N)
    if rates is not None:
        kappa_phi, gamma1, gamma2, r = rates
    elif params is not None:
        kappa_phi = 0.0 if math.isinf(params.T2) else 0.5 / params.T2
        gamma1 = params.Gamma_gamma * (params.n_th + 1.0)
        gamma2 = params.Gamma_gamma * params.n_th
        r = params.r
    else:
        raise DomainError("either params or rates is required")
    dim = 2**N
    if include_hamiltonian:
        if params is None:
            raise DomainError("params required for the Hamiltonian")
        H = (
            -params.chi_tilde
            * ((S2 - Sz @ Sz) - params.tanh2r * (Sx @ Sx - Sy @ Sy))
            + params.Omega_tilde * Sz
        )
    else:
        H = np.zeros((dim, dim), dtype=complex)
    Z = math.exp(-2.0 * r) * Sx - 1j * math.exp(2.0 * r) * Sy
    Zd = Z.conj().T
    K = 0.5 * (gamma1 * (Zd @ Z) + gamma2 * (Z @ Zd))
    if rho0 is None:
        psi = product_css(N, theta, phi)
        rho0 = np.outer(psi, psi.conj())
    rho0 = np.asarray(rho0, dtype=complex)
    if rho0.shape != (dim, dim):
        raise DomainError(f"rho0 must be {dim}x{dim}")

    def rhs(_t, y):
        rho = y.reshape(dim, dim)
        out = -1j * (H @ rho - rho @ H)
        if gamma1 > 0:
            out += gamma1 * (Z @ rho @ Zd)
        if gamma2 > 0:
            out += gamma2 * (Zd @ rho @ Z)
        if gamma1 > 0 or gamma2 > 0:
            out -= K @ rho + rho @ K
        if kappa_phi > 0:
            acc = np.zeros_like(rho)
            for s in sigz:
                acc += s @ rho @ s
            out += kappa_phi * (acc - N * rho)
        return out.ravel()

    ops = (
        Sx,
        Sy,
        Sz,
        Sy @ Sy,
        Sz @ Sz,
        Sx @ Sx,
        0.5 * (Sy @ Sz + Sz @ Sy),
        0.5 * (Sx @ Sy + Sy @ Sx),
        0.5 * (Sx @ Sz + Sz @ Sx),
    )

    def snapshot(rho):
        vals = np.array([np.trace(op @ rho).real for op in ops])
        mean, m2 = _bundle_from_values(vals)
        return mean, m2, float(np.trace(rho).real), float(np.vdot(rho, rho).real)

    records = [snapshot(rho0)]
    states = [blocks_from_full(N, rho0)] if store_states else None
    rho_final = rho0
    if t.size > 1:
        solver = DOP853(rhs, t[0], rho0.ravel(), t_bound=t[-1], rtol=rtol, atol=atol)
        next_idx = 1
        while solver.status == "running":
            message = solver.step()
            if solver.status == "failed":
                raise IntegratorError(f"oracle failed at t={solver.t}: {message}")
            if next_idx < t.size and t[next_idx] <= solver.t:
                interp = solver.dense_output()
                while next_idx < t.size and t[next_idx] <= solver.t:
                    yk = interp(t[next_idx])
                    rho_k = yk.reshape(dim, dim)
                    records.append(snapshot(rho_k))
                    if store_states:
                        states.append(blocks_from_full(N, rho_k))
                    next_idx += 1
                    if next_idx == t.size:
                        rho_final = rho_k.copy()
        if next_idx != t.size:
            raise IntegratorError(f"oracle stopped early at t={solver.t}")
    return _trajectory_from_records(
        N,
        t,
        records,
        "oracle",
        states=states,
        final_state=blocks_from_full(N, rho_final),
    )
