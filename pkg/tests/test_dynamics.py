"""Block-space Lindblad integration against analytic and brute-force oracles."""

import math

import numpy as np
import pytest

from dicke_squeeze.dicke import css_state, dicke_block_structure
from dicke_squeeze.dynamics import (
    BlockDensityMatrix,
    UnitaryPropagator,
    blocks_from_full,
    brute_force_evolve,
    build_liouvillian,
    default_block_depth,
    evolve,
    evolve_unitary,
    full_from_blocks,
    product_css,
    trace_distance,
)
from dicke_squeeze.errors import CutoffWarning, DomainError, ResourceError
from dicke_squeeze.hamiltonian import build_spin_hamiltonian
from dicke_squeeze.params import RawParams, Scheme, derive_chain

WB = 2.0 * math.pi * 1.0e9
G1K = 2.0 * math.pi * 1.0e3


def dissipative_params(omega_r=2.0 * math.pi * 8.0e4, n_th=1.0,
                       scheme=Scheme.TAT_YZ, N=4):
    raw = RawParams(omega_b=WB, g=G1K, Q_m=1.0e6, T2=0.01, n_th=n_th,
                    omega_r=omega_r, scheme_override=scheme, N=N)
    return derive_chain(raw)


def zero_h(j):
    dim = round(2 * j) + 1
    return np.zeros((dim, dim), dtype=complex)


def test_single_spin_dephasing_rate():
    # free dephasing at rate 1/(2 T2): <Sx>(t) = (1/2) e^{-t/T2}
    T2 = 0.02
    L = build_liouvillian(1, rates=(0.5 / T2, 0.0, 0.0, 0.0), h_builder=zero_h)
    t = np.linspace(0.0, 2.0 * T2, 9)
    traj = evolve(BlockDensityMatrix.from_css(1), L, t, rtol=1e-11, atol=1e-14)
    assert np.abs(traj.Sx - 0.5 * np.exp(-t / T2)).max() < 1e-10
    assert np.abs(traj.Sz).max() < 1e-12
    assert np.abs(traj.trace - 1.0).max() < 1e-12


def test_one_axis_twisting_coherence_collapse():
    # <Sx>(t) = (N/2) cos^{N-1}(chi t) for twisting chi Sz^2 from a CSS
    # along x; the block Liouvillian with no dissipation must track it
    N, chi = 14, 350.0
    h = build_spin_hamiltonian(N / 2.0, chi=chi, tanh2r=0.0)
    L = build_liouvillian(N, rates=(0.0, 0.0, 0.0, 0.0),
                          h_builder=lambda j: build_spin_hamiltonian(
                              j, chi=chi, tanh2r=0.0).matrix)
    # stay ahead of the coherence collapse so xi2 remains well conditioned
    t = np.linspace(0.0, 0.5 / chi, 11)
    traj = evolve(BlockDensityMatrix.from_css(N), L, t, rtol=1e-11)
    expect = (N / 2.0) * np.cos(chi * t) ** (N - 1)
    assert np.abs(traj.Sx - expect).max() < 1e-8

    # unitary propagator path gives the same trajectory
    psi0 = css_state(N / 2.0, math.pi / 2.0, 0.0)
    traju = evolve_unitary(h, psi0, t)
    assert traju.source == "unitary"
    assert np.abs(traju.Sx - expect).max() < 1e-9
    assert np.abs(traju.xi2 - traj.xi2).max() < 1e-7


def test_block_solver_matches_brute_force_dissipative():
    # full 2^N Lindblad with local sigma_z dephasing vs the block solver
    N = 3
    p = dissipative_params(N=N)
    t = np.linspace(0.0, 2.0e-3, 7)
    ref = brute_force_evolve(N, p, t)
    L = build_liouvillian(N, p)
    traj = evolve(BlockDensityMatrix.from_css(N), L, t, rtol=1e-11, atol=1e-13)
    assert np.abs(ref.mean - traj.mean).max() < 1e-8
    assert np.abs(ref.second - traj.second).max() < 1e-8
    assert np.abs(ref.xi2 - traj.xi2).max() < 1e-7
    assert np.abs(traj.trace - 1.0).max() < 1e-10


def test_brute_force_size_guard():
    p = dissipative_params(N=7)
    with pytest.raises(ResourceError):
        brute_force_evolve(7, p, np.linspace(0.0, 1.0e-4, 3))


def test_maximally_mixed_stationary_under_dephasing():
    N = 6
    L = build_liouvillian(N, rates=(240.0, 0.0, 0.0, 0.0), h_builder=zero_h)
    mm = BlockDensityMatrix.maximally_mixed(N)
    out = [np.zeros_like(b) for b in mm.blocks]
    L.apply(mm.blocks, out, len(mm.blocks))
    assert max(np.abs(b).max() for b in out) < 1e-12


def test_dephasing_conserves_total_trace():
    # the j -> j+-1 transfer moves weight between sectors; the sum is exact
    N = 6
    rng = np.random.default_rng(5)
    layout = dicke_block_structure(N)
    blocks = []
    for spec in layout.blocks:
        A = rng.normal(size=(spec.dim, spec.dim))
        A = A @ A.T + np.eye(spec.dim)
        blocks.append((A / np.trace(A)).astype(complex) / len(layout.blocks))
    L = build_liouvillian(N, rates=(100.0, 3.0, 2.0, 0.1), h_builder=zero_h)
    out = [np.zeros_like(b) for b in blocks]
    L.apply(blocks, out, len(blocks))
    assert abs(sum(np.trace(b).real for b in out)) < 1e-12


def test_evolution_guards_hold():
    N = 8
    p = dissipative_params(N=N)
    L = build_liouvillian(N, p)
    t = np.linspace(0.0, 3.0e-3, 6)
    traj = evolve(BlockDensityMatrix.from_css(N), L, t, store_states=True)
    assert np.abs(traj.trace - 1.0).max() < 1e-9
    assert np.all(traj.purity <= 1.0 + 1e-9)
    for state in traj.states:
        state.assert_valid()
    assert traj.final_state.trace() == pytest.approx(1.0, abs=1e-9)


def test_time_rate_scale_invariance():
    # (chi, t) -> (s chi, t/s) with all rates scaled leaves xi2 unchanged
    N, s = 6, 37.0
    base_rates = (40.0, 1.5, 1.0, 0.2)
    t = np.linspace(0.0, 1.0e-2, 6)
    chi = 900.0

    def build(scale):
        return build_liouvillian(
            N, rates=tuple(r * scale for r in base_rates[:3]) + (0.2,),
            h_builder=lambda j: build_spin_hamiltonian(
                j, chi=chi * scale, tanh2r=1.0 / 3.0).matrix)

    a = evolve(BlockDensityMatrix.from_css(N), build(1.0), t, rtol=1e-11)
    b = evolve(BlockDensityMatrix.from_css(N), build(s), t / s, rtol=1e-11)
    assert np.abs(a.xi2 - b.xi2).max() < 1e-9


def test_schur_transform_roundtrip():
    N = 5
    p = dissipative_params(N=N)
    t = np.linspace(0.0, 1.5e-3, 4)
    ref = brute_force_evolve(N, p, t, store_states=True)
    state = ref.states[-1]
    full = full_from_blocks(state)
    assert np.trace(full).real == pytest.approx(1.0, abs=1e-10)
    back = blocks_from_full(N, full)
    assert trace_distance(state, back) < 1e-10


def test_product_css_matches_block_css():
    N, theta, phi = 4, 1.2, 0.8
    psi = product_css(N, theta, phi)
    rho = blocks_from_full(N, np.outer(psi, psi.conj()))
    css = BlockDensityMatrix.from_css(N, theta=theta, phi=phi)
    assert trace_distance(rho, css) < 1e-12


def test_depth_heuristic_monotone_and_capped():
    N = 60
    n_blocks = len(dicke_block_structure(N).blocks)
    assert default_block_depth(N, 0.0, 1.0) == 1
    d_short = default_block_depth(N, 50.0, 1.0e-4)
    d_long = default_block_depth(N, 50.0, 1.0e-1)
    assert 1 <= d_short <= d_long <= n_blocks
    assert default_block_depth(N, 1.0e6, 10.0) == n_blocks


def test_shallow_depth_warns_on_trace_leak():
    N = 10
    T2 = 1.0e-3
    L = build_liouvillian(N, rates=(0.5 / T2, 0.0, 0.0, 0.0), h_builder=zero_h)
    t = np.linspace(0.0, 3.0 * T2, 4)

    # enough depth keeps the trace to integration accuracy
    deep = evolve(BlockDensityMatrix.from_css(N), L, t)
    assert np.abs(deep.trace - 1.0).max() < 1e-9

    # truncating the cascade leaks population out of the retained sectors
    with pytest.warns(CutoffWarning):
        evolve(BlockDensityMatrix.from_css(N), L,
               np.linspace(0.0, 3.0e-6, 4), block_depth=3)


def test_evolve_validates_grid():
    N = 2
    p = dissipative_params(N=N)
    L = build_liouvillian(N, p)
    rho = BlockDensityMatrix.from_css(N)
    with pytest.raises(DomainError):
        evolve(rho, L, np.array([0.0, 2.0e-4, 1.0e-4]))
    with pytest.raises(DomainError):
        evolve(rho, L, np.zeros((2, 2)))


def test_trajectory_csv_roundtrip(tmp_path):
    N = 4
    p = dissipative_params(N=N)
    L = build_liouvillian(N, p)
    traj = evolve(BlockDensityMatrix.from_css(N), L, np.linspace(0, 1e-3, 5))
    path = tmp_path / "traj.csv"
    traj.to_csv(path)
    text = path.read_text()
    assert text.rstrip().endswith("source=exact")
    data = np.genfromtxt(path, delimiter=",", names=True, comments="#")
    assert data.shape == (5,)
    assert np.abs(data["xi2"] - traj.xi2).max() < 1e-15
    assert np.abs(data["t"] - traj.t).max() < 1e-15


def test_unitary_propagator_conserves_norm_and_energy():
    j = 5.0
    h = build_spin_hamiltonian(j, chi=120.0, tanh2r=1.0 / 3.0)
    psi0 = css_state(j, math.pi / 2.0, 0.3)
    prop = UnitaryPropagator(h)  # j inferred from the Hamiltonian bundle
    t = np.linspace(0.0, 4.0e-3, 9)
    amps = prop.states(psi0, t)
    norms = np.einsum("it,it->t", amps.conj(), amps).real
    assert np.abs(norms - 1.0).max() < 1e-12
    energies = np.einsum("it,ik,kt->t", amps.conj(), h.matrix, amps).real
    assert np.abs(energies - energies[0]).max() < 1e-10 * abs(energies[0])

    traj = prop.trajectory(psi0, t)
    assert np.abs(traj.final_psi - amps[:, -1]).max() == 0.0
    assert np.abs(traj.purity - 1.0).max() < 1e-12
