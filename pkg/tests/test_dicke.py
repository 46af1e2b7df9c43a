"""Spin-sector bookkeeping: operators, block layout, coherent states."""

import math

import numpy as np
import pytest

from dicke_squeeze.dicke import (
    block_degeneracy,
    build_collective_ops,
    css_state,
    dicke_block_structure,
    polar_rotation_amplitudes,
)
from dicke_squeeze.dynamics import BlockDensityMatrix
from dicke_squeeze.errors import DomainError


def test_operator_algebra():
    for j in (0.5, 1.0, 2.5, 7.0):
        ops = build_collective_ops(j)
        comm = ops.sx @ ops.sy - ops.sy @ ops.sx
        assert np.abs(comm - 1j * ops.sz).max() < 1e-13
        s2 = ops.sx @ ops.sx + ops.sy @ ops.sy + ops.sz @ ops.sz
        assert np.abs(s2 - j * (j + 1) * np.eye(ops.dim)).max() < 1e-12
        assert np.abs(ops.sp - (ops.sx + 1j * ops.sy)).max() < 1e-13
        assert np.abs(ops.sp.conj().T - ops.sm).max() == 0.0


def test_ladder_matrix_elements():
    # <j,m+1|S+|j,m> = sqrt(j(j+1) - m(m+1)), m ordered +j..-j
    j = 3.0
    ops = build_collective_ops(j)
    for row in range(ops.dim - 1):
        m = j - (row + 1)
        expect = math.sqrt(j * (j + 1) - m * (m + 1))
        assert ops.sp[row, row + 1] == pytest.approx(expect, rel=1e-14)


def test_operators_cached_and_readonly():
    a = build_collective_ops(1.5)
    b = build_collective_ops(1.5)
    assert a is b
    with pytest.raises(ValueError):
        a.sx[0, 0] = 1.0


def test_bad_j_rejected():
    with pytest.raises(DomainError):
        build_collective_ops(0.7)
    with pytest.raises(DomainError):
        build_collective_ops(-1.0)


def test_block_degeneracy_small_n_by_hand():
    # N=4: d(j=2)=1, d(j=1)=3, d(j=0)=2; N=5: d(5/2)=1, d(3/2)=4, d(1/2)=5
    assert block_degeneracy(4, 4) == 1
    assert block_degeneracy(4, 2) == 3
    assert block_degeneracy(4, 0) == 2
    assert block_degeneracy(5, 5) == 1
    assert block_degeneracy(5, 3) == 4
    assert block_degeneracy(5, 1) == 5
    # out of range / parity mismatch
    assert block_degeneracy(4, 6) == 0
    assert block_degeneracy(4, 3) == 0
    assert block_degeneracy(4, -2) == 0


@pytest.mark.parametrize("N", [1, 2, 3, 6, 11, 40])
def test_layout_counting_sum_rule(N):
    layout = dicke_block_structure(N)
    assert layout.N == N
    assert layout.blocks[0].two_j == N
    assert layout.blocks[0].degeneracy == 1
    total = sum(b.degeneracy * b.dim for b in layout.blocks)
    assert total == 2**N
    two_js = [b.two_j for b in layout.blocks]
    assert two_js == sorted(two_js, reverse=True)
    assert min(two_js) == (0 if N % 2 == 0 else 1)


def test_layout_index_lookup():
    layout = dicke_block_structure(6)
    for idx, spec in enumerate(layout.blocks):
        assert layout.index_of_two_j(spec.two_j) == idx
    with pytest.raises(DomainError):
        layout.index_of_two_j(5)
    with pytest.raises(DomainError):
        layout.index_of_two_j(8)


def test_css_moments_match_bloch_direction():
    j, theta, phi = 5.0, 1.1, 0.7
    psi = css_state(j, theta, phi)
    assert np.vdot(psi, psi).real == pytest.approx(1.0, abs=1e-13)
    ops = build_collective_ops(j)
    sx = np.vdot(psi, ops.sx @ psi).real
    sy = np.vdot(psi, ops.sy @ psi).real
    sz = np.vdot(psi, ops.sz @ psi).real
    assert sx == pytest.approx(j * math.sin(theta) * math.cos(phi), abs=1e-12)
    assert sy == pytest.approx(j * math.sin(theta) * math.sin(phi), abs=1e-12)
    assert sz == pytest.approx(j * math.cos(theta), abs=1e-12)


def test_css_transverse_variance_isotropic():
    # CSS variance perpendicular to the mean direction is j/2 in every
    # transverse quadrature
    j = 4.0
    psi = css_state(j, math.pi / 2.0, 0.0)
    ops = build_collective_ops(j)
    for op in (ops.sy, ops.sz):
        var = np.vdot(psi, op @ op @ psi).real - np.vdot(psi, op @ psi).real ** 2
        assert var == pytest.approx(j / 2.0, rel=1e-12)


def test_polar_rotation_amplitudes_binomial():
    # |<j,m|theta,0>|^2 is the binomial distribution over m = j..-j
    j, theta = 3.0, 0.9
    amps = polar_rotation_amplitudes(j, theta)
    n = round(2 * j)
    p = math.cos(theta / 2.0) ** 2
    for k in range(n + 1):
        expect = math.comb(n, k) * p ** (n - k) * (1 - p) ** k
        assert amps[k] ** 2 == pytest.approx(expect, abs=1e-12)


def test_block_density_matrix_states():
    rho = BlockDensityMatrix.from_css(5)
    rho.assert_valid()
    assert rho.trace() == pytest.approx(1.0, abs=1e-13)
    assert rho.purity() == pytest.approx(1.0, abs=1e-12)
    assert np.abs(rho.blocks[1]).max() == 0.0

    mm = BlockDensityMatrix.maximally_mixed(5)
    mm.assert_valid()
    assert mm.trace() == pytest.approx(1.0, abs=1e-13)
    assert mm.purity() == pytest.approx(2.0**-5, rel=1e-12)


def test_block_accessor_by_j():
    rho = BlockDensityMatrix.from_css(4)
    assert rho.block(2.0) is rho.blocks[0]
    assert rho.block(0.0) is rho.blocks[2]
    with pytest.raises(DomainError):
        rho.block(1.5)


def test_layout_rejects_bad_n():
    with pytest.raises(DomainError):
        dicke_block_structure(0)
    with pytest.raises(DomainError):
        dicke_block_structure(2.5)
