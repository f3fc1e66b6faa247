import itertools
import math

import numpy as np
import pytest
import scipy.sparse as sp

from jclattice import (
    ConfigError,
    LatticeConfig,
    ProductStateSpec,
    build_collapse_operators,
    build_hamiltonian,
    embed_operator,
    excitation_number,
    product_state,
    site_operators,
)
from jclattice.operators import (
    basis_site_indices,
    site_photon_numbers,
    site_qubit_excitations,
)


def test_local_operator_actions():
    ops = site_operators(3)
    assert ops.dim == 8
    # a |n, q> = sqrt(n) |n-1, q>
    for n in range(1, 4):
        for q in (0, 1):
            v = np.zeros(8)
            v[2 * n + q] = 1.0
            out = ops.a @ v
            expect = np.zeros(8)
            expect[2 * (n - 1) + q] = math.sqrt(n)
            np.testing.assert_allclose(out, expect, atol=1e-15)
    # s- |n, up> = |n, down>, s- |n, down> = 0
    v = np.zeros(8)
    v[2 * 1 + 1] = 1.0
    out = ops.s_minus @ v
    assert out[2 * 1 + 0] == 1.0 and np.count_nonzero(out) == 1
    assert np.all(ops.s_minus @ (ops.s_minus @ v) == 0)


def test_local_number_and_inversion_are_diagonal():
    ops = site_operators(2)
    np.testing.assert_allclose(np.diag(ops.n).real, [0, 0, 1, 1, 2, 2], atol=1e-15)
    np.testing.assert_allclose(np.diag(ops.s_z).real, [-0.5, 0.5] * 3, atol=1e-15)
    assert np.count_nonzero(ops.n - np.diag(np.diag(ops.n))) == 0


def test_boson_commutator_below_truncation_edge():
    ops = site_operators(5)
    comm = ops.a @ ops.adag - ops.adag @ ops.a
    # exact identity except in the top photon level, the usual truncation artifact
    np.testing.assert_allclose(np.diag(comm).real[:-2], 1.0, atol=1e-14)


def test_embed_matches_explicit_kron():
    cfg = LatticeConfig(M=3, n_max_site=[1, 2, 1], J=1.0)
    ops1 = site_operators(2)
    emb = embed_operator(ops1.n, 1, cfg).matrix.toarray()
    d0, d1, d2 = cfg.site_dims()
    direct = np.kron(np.eye(d0), np.kron(ops1.n, np.eye(d2)))
    np.testing.assert_allclose(emb, direct, atol=1e-15)


def test_embed_validates_site_and_shape():
    cfg = LatticeConfig(M=2, n_max=1)
    with pytest.raises(ConfigError):
        embed_operator(np.eye(3), 0, cfg)
    with pytest.raises(ConfigError):
        embed_operator(np.eye(4), 2, cfg)


def test_single_site_hamiltonian_spectrum():
    # one undriven uncoupled site: H = delta_q s_z + delta_c n
    cfg = LatticeConfig(M=1, n_max=1, g=0.0)
    H = build_hamiltonian(cfg).matrix.toarray()
    np.testing.assert_allclose(np.diag(H).real, [-0.005, 0.005, 0.005, 0.015], atol=1e-15)
    assert np.count_nonzero(H - np.diag(np.diag(H))) == 0


def _dense_reference_hamiltonian(cfg):
    """Independent construction, one literal kron chain per term."""
    cuts = cfg.site_cutoffs()
    dims = cfg.site_dims()

    def chain(mats):
        out = np.array([[1.0 + 0j]])
        for m in mats:
            out = np.kron(out, m)
        return out

    def local(site, mat):
        mats = [np.eye(d, dtype=complex) for d in dims]
        mats[site] = mat
        return chain(mats)

    H = np.zeros((cfg.dim, cfg.dim), dtype=complex)
    for i in range(cfg.M):
        o = site_operators(cuts[i])
        H += cfg.delta_q * local(i, o.s_z) + cfg.delta_c * local(i, o.n)
        H += cfg.g[i] * (local(i, o.adag @ o.s_minus) + local(i, o.a @ o.s_plus))
        H += cfg.d[i] * local(i, o.a + o.adag)
    for (i, j) in cfg.bonds():
        oi, oj = site_operators(cuts[i]), site_operators(cuts[j])
        hop = local(i, oi.adag) @ local(j, oj.a)
        H += -cfg.J * (hop + hop.conj().T)
    return H


def test_hamiltonian_matches_dense_reference():
    cfg = LatticeConfig(M=2, J=1.3, delta_c=0.07, delta_q=-0.05,
                        g=[0.9, 1.7], d=[0.3, 0.2], n_max=1)
    H = build_hamiltonian(cfg).matrix.toarray()
    np.testing.assert_allclose(H, _dense_reference_hamiltonian(cfg), atol=1e-13)


def test_hamiltonian_matches_dense_reference_on_ring():
    cfg = LatticeConfig(M=3, J=0.7, delta_c=0.2, delta_q=0.1,
                        g=[0.5, 0.0, 1.1], d=[0.0, 0.4, 0.0],
                        n_max_site=[2, 1, 1], periodic=True)
    H = build_hamiltonian(cfg).matrix.toarray()
    ref = _dense_reference_hamiltonian(cfg)
    np.testing.assert_allclose(H, ref, atol=1e-13)
    np.testing.assert_allclose(H, H.conj().T, atol=1e-13)


def test_collapse_operators_order_and_scale():
    cfg = LatticeConfig(M=2, n_max=1, kappa=0.09, gamma=0.25)
    ops = build_collapse_operators(cfg)
    assert [c.site for c in ops] == [0, 1, 0, 1]
    loc = site_operators(1)
    ref_a0 = math.sqrt(0.09) * embed_operator(loc.a, 0, cfg).matrix
    ref_s1 = math.sqrt(0.25) * embed_operator(loc.s_minus, 1, cfg).matrix
    assert abs(ops[0].matrix - ref_a0).max() < 1e-15
    assert abs(ops[3].matrix - ref_s1).max() < 1e-15


def test_zero_rate_channels_are_dropped():
    assert build_collapse_operators(LatticeConfig(M=2, n_max=1)) == []
    only_kappa = build_collapse_operators(LatticeConfig(M=3, n_max=1, kappa=0.1))
    assert len(only_kappa) == 3


def test_fock_product_state_hits_single_basis_index():
    cfg = LatticeConfig(M=2, n_max_site=[2, 1])
    spec = ProductStateSpec(photons=[1, 0], qubit_z=[-0.5, 0.5])
    psi = product_state(spec, cfg)
    # site 0 slowest: global index = (2n0+q0)*dim1 + (2n1+q1)
    idx = (2 * 1 + 0) * 4 + (2 * 0 + 1)
    assert psi[idx] == 1.0
    assert np.count_nonzero(psi) == 1


def test_fock_state_above_cutoff_is_rejected():
    cfg = LatticeConfig(M=1, n_max=2)
    with pytest.raises(ConfigError):
        product_state(ProductStateSpec(photons=[3], qubit_z=[-0.5]), cfg)


def test_state_length_must_match_lattice():
    cfg = LatticeConfig(M=2, n_max=1)
    with pytest.raises(ConfigError):
        product_state(ProductStateSpec(photons=[1], qubit_z=[-0.5]), cfg)


def test_coherent_state_moments():
    cfg = LatticeConfig(M=1, n_max=30)
    spec = ProductStateSpec(photons=[4.0], qubit_z=[-0.5], kind="coherent")
    psi = product_state(spec, cfg)
    n_op = site_photon_numbers(cfg)[0]
    pops = np.abs(psi) ** 2
    assert abs(n_op @ pops - 4.0) < 1e-8
    # Poissonian: <n(n-1)> = <n>^2
    assert abs((n_op * (n_op - 1)) @ pops - 16.0) < 1e-6


def test_coherent_tail_guard_fires_on_tight_cutoff():
    cfg = LatticeConfig(M=1, n_max=4)
    spec = ProductStateSpec(photons=[4.0], qubit_z=[-0.5], kind="coherent")
    with pytest.raises(ConfigError, match="tail"):
        product_state(spec, cfg)


def test_coherent_zero_is_vacuum():
    cfg = LatticeConfig(M=1, n_max=3)
    psi = product_state(ProductStateSpec(photons=[0.0], qubit_z=[-0.5], kind="coherent"), cfg)
    assert psi[0] == 1.0 and np.count_nonzero(psi) == 1


def test_balanced_qubit_superposition():
    cfg = LatticeConfig(M=1, n_max=0)
    psi = product_state(ProductStateSpec(photons=[0], qubit_z=[0.0]), cfg)
    ops = site_operators(0)
    assert abs(np.vdot(psi, ops.s_z @ psi)) < 1e-15
    assert abs(np.vdot(psi, ops.s_minus @ psi) - 0.5) < 1e-15


def test_basis_index_tables_match_enumeration():
    cfg = LatticeConfig(M=2, n_max_site=[2, 1])
    idx = basis_site_indices(cfg)
    ns = site_photon_numbers(cfg)
    qs = site_qubit_excitations(cfg)
    k = 0
    for i0 in range(6):
        for i1 in range(4):
            assert idx[0, k] == i0 and idx[1, k] == i1
            assert ns[0, k] == i0 // 2 and ns[1, k] == i1 // 2
            assert qs[0, k] == i0 % 2 and qs[1, k] == i1 % 2
            k += 1


def test_excitation_number_expectation_and_conservation():
    cfg = LatticeConfig(M=2, n_max=2, g=[1.2, 0.7])
    Nex = excitation_number(cfg).matrix
    psi = product_state(ProductStateSpec(photons=[1, 0], qubit_z=[0.5, -0.5]), cfg)
    assert abs(np.vdot(psi, Nex @ psi) - 2.0) < 1e-14
    H = build_hamiltonian(cfg).matrix
    assert abs(H @ Nex - Nex @ H).max() < 1e-12
    driven = LatticeConfig(M=2, n_max=2, g=[1.2, 0.7], d=[0.3, 0.0])
    Hd = build_hamiltonian(driven).matrix
    assert abs(Hd @ Nex - Nex @ Hd).max() > 1e-3
