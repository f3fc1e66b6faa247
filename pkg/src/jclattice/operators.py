"""Operator construction on the truncated lattice Hilbert space.

Single-site operators are small dense matrices on the 2*(n_max+1)
dimensional photon (x) qubit space; lattice operators are scipy.sparse
CSR matrices built by Kronecker embedding, site 0 slowest.

The Hamiltonian, in the frame rotating at the drive frequency,

    H = sum_i [ delta_q * s^z_i + delta_c * n_i
                + g_i (a_i^dag s^-_i + a_i s^+_i)
                + d_i (a_i + a_i^dag) ]
        - J sum_<ij> (a_i^dag a_j + a_j^dag a_i)

with delta_c = omega_c - omega_p and delta_q = omega_0 - omega_p.
Dissipation enters through the collapse operators sqrt(kappa) a_i and
sqrt(gamma) s^-_i.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import ConfigError
from .lattice import LatticeConfig, ProductStateSpec


@dataclass(frozen=True)
class LocalOperatorSet:
    """Dense single-site operators in the |n, q> basis (index 2n+q)."""

    n_max: int
    dim: int
    a: np.ndarray
    adag: np.ndarray
    n: np.ndarray
    s_minus: np.ndarray
    s_plus: np.ndarray
    s_z: np.ndarray
    identity: np.ndarray


def site_operators(n_max):
    """Build the local operator set for a cutoff of n_max photons."""
    if n_max < 0:
        raise ConfigError(f"n_max must be >= 0, got {n_max}")
    dph = n_max + 1
    a_ph = np.diag(np.sqrt(np.arange(1.0, dph)), k=1).astype(complex)
    id_ph = np.eye(dph, dtype=complex)
    id_q = np.eye(2, dtype=complex)
    # qubit basis (down, up): s^- maps up -> down
    sm_q = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
    sz_q = np.diag([-0.5, 0.5]).astype(complex)

    a = np.kron(a_ph, id_q)
    s_minus = np.kron(id_ph, sm_q)
    s_z = np.kron(id_ph, sz_q)
    return LocalOperatorSet(
        n_max=n_max,
        dim=2 * dph,
        a=a,
        adag=a.conj().T,
        n=a.conj().T @ a,
        s_minus=s_minus,
        s_plus=s_minus.conj().T,
        s_z=s_z,
        identity=np.eye(2 * dph, dtype=complex),
    )


@dataclass(frozen=True)
class EmbeddedOperator:
    """Sparse lattice operator; site is None for non-local operators."""

    matrix: sp.csr_matrix
    site: int = None

    @property
    def shape(self):
        return self.matrix.shape


def embed_operator(op, site, config):
    """Embed a single-site operator at the given site.

    op may be dense or sparse with the local dimension of that site.
    Returns an EmbeddedOperator whose matrix acts on the full lattice,
    ordered site-major with site 0 slowest.
    """
    dims = config.site_dims()
    if not 0 <= site < config.M:
        raise ConfigError(f"site {site} outside lattice of M={config.M}")
    mat = sp.csr_matrix(op)
    if mat.shape != (dims[site], dims[site]):
        raise ConfigError(
            f"operator of shape {mat.shape} does not match local dimension "
            f"{dims[site]} at site {site}"
        )
    left = 1
    for d in dims[:site]:
        left *= d
    right = 1
    for d in dims[site + 1:]:
        right *= d
    full = sp.kron(sp.identity(left, format="csr"),
                   sp.kron(mat, sp.identity(right, format="csr"), format="csr"),
                   format="csr")
    return EmbeddedOperator(matrix=full, site=site)


def build_hamiltonian(config):
    """Assemble the full sparse Hamiltonian for a LatticeConfig."""
    cutoffs = config.site_cutoffs()
    local = [site_operators(c) for c in cutoffs]
    D = config.dim
    H = sp.csr_matrix((D, D), dtype=complex)
    for i in range(config.M):
        ops = local[i]
        h_i = (config.delta_q * ops.s_z
               + config.delta_c * ops.n
               + config.g[i] * (ops.adag @ ops.s_minus + ops.a @ ops.s_plus)
               + config.d[i] * (ops.a + ops.adag))
        if np.any(h_i):
            H = H + embed_operator(h_i, i, config).matrix
    for (i, j) in config.bonds():
        ai = embed_operator(local[i].a, i, config).matrix
        aj = embed_operator(local[j].a, j, config).matrix
        hop = ai.conj().T @ aj
        H = H - config.J * (hop + hop.conj().T)
    H.sum_duplicates()
    return EmbeddedOperator(matrix=sp.csr_matrix(H), site=None)


def build_collapse_operators(config):
    """Collapse operators sqrt(kappa) a_i and sqrt(gamma) s^-_i.

    Zero-rate channels are omitted. Ordering: photon channels for all
    sites first, then qubit channels, each by ascending site index.
    """
    cutoffs = config.site_cutoffs()
    local = [site_operators(c) for c in cutoffs]
    out = []
    if config.kappa > 0:
        for i in range(config.M):
            out.append(embed_operator(math.sqrt(config.kappa) * local[i].a, i, config))
    if config.gamma > 0:
        for i in range(config.M):
            out.append(embed_operator(math.sqrt(config.gamma) * local[i].s_minus, i, config))
    return out


def _qubit_vector(qz):
    if qz == -0.5:
        return np.array([1.0, 0.0], dtype=complex)
    if qz == 0.5:
        return np.array([0.0, 1.0], dtype=complex)
    # balanced superposition
    return np.array([1.0, 1.0], dtype=complex) / math.sqrt(2.0)


def product_state(spec, config):
    """Normalized state vector for a ProductStateSpec on the lattice.

    Fock occupations must fit below the per-site cutoff. Coherent
    amplitudes are truncated and renormalized; if the truncation drops
    more probability than spec.coherent_tail_tol the state is rejected.
    """
    if len(spec.photons) != config.M:
        raise ConfigError(f"state has {len(spec.photons)} sites, lattice has M={config.M}")
    cutoffs = config.site_cutoffs()
    psi = np.array([1.0], dtype=complex)
    for i in range(config.M):
        cut = cutoffs[i]
        if spec.kind == "fock":
            n = int(spec.photons[i])
            if n > cut:
                raise ConfigError(
                    f"fock occupation {n} exceeds cutoff {cut} at site {i}"
                )
            ph = np.zeros(cut + 1, dtype=complex)
            ph[n] = 1.0
        else:
            alpha = math.sqrt(spec.photons[i])
            ns = np.arange(cut + 1)
            if alpha == 0.0:
                ph = np.zeros(cut + 1, dtype=complex)
                ph[0] = 1.0
            else:
                # log-domain amplitudes, safe for large alpha
                logs = -0.5 * alpha ** 2 + ns * math.log(alpha) \
                    - 0.5 * np.array([math.lgamma(n + 1) for n in ns])
                ph = np.exp(logs).astype(complex)
            tail = 1.0 - float(np.sum(np.abs(ph) ** 2))
            if tail > spec.coherent_tail_tol:
                raise ConfigError(
                    f"coherent state N={spec.photons[i]} loses tail mass {tail:.2e} "
                    f"above tolerance {spec.coherent_tail_tol:.2e} at cutoff {cut} (site {i})"
                )
            ph = ph / np.linalg.norm(ph)
        loc = np.kron(ph, _qubit_vector(spec.qubit_z[i]))
        psi = np.kron(psi, loc)
    return psi / np.linalg.norm(psi)


# Diagonal observable helpers ----------------------------------------------
# N_i, s^z_i and the g2 numerator are diagonal in the product basis, so all
# sampling reduces to dot products with these weight vectors.

def basis_site_indices(config):
    """Per-site local basis index (2n+q) for every global basis state.

    Returns an int array of shape (M, D).
    """
    dims = config.site_dims()
    D = config.dim
    idx = np.arange(D)
    out = np.empty((config.M, D), dtype=np.int64)
    stride = D
    for i in range(config.M):
        stride //= dims[i]
        out[i] = (idx // stride) % dims[i]
    return out


def site_photon_numbers(config):
    """(M, D) array: photon number of each global basis state at each site."""
    return basis_site_indices(config) // 2


def site_qubit_excitations(config):
    """(M, D) array: qubit occupation (0 down, 1 up) per basis state and site."""
    return basis_site_indices(config) % 2


def excitation_number(config):
    """Total excitation operator sum_i n_i + (s^z_i + 1/2), diagonal.

    Commutes with the Hamiltonian when all drives vanish.
    """
    diag = site_photon_numbers(config).sum(axis=0) + site_qubit_excitations(config).sum(axis=0)
    return EmbeddedOperator(matrix=sp.diags(diag.astype(float)).tocsr(), site=None)
