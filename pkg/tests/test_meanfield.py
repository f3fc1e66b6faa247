import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from jclattice import (
    ConfigError,
    LatticeConfig,
    MeanfieldSettings,
    SemiclassicalState,
    evolve_meanfield,
    initial_state,
    meanfield_rhs,
)


def test_initial_state_layout_and_validation():
    cfg = LatticeConfig(M=3, g=1.0)
    st = initial_state([4.0, 0.0, 1.0], [-0.5, 0.5, 0.0], cfg, sm_noise=1e-3)
    np.testing.assert_allclose(st.alpha, [2.0, 0.0, 1.0])
    np.testing.assert_allclose(st.sm, [1e-3] * 3)
    np.testing.assert_allclose(st.sz, [-0.5, 0.5, 0.0])
    with pytest.raises(ConfigError):
        initial_state([1.0], [-0.5, -0.5], cfg)
    with pytest.raises(ConfigError):
        initial_state([-1.0, 0.0, 0.0], [-0.5, -0.5, -0.5], cfg)
    with pytest.raises(ConfigError):
        initial_state([1.0, 0.0, 0.0], [-0.7, -0.5, -0.5], cfg)


def test_state_shape_mismatch_rejected():
    with pytest.raises(ConfigError):
        SemiclassicalState(alpha=[1.0, 0.0], sm=[0.0], sz=[-0.5, -0.5])


def test_decoupled_dimer_oscillates_at_twice_the_hopping():
    # g = 0 turns the dimer into two linearly coupled oscillators whose
    # population imbalance is exactly cos(2Jt)
    cfg = LatticeConfig(M=2, J=1.0, delta_c=0.0, g=0.0)
    init = initial_state([7.0, 0.0], [-0.5, -0.5], cfg)
    s = evolve_meanfield(init, cfg, MeanfieldSettings(t_max=20.0, sample_dt=0.02,
                                                      rtol=1e-10, atol=1e-12))
    np.testing.assert_allclose(s.z, np.cos(2.0 * s.times), atol=1e-6)
    np.testing.assert_allclose(s.N.sum(axis=1), 7.0, atol=1e-8)


def test_spin_length_is_conserved_without_qubit_decay():
    cfg = LatticeConfig(M=2, g=[3.0, 5.0], d=[0.2, 0.0], kappa=0.08, gamma=0.0)
    init = SemiclassicalState(alpha=[2.0, 0.5j], sm=[0.1 + 0.05j, -0.2], sz=[0.3, -0.1])
    length0 = np.abs(init.sm) ** 2 + init.sz**2
    s = evolve_meanfield(init, cfg, MeanfieldSettings(t_max=50.0, sample_dt=0.5,
                                                      rtol=1e-10, atol=1e-12))
    fin = s.final_state
    np.testing.assert_allclose(np.abs(fin.sm) ** 2 + fin.sz**2, length0, atol=1e-9)


def test_closed_system_conserves_excitations():
    cfg = LatticeConfig(M=3, g=[2.0, 1.0, 0.5], delta_c=0.3, delta_q=0.2)
    init = SemiclassicalState(alpha=[1.5, 0.0, 0.2j], sm=[0.2, 0.3j, 0.0],
                              sz=[0.1, -0.4, 0.5])
    s = evolve_meanfield(init, cfg, MeanfieldSettings(t_max=30.0, sample_dt=0.3,
                                                      rtol=1e-11, atol=1e-13))
    nex = s.N.sum(axis=1) + (s.sz + 0.5).sum(axis=1)
    np.testing.assert_allclose(nex, nex[0], atol=1e-8)


def test_driven_damped_cavity_reaches_known_steady_state():
    # linear single mode: steady population d^2 / (delta^2 + kappa^2/4);
    # the transient dies at rate kappa/2, so the horizon must be >> 2/kappa
    cfg = LatticeConfig(M=1, g=0.0, d=0.2, delta_c=0.01, kappa=0.04)
    init = initial_state([0.0], [-0.5], cfg)
    s = evolve_meanfield(init, cfg, MeanfieldSettings(t_max=2000.0, sample_dt=10.0,
                                                      rtol=1e-11, atol=1e-13))
    expect = 0.2**2 / (0.01**2 + 0.04**2 / 4)
    assert s.N[-1, 0] == pytest.approx(expect, rel=1e-6)


def _reference_rhs(cfg):
    """Textbook form of the equations, written independently in complex form."""
    M = cfg.M
    g = np.asarray(cfg.g)
    d = np.asarray(cfg.d)

    def rhs(t, y):
        a = y[0:M] + 1j * y[M:2 * M]
        sm = y[2 * M:3 * M] + 1j * y[3 * M:4 * M]
        sz = y[4 * M:5 * M].real
        hop = np.zeros(M, dtype=complex)
        for (i, j) in cfg.bonds():
            hop[i] += a[j]
            hop[j] += a[i]
        da = (-1j * cfg.delta_c * a - 1j * g * sm + 1j * cfg.J * hop
              - 0.5 * cfg.kappa * a - 1j * d)
        dsm = -1j * cfg.delta_q * sm + 2j * g * a * sz - 0.5 * cfg.gamma * sm
        dsz = 2.0 * g * np.imag(np.conj(sm) * a) - cfg.gamma * (sz + 0.5)
        return np.concatenate([da.real, da.imag, dsm.real, dsm.imag, dsz])

    return rhs


@pytest.mark.parametrize("periodic,t_end", [(False, 40.0), (True, 15.0)])
def test_agrees_with_independent_integrator(periodic, t_end):
    # the ring case is chaotic (local error grows ~ e^{0.8 t}), so its
    # comparison horizon is kept short of the predictability limit
    cfg = LatticeConfig(M=3, J=1.0, delta_c=0.01, delta_q=0.01,
                        g=[6.0, 0.0, 4.0], d=[0.05, 0.0, 0.02],
                        kappa=0.03, gamma=0.02, periodic=periodic)
    init = initial_state([5.0, 0.0, 2.0], [-0.5, 0.5, -0.5], cfg, sm_noise=1e-6)
    s = evolve_meanfield(init, cfg, MeanfieldSettings(t_max=t_end, sample_dt=1.0,
                                                      rtol=1e-11, atol=1e-13))
    y0 = np.concatenate([init.alpha.real, init.alpha.imag,
                         init.sm.real, init.sm.imag, init.sz])
    ref = solve_ivp(_reference_rhs(cfg), (0.0, t_end), y0, method="DOP853",
                    rtol=1e-11, atol=1e-13, dense_output=True)
    assert ref.success
    yf = ref.sol(t_end)
    fin = s.final_state
    M = cfg.M
    np.testing.assert_allclose(fin.alpha, yf[0:M] + 1j * yf[M:2 * M], atol=1e-6)
    np.testing.assert_allclose(fin.sm, yf[2 * M:3 * M] + 1j * yf[3 * M:4 * M], atol=1e-6)
    np.testing.assert_allclose(fin.sz, yf[4 * M:5 * M], atol=1e-6)


def test_rhs_entry_point_matches_reference():
    cfg = LatticeConfig(M=4, J=1.0, g=[1.0, 2.0, 0.0, 0.5], d=[0.1, 0.0, 0.0, 0.0],
                        kappa=0.05, gamma=0.01, periodic=True)
    st = SemiclassicalState(alpha=[1.0, 0.2j, 0.0, -0.3], sm=[0.1, 0.0, 0.2j, 0.0],
                            sz=[-0.5, 0.5, 0.0, -0.2])
    out = meanfield_rhs(st, cfg)
    y0 = np.concatenate([st.alpha.real, st.alpha.imag, st.sm.real, st.sm.imag, st.sz])
    ref = _reference_rhs(cfg)(0.0, y0)
    M = cfg.M
    np.testing.assert_allclose(out.alpha, ref[0:M] + 1j * ref[M:2 * M], atol=1e-13)
    np.testing.assert_allclose(out.sm, ref[2 * M:3 * M] + 1j * ref[3 * M:4 * M], atol=1e-13)
    np.testing.assert_allclose(out.sz, ref[4 * M:5 * M], atol=1e-13)


def test_localization_transition_in_a_dimer():
    # the dimer threshold sits at 2.8 sqrt(N): slightly above it the initial
    # imbalance stays pinned, slightly below it the light spreads completely
    N0 = 20.0
    for factor, trapped in ((1.05, True), (0.95, False)):
        g = factor * 2.8 * math.sqrt(N0)
        cfg = LatticeConfig(M=2, g=g, delta_c=0.0, delta_q=0.0)
        init = initial_state([N0, 0.0], [-0.5, -0.5], cfg)
        s = evolve_meanfield(init, cfg, MeanfieldSettings(t_max=50.0, sample_dt=0.1))
        if trapped:
            assert s.z.min() > 0.9
        else:
            assert s.z.min() < 0.0


def test_precision_flags_stay_clear_on_smooth_runs():
    cfg = LatticeConfig(M=2, g=1.0, kappa=0.1)
    init = initial_state([1.0, 0.0], [-0.5, -0.5], cfg)
    s = evolve_meanfield(init, cfg, MeanfieldSettings(t_max=10.0, sample_dt=0.1))
    assert not s.precision_limited.any()
    assert s.meta["engine"] == "meanfield"


def test_settings_validation():
    with pytest.raises(ConfigError):
        MeanfieldSettings(t_max=0.0, sample_dt=0.1)
    with pytest.raises(ConfigError):
        MeanfieldSettings(t_max=1.0, sample_dt=2.0)
    with pytest.raises(ConfigError):
        MeanfieldSettings(t_max=1.0, sample_dt=0.1, rtol=0.0)
    cfg = LatticeConfig(M=2, g=1.0)
    init = initial_state([1.0, 0.0], [-0.5, -0.5], cfg)
    with pytest.raises(ConfigError):
        evolve_meanfield("not a state", cfg, MeanfieldSettings(t_max=1.0, sample_dt=0.1))
    with pytest.raises(ConfigError):
        evolve_meanfield(init, cfg, "not settings")
