"""Independent verification machinery: master-equation solver, quadrature
cross-check, Monte Carlo sampler, and the bundled verification suite.

These tests keep sample counts and grids small; the full-size runs live in
tests/test_acceptance.py.
"""

import math

import numpy as np
import pytest

from cavityherald.core import (
    CavityParams,
    reflection_probability,
    scattering_loss,
    transmission_probability,
    with_cooperativity,
)
from cavityherald.oracle import (
    WEAK_DRIVE_MAX,
    LindbladSystem,
    build_system,
    coherence_decay_rate,
    monte_carlo_double,
    quadrature_single,
    run_verification_suite,
    steady_state_density_matrix,
    steady_state_rt,
)
from cavityherald.protocol import coherent_double, coherent_single

P1 = CavityParams.from_cooperativity(1.0)


def test_build_system_validation():
    with pytest.raises(ValueError):
        build_system(P1, 3)  # at most two atoms in the coupled state
    with pytest.raises(ValueError):
        build_system(P1, 1, n_c=0)
    with pytest.raises(ValueError):
        build_system(P1, 1, drive_flux=-1.0)
    with pytest.raises(ValueError):
        build_system(P1, 1, drive_flux=10.0 * WEAK_DRIVE_MAX)
    strong = build_system(P1, 1, drive_flux=10.0 * WEAK_DRIVE_MAX,
                          allow_strong_drive=True)
    assert isinstance(strong, LindbladSystem)


def test_system_dimensions():
    sys1 = build_system(P1, 1, n_c=3)
    assert sys1.dim == 9 * 4  # two 3-level atoms, 4 photon levels
    assert sys1.hamiltonian.shape == (36, 36)
    assert len(sys1.collapse_ops) == 4


def test_steady_state_is_a_density_matrix():
    sys1 = build_system(P1, 1)
    rho, sel = steady_state_density_matrix(sys1)
    assert abs(np.trace(rho) - 1.0) < 1e-10
    assert np.max(np.abs(rho - rho.conj().T)) < 1e-10
    assert np.linalg.eigvalsh(rho).min() > -1e-10
    assert rho.shape[0] == len(sel)


def test_empty_cavity_transmits():
    sys0 = build_system(P1, 0)
    r, t, loss = steady_state_rt(sys0)
    assert abs(r) < 1e-8
    assert abs(t - 1.0) < 1e-8
    assert abs(loss) < 1e-8


@pytest.mark.parametrize("n_atoms,x", [(1, 0.25), (1, 1.0), (2, 1.0)])
def test_steady_state_matches_closed_forms(n_atoms, x):
    sysn = build_system(with_cooperativity(P1, x), n_atoms)
    r, t, loss = steady_state_rt(sysn)
    assert abs(r / reflection_probability(x, n_atoms) - 1.0) < 0.01
    assert abs(t / transmission_probability(x, n_atoms) - 1.0) < 0.01
    assert abs(loss / scattering_loss(x, n_atoms) - 1.0) < 0.01
    # flux bookkeeping is an operator identity in steady state, so the sum
    # closes to round-off, far below the O(drive) model deviation
    assert abs(r + t + loss - 1.0) < 1e-12


def test_detuned_system_still_conserves_flux():
    p = CavityParams.from_cooperativity(1.0, delta=0.7)
    r, t, loss = steady_state_rt(build_system(p, 1))
    assert abs(r + t + loss - 1.0) < 1e-12
    # detuning spoils the impedance match: more transmission than resonant
    assert t > transmission_probability(1.0, 1)


def test_coherence_decay_matches_loss_rate():
    sys1 = build_system(P1, 1)
    rate = coherence_decay_rate(sys1)
    assert abs(rate / (scattering_loss(1.0, 1) * sys1.drive_flux) - 1) < 0.02


def test_coherence_survives_without_drive():
    sys_dark = build_system(P1, 1, drive_flux=0.0)
    assert coherence_decay_rate(sys_dark) == 0.0


def test_quadrature_agrees_with_closed_form():
    for x, eta, phi, nm in [(1.0, 1.0, math.pi / 4, 1.0),
                            (0.3, 0.6, 0.5, 2.5)]:
        p = with_cooperativity(CavityParams.from_cooperativity(1.0, eta=eta),
                               x)
        quad = quadrature_single(p, phi, nm)
        closed = coherent_single(p, phi, nm)
        assert abs(quad.p_success - closed.p_success) < 1e-8
        assert abs(quad.fidelity - closed.fidelity) < 1e-8


def test_monte_carlo_frozen_seed():
    mc = monte_carlo_double(P1, 2.0, 1_000_000, 20240817)
    assert mc.n_success == 182875
    assert mc.p_success == 0.182875
    assert math.isclose(mc.fidelity, 0.8471358689763324, rel_tol=1e-12)
    assert math.isclose(mc.p_success_err, 0.0003865640107084466,
                        rel_tol=1e-9)
    assert math.isclose(mc.fidelity_err, 0.0001325479181951111, rel_tol=1e-9)


def test_monte_carlo_reproducible_and_seed_sensitive():
    a = monte_carlo_double(P1, 2.0, 50_000, 7)
    b = monte_carlo_double(P1, 2.0, 50_000, 7)
    c = monte_carlo_double(P1, 2.0, 50_000, 8)
    assert (a.p_success, a.fidelity) == (b.p_success, b.fidelity)
    assert a.n_success != c.n_success


def test_monte_carlo_brackets_closed_form():
    mc = monte_carlo_double(P1, 2.0, 200_000, 3)
    closed = coherent_double(P1, 2.0)
    assert abs(mc.p_success - closed.p_success) < 4 * mc.p_success_err
    assert abs(mc.fidelity - closed.fidelity) < 4 * mc.fidelity_err


def test_monte_carlo_sample_floor():
    with pytest.raises(ValueError):
        monte_carlo_double(P1, 2.0, 999, 1)


def test_verification_suite_passes():
    report = run_verification_suite(samples=50_000)
    assert report["passed"] is True
    assert report["n_failed"] == 0
    assert report["n_checks"] == len(report["checks"])
    for check in report["checks"]:
        assert check["passed"] is True
        assert isinstance(check["name"], str)


def test_verification_suite_failure_path():
    # squeezing every tolerance to zero must trip the physical-deviation
    # checks and be reported per check, not raised
    report = run_verification_suite(samples=50_000, tolerance_scale=1e-9)
    assert report["passed"] is False
    assert report["n_failed"] > 0
