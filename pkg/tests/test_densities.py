import math

import numpy as np
import pytest
from scipy import integrate

import oracles
from lastdrawdown.densities import (
    ProcessSpec,
    depth_tail_prob,
    joint_dl_density,
    joint_length_integral,
    length_tail_prob,
    psi_depth,
    rho_length,
)
from lastdrawdown.errors import DomainError

SR_GRID = [0.0, 0.25, 0.5, 1.0, 2.0, 4.0]
T_GRID = [1.0, 10.0, 50.0]


# -- spec-level examples --------------------------------------------------


def test_rho_reduces_to_arcsine_at_zero_drift():
    spec = ProcessSpec(0.0, 10.0)
    assert rho_length(spec, 5.0) == pytest.approx(1 / (5 * math.pi), rel=1e-14)
    assert rho_length(spec, 1.0) == pytest.approx(1 / (3 * math.pi), rel=1e-14)
    assert 1 / (5 * math.pi) == pytest.approx(0.063662, abs=1e-6)
    assert 1 / (3 * math.pi) == pytest.approx(0.106103, abs=1e-6)


@pytest.mark.parametrize("d", [1.0, 6.1982])
def test_psi_zero_drift_is_half_normal(d):
    spec = ProcessSpec(0.0, 10.0)
    assert psi_depth(spec, d) == pytest.approx(oracles.half_normal_density(10.0, d), rel=1e-9)


def test_psi_zero_drift_reference_numbers():
    spec = ProcessSpec(0.0, 10.0)
    assert psi_depth(spec, 1.0) == pytest.approx(0.24001, abs=1e-5)
    assert psi_depth(spec, 6.1982) == pytest.approx(0.03696, abs=1e-5)


def test_joint_vanishes_linearly_in_depth():
    spec = ProcessSpec(1.0, 10.0)
    ell = 2.0
    vals = [joint_dl_density(spec, d, ell) / d for d in (1e-4, 1e-5, 1e-6)]
    assert vals[0] == pytest.approx(vals[2], rel=1e-3)
    assert vals[1] == pytest.approx(vals[2], rel=1e-4)


@pytest.mark.parametrize("mu,T,d,ell", [
    (1.0, 10.0, 0.5, 0.5),
    (2.0, 10.0, 1.0, 3.0),
    (0.3, 5.0, 0.2, 4.9),
    (-0.5, 10.0, 1.0, 2.0),
    (4.0, 50.0, 0.1, 0.01),
])
def test_joint_matches_brute_force_over_max_level(mu, T, d, ell):
    got = joint_dl_density(ProcessSpec(mu, T), d, ell)
    assert got == pytest.approx(oracles.joint_by_b_quadrature(mu, T, d, ell), rel=1e-9)
    assert got == pytest.approx(float(oracles.joint_raw(mu, T, d, ell)), rel=1e-12)


@pytest.mark.parametrize("mu,T,ell", [
    (1.0, 10.0, 2.0), (4.0, 50.0, 0.01), (4.0, 50.0, 49.9), (-1.0, 10.0, 3.0),
    (0.5, 1.0, 1e-6), (0.5, 1.0, 1 - 1e-9), (10.0, 10.0, 5.0),
])
def test_rho_matches_high_precision_formula(mu, T, ell):
    assert rho_length(ProcessSpec(mu, T), ell) == pytest.approx(
        float(oracles.rho_raw(mu, T, ell)), rel=1e-11)


@pytest.mark.parametrize("mu,T,d", [(1.0, 10.0, 1.5), (0.5, 10.0, 0.1), (2.0, 10.0, 5.0),
                                    (-0.5, 10.0, 2.0), (4.0, 1.0, 0.05)])
def test_psi_matches_high_precision_formula(mu, T, d):
    assert psi_depth(ProcessSpec(mu, T), d) == pytest.approx(
        float(oracles.psi_raw(mu, T, d)), rel=1e-8)


def test_length_tail_examples():
    assert length_tail_prob(ProcessSpec(0.0, 10.0), 5.0) == pytest.approx(0.5, abs=1e-12)
    for sr in (0.0, 1.0, 3.0):
        assert length_tail_prob(ProcessSpec(sr, 10.0), 0.0) == 1.0
        assert length_tail_prob(ProcessSpec(sr, 10.0), 10.0) == 0.0
    # a ten-year SR=0.5 strategy lasts 7 years or more about 5% of the time
    assert length_tail_prob(ProcessSpec(0.5, 10.0), 7.0) == pytest.approx(0.05, abs=0.005)


def test_depth_tail_examples():
    for sr in (0.0, 1.0):
        assert depth_tail_prob(ProcessSpec(sr, 10.0), 0.0) == 1.0
    assert depth_tail_prob(ProcessSpec(0.0, 10.0), 6.1982) == pytest.approx(
        oracles.half_normal_tail(10.0, 6.1982), abs=1e-10)
    assert depth_tail_prob(ProcessSpec(0.0, 10.0), 6.1982) == pytest.approx(0.05, abs=1e-4)
    assert depth_tail_prob(ProcessSpec(1.6, 10.0), 0.95) == pytest.approx(0.05, abs=0.005)


@pytest.mark.parametrize("mu,T,d", [(1.0, 10.0, 1.5), (0.5, 10.0, 0.3), (2.0, 10.0, 0.8),
                                    (1.6, 10.0, 0.95)])
def test_depth_tail_closed_form_inner_integral_vs_nested_quadrature(mu, T, d):
    assert depth_tail_prob(ProcessSpec(mu, T), d) == pytest.approx(
        oracles.depth_tail_nested(mu, T, d), abs=1e-10)


# -- domain errors ----------------------------------------------------------


def test_domain_errors():
    spec = ProcessSpec(1.0, 10.0)
    for bad in (0.0, 10.0, -1.0, 11.0):
        with pytest.raises(DomainError):
            rho_length(spec, bad)
    with pytest.raises(DomainError):
        psi_depth(spec, 0.0)
    with pytest.raises(DomainError):
        joint_dl_density(spec, 0.0, 1.0)
    with pytest.raises(DomainError):
        length_tail_prob(spec, 10.5)
    with pytest.raises(DomainError):
        depth_tail_prob(spec, -0.1)
    with pytest.raises(DomainError):
        ProcessSpec(1.0, 0.0)
    with pytest.raises(DomainError):
        ProcessSpec(math.nan, 1.0)


# -- invariants -------------------------------------------------------------


@pytest.mark.parametrize("sr", SR_GRID)
@pytest.mark.parametrize("T", T_GRID)
def test_rho_normalized(sr, T):
    assert oracles.rho_mass(sr, T) == pytest.approx(1.0, abs=1e-8)
    # and the package's own tail integral agrees at an interior point
    assert length_tail_prob(ProcessSpec(sr, T), T / 3) == pytest.approx(
        oracles.rho_mass(sr, T, T / 3), abs=1e-10)


@pytest.mark.parametrize("d", [0.1, 0.5, 1.0, 2.0, 5.0])
@pytest.mark.parametrize("sr", [0.5, 1.0, 2.0])
def test_marginal_consistency(sr, d):
    spec = ProcessSpec(sr, 10.0)
    T = spec.horizon
    # plain-l integration of the un-merged joint, (T-l)^-1/2 carried by the weight
    f = lambda ell: oracles.joint_times_sqrt_rest(sr, T, d, ell)
    peak = d * d / 3
    pieces = [0.0, peak, 4 * peak, T] if 4 * peak < T / 2 else [0.0, T / 2, T]
    total = 0.0
    for a, b in zip(pieces, pieces[1:]):
        if b == T:
            val, _ = integrate.quad(f, a, b, weight="alg", wvar=(0.0, -0.5),
                                    epsabs=1e-14, epsrel=1e-12, limit=500)
        else:
            val, _ = integrate.quad(lambda x: f(x) / math.sqrt(T - x), a, b,
                                    epsabs=1e-14, epsrel=1e-12, limit=500)
        total += val
    assert abs(total - psi_depth(spec, d)) < 1e-9


def test_rho_zero_drift_pointwise():
    T = 10.0
    spec = ProcessSpec(0.0, T)
    for ell in np.linspace(0, T, 1002)[1:-1]:
        assert rho_length(spec, ell) == pytest.approx(oracles.arcsine_density(T, ell), rel=1e-12)


def test_depth_tail_zero_drift_half_normal():
    T = 10.0
    spec = ProcessSpec(0.0, T)
    for d in np.linspace(0.01, 15, 40):
        assert abs(depth_tail_prob(spec, d) - oracles.half_normal_tail(T, d)) < 1e-8


@pytest.mark.parametrize("sr", [-0.5, 0.0, 0.5, 1.0, 3.0])
def test_tails_non_increasing(sr):
    spec = ProcessSpec(sr, 10.0)
    ls = [length_tail_prob(spec, x) for x in np.linspace(0, 10, 60)]
    ds = [depth_tail_prob(spec, x) for x in np.linspace(0, 8, 60)]
    assert all(b <= a + 1e-12 for a, b in zip(ls, ls[1:]))
    assert all(b <= a + 1e-12 for a, b in zip(ds, ds[1:]))


def test_length_tail_matches_independent_integration():
    spec = ProcessSpec(1.0, 10.0)
    for x in (0.5, 1.0, 2.0, 4.0, 9.0):
        assert length_tail_prob(spec, x) == pytest.approx(oracles.rho_mass(1.0, 10.0, x), abs=1e-10)


def test_joint_length_integral_partitions():
    spec = ProcessSpec(1.0, 10.0)
    d = 1.0
    whole = psi_depth(spec, d)
    parts = joint_length_integral(spec, d, 0.0, 3.0) + joint_length_integral(spec, d, 3.0, 10.0)
    assert parts == pytest.approx(whole, rel=1e-9)


# -- Monte Carlo oracle -----------------------------------------------------


@pytest.mark.slow
def test_rho_against_monte_carlo_histogram(sample_sr1_million):
    s = sample_sr1_million
    width = 0.05
    n = len(s)
    hits = np.count_nonzero((s.lengths >= 2.0 - width / 2) & (s.lengths < 2.0 + width / 2))
    dens = hits / n / width
    se = math.sqrt(hits) / n / width
    exact = rho_length(ProcessSpec(1.0, 10.0), 2.0)
    assert abs(dens - exact) <= 4 * se + 0.02 * exact


@pytest.mark.slow
def test_psi_against_monte_carlo_histogram(sample_sr1_million):
    s = sample_sr1_million
    width = 0.05
    n = len(s)
    hits = np.count_nonzero((s.depths >= 1.5 - width / 2) & (s.depths < 1.5 + width / 2))
    dens = hits / n / width
    se = math.sqrt(hits) / n / width
    exact = psi_depth(ProcessSpec(1.0, 10.0), 1.5)
    # daily sampling misses part of each peak: depths run low by roughly
    # 0.6 * sqrt(dt), worth about 10% of the density here
    assert dens <= exact + 4 * se
    assert abs(dens - exact) <= 4 * se + 0.10 * exact


@pytest.mark.slow
@pytest.mark.parametrize("x", [0.5, 1.0, 2.0, 4.0])
def test_length_tail_against_monte_carlo(sample_sr1_million, x):
    s = sample_sr1_million
    freq = np.mean(s.lengths >= x)
    se = math.sqrt(freq * (1 - freq) / len(s))
    assert abs(freq - length_tail_prob(ProcessSpec(1.0, 10.0), x)) <= 4 * se + 0.005
