import numpy as np
import pytest
from scipy import stats

import qlinresp as q
from qlinresp.errors import CapacityError, DegenerateSpectrumError, DomainError
from qlinresp.response import w_for_resolution, write_response_csv

from oracles import brute_force_pea


def _synthetic(seed, m=5):
    rng = np.random.default_rng(seed)
    lam = rng.random(m)
    w = rng.random(m)
    w /= w.sum()
    return q.SpectralData(lambdas=lam, weights=w)


# -- kernel -------------------------------------------------------------------

def test_kernel_removable_singularity():
    assert q.fejer_kernel(0.0, 16) == pytest.approx(16.0, abs=1e-12)
    assert q.fejer_kernel(2 * np.pi, 16) == pytest.approx(16.0, abs=1e-9)


def test_kernel_zeros_on_grid():
    for k in (1, 3, 7, 15):
        assert abs(q.fejer_kernel(2 * np.pi * k / 16, 16)) < 1e-12


def test_kernel_grid_sum_normalization():
    rng = np.random.default_rng(8)
    for n in (16, 64):
        for _ in range(200):
            lam = rng.random()
            y = np.arange(n)
            total = q.fejer_kernel(2 * np.pi * (lam - y / n), n).sum() / n
            assert abs(total - 1.0) < 1e-12


def test_kernel_rejects_bad_order():
    with pytest.raises(DomainError):
        q.fejer_kernel(0.1, 0)


# -- exact distribution ---------------------------------------------------------

def test_point_mass_on_grid():
    data = q.SpectralData(lambdas=np.array([3 / 16]), weights=np.array([1.0]))
    dist = q.pea_distribution(data, 4)
    want = np.zeros(16)
    want[3] = 1.0
    assert np.abs(dist.probabilities - want).max() < 1e-13


def test_two_grid_lines_are_linear():
    data = q.SpectralData(lambdas=np.array([2 / 32, 9 / 32]),
                          weights=np.array([0.3, 0.7]))
    dist = q.pea_distribution(data, 5)
    assert dist.probabilities[2] == pytest.approx(0.3, abs=1e-12)
    assert dist.probabilities[9] == pytest.approx(0.7, abs=1e-12)


def test_mid_bin_line_splits_by_closed_form():
    w = 6
    n = 1 << w
    y0 = 11
    data = q.SpectralData(lambdas=np.array([(y0 + 0.5) / n]),
                          weights=np.array([1.0]))
    dist = q.pea_distribution(data, w)
    want = 1.0 / (n * np.sin(np.pi / (2 * n))) ** 2
    assert dist.probabilities[y0] == pytest.approx(want, rel=1e-12)
    assert dist.probabilities[y0 + 1] == pytest.approx(want, rel=1e-12)


def test_matches_naive_double_sum():
    data = _synthetic(21)
    for w in (3, 6):
        dist = q.pea_distribution(data, w)
        naive = brute_force_pea(data.lambdas, data.weights, w)
        assert np.abs(dist.probabilities - naive).max() < 1e-10


def test_normalization_fuzz():
    for seed in range(1000):
        data = _synthetic(seed, m=4)
        dist = q.pea_distribution(data, 5)
        assert abs(dist.probabilities.sum() - 1.0) < 1e-9
        assert dist.probabilities.min() >= 0.0


def test_register_size_capacity():
    with pytest.raises(CapacityError):
        q.pea_distribution(_synthetic(0), 25)
    with pytest.raises(CapacityError):
        q.pea_distribution(_synthetic(0), 0)


def test_unnormalized_weights_rejected():
    data = q.SpectralData(lambdas=np.array([0.5]), weights=np.array([0.7]))
    with pytest.raises(DomainError):
        q.pea_distribution(data, 4)


# -- statevector oracle ---------------------------------------------------------

@pytest.mark.parametrize("w", list(range(1, 9)))
def test_oracle_equivalence_dimer(dimer, w):
    op = dimer.charge_excitation()
    prep = q.exact_excited_state(op, dimer.psi0)
    data = q.spectral_weights(dimer.h_scaled, prep.vector)
    dist = q.pea_distribution(data, w)
    sv = q.statevector_pea_oracle(dimer.h_scaled, prep.vector, w)
    assert np.abs(dist.probabilities - sv.probabilities).max() < 1e-10


@pytest.mark.parametrize("w", [1, 3, 6])
def test_oracle_equivalence_lat22(lat22, w):
    op = lat22.charge_excitation()
    prep = q.exact_excited_state(op, lat22.psi0)
    data = q.spectral_weights(lat22.h_scaled, prep.vector)
    dist = q.pea_distribution(data, w)
    sv = q.statevector_pea_oracle(lat22.h_scaled, prep.vector, w)
    assert np.abs(dist.probabilities - sv.probabilities).max() < 1e-10


def test_oracle_point_cases(dimer):
    # W=1, probe = ground state: all mass at y = 0
    data = q.spectral_weights(dimer.h_scaled, dimer.psi0)
    sv = q.statevector_pea_oracle(dimer.h_scaled, dimer.psi0, 1)
    assert sv.probabilities[0] == pytest.approx(1.0, abs=1e-9)
    dist6 = q.pea_distribution(data, 6)
    assert dist6.probabilities[0] == pytest.approx(1.0, abs=1e-8)


def test_oracle_capacity():
    data = _synthetic(0)
    g = q.LatticeGeometry(4, 4)
    b = q.build_basis(g, 2, 2)  # dimension 14400
    h = q.SparseOperator.identity(b)
    with pytest.raises(CapacityError):
        q.statevector_pea_oracle(h, np.ones(b.dimension), 10)


# -- kernel resolution properties ------------------------------------------------

@pytest.mark.parametrize("w", [2, 4, 8, 12, 16])
def test_main_lobe_mass(w):
    n = 1 << w
    for frac in (0.0, 0.25, 0.5):
        lam = (n // 3 + frac) / n
        data = q.SpectralData(lambdas=np.array([lam]), weights=np.array([1.0]))
        p = q.pea_distribution(data, w).probabilities
        ystar = int(np.round(lam * n)) % n
        mass = p[[(ystar - 1) % n, ystar, (ystar + 1) % n]].sum()
        assert mass >= 8.0 / np.pi ** 2


def test_mean_energy_refinement():
    rng = np.random.default_rng(17)
    for _ in range(30):
        m = rng.integers(1, 5)
        lam = 0.2 + 0.6 * rng.random(m)
        wgt = rng.random(m)
        wgt /= wgt.sum()
        data = q.SpectralData(lambdas=lam, weights=wgt)
        true_mean = float(np.dot(lam, wgt))
        for w in (4, 6, 8, 10):
            p = q.pea_distribution(data, w).probabilities
            mean = float(np.dot(p, np.arange(1 << w) / (1 << w)))
            assert abs(mean - true_mean) <= 2.0 ** (1 - w)


# -- sampling ---------------------------------------------------------------------

def test_sample_point_mass():
    data = q.SpectralData(lambdas=np.array([5 / 16]), weights=np.array([1.0]))
    dist = q.pea_distribution(data, 4)
    hist = q.sample(dist, 100, seed=4)
    assert hist.counts[5] == 100
    assert hist.counts.sum() == 100
    assert q.max_error(hist, dist) == 0.0


def test_sample_rejects_zero_draws():
    dist = q.pea_distribution(_synthetic(1), 4)
    with pytest.raises(DomainError):
        q.sample(dist, 0, seed=1)


def test_sample_reproducible():
    dist = q.pea_distribution(_synthetic(2), 5)
    a = q.sample(dist, 500, seed=42)
    b = q.sample(dist, 500, seed=42)
    assert np.array_equal(a.counts, b.counts)
    assert not np.array_equal(a.counts, q.sample(dist, 500, seed=43).counts)


def test_sampler_is_unbiased_chi_square():
    """Goodness-of-fit p-values look uniform across seeds."""
    rng = np.random.default_rng(0)
    lam = rng.random(6)
    wgt = rng.random(6) + 0.3
    wgt /= wgt.sum()
    dist = q.pea_distribution(q.SpectralData(lambdas=lam, weights=wgt), 3)
    pvals = []
    for seed in range(150):
        hist = q.sample(dist, 3000, seed=seed)
        keep = dist.probabilities > 1e-6
        obs = hist.counts[keep]
        exp = dist.probabilities[keep] * hist.n
        stat, p = stats.chisquare(obs, exp * obs.sum() / exp.sum())
        pvals.append(p)
    pvals = np.array(pvals)
    assert (pvals < 0.05).mean() <= 0.12
    assert 0.35 <= pvals.mean() <= 0.65
    assert stats.kstest(pvals, "uniform").pvalue > 1e-3


def test_hoeffding_counts():
    assert q.hoeffding_n(0.05, 0.05) == 738
    assert q.hoeffding_n(0.01, 0.05) == 18445
    n1, n2 = q.hoeffding_n(0.02, 0.1), q.hoeffding_n(0.01, 0.1)
    assert n2 in (4 * n1 - 3, 4 * n1 - 2, 4 * n1 - 1, 4 * n1)  # within rounding
    with pytest.raises(DomainError):
        q.hoeffding_n(0.0, 0.05)
    with pytest.raises(DomainError):
        q.hoeffding_n(0.05, 1.0)


def test_max_error_length_mismatch():
    d1 = q.pea_distribution(_synthetic(1), 4)
    hist = q.sample(d1, 10, seed=0)
    d2 = q.pea_distribution(_synthetic(1), 5)
    with pytest.raises(DomainError):
        q.max_error(hist, d2)


def test_max_error_scaling_with_samples():
    dist = q.pea_distribution(_synthetic(9), 4)
    ns = np.array([100, 1_000, 10_000, 100_000])
    means = []
    for n in ns:
        vals = [q.max_error(q.sample(dist, int(n), seed=s), dist)
                for s in range(8)]
        means.append(np.mean(vals))
    slope = np.polyfit(np.log(ns), np.log(means), 1)[0]
    assert -0.65 <= slope <= -0.35


def test_per_bin_hoeffding_concentration():
    delta, eps = 0.05, 0.05
    n = q.hoeffding_n(delta, eps)
    dist = q.pea_distribution(_synthetic(33), 4)
    trials = 200
    ok = np.zeros(dist.n_bins)
    for seed in range(trials):
        hist = q.sample(dist, n, seed=seed)
        ok += (np.abs(hist.frequencies() - dist.probabilities) <= delta)
    assert (ok / trials >= 1.0 - eps).all()


# -- physical rescaling -----------------------------------------------------------

def test_rescale_riemann_sum(dimer):
    op = dimer.charge_excitation()
    prep = q.exact_excited_state(op, dimer.psi0)
    data = q.spectral_weights(dimer.h_scaled, prep.vector)
    dist = q.pea_distribution(data, 6)
    phys = q.rescale(dist, dimer.bounds, prep.o_sq_expectation)
    assert phys.riemann_sum() == pytest.approx(prep.o_sq_expectation, abs=1e-9)


def test_rescale_identity_probe_peaks_at_zero(dimer):
    nop = q.total_number_operator(dimer.basis)
    prep = q.exact_excited_state(nop, dimer.psi0)
    data = q.spectral_weights(dimer.h_scaled, prep.vector)
    dist = q.pea_distribution(data, 6)
    phys = q.rescale(dist, dimer.bounds, prep.o_sq_expectation)
    assert abs(phys.peak_omega()) <= phys.bin_width
    assert dist.probabilities[0] == pytest.approx(1.0, abs=1e-8)


def test_rescale_peak_matches_gap(dimer):
    op = dimer.charge_excitation()
    prep = q.exact_excited_state(op, dimer.psi0)
    data = q.spectral_weights(dimer.h_scaled, prep.vector)
    dist = q.pea_distribution(data, 8)
    phys = q.rescale(dist, dimer.bounds, prep.o_sq_expectation)
    # the only line of this probe sits at E = U
    gap = -2.0 - dimer.e0
    assert abs(phys.peak_omega() - gap) <= phys.bin_width


def test_rescale_needs_width():
    dist = q.pea_distribution(_synthetic(1), 4)
    with pytest.raises(DegenerateSpectrumError):
        q.rescale(dist, q.SpectralBounds(2.0, 2.0), 1.0)


# -- resources ---------------------------------------------------------------------

def test_register_size_for_resolution():
    bounds = q.SpectralBounds(0.0, 64.0)
    assert w_for_resolution(1.0, bounds) == 6
    assert w_for_resolution(64.0 / 4096.0, bounds) == 12
    assert w_for_resolution(0.9, bounds) == 7
    with pytest.raises(DomainError):
        w_for_resolution(100.0, bounds)


def test_resource_estimate_fields():
    bounds = q.SpectralBounds(0.0, 64.0)
    est = q.resource_estimate(1.0, bounds, delta_s=0.01, epsilon=0.05,
                              o_norm=2.0, o_sq_expectation=3.0)
    assert est.w_qubits == 6
    assert est.t_max == pytest.approx(2 * np.pi)
    assert est.n_rep == 18445
    assert est.gamma == pytest.approx(0.05)
    assert est.p_success == pytest.approx(0.05 ** 2 * 3.0)
    assert est.amplified_calls is None
    amp = q.resource_estimate(1.0, bounds, 0.01, 0.05, 2.0, 3.0, amplify=True)
    assert amp.amplified_calls == pytest.approx(1.0 / amp.p_success ** 2)


def test_resource_estimate_resolution_scaling():
    bounds = q.SpectralBounds(0.0, 64.0)
    a = q.resource_estimate(0.5, bounds, 0.05, 0.05, 1.0, 1.0)
    b = q.resource_estimate(1.0, bounds, 0.05, 0.05, 1.0, 1.0)
    assert a.w_qubits == b.w_qubits + 1
    assert a.t_max == pytest.approx(2 * b.t_max)


# -- writers -----------------------------------------------------------------------

def test_response_csv_deterministic(tmp_path, dimer):
    op = dimer.charge_excitation()
    prep = q.exact_excited_state(op, dimer.psi0)
    data = q.spectral_weights(dimer.h_scaled, prep.vector)
    dist = q.pea_distribution(data, 4)
    hist = q.sample(dist, 100, seed=5)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    write_response_csv(p1, dist, dimer.bounds, hist)
    write_response_csv(p2, dist, dimer.bounds, hist)
    assert p1.read_bytes() == p2.read_bytes()
    rows = p1.read_text().strip().splitlines()
    assert rows[0] == "y,omega_scaled,omega_physical,p_exact,h_sampled,abs_error"
    assert len(rows) == dist.n_bins + 1
