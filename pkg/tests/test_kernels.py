"""Cross-checks between the numba kernels and the pure-numpy fallback."""

import itertools
import os
import subprocess
import sys

import numpy as np
import pytest
from scipy import sparse

from qlinresp.kernels import _numpy as knp
from qlinresp.kernels import active_backend

knb = pytest.importorskip("qlinresp.kernels._numba")


def _patterns(m, n):
    masks = [sum(1 << i for i in c) for c in itertools.combinations(range(m), n)]
    return np.sort(np.array(masks, dtype=np.int64))


def _random_hermitian_terms(m, seed):
    rng = np.random.default_rng(seed)
    coeff = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    coeff = coeff + coeff.conj().T
    ii, jj = np.nonzero(np.abs(coeff) > 0.5)  # sparsify a bit
    return ii.astype(np.int64), jj.astype(np.int64), coeff[ii, jj]


@pytest.mark.parametrize("m,n,seed", [(4, 2, 0), (6, 3, 1), (9, 2, 2)])
def test_one_body_triplets_backends_agree(m, n, seed):
    pats = _patterns(m, n)
    ii, jj, vv = _random_hermitian_terms(m, seed)
    d = pats.shape[0]
    mats = []
    for impl in (knp, knb):
        r, c, v = impl.one_body_triplets(pats, ii, jj, vv)
        mats.append(sparse.csr_matrix((v, (r, c)), shape=(d, d)).toarray())
    assert np.abs(mats[0] - mats[1]).max() < 1e-14


@pytest.mark.parametrize("mu,nu,md,nd", [(4, 1, 4, 1), (6, 2, 6, 3)])
def test_pair_popcount_backends_agree(mu, nu, md, nd):
    pu, pd = _patterns(mu, nu), _patterns(md, nd)
    assert np.array_equal(knp.pair_popcount(pu, pd), knb.pair_popcount(pu, pd))


@pytest.mark.parametrize("w", [1, 4, 8, 12])
def test_fejer_accumulate_backends_agree(w):
    rng = np.random.default_rng(w)
    lam = rng.random(7)
    wgt = rng.random(7)
    wgt /= wgt.sum()
    a = knp.fejer_accumulate(lam, wgt, w)
    b = knb.fejer_accumulate(lam, wgt, w)
    assert np.abs(a - b).max() < 1e-13
    assert abs(a.sum() - 1.0) < 1e-12


def test_env_flag_selects_numpy_backend():
    env = dict(os.environ, QLINRESP_DISABLE_NUMBA="1")
    out = subprocess.run(
        [sys.executable, "-c",
         "from qlinresp.kernels import active_backend; print(active_backend())"],
        env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"


def test_default_backend_reported():
    assert active_backend() in ("numpy", "numba")
