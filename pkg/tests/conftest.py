import numpy as np
import pytest

import qlinresp as q


class System:
    """One lattice sector with its Hamiltonian and spectral staging."""

    def __init__(self, lx, ly, periodic, n_up, n_dn, t=1.0, u=-2.0):
        self.geometry = q.LatticeGeometry(lx, ly, periodic_x=periodic,
                                          periodic_y=periodic)
        self.basis = q.build_basis(self.geometry, n_up, n_dn)
        self.params = q.HubbardParams(t=t, u=u)
        self.hamiltonian = q.build_hamiltonian(self.basis, self.params)
        self.e0, self.psi0 = q.ground_state(self.hamiltonian)
        self.bounds = q.spectral_bounds(self.hamiltonian)
        if self.bounds.delta_h > 0:
            self.h_scaled = q.scale_hamiltonian(self.hamiltonian, self.bounds)

    def charge_excitation(self, kx=None, ky=0):
        if kx is None:
            kx = 1 if self.geometry.lx > 1 else 0
            ky = 0 if self.geometry.lx > 1 else 1
        return q.build_density_excitation(
            self.basis, q.momentum(self.geometry, kx, ky),
            channel="cos", spin_mode="charge")


@pytest.fixture(scope="session")
def dimer():
    """Open 2-site chain, one particle per spin, attractive U."""
    return System(2, 1, periodic=False, n_up=1, n_dn=1)


@pytest.fixture(scope="session")
def ring2():
    """Periodic 2-site ring (momentum modes are available here)."""
    return System(2, 1, periodic=True, n_up=1, n_dn=1)


@pytest.fixture(scope="session")
def lat22():
    return System(2, 2, periodic=True, n_up=1, n_dn=1)


@pytest.fixture(scope="session")
def lat44():
    return System(4, 4, periodic=True, n_up=1, n_dn=1)


@pytest.fixture(scope="session")
def anharmonic_probe(ring2):
    """Module-built probe whose spectrum {1, 2} on the sector is anharmonic.

    Needed because every single-channel density operator on a 2-site
    sector has spectrum {0, +/-c} or {0, c}, for which sin(gamma O)|psi0>
    is exactly proportional to O|psi0> and the rotation bias vanishes
    identically.
    """
    n0 = q.build_momentum_number(ring2.basis, q.momentum(ring2.geometry, 0, 0),
                                 spin="up")
    npi = q.build_momentum_number(ring2.basis, q.momentum(ring2.geometry, 1, 0),
                                  spin="up")
    return n0 + 2.0 * npi
