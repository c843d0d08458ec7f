"""Lattice geometry, fixed-sector Fock bases and sparse lattice operators.

Conventions, fixed once and tested:

* sites are indexed ``i = x + Lx*y`` with coordinates ``r_i = (x, y)``;
* a spin species' configurations are occupation bitmasks (bit ``j`` =
  site ``j``), listed in ascending integer order;
* the combined sector index is up-major, ``s = i_up * D_dn + i_dn``,
  with Jordan-Wigner mode order "all up modes, then all dn modes" (the
  cross-species string cancels in every spin-diagonal bilinear);
* nearest-neighbor bonds are the +x and +y steps from every site, with
  periodic wrap-around per axis, so an L=2 ring carries a doubled bond.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from math import comb
from typing import Iterator

import numpy as np
from scipy import sparse

from . import kernels
from .errors import InvalidMomentumError, InvalidSectorError

__all__ = [
    "LatticeGeometry", "HubbardParams", "FockBasis", "SparseOperator",
    "build_basis", "build_hamiltonian", "build_density_excitation",
    "build_momentum_number", "momentum", "total_number_operator",
]


@dataclass(frozen=True)
class LatticeGeometry:
    """Rectangular lattice with per-axis boundary conditions."""

    lx: int
    ly: int
    periodic_x: bool = True
    periodic_y: bool = True

    def __post_init__(self):
        if self.lx < 1 or self.ly < 1:
            raise InvalidSectorError("lattice extents must be >= 1",
                                     lx=self.lx, ly=self.ly)

    @property
    def n_sites(self) -> int:
        return self.lx * self.ly

    def site(self, x: int, y: int) -> int:
        return x % self.lx + self.lx * (y % self.ly)

    def coords(self, i: int) -> tuple[int, int]:
        return i % self.lx, i // self.lx

    def bonds(self) -> Iterator[tuple[int, int]]:
        """Directed +x / +y nearest-neighbor steps (may repeat an edge)."""
        for y in range(self.ly):
            for x in range(self.lx):
                i = x + self.lx * y
                if self.lx > 1 and (x + 1 < self.lx or self.periodic_x):
                    yield i, self.site(x + 1, y)
                if self.ly > 1 and (y + 1 < self.ly or self.periodic_y):
                    yield i, self.site(x, y + 1)


@dataclass(frozen=True)
class HubbardParams:
    """Hopping t and on-site interaction U, H = -t sum(c+c + h.c.) + U sum n n."""

    t: float
    u: float

    def __post_init__(self):
        if not (np.isfinite(self.t) and np.isfinite(self.u)):
            raise InvalidSectorError("t and U must be finite",
                                     t=self.t, u=self.u)


@dataclass(frozen=True)
class FockBasis:
    """All configurations of a fixed (n_up, n_dn) sector, canonically ordered."""

    geometry: LatticeGeometry
    n_up: int
    n_dn: int
    patterns_up: np.ndarray = field(repr=False)
    patterns_dn: np.ndarray = field(repr=False)

    @property
    def dim_up(self) -> int:
        return self.patterns_up.shape[0]

    @property
    def dim_dn(self) -> int:
        return self.patterns_dn.shape[0]

    @property
    def dimension(self) -> int:
        return self.dim_up * self.dim_dn

    def split_index(self, s: int) -> tuple[int, int]:
        return s // self.dim_dn, s % self.dim_dn

    def state(self, s: int) -> tuple[int, int]:
        """(up_mask, dn_mask) of basis state ``s``."""
        iu, idn = self.split_index(s)
        return int(self.patterns_up[iu]), int(self.patterns_dn[idn])

    def index_of(self, up_mask: int, dn_mask: int) -> int:
        iu = int(np.searchsorted(self.patterns_up, up_mask))
        idn = int(np.searchsorted(self.patterns_dn, dn_mask))
        if (iu >= self.dim_up or idn >= self.dim_dn
                or self.patterns_up[iu] != up_mask
                or self.patterns_dn[idn] != dn_mask):
            raise InvalidSectorError("pattern not in basis",
                                     up=up_mask, dn=dn_mask)
        return iu * self.dim_dn + idn


class SparseOperator:
    """Sparse Hermitian operator over a FockBasis (CSR storage)."""

    def __init__(self, basis: FockBasis, matrix: sparse.spmatrix,
                 hermitian: bool = True):
        m = sparse.csr_matrix(matrix, dtype=np.complex128)
        if m.shape != (basis.dimension, basis.dimension):
            raise InvalidSectorError("matrix shape does not match basis",
                                     shape=list(m.shape), dim=basis.dimension)
        m.sum_duplicates()
        self.basis = basis
        self.matrix = m
        self.hermitian = hermitian

    # -- linear algebra ----------------------------------------------------
    @property
    def dimension(self) -> int:
        return self.basis.dimension

    def apply(self, psi: np.ndarray) -> np.ndarray:
        return self.matrix.dot(psi)

    def expectation(self, psi: np.ndarray) -> float:
        val = np.vdot(psi, self.matrix.dot(psi))
        return float(val.real) if self.hermitian else val

    def to_dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def diagonal(self) -> np.ndarray:
        return self.matrix.diagonal()

    def is_diagonal(self) -> bool:
        coo = self.matrix.tocoo()
        return bool(np.all(coo.row == coo.col))

    def norm_bound(self) -> float:
        """Gershgorin upper bound on the spectral norm (rigorous)."""
        if self.matrix.nnz == 0:
            return 0.0
        return float(np.abs(self.matrix).sum(axis=1).max())

    def hermiticity_defect(self) -> float:
        d = self.matrix - self.matrix.getH()
        return float(np.abs(d.data).max()) if d.nnz else 0.0

    # -- algebra (hermitian flag propagates through real combinations) -----
    def __add__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix + other.matrix,
                              self.hermitian and other.hermitian)

    def __sub__(self, other: "SparseOperator") -> "SparseOperator":
        return SparseOperator(self.basis, self.matrix - other.matrix,
                              self.hermitian and other.hermitian)

    def __mul__(self, scalar) -> "SparseOperator":
        herm = self.hermitian and np.imag(scalar) == 0
        return SparseOperator(self.basis, self.matrix * scalar, herm)

    __rmul__ = __mul__

    def __matmul__(self, other: "SparseOperator") -> "SparseOperator":
        # product of commuting hermitians is hermitian; do not assume it
        return SparseOperator(self.basis, self.matrix @ other.matrix,
                              hermitian=False)

    @classmethod
    def identity(cls, basis: FockBasis) -> "SparseOperator":
        return cls(basis, sparse.identity(basis.dimension, format="csr"))

    @classmethod
    def from_diagonal(cls, basis: FockBasis, diag: np.ndarray) -> "SparseOperator":
        diag = np.asarray(diag)
        herm = bool(np.all(np.isreal(diag)))
        return cls(basis, sparse.diags(diag.astype(np.complex128), format="csr"),
                   hermitian=herm)

    # -- debugging export --------------------------------------------------
    def export_triplets(self, path) -> None:
        """Write 'row col re im' text triplets (one stored entry per line)."""
        coo = self.matrix.tocoo()
        with open(path, "w") as fh:
            fh.write("row col re im\n")
            for r, c, v in zip(coo.row, coo.col, coo.data):
                fh.write(f"{r} {c} {float(v.real)!r} {float(v.imag)!r}\n")


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------

def _sector_patterns(m: int, n: int) -> np.ndarray:
    masks = [sum(1 << i for i in c) for c in itertools.combinations(range(m), n)]
    return np.sort(np.array(masks, dtype=np.int64))


def build_basis(geometry: LatticeGeometry, n_up: int, n_dn: int) -> FockBasis:
    """Enumerate the fixed-(n_up, n_dn) sector of the lattice."""
    m = geometry.n_sites
    if not (0 <= n_up <= m and 0 <= n_dn <= m):
        raise InvalidSectorError("particle count exceeds site count",
                                 n_up=n_up, n_dn=n_dn, sites=m)
    basis = FockBasis(geometry, n_up, n_dn,
                      _sector_patterns(m, n_up), _sector_patterns(m, n_dn))
    assert basis.dimension == comb(m, n_up) * comb(m, n_dn)
    return basis


def _one_body_species(patterns: np.ndarray, coeff: np.ndarray) -> sparse.csr_matrix:
    """sum_ij coeff[i,j] c+_i c_j restricted to one spin species' sector."""
    ii, jj = np.nonzero(coeff)
    rows, cols, vals = kernels.one_body_triplets(
        patterns, ii.astype(np.int64), jj.astype(np.int64),
        coeff[ii, jj].astype(np.complex128))
    d = patterns.shape[0]
    return sparse.csr_matrix((vals, (rows, cols)), shape=(d, d))


def _kron_up(basis: FockBasis, a: sparse.spmatrix) -> sparse.csr_matrix:
    return sparse.kron(a, sparse.identity(basis.dim_dn), format="csr")


def _kron_dn(basis: FockBasis, a: sparse.spmatrix) -> sparse.csr_matrix:
    return sparse.kron(sparse.identity(basis.dim_up), a, format="csr")


def _hopping_coefficients(geometry: LatticeGeometry, t: float) -> np.ndarray:
    m = geometry.n_sites
    coeff = np.zeros((m, m))
    for i, j in geometry.bonds():
        if i == j:
            continue
        coeff[i, j] += -t
        coeff[j, i] += -t
    return coeff


def build_hamiltonian(basis: FockBasis, params: HubbardParams) -> SparseOperator:
    """Hubbard Hamiltonian -t sum_<ij>,s (c+ c + h.c.) + U sum_i n_up n_dn."""
    geom = basis.geometry
    coeff = _hopping_coefficients(geom, params.t)
    h = sparse.csr_matrix((basis.dimension, basis.dimension), dtype=np.complex128)
    if coeff.any():
        if basis.n_up:
            h = h + _kron_up(basis, _one_body_species(basis.patterns_up, coeff))
        if basis.n_dn:
            h = h + _kron_dn(basis, _one_body_species(basis.patterns_dn, coeff))
    if params.u != 0.0:
        docc = kernels.pair_popcount(basis.patterns_up, basis.patterns_dn)
        h = h + sparse.diags(params.u * docc.astype(np.float64))
    return SparseOperator(basis, h, hermitian=True)


def momentum(geometry: LatticeGeometry, kx: int, ky: int) -> tuple[float, float]:
    """Commensurate lattice momentum 2*pi*(kx/Lx, ky/Ly)."""
    return 2.0 * np.pi * kx / geometry.lx, 2.0 * np.pi * ky / geometry.ly


def _check_commensurate(geometry: LatticeGeometry, q, what: str,
                        require_periodic: bool) -> None:
    qx, qy = q
    for label, qa, length, per in (("x", qx, geometry.lx, geometry.periodic_x),
                                   ("y", qy, geometry.ly, geometry.periodic_y)):
        if length > 1 and not per:
            if require_periodic:
                raise InvalidMomentumError(
                    f"{what} needs periodic boundaries on axis {label}",
                    axis=label, q=[qx, qy])
            continue  # open axis: any phase is allowed for a density probe
        k = qa * length / (2.0 * np.pi)
        if abs(k - round(k)) > 1e-9:
            raise InvalidMomentumError(
                f"{what}: momentum incommensurate with axis {label}",
                axis=label, q=[qx, qy], k=k)


def _site_phases(geometry: LatticeGeometry, q) -> np.ndarray:
    qx, qy = q
    coords = np.array([geometry.coords(i) for i in range(geometry.n_sites)])
    return qx * coords[:, 0] + qy * coords[:, 1]


def _occupation_weights(patterns: np.ndarray, f: np.ndarray) -> np.ndarray:
    """sum_j f_j bit_j(pattern) for every pattern."""
    out = np.zeros(patterns.shape[0])
    for j in range(f.shape[0]):
        if f[j] != 0.0:
            out += f[j] * ((patterns >> j) & 1)
    return out


def build_density_excitation(basis: FockBasis, q, channel: str = "cos",
                             spin_mode: str = "charge") -> SparseOperator:
    """Hermitian density fluctuation O = sum_j f(q.r_j)(n_j_up +/- n_j_dn).

    channel selects f in {cos, sin}; spin_mode 'charge' adds the spin
    densities, 'spin' subtracts them.  Diagonal in the occupation basis.
    """
    if channel not in ("cos", "sin"):
        raise InvalidMomentumError("channel must be 'cos' or 'sin'", channel=channel)
    if spin_mode not in ("charge", "spin"):
        raise InvalidMomentumError("spin_mode must be 'charge' or 'spin'",
                                   spin_mode=spin_mode)
    _check_commensurate(basis.geometry, q, "density excitation",
                        require_periodic=False)
    phases = _site_phases(basis.geometry, q)
    f = np.cos(phases) if channel == "cos" else np.sin(phases)
    du = _occupation_weights(basis.patterns_up, f)
    dd = _occupation_weights(basis.patterns_dn, f)
    sgn = 1.0 if spin_mode == "charge" else -1.0
    diag = (du[:, None] + sgn * dd[None, :]).ravel()
    return SparseOperator.from_diagonal(basis, diag)


def build_momentum_number(basis: FockBasis, p, spin: str = "up") -> SparseOperator:
    """Momentum-mode occupation projector n(p, spin).

    n(p,s) = (1/M) sum_ij e^{i p.(r_i - r_j)} c+_{i,s} c_{j,s}; idempotent
    with eigenvalues {0, 1}.  Requires periodic boundaries on every
    nontrivial axis and a commensurate p.
    """
    if spin not in ("up", "dn"):
        raise InvalidMomentumError("spin must be 'up' or 'dn'", spin=spin)
    geom = basis.geometry
    _check_commensurate(geom, p, "momentum occupation", require_periodic=True)
    phases = _site_phases(geom, p)
    u = np.exp(1j * phases) / np.sqrt(geom.n_sites)
    coeff = np.outer(u, u.conj())
    if spin == "up":
        mat = _kron_up(basis, _one_body_species(basis.patterns_up, coeff))
    else:
        mat = _kron_dn(basis, _one_body_species(basis.patterns_dn, coeff))
    return SparseOperator(basis, mat, hermitian=True)


def total_number_operator(basis: FockBasis, spin: str | None = None) -> SparseOperator:
    """N_up, N_dn or N_up + N_dn as a diagonal operator (constant on a sector)."""
    nu, nd = basis.n_up, basis.n_dn
    value = {"up": nu, "dn": nd, None: nu + nd}[spin]
    return SparseOperator.from_diagonal(
        basis, np.full(basis.dimension, float(value)))
