"""Constructors for the test states: Gaussian states, cat qubits, harmonic chains.

State specs are small frozen dataclasses; every spec exposes ``modes`` and a
``char(u)`` evaluator for its exact characteristic function.  Fock-basis
density matrices live in :class:`FockMatrix` with multi-indices raveled
row-major (first mode slowest).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .phase_space import (
    char_coherent_dyad,
    char_gaussian_raw,
    fock_dyad_radial,
    omega_matrix,
    symplectic_product,
)

_PSD_TOL = 1e-10
_EIG_FLOOR = 1e-12


def multi_indices(truncation: int, modes: int) -> np.ndarray:
    """All Fock multi-indices in {0..M}^r, shape ((M+1)^r, r), row-major."""
    grids = np.meshgrid(*[np.arange(truncation + 1)] * modes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


@dataclass
class FockMatrix:
    """Operator on ``modes`` bosonic modes truncated at photon number ``M``.

    ``entries[i, j]`` is ``<n_i| T |n_j>`` with multi-indices raveled as in
    :func:`multi_indices`.  Exact-state constructors produce Hermitian, PSD,
    nearly unit-trace matrices and record the truncation deficit ``1 - tr``;
    shadow estimates are generally neither positive nor normalized.
    """

    modes: int
    truncation: int
    entries: np.ndarray = field(repr=False)
    trace_deficit: float | None = None

    def __post_init__(self):
        dim = (self.truncation + 1) ** self.modes
        self.entries = np.asarray(self.entries, dtype=complex)
        if self.entries.shape != (dim, dim):
            raise ValueError(
                f"entries shape {self.entries.shape} incompatible with "
                f"M={self.truncation}, modes={self.modes}"
            )

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.entries))

    def hermitize(self) -> "FockMatrix":
        sym = 0.5 * (self.entries + self.entries.conj().T)
        return FockMatrix(self.modes, self.truncation, sym, self.trace_deficit)

    def photon_totals(self) -> np.ndarray:
        """Total photon number |n| for each raveled basis index."""
        return multi_indices(self.truncation, self.modes).sum(axis=1)

    def char(self, u):
        """Characteristic function Tr[T D(u)] of a single-mode matrix."""
        if self.modes != 1:
            raise ValueError("char is implemented for single-mode matrices")
        from .phase_space import char_fock_dyad

        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape[:-1], dtype=complex)
        for j in range(self.dim):
            for k in range(self.dim):
                if self.entries[j, k] != 0:
                    out = out + self.entries[j, k] * char_fock_dyad(j, k, u)
        return out if np.ndim(out) else complex(out)


# ---------------------------------------------------------------------------
# Gaussian states
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GaussianStateSpec:
    """Gaussian state with mean ``t`` and covariance ``V`` (vacuum has V = I).

    ``V`` must be symmetric with ``V + i Omega >= 0``; the check uses the
    smallest eigenvalue of the Hermitian form with tolerance 1e-10.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        if mean.ndim != 1 or mean.size % 2 != 0:
            raise ValueError("mean must be a flat even-length vector")
        if cov.shape != (mean.size, mean.size):
            raise ValueError(f"cov shape {cov.shape} does not match mean {mean.shape}")
        if not np.allclose(cov, cov.T, atol=1e-10):
            raise ValueError("covariance matrix must be symmetric")
        herm = cov + 1j * omega_matrix(mean.size // 2)
        lam = np.linalg.eigvalsh(herm)
        if lam.min() < -_PSD_TOL:
            raise ValueError(
                f"V + i Omega has negative eigenvalue {lam.min():.3e}; "
                "not a valid quantum covariance matrix"
            )
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", 0.5 * (cov + cov.T))

    @property
    def modes(self) -> int:
        return self.mean.size // 2

    def char(self, u) -> np.ndarray:
        return char_gaussian_raw(self.mean, self.cov, u)

    def marginal(self, modes: list[int]) -> "GaussianStateSpec":
        """Reduced Gaussian state on the given modes (order preserved)."""
        m = self.modes
        idx = np.concatenate([np.asarray(modes), np.asarray(modes) + m])
        return GaussianStateSpec(self.mean[idx], self.cov[np.ix_(idx, idx)])

    @classmethod
    def vacuum(cls, modes: int = 1) -> "GaussianStateSpec":
        return cls(np.zeros(2 * modes), np.eye(2 * modes))

    @classmethod
    def thermal(cls, nu: float, modes: int = 1) -> "GaussianStateSpec":
        """Thermal state with mean photon number ``nu`` per mode."""
        if nu < 0:
            raise ValueError("mean photon number must be non-negative")
        return cls(np.zeros(2 * modes), (2.0 * nu + 1.0) * np.eye(2 * modes))

    @classmethod
    def coherent(cls, alpha: complex) -> "GaussianStateSpec":
        """Single-mode coherent state with complex amplitude ``alpha``."""
        alpha = complex(alpha)
        mean = np.sqrt(2.0) * np.array([alpha.real, alpha.imag])
        return cls(mean, np.eye(2))

    def symplectic_eigenvalues(self) -> np.ndarray:
        """Spectrum of |i Omega V|, one value per mode (>= 1 for valid states)."""
        omega = omega_matrix(self.modes)
        lam = np.linalg.eigvals(1j * omega @ self.cov)
        return np.sort(np.abs(lam.real))[::2]


def char_gaussian(spec: GaussianStateSpec, u):
    """Characteristic function of a Gaussian state spec at ``u``."""
    return spec.char(u)


# ---------------------------------------------------------------------------
# cat states
# ---------------------------------------------------------------------------

_CAT_LOGICALS = ("zero", "one", "plus", "minus")
_DEGENERATE_ALPHA = 1e-6


@dataclass(frozen=True)
class CatStateSpec:
    """Single-mode cat qubit built from the coherent pair ``|alpha>, |-alpha>``.

    ``alpha`` is the complex amplitude (a pair ``(a, b)`` is read as
    ``a + i b``); the corresponding phase-space center is
    ``sqrt(2) (Re alpha, Im alpha)``.  ``logical`` selects the even/odd cats
    ``plus``/``minus`` or the qubit basis states ``zero``/``one``.
    """

    alpha: complex
    logical: str = "zero"

    def __post_init__(self):
        alpha = self.alpha
        if isinstance(alpha, (tuple, list, np.ndarray)):
            alpha = complex(alpha[0], alpha[1])
        object.__setattr__(self, "alpha", complex(alpha))
        if self.logical not in _CAT_LOGICALS:
            raise ValueError(f"logical must be one of {_CAT_LOGICALS}")
        if self.logical in ("one", "minus") and abs(self.alpha) < _DEGENERATE_ALPHA:
            raise ValueError(
                f"cat state '{self.logical}' degenerates as alpha -> 0 "
                f"(|alpha| = {abs(self.alpha):.2e})"
            )

    @property
    def modes(self) -> int:
        return 1

    @property
    def norm_constants(self) -> tuple[float, float]:
        """(N_+, N_-) with N_pm = sqrt(2 (1 pm exp(-2|alpha|^2)))."""
        overlap = math.exp(-2.0 * abs(self.alpha) ** 2)
        return math.sqrt(2.0 * (1.0 + overlap)), math.sqrt(2.0 * (1.0 - overlap))

    @property
    def center(self) -> np.ndarray:
        """Phase-space point of the ``+alpha`` branch."""
        return np.sqrt(2.0) * np.array([self.alpha.real, self.alpha.imag])

    def coherent_weights(self) -> tuple[float, float]:
        """Amplitudes (w_+, w_-) of |psi> = w_+ |alpha> + w_- |-alpha>."""
        np_, nm = self.norm_constants
        if self.logical == "plus":
            return 1.0 / np_, 1.0 / np_
        if self.logical == "minus":
            return 1.0 / nm, -1.0 / nm
        s = 1.0 / math.sqrt(2.0)
        if self.logical == "zero":
            return s * (1.0 / np_ + 1.0 / nm), s * (1.0 / np_ - 1.0 / nm)
        return s * (1.0 / np_ - 1.0 / nm), s * (1.0 / np_ + 1.0 / nm)

    def char(self, u):
        return cat_char(self, u)


def cat_char(spec: CatStateSpec, u):
    """Characteristic function of a cat state.

    Expands ``|psi><psi|`` over the four coherent dyads of ``|alpha>`` and
    ``|-alpha>``; for the zero/one cats this reproduces the combination with
    weights ``(1/N_+^2 + 1/N_-^2)/2``, ``(1/N_+^2 - 1/N_-^2)/2`` and
    ``+-1/(N_+ N_-)``, and it satisfies ``cat_char(spec, 0) = 1`` exactly.
    """
    w_plus, w_minus = spec.coherent_weights()
    b = spec.center
    centers = [b, -b]
    weights = [w_plus, w_minus]
    u = np.asarray(u, dtype=float)
    out = np.zeros(u.shape[:-1], dtype=complex)
    for wi, bi in zip(weights, centers):
        for wj, bj in zip(weights, centers):
            out = out + wi * np.conj(wj) * char_coherent_dyad(bi, bj, u)
    return out if np.ndim(out) else complex(out)


def coherent_overlap(x, y):
    """Overlap ``<x|y>`` of coherent states at phase-space points x, y."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    phase = 0.5 * symplectic_product(x, y)
    return np.exp(1j * phase - 0.25 * np.sum((x - y) ** 2, axis=-1))


def cat_position_pdf(spec: CatStateSpec, x):
    """Coherent-overlap density ``|<x|psi>|^2`` of a cat state.

    ``x`` is a phase-space point (or array of them, shape ``(..., 2)``).  The
    density integrates to one against ``d^2x / (2 pi)``; the heterodyne
    outcome density is this value divided by ``2 pi``.  The rotated-quadrature
    (homodyne) density is obtained separately via ``fock_matrix_of`` +
    ``homodyne_pdf``.
    """
    w_plus, w_minus = spec.coherent_weights()
    b = spec.center
    amp = w_plus * coherent_overlap(x, b) + w_minus * coherent_overlap(x, -b)
    out = np.abs(amp) ** 2
    return out if np.ndim(out) else float(out)


def cat_fock_coefficients(spec: CatStateSpec, truncation: int) -> np.ndarray:
    """Fock expansion coefficients of the cat state up to ``truncation``."""
    w_plus, w_minus = spec.coherent_weights()
    n = np.arange(truncation + 1)
    log_mag = -0.5 * abs(spec.alpha) ** 2 + n * np.log(
        np.maximum(abs(spec.alpha), 1e-300)
    ) - 0.5 * gammaln(n + 1.0)
    phase = np.exp(1j * n * np.angle(spec.alpha))
    coh = np.exp(log_mag) * phase
    if abs(spec.alpha) == 0.0:
        coh = np.zeros(truncation + 1, dtype=complex)
        coh[0] = 1.0
    return w_plus * coh + w_minus * coh * (-1.0) ** n


# ---------------------------------------------------------------------------
# harmonic chains
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainSpec:
    """Circulant chain of quadratic oscillators with coupling ``kappa``.

    ``h_XX`` has 1/2 on the diagonal and ``-kappa/4`` on the off-diagonals and
    corners; ``h_PP = I/2``.  With ``disorder`` set, ``h_XX`` is perturbed by
    ``Q^2/(2m)`` where ``Q`` is the symmetrized real part of an i.i.d.
    standard-normal matrix drawn with ``disorder_seed``.
    """

    m: int
    kappa: float
    disorder: bool = False
    disorder_seed: int = 1234

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("chain needs at least one oscillator")
        if abs(self.kappa) > 1.0:
            raise ValueError("|kappa| must not exceed 1")

    @property
    def modes(self) -> int:
        return self.m

    def h_xx(self) -> np.ndarray:
        h = 0.5 * np.eye(self.m)
        if self.m > 1:
            off = -self.kappa / 4.0
            idx = np.arange(self.m - 1)
            h[idx, idx + 1] = off
            h[idx + 1, idx] = off
            h[0, self.m - 1] += off
            h[self.m - 1, 0] += off
        if self.disorder:
            rng = np.random.default_rng(self.disorder_seed)
            a = rng.standard_normal((self.m, self.m))
            q = 0.5 * (a + a.T)
            h = h + (q @ q) / (2.0 * self.m)
        return h


def _sqrtm_psd(mat: np.ndarray, inverse: bool = False) -> np.ndarray:
    """Symmetric square root (or inverse root) with eigenvalue floor."""
    lam, vec = np.linalg.eigh(0.5 * (mat + mat.T))
    if lam.min() < _EIG_FLOOR:
        raise ValueError(
            f"matrix not positive definite (min eigenvalue {lam.min():.3e}); "
            "kappa too close to a degenerate point"
        )
    root = np.sqrt(lam)
    if inverse:
        root = 1.0 / root
    return (vec * root) @ vec.T


def chain_ground_state(spec: ChainSpec) -> GaussianStateSpec:
    """Gaussian ground state of the chain: mean 0, covariance diag(X, X^-1).

    ``X = h_XX^{-1/2} sqrt(sqrt(h_XX) h_PP sqrt(h_XX)) h_XX^{-1/2}`` with all
    matrix roots taken by symmetric eigendecomposition.
    """
    h_xx = spec.h_xx()
    h_pp = 0.5 * np.eye(spec.m)
    root = _sqrtm_psd(h_xx)
    inv_root = _sqrtm_psd(h_xx, inverse=True)
    inner = _sqrtm_psd(root @ h_pp @ root)
    x_mat = inv_root @ inner @ inv_root
    x_mat = 0.5 * (x_mat + x_mat.T)
    x_inv = np.linalg.inv(x_mat)
    x_inv = 0.5 * (x_inv + x_inv.T)
    cov = np.block(
        [[x_mat, np.zeros_like(x_mat)], [np.zeros_like(x_mat), x_inv]]
    )
    return GaussianStateSpec(np.zeros(2 * spec.m), cov)


# ---------------------------------------------------------------------------
# truncated Fock matrices
# ---------------------------------------------------------------------------


def _thermal_fock(nu: float, truncation: int) -> FockMatrix:
    n = np.arange(truncation + 1)
    probs = (nu / (nu + 1.0)) ** n / (nu + 1.0) if nu > 0 else (n == 0).astype(float)
    mat = np.diag(probs).astype(complex)
    return FockMatrix(1, truncation, mat, trace_deficit=1.0 - probs.sum())


def _pure_fock(coeffs: np.ndarray, truncation: int) -> FockMatrix:
    coeffs = np.asarray(coeffs, dtype=complex)
    mat = np.outer(coeffs, coeffs.conj())
    return FockMatrix(1, truncation, mat, trace_deficit=1.0 - float(np.vdot(coeffs, coeffs).real))


def _gaussian_fock(spec: GaussianStateSpec, truncation: int) -> FockMatrix:
    """Single-mode Gaussian state via the Plancherel pairing with Fock dyads."""
    if spec.modes != 1:
        raise ValueError("Fock matrices of Gaussian states supported for one mode")
    # Gauss-Legendre tensor grid; integrand decays at least like exp(-|u|^2/4).
    half = 10.0 + np.sqrt(np.linalg.eigvalsh(spec.cov).max()) + np.linalg.norm(spec.mean)
    nodes, weights = np.polynomial.legendre.leggauss(180)
    pts = half * nodes
    w2d = np.outer(weights, weights) * half * half
    ux, up = np.meshgrid(pts, pts, indexing="ij")
    grid = np.stack([ux, up], axis=-1)
    chi_rho = spec.char(grid)
    dim = truncation + 1
    mat = np.zeros((dim, dim), dtype=complex)
    rho = np.sqrt(ux * ux + up * up)
    phi = np.arctan2(up, ux)
    for n1 in range(dim):
        for n2 in range(n1, dim):
            coeff, d, radial = fock_dyad_radial(n1, n2)
            dyad = coeff * radial(rho) * np.exp(1j * d * phi)
            val = np.sum(w2d * np.conj(dyad) * chi_rho) / (2.0 * np.pi)
            mat[n1, n2] = val
            mat[n2, n1] = np.conj(val)
    fm = FockMatrix(1, truncation, mat)
    fm.trace_deficit = 1.0 - fm.trace().real
    return fm


def fock_matrix_of(state, truncation: int) -> FockMatrix:
    """Exact truncated density matrix of a supported single-mode state.

    ``state`` is a :class:`CatStateSpec` or a single-mode
    :class:`GaussianStateSpec` (vacuum, coherent, thermal and squeezed states
    included; isotropic zero-mean Gaussians take the exact thermal path).  The
    truncation deficit ``1 - tr`` is recorded on the result.
    """
    if truncation < 0:
        raise ValueError("truncation must be non-negative")
    if isinstance(state, CatStateSpec):
        return _pure_fock(cat_fock_coefficients(state, truncation), truncation)
    if isinstance(state, GaussianStateSpec):
        if state.modes != 1:
            raise ValueError("multimode Fock matrices are out of scope")
        cov = state.cov
        iso = np.allclose(cov, cov[0, 0] * np.eye(2), atol=1e-12)
        if iso and np.allclose(state.mean, 0.0, atol=1e-12):
            return _thermal_fock(0.5 * (cov[0, 0] - 1.0), truncation)
        if iso and np.isclose(cov[0, 0], 1.0, atol=1e-12):
            alpha = complex(state.mean[0], state.mean[1]) / np.sqrt(2.0)
            n = np.arange(truncation + 1)
            log_mag = -0.5 * abs(alpha) ** 2 + n * np.log(max(abs(alpha), 1e-300)) \
                - 0.5 * gammaln(n + 1.0)
            coeffs = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
            if abs(alpha) == 0.0:
                coeffs = np.zeros(truncation + 1, dtype=complex)
                coeffs[0] = 1.0
            return _pure_fock(coeffs, truncation)
        return _gaussian_fock(state, truncation)
    raise ValueError(f"unsupported state kind: {type(state).__name__}")


def fock_moments(fock: FockMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Mean vector and covariance matrix implied by a single-mode Fock matrix.

    Uses the ladder-operator sums; the covariance follows the anticommutator
    convention in which the vacuum has V = I.
    """
    if fock.modes != 1:
        raise ValueError("fock_moments supports single-mode matrices")
    rho = fock.entries
    n = np.arange(fock.truncation + 1)
    tr = np.trace(rho).real
    a_mean = np.sum(np.sqrt(n[1:]) * np.diag(rho, k=-1))
    aa = np.sum(np.sqrt(n[2:] * (n[2:] - 1)) * np.diag(rho, k=-2))
    adaga = np.sum(n * np.diag(rho).real)
    tx = np.sqrt(2.0) * a_mean.real / tr
    tp = np.sqrt(2.0) * a_mean.imag / tr
    x2 = aa.real + adaga + 0.5 * tr
    p2 = -aa.real + adaga + 0.5 * tr
    xp = aa.imag
    v_xx = 2.0 * x2 / tr - 2.0 * tx * tx
    v_pp = 2.0 * p2 / tr - 2.0 * tp * tp
    v_xp = 2.0 * xp / tr - 2.0 * tx * tp
    return np.array([tx, tp]), np.array([[v_xx, v_xp], [v_xp, v_pp]])
