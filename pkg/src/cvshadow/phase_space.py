"""Phase-space conventions, special functions, and exact characteristic functions.

Conventions used throughout the package:

* An ``m``-mode phase-space point is a real vector of length ``2m`` ordered as
  ``(x_1, ..., x_m, p_1, ..., p_m)`` (positions first, then momenta).
* The symplectic form is ``Omega = [[0, I], [-I, 0]]``, so ``Omega @ (x, p) =
  (p, -x)``.  It is applied as a coordinate swap and never stored densely for
  large mode counts.
* The displacement operator is ``D(x) = exp(-i x^T Omega R)`` with
  ``R = (X_1..X_m, P_1..P_m)``, ``X = (a + a^dag)/sqrt(2)``.  The complex
  amplitude of a single-mode point ``u = (u_x, u_p)`` is
  ``alpha(u) = (u_x + i u_p)/sqrt(2)``.
* The characteristic function of a trace-class operator ``Z`` is
  ``chi_Z(u) = Tr[Z D(u)]``.  Vacuum: ``chi(u) = exp(-|u|^2/4)``; a valid
  covariance matrix has ``V = I`` for the vacuum.

All functions here are pure and safe for concurrent callers.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, i0, i0e


def mode_count(u) -> int:
    """Number of modes of a phase-space vector (its length must be even)."""
    u = np.asarray(u)
    n = u.shape[-1]
    if n % 2 != 0:
        raise ValueError(f"phase-space vector length must be even, got {n}")
    return n // 2


def as_phase_point(u, modes: int | None = None) -> np.ndarray:
    """Validate and return ``u`` as a float array of even length."""
    u = np.asarray(u, dtype=float)
    if u.ndim != 1 or u.size % 2 != 0:
        raise ValueError(f"expected a flat even-length vector, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise ValueError("phase-space point has non-finite entries")
    if modes is not None and u.size != 2 * modes:
        raise ValueError(f"expected {2 * modes} coordinates, got {u.size}")
    return u


def omega_apply(u: np.ndarray) -> np.ndarray:
    """Apply the symplectic form: ``Omega @ (x, p) = (p, -x)``.

    Acts on the last axis, which must have even length.
    """
    u = np.asarray(u)
    m = u.shape[-1] // 2
    return np.concatenate([u[..., m:], -u[..., :m]], axis=-1)


def omega_matrix(m: int) -> np.ndarray:
    """Dense ``2m x 2m`` symplectic form, for small-m checks only."""
    eye = np.eye(m)
    zero = np.zeros((m, m))
    return np.block([[zero, eye], [-eye, zero]])


def symplectic_product(u, v) -> np.ndarray:
    """``u^T Omega v`` without materializing Omega."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    m = u.shape[-1] // 2
    return np.sum(u[..., :m] * v[..., m:], axis=-1) - np.sum(
        u[..., m:] * v[..., :m], axis=-1
    )


def mode_pair(u: np.ndarray, j: int) -> np.ndarray:
    """Extract the single-mode sub-vector ``u^(j) = (u_j, u_{m+j})``."""
    u = np.asarray(u)
    m = u.shape[-1] // 2
    return np.stack([u[..., j], u[..., m + j]], axis=-1)


def alpha_of(u: np.ndarray) -> np.ndarray:
    """Complex amplitude ``(x + i p)/sqrt(2)`` of single-mode points.

    Accepts arrays of shape ``(..., 2)``.
    """
    u = np.asarray(u, dtype=float)
    return (u[..., 0] + 1j * u[..., 1]) / np.sqrt(2.0)


@dataclass(frozen=True)
class Rotation2:
    """A phase-space rotation of one mode by ``theta`` radians.

    As a 2x2 matrix it is symplectic and orthogonal, and it commutes with the
    single-mode symplectic form.
    """

    theta: float

    @property
    def matrix(self) -> np.ndarray:
        c, s = np.cos(self.theta), np.sin(self.theta)
        return np.array([[c, -s], [s, c]])

    def apply(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        return u @ self.matrix.T


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------


def laguerre(k: int, j: int, x):
    """Generalized Laguerre polynomial ``L_k^(j)(x)``.

    Evaluated with the three-term recurrence in ``k``; the explicit factorial
    sum cancels catastrophically for k of a few tens.  Vectorized in ``x``.
    """
    if k < 0 or j < 0:
        raise ValueError(f"laguerre indices must be non-negative, got k={k}, j={j}")
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if k == 0:
        return prev if prev.ndim else float(prev)
    cur = 1.0 + j - x
    for i in range(2, k + 1):
        prev, cur = cur, ((2 * i - 1 + j - x) * cur - (i - 1 + j) * prev) / i
    return cur if cur.ndim else float(cur)


_HERMITE_MAX_N = 200


def hermite_wavefunction(n: int, q):
    """L2-normalized harmonic-oscillator eigenfunction ``psi_n(q)``.

    Convention ``X = (a + a^dag)/sqrt(2)``, i.e. ``psi_0(q) =
    pi^(-1/4) exp(-q^2/2)`` and ``int psi_n^2 dq = 1``.  Uses the stable
    three-term recurrence on the normalized functions.  Vectorized in ``q``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if n > _HERMITE_MAX_N:
        raise ValueError(f"n={n} out of range (supported up to {_HERMITE_MAX_N})")
    q = np.asarray(q, dtype=float)
    psi_prev = np.zeros_like(q)
    psi = np.pi ** (-0.25) * np.exp(-0.5 * q * q)
    for i in range(n):
        psi_prev, psi = psi, q * np.sqrt(2.0 / (i + 1)) * psi - np.sqrt(
            i / (i + 1.0)
        ) * psi_prev
    return psi if psi.ndim else float(psi)


_BESSEL_SCALED_THRESHOLD = 30.0


def bessel_i0(x: float):
    """Modified Bessel function ``I_0(x)`` for ``x >= 0``.

    For ``x <= 30`` returns the plain value.  Beyond that ``I_0`` heads toward
    overflow when composed into ratios, so the exponentially-scaled pair
    ``(exp(-x) I_0(x), x)`` is returned instead; callers re-assemble ratios
    such as ``exp(-x) I_0(x)`` without ever forming ``I_0`` itself.
    """
    if x < 0:
        raise ValueError("bessel_i0 requires x >= 0")
    if x > _BESSEL_SCALED_THRESHOLD:
        return float(i0e(x)), float(x)
    return float(i0(x))


def bessel_i0_scaled(x) -> np.ndarray:
    """``exp(-|x|) I_0(x)``, overflow-free for any argument.  Vectorized."""
    return i0e(x)


# ---------------------------------------------------------------------------
# characteristic functions
# ---------------------------------------------------------------------------


def char_coherent_dyad(x, y, u):
    """Characteristic function of the coherent dyad ``|x><y|`` at ``u``.

    ``chi(u) = exp(-i/2 u^T Omega x) exp(i/2 y^T Omega (u+x))
    exp(-|u+x-y|^2/4)``.  ``x``, ``y`` and ``u`` share the same (even)
    dimension; multimode arguments factorize automatically.  ``u`` may carry
    leading batch axes.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)
    phase = -0.5 * symplectic_product(u, x) + 0.5 * symplectic_product(y, u + x)
    gauss = -0.25 * np.sum((u + x - y) ** 2, axis=-1)
    out = np.exp(gauss + 1j * phase)
    return out if np.ndim(out) else complex(out)


def _log_fact_ratio_sqrt(lo: int, hi: int) -> float:
    """log sqrt(lo!/hi!) for hi >= lo, in the log domain."""
    return 0.5 * (gammaln(lo + 1) - gammaln(hi + 1))


def fock_dyad_radial(n1: int, n2: int):
    """Polar decomposition of ``chi_{|n1><n2|}``.

    Writes ``chi_{|n1><n2|}(u) = c * radial(rho) * exp(i d phi)`` for
    ``u = rho (cos phi, sin phi)``, with ``d = n2 - n1``.  Returns
    ``(c, d, radial)`` where ``c`` carries the sign convention of the
    ``n1 > n2`` branch and ``radial`` maps ``rho >= 0`` arrays to the real
    profile ``sqrt(lo!/hi!) (rho/sqrt2)^|d| exp(-rho^2/4) L_lo^(|d|)(rho^2/2)``.
    """
    if n1 < 0 or n2 < 0:
        raise ValueError("Fock indices must be non-negative")
    d = n2 - n1
    lo, hi = min(n1, n2), max(n1, n2)
    sign = (-1.0) ** (n1 - n2) if n1 > n2 else 1.0
    coeff = sign * np.exp(_log_fact_ratio_sqrt(lo, hi))

    def radial(rho):
        rho = np.asarray(rho, dtype=float)
        t = 0.5 * rho * rho
        return (rho / np.sqrt(2.0)) ** abs(d) * np.exp(-0.5 * t) * laguerre(
            lo, abs(d), t
        )

    return coeff, d, radial


def char_fock_dyad(n1: int, n2: int, u):
    """Characteristic function ``chi_{|n1><n2|}(u) = <n2| D(u) |n1>``.

    Closed form ``sqrt(k!/j!) exp(-|u|^2/4) alpha(u)^(j-k) L_k^(j-k)(|u|^2/2)``
    for ``j = n2 >= k = n1`` and the conjugate-symmetric branch otherwise
    (convention of the displacement operator above; validated against
    ``displacement_oracle``).  ``u`` has shape ``(..., 2)``.
    """
    u = np.asarray(u, dtype=float)
    if u.shape[-1] != 2:
        raise ValueError("char_fock_dyad expects single-mode points of shape (..., 2)")
    coeff, d, radial = fock_dyad_radial(n1, n2)
    rho = np.sqrt(np.sum(u * u, axis=-1))
    phi = np.arctan2(u[..., 1], u[..., 0])
    out = coeff * radial(rho) * np.exp(1j * d * phi)
    return out if np.ndim(out) else complex(out)


def displacement_oracle(u, m_osc: int) -> np.ndarray:
    """Matrix of ``D(u)`` in the truncated Fock basis ``{|0>,...,|m_osc>}``.

    Built from the normally-ordered split ``exp(-|u|^2/4) exp(alpha a^dag)
    exp(-conj(alpha) a)`` as a product of two triangular series.  Entry
    ``(j, k)`` approximates ``<j| D(u) |k>``; entries with ``j + k`` well below
    ``m_osc`` are exact because the triangular sums terminate.  Accuracy of
    the *product* structure (unitarity, Weyl composition) degrades gracefully
    once ``|u|^2`` becomes comparable with ``m_osc``.
    """
    u = as_phase_point(u, modes=1)
    if m_osc < 0:
        raise ValueError("m_osc must be non-negative")
    alpha = complex(alpha_of(u))
    dim = m_osc + 1
    n = np.arange(dim)
    log_fact = gammaln(n + 1.0)
    # exp(alpha a^dag): lower triangular, (j, k) = alpha^(j-k) sqrt(j!/k!)/(j-k)!
    jj, kk = np.meshgrid(n, n, indexing="ij")
    diff = jj - kk
    lower = diff >= 0
    with np.errstate(invalid="ignore"):
        log_mag = 0.5 * (log_fact[jj] - log_fact[kk]) - gammaln(np.abs(diff) + 1.0)
    e_create = np.where(lower, np.exp(log_mag) * alpha ** np.where(lower, diff, 0), 0)
    # exp(-conj(alpha) a): upper triangular, (j, k) = (-conj)^{k-j} sqrt(k!/j!)/(k-j)!
    upper = diff <= 0
    log_mag_u = 0.5 * (log_fact[kk] - log_fact[jj]) - gammaln(np.abs(diff) + 1.0)
    e_annih = np.where(
        upper, np.exp(log_mag_u) * (-np.conj(alpha)) ** np.where(upper, -diff, 0), 0
    )
    return np.exp(-0.25 * np.dot(u, u)) * (e_create @ e_annih)


def char_gaussian_raw(mean, cov, u):
    """Characteristic function of a Gaussian state with mean ``t`` and covariance ``V``.

    ``chi(u) = exp(-1/4 (Omega u)^T V (Omega u) - i u^T Omega t)``.  The
    symplectic congruence on the quadratic form and the sign of the mean phase
    are both fixed by agreement with ``chi_{|x><x|}(u) = exp(-|u|^2/4 -
    i u^T Omega x)`` and with the Fock-basis oracle on squeezed states; for
    isotropic ``V`` the congruence is invisible.  ``u`` may carry leading
    batch axes.
    """
    mean = np.asarray(mean, dtype=float)
    cov = np.asarray(cov, dtype=float)
    u = np.asarray(u, dtype=float)
    if cov.shape[-1] != u.shape[-1] or mean.shape[-1] != u.shape[-1]:
        raise ValueError(
            f"dimension mismatch: mean {mean.shape}, cov {cov.shape}, u {u.shape}"
        )
    ou = omega_apply(u)
    quad = np.einsum("...i,ij,...j->...", ou, cov, ou)
    phase = -symplectic_product(u, mean)
    out = np.exp(-0.25 * quad + 1j * phase)
    return out if np.ndim(out) else complex(out)


# ---------------------------------------------------------------------------
# sampled grids
# ---------------------------------------------------------------------------


@dataclass
class CharGrid:
    """Characteristic-function samples on a rectangular phase-space grid.

    ``values`` is stored row-major over the axes in order; axis ``i`` holds
    ``shape[i]`` points ``origin[i] + step[i] * arange(shape[i])``.
    ``provenance`` records whether the values are exact evaluations or a
    shadow reconstruction.
    """

    origin: tuple[float, ...]
    step: tuple[float, ...]
    shape: tuple[int, ...]
    values: np.ndarray = field(repr=False)
    provenance: str = "exact"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if int(np.prod(self.shape)) != self.values.size:
            raise ValueError(
                f"shape {self.shape} does not match {self.values.size} values"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("CharGrid values must be finite")
        self.values = self.values.reshape(self.shape)
        if len(self.origin) != len(self.shape) or len(self.step) != len(self.shape):
            raise ValueError("origin/step/shape must have matching lengths")

    def axis_points(self, i: int) -> np.ndarray:
        return self.origin[i] + self.step[i] * np.arange(self.shape[i])

    def meshgrid(self) -> list[np.ndarray]:
        axes = [self.axis_points(i) for i in range(len(self.shape))]
        return list(np.meshgrid(*axes, indexing="ij"))
