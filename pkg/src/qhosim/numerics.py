"""Numerical kernels: unitary DFTs, a dense Hermitian eigensolver and line fits.

Sign convention
---------------
The forward transforms use ``exp(-2*pi*i*j*k/N)/sqrt(N)``.  With this choice
the centered DFT maps the sampled Hermite functions to ``(-i)**n`` times
themselves and ``p = F^-1 x F`` is the usual momentum operator ``-i d/dx``.
The opposite sign would flip every momentum (``p -> -p``); quadratic
quantities such as ``p**2`` are identical under both choices.

Grid vectors are stored in natural order, array position ``j + N/2`` for the
symmetric index ``j = -N/2 .. N/2-1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import NumericalFailure, UsageError

QL_MAX_SWEEPS = 50


def _as_complex(v, name="v"):
    arr = np.asarray(v, dtype=complex)
    if arr.size == 0:
        raise UsageError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise UsageError(f"{name} contains non-finite entries")
    return arr


def _check_direction(direction):
    if direction not in ("forward", "inverse"):
        raise UsageError(f"direction must be 'forward' or 'inverse', got {direction!r}")


def fft_unitary(v, direction="forward", axis=0):
    """Unitary DFT along ``axis`` on indices 0..N-1.

    Any positive length is accepted; numpy's pocketfft handles prime and
    composite sizes alike.
    """
    _check_direction(direction)
    arr = _as_complex(v)
    if direction == "forward":
        return np.fft.fft(arr, axis=axis, norm="ortho")
    return np.fft.ifft(arr, axis=axis, norm="ortho")


def centered_dft_apply(v, direction="forward", axis=0):
    """Apply the centered DFT F_c (or its inverse) along ``axis``.

    F_c is the cyclic shift by N/2, an ordinary DFT, and the shift back, so
    its matrix is ``exp(-2*pi*i*j*k/N)/sqrt(N)`` with symmetric j, k.
    """
    _check_direction(direction)
    arr = _as_complex(v)
    n = arr.shape[axis]
    if n < 4 or n % 2:
        raise UsageError(f"centered DFT needs an even length >= 4, got {n}")
    shifted = np.fft.ifftshift(arr, axes=axis)
    return np.fft.fftshift(fft_unitary(shifted, direction, axis=axis), axes=axis)


def centered_dft_matrix(n, direction="forward"):
    """Dense F_c built entry by entry; used as an oracle and for small N."""
    if n < 4 or n % 2:
        raise UsageError(f"centered DFT needs an even length >= 4, got {n}")
    _check_direction(direction)
    j = np.arange(-n // 2, n // 2)
    sign = -1.0 if direction == "forward" else 1.0
    return np.exp(sign * 2j * np.pi * np.outer(j, j) / n) / np.sqrt(n)


@dataclass(frozen=True)
class EigenDecomposition:
    """Ascending eigenvalues and the matching eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self):
        return self.eigenvalues.shape[0]

    def residual(self, h):
        """Max-norm of ``H V - V diag(E)``."""
        return np.max(np.abs(h @ self.eigenvectors - self.eigenvectors * self.eigenvalues))

    def orthogonality_error(self):
        v = self.eigenvectors
        return np.max(np.abs(v.conj().T @ v - np.eye(self.dim)))


def check_hermitian(h, tol=1e-12):
    """Return the max |H - H^dagger| deviation, raising if it exceeds ``tol``."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise UsageError(f"expected a square matrix, got shape {h.shape}")
    dev = float(np.max(np.abs(h - h.conj().T))) if h.size else 0.0
    if dev > tol:
        raise UsageError(f"matrix is not Hermitian (deviation {dev:.3e} > {tol:.1e})")
    return dev


def fix_phases(vectors):
    """Rotate each column so its largest-magnitude entry is real positive.

    Near-ties (within 1e-8 relative) go to the highest index, which keeps
    the choice stable for vectors that are symmetric or antisymmetric about
    the grid centre.
    """
    vectors = np.array(vectors, dtype=complex, copy=True)
    mags = np.abs(vectors)
    top = mags.max(axis=0)
    n = vectors.shape[0]
    # last row index whose magnitude is within the tie band of the column max
    in_band = mags >= top * (1.0 - 1e-8)
    idx = n - 1 - np.argmax(in_band[::-1], axis=0)
    pivots = vectors[idx, np.arange(vectors.shape[1])]
    phases = np.where(np.abs(pivots) > 0, pivots / np.where(pivots == 0, 1, np.abs(pivots)), 1.0)
    vectors /= phases
    return vectors


def householder_tridiagonalize(h):
    """Reduce a Hermitian matrix to real symmetric tridiagonal form.

    Returns ``(d, e, q)`` with ``q^dagger h q`` tridiagonal, diagonal ``d``
    and real non-negative sub-diagonal ``e`` (the complex phases of the
    Householder output are absorbed into ``q``).
    """
    a = np.array(h, dtype=complex, copy=True)
    n = a.shape[0]
    q = np.eye(n, dtype=complex)
    for k in range(n - 2):
        x = a[k + 1:, k]
        norm = np.linalg.norm(x)
        if norm == 0.0:
            continue
        x0 = x[0]
        phase = x0 / abs(x0) if x0 != 0 else 1.0
        alpha = -phase * norm
        u = x.copy()
        u[0] -= alpha
        unorm = np.linalg.norm(u)
        if unorm == 0.0:
            continue
        u /= unorm
        sub = a[k + 1:, k + 1:]
        p = sub @ u
        kk = np.vdot(u, p).real
        w = p - kk * u
        sub -= 2.0 * (np.outer(u, w.conj()) + np.outer(w, u.conj()))
        a[k + 1:, k] = 0.0
        a[k, k + 1:] = 0.0
        a[k + 1, k] = alpha
        a[k, k + 1] = np.conj(alpha)
        qs = q[:, k + 1:]
        qs -= 2.0 * np.outer(qs @ u, u.conj())
    d = a.diagonal().real.copy()
    off = a.diagonal(-1).copy()
    # unit phases making the sub-diagonal real and non-negative
    phi = np.ones(n, dtype=complex)
    for k in range(n - 1):
        mag = abs(off[k])
        phi[k + 1] = phi[k] * (off[k] / mag if mag > 0 else 1.0)
    e = np.abs(off)
    return d, e, q * phi


def tridiagonal_ql(d, e, z=None, max_sweeps=QL_MAX_SWEEPS):
    """Implicit-shift QL on a real symmetric tridiagonal matrix.

    ``d`` is the diagonal, ``e`` the sub-diagonal (length n-1).  Rotations are
    accumulated into ``z`` (identity if omitted).  Returns ``(w, z)`` unsorted.
    """
    d = np.array(d, dtype=float, copy=True)
    n = d.shape[0]
    ee = np.zeros(n)
    ee[: n - 1] = e
    z = np.eye(n) if z is None else np.array(z, copy=True)
    for l in range(n):
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                dd = abs(d[m]) + abs(d[m + 1])
                if abs(ee[m]) + dd == dd:
                    break
                m += 1
            if m == l:
                break
            if sweeps == max_sweeps:
                raise NumericalFailure(
                    f"QL iteration did not converge for eigenvalue {l} after {max_sweeps} sweeps",
                    index=l,
                )
            sweeps += 1
            g = (d[l + 1] - d[l]) / (2.0 * ee[l])
            r = np.hypot(g, 1.0)
            g = d[m] - d[l] + ee[l] / (g + np.copysign(r, g))
            s = c = 1.0
            p = 0.0
            deflated = False
            for i in range(m - 1, l - 1, -1):
                f = s * ee[i]
                b = c * ee[i]
                r = np.hypot(f, g)
                ee[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    ee[m] = 0.0
                    deflated = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                zi = z[:, i].copy()
                z[:, i] = c * zi - s * z[:, i + 1]
                z[:, i + 1] = s * zi + c * z[:, i + 1]
            if deflated:
                continue
            d[l] -= p
            ee[l] = g
            ee[m] = 0.0
    return d, z


def _eigh_householder_ql(h):
    n = h.shape[0]
    if n == 1:
        return np.array([h[0, 0].real]), np.ones((1, 1), dtype=complex)
    d, e, q = householder_tridiagonalize(h)
    w, z = tridiagonal_ql(d, e)
    order = np.argsort(w, kind="stable")
    return w[order], q @ z[:, order]


def eigh(h, method="lapack", tol=1e-12, fix_phase=True):
    """Eigendecomposition of a dense Hermitian matrix.

    ``method="householder-ql"`` runs the in-house Householder reduction plus
    implicit QL (at most 50 sweeps per eigenvalue).  ``method="lapack"``
    hands the same problem to LAPACK's ``zheevd`` through numpy, which is
    several times faster for the large reference runs.  Both return
    ascending eigenvalues and phase-fixed eigenvectors.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] == 0:
        raise UsageError(f"expected a non-empty square matrix, got shape {h.shape}")
    scale = max(1.0, float(np.max(np.abs(h))))
    check_hermitian(h, tol * scale)
    h = 0.5 * (h + h.conj().T)
    if method == "householder-ql":
        w, v = _eigh_householder_ql(h)
    elif method == "lapack":
        try:
            w, v = np.linalg.eigh(h)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure(f"LAPACK eigensolver failed: {exc}") from exc
    else:
        raise UsageError(f"unknown eigh method {method!r}")
    if fix_phase:
        v = fix_phases(v)
    return EigenDecomposition(eigenvalues=np.asarray(w, dtype=float), eigenvectors=v)


@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float

    def footer(self):
        return f"# fit slope={self.slope!r} intercept={self.intercept!r} r2={self.r_squared!r}"


def fit_line(xs, ys):
    """Ordinary least-squares line through (xs, ys)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise UsageError("xs and ys must be 1-d arrays of equal length")
    if xs.size < 3:
        raise UsageError(f"need at least 3 points for a fit, got {xs.size}")
    if np.ptp(xs) == 0:
        raise UsageError("degenerate abscissa: all xs are equal")
    if not (np.all(np.isfinite(xs)) and np.all(np.isfinite(ys))):
        raise UsageError("fit data contains non-finite values")
    res = stats.linregress(xs, ys)
    r2 = float(res.rvalue) ** 2 if np.ptp(ys) > 0 else 1.0
    return FitResult(float(res.slope), float(res.intercept), min(max(r2, 0.0), 1.0))
