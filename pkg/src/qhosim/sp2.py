"""The sp(2) algebra spanned by x^2, p^2 and {x, p}, and Trotter defects in it.

Vectors are (a, b, c) meaning a x^2 + b p^2 + c {x, p}.  The commutators

    [x^2, p^2] = 2i {x,p},  [x^2, {x,p}] = 4i x^2,  [p^2, {x,p}] = -4i p^2

make ad_{x^2} and ad_{p^2} nilpotent of order three on this space, so a
conjugation exp(-i tau G) Y exp(i tau G) = Y - i tau [G, Y] - tau^2/2 [G, [G, Y]]
is exact after two terms.  With tau a polynomial in s, a conjugated
vector is again a polynomial in s with vector coefficients.

Defect operator
---------------
For U(s) = E_1 E_2 ... E_m with E_k = exp(-i c_k s G_k),

    U^-1 dU/ds = sum_k (E_{k+1} ... E_m)^-1 (-i c_k G_k) (E_{k+1} ... E_m),

which is evaluated left to right as acc <- E_k^-1 acc E_k - i c_k G_k.
The defect is f_p(s) = U_p(s)^-1 dU_p/ds + i H with H = (x^2 + p^2)/2; it
vanishes to order s**(2p) for the order-p Suzuki formula.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegreeOverflow, UsageError
from .oscillator import fock_quadratures
from .trotter import build_schedule

DEFAULT_DEGREE_CAP = 1024

X2 = np.array([1.0, 0.0, 0.0], dtype=complex)
P2 = np.array([0.0, 1.0, 0.0], dtype=complex)
XP = np.array([0.0, 0.0, 1.0], dtype=complex)

_AD = {
    "X2": np.array([[0, 0, 4j], [0, 0, 0], [0, 2j, 0]]),
    "P2": np.array([[0, 0, 0], [0, 0, -4j], [-2j, 0, 0]]),
}


@dataclass(frozen=True)
class Sp2Vector:
    a: complex
    b: complex
    c: complex

    def as_array(self):
        return np.array([self.a, self.b, self.c], dtype=complex)


class Sp2Poly:
    """Polynomial in s whose coefficients are sp(2) vectors.

    ``coefficients[k]`` is the (a, b, c) vector multiplying s**k.  Trailing
    zero rows are dropped on construction; the zero polynomial keeps a
    single zero row.
    """

    __slots__ = ("_coeffs",)

    def __init__(self, coefficients):
        arr = np.array(coefficients, dtype=complex, ndmin=2)
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise UsageError("coefficients must have shape (degree+1, 3)")
        if not np.all(np.isfinite(arr)):
            raise UsageError("coefficients must be finite")
        nz = np.flatnonzero(np.any(arr != 0, axis=1))
        arr = arr[: nz[-1] + 1] if nz.size else np.zeros((1, 3), dtype=complex)
        arr.setflags(write=False)
        self._coeffs = arr

    @classmethod
    def constant(cls, vector):
        return cls(np.asarray(vector, dtype=complex)[None, :])

    @property
    def coefficients(self):
        return self._coeffs

    @property
    def degree(self):
        return self._coeffs.shape[0] - 1

    @property
    def max_degree(self):
        return self.degree

    def is_zero(self):
        return not np.any(self._coeffs)

    def __add__(self, other):
        a, b = self._coeffs, other.coefficients
        out = np.zeros((max(len(a), len(b)), 3), dtype=complex)
        out[: len(a)] += a
        out[: len(b)] += b
        return Sp2Poly(out)

    def __sub__(self, other):
        return self + Sp2Poly(-other.coefficients)

    def __call__(self, s):
        powers = s ** np.arange(self._coeffs.shape[0])
        a, b, c = powers @ self._coeffs
        return Sp2Vector(complex(a), complex(b), complex(c))

    def coefficient(self, k):
        if k > self.degree:
            return Sp2Vector(0j, 0j, 0j)
        return Sp2Vector(*map(complex, self._coeffs[k]))

    def magnitudes(self):
        return np.linalg.norm(self._coeffs, axis=1)

    def to_matrix(self, s, x_op, p_op):
        """a(s) x^2 + b(s) p^2 + c(s) (x p + p x) for given operator matrices."""
        v = self(s)
        return v.a * (x_op @ x_op) + v.b * (p_op @ p_op) + v.c * (x_op @ p_op + p_op @ x_op)

    def rows(self):
        """(degree, re_a, im_a, re_b, im_b, re_c, im_c) for each power."""
        out = []
        for k, (a, b, c) in enumerate(self._coeffs):
            out.append((k, a.real, a.imag, b.real, b.imag, c.real, c.imag))
        return out

    def __repr__(self):
        return f"Sp2Poly(degree={self.degree})"


def _scale_by_poly(tau, vecs):
    """Product of the scalar polynomial ``tau`` with the vector polynomial ``vecs``."""
    out = np.zeros((len(tau) + len(vecs) - 1, 3), dtype=complex)
    for i, t in enumerate(tau):
        if t != 0:
            out[i: i + len(vecs)] += t * vecs
    return out


def adjoint(generator, coefficient, target, degree_cap=DEFAULT_DEGREE_CAP):
    """exp(-i tau G) Y exp(i tau G) with tau a polynomial in s.

    ``coefficient`` lists tau's coefficients by power of s (a plain number
    means a constant); ``generator`` is "X2" or "P2".
    """
    if generator not in _AD:
        raise UsageError(f"generator must be 'X2' or 'P2', got {generator!r}")
    tau = np.atleast_1d(np.asarray(coefficient, dtype=complex))
    y = target.coefficients
    tdeg = len(tau) - 1
    if target.degree + 2 * tdeg > degree_cap:
        raise DegreeOverflow(
            f"adjoint would reach degree {target.degree + 2 * tdeg} > cap {degree_cap}"
        )
    ad = _AD[generator]
    first = y @ ad.T
    second = first @ ad.T
    tau2 = np.convolve(tau, tau)
    out = np.zeros((len(y) + 2 * tdeg, 3), dtype=complex)
    out[: len(y)] += y
    t1 = _scale_by_poly(-1j * tau, first)
    out[: len(t1)] += t1
    t2 = _scale_by_poly(-0.5 * tau2, second)
    out[: len(t2)] += t2
    return Sp2Poly(out)


def defect_poly(p, splitting="qho", degree_cap=DEFAULT_DEGREE_CAP):
    """f_p(s) = U_p(s)^-1 dU_p/ds + i H for the oscillator splitting."""
    if splitting != "qho":
        raise UsageError("only the oscillator splitting stays inside sp(2)")
    if p not in (1, 2, 3):
        raise UsageError(f"defect polynomials are provided for p in {{1, 2, 3}}, got {p!r}")
    sched = build_schedule(p, 1.0, "qho")
    acc = np.zeros((1, 3), dtype=complex)
    basis = {"X2": X2, "P2": P2}
    for tag, c in sched.steps:
        acc = adjoint(tag, [0.0, -c], Sp2Poly(acc), degree_cap).coefficients.copy()
        acc[0] += -1j * c * basis[tag]
    acc[0] += 0.5j * (X2 + P2)
    return Sp2Poly(acc)


def lowest_degree(poly, rel_tol=1e-9):
    """Smallest power of s whose coefficient is above rel_tol times the largest."""
    mags = poly.magnitudes()
    top = mags.max()
    if top == 0:
        raise UsageError("lowest degree of the zero polynomial is undefined")
    return int(np.flatnonzero(mags > rel_tol * top)[0])


def defect_norm(poly, s, n):
    """||f(s) |psi_n>|| for the continuous oscillator, from ladder matrices."""
    x, p = fock_quadratures(n + 3)
    op = poly.to_matrix(s, x, p)
    return float(np.linalg.norm(op[:, n]))


def dominance_radius(poly, rel_tol=1e-9, s_max=1.0, samples=400):
    """Largest sampled s <= s_max where the lowest-degree term dominates the rest.

    Stands in for the unspecified convergence constant: below this radius
    |f(s)| behaves like its leading s**l term.
    """
    low = lowest_degree(poly, rel_tol)
    mags = poly.magnitudes()
    ks = np.arange(mags.size)
    best = 0.0
    for s in np.geomspace(1e-4, s_max, samples):
        lead = mags[low] * s ** low
        rest = np.sum(mags[low + 1:] * s ** ks[low + 1:])
        if lead >= rest:
            best = float(s)
        else:
            break
    return best
