"""Dense matrix kernels shared by the rest of the package.

Everything here is a pure function of numpy arrays.  The kernels add
explicit numerical contracts (residual checks, rank tolerances, multiset
spectrum comparison) on top of numpy/LAPACK so that callers never receive
silently wrong results.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment


class MatkitError(ArithmeticError):
    """Base class for numerical failures raised by the kernels."""


class EigenError(MatkitError):
    pass


class SingularMatrixError(MatkitError):
    def __init__(self, message, condition=math.inf):
        super().__init__(f"{message} (condition estimate {condition:.3e})")
        self.condition = condition


class DomainError(MatkitError, ValueError):
    pass


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances used by the decision procedures.

    ``cluster`` and ``strict`` are relative factors; callers scale them by
    the norms of the operands involved.
    """

    rank: float = 1e-10
    cluster: float = 1e-6
    eig: float = 1e-8
    strict: float = 1e-9
    trim: float = 1e-9
    regular: float = 1e-12
    split: float = 1e-8

    def override(self, **changes) -> "Tolerances":
        """Copy with the non-``None`` entries of ``changes`` applied."""
        return dataclasses.replace(self, **{k: v for k, v in changes.items() if v is not None})


DEFAULT_TOL = Tolerances()


def as_matrix(a, name="matrix") -> np.ndarray:
    """Validate ``a`` as a finite, non-empty 2-D array."""
    arr = np.asarray(a)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and column")
    if not np.issubdtype(arr.dtype, np.number):
        raise ValueError(f"{name} must be numeric")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    if np.iscomplexobj(arr):
        return arr.astype(complex)
    return arr.astype(float)


def _square(a, name="matrix"):
    a = as_matrix(a, name)
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def norm2(a) -> float:
    a = np.asarray(a)
    if a.size == 0:
        return 0.0
    return float(np.linalg.norm(a, 2))


# --------------------------------------------------------------------------
# spectra


@dataclass(frozen=True)
class Spectrum:
    """Eigenvalues with repetition, sorted by (real, imag)."""

    values: np.ndarray = field(default_factory=lambda: np.zeros(0, complex))

    def __post_init__(self):
        v = np.asarray(self.values, dtype=complex).ravel()
        order = np.lexsort((np.round(v.imag, 12), np.round(v.real, 12)))
        object.__setattr__(self, "values", v[order])

    def __len__(self):
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def scaled(self, c) -> "Spectrum":
        return Spectrum(self.values * c)

    def clusters(self, tol: float) -> list[tuple[complex, int]]:
        """Group values closer than ``tol`` (single linkage).

        Returns ``(center, multiplicity)`` pairs; the center is the cluster
        mean, which is far more accurate than any single member for a
        defective eigenvalue.
        """
        vals = list(self.values)
        groups: list[list[complex]] = []
        used = [False] * len(vals)
        for i in range(len(vals)):
            if used[i]:
                continue
            used[i] = True
            group = [vals[i]]
            stack = [i]
            while stack:
                k = stack.pop()
                for j in range(len(vals)):
                    if not used[j] and abs(vals[j] - vals[k]) <= tol:
                        used[j] = True
                        group.append(vals[j])
                        stack.append(j)
            groups.append(group)
        return [(complex(np.mean(g)), len(g)) for g in groups]

    def distance(self, other) -> float:
        """Maximum mismatch between two spectra compared as multisets."""
        a = np.asarray(getattr(other, "values", other), dtype=complex).ravel()
        b = self.values
        if len(a) != len(b):
            return math.inf
        if len(a) == 0:
            return 0.0
        cost = np.abs(a[:, None] - b[None, :])
        rows, cols = linear_sum_assignment(cost)
        return float(cost[rows, cols].max())

    def to_pairs(self) -> list[list[float]]:
        return [[float(z.real), float(z.imag)] for z in self.values]


def cluster_tolerance(a, tol: Tolerances = DEFAULT_TOL) -> float:
    return tol.cluster * (1.0 + norm2(a))


# --------------------------------------------------------------------------
# kernels


def kron(a, b) -> np.ndarray:
    return np.kron(as_matrix(a, "a"), as_matrix(b, "b"))


def eig(a, tol: Tolerances = DEFAULT_TOL) -> tuple[Spectrum, np.ndarray]:
    """Eigenvalues and right eigenvectors with a residual guarantee.

    Returns ``(spectrum, vectors)``; column k of ``vectors`` belongs to
    ``spectrum.values[k]``.
    """
    a = _square(a)
    try:
        w, v = np.linalg.eig(a)
    except np.linalg.LinAlgError as exc:
        raise EigenError(f"eigensolver did not converge: {exc}") from exc
    if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
        raise EigenError("eigensolver returned non-finite values")
    scale = norm2(a)
    resid = np.linalg.norm(a @ v - v * w, axis=0)
    limit = tol.eig * max(scale, np.finfo(float).tiny) * np.linalg.norm(v, axis=0)
    if scale > 0 and np.any(resid > limit):
        raise EigenError(f"eigenpair residual {resid.max():.3e} exceeds {limit.max():.3e}")
    spec = Spectrum(w)
    # Spectrum sorts its values; reorder vectors to match
    order = np.lexsort((np.round(w.imag, 12), np.round(w.real, 12)))
    return spec, v[:, order].astype(complex)


def eigvals(a, tol: Tolerances = DEFAULT_TOL) -> Spectrum:
    return eig(a, tol)[0]


def rank(a, tol=None, atol=0.0) -> int:
    """Numerical rank: singular values above ``max(tol*sigma_max, atol)``.

    ``tol`` defaults to ``1e-10 * max(rows, cols)``.
    """
    a = np.asarray(a)
    if a.size == 0:
        return 0
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0.0:
        return 0
    if tol is None:
        tol = DEFAULT_TOL.rank * max(a.shape)
    return int(np.sum(s > max(tol * s[0], atol)))


def null_space(a, tol=None, atol=0.0) -> np.ndarray:
    """Orthonormal basis of the numerical kernel (columns)."""
    a = np.asarray(a)
    n = a.shape[1]
    r = rank(a, tol, atol)
    _, _, vh = np.linalg.svd(a)
    return vh[r:].conj().T.reshape(n, n - r)


# Padé(m) degrees and the 1-norm bounds below which they reach unit
# roundoff, from Higham's scaling-and-squaring analysis.
_PADE_THETA = {
    3: 1.495585217958292e-2,
    5: 2.539398330063230e-1,
    7: 9.504178996162932e-1,
    9: 2.097847961257068e0,
    13: 5.371920351148152e0,
}


def _pade_coefficients(m):
    return [
        math.factorial(2 * m - j) * math.factorial(m)
        / (math.factorial(2 * m) * math.factorial(j) * math.factorial(m - j))
        for j in range(m + 1)
    ]


def _pade(a, m):
    c = _pade_coefficients(m)
    n = a.shape[0]
    ident = np.eye(n, dtype=a.dtype)
    a2 = a @ a
    powers = [ident, a2]
    for _ in range(2, m // 2 + 1):
        powers.append(powers[-1] @ a2)
    u = sum(c[2 * k + 1] * powers[k] for k in range(m // 2 + 1) if 2 * k + 1 <= m)
    v = sum(c[2 * k] * powers[k] for k in range(m // 2 + 1))
    u = a @ u
    return np.linalg.solve(v - u, v + u)


def expm(a) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a Padé core."""
    a = _square(a)
    norm = float(np.linalg.norm(a, 1))
    if norm == 0.0:
        return np.eye(a.shape[0], dtype=a.dtype)
    for m in (3, 5, 7, 9):
        if norm <= _PADE_THETA[m]:
            return _pade(a, m)
    s = max(0, math.ceil(math.log2(norm / _PADE_THETA[13])))
    if s > 1000:
        raise OverflowError(f"matrix norm {norm:.3e} too large for expm")
    with np.errstate(over="raise", invalid="raise"):
        try:
            r = _pade(a / 2.0**s, 13)
            for _ in range(s):
                r = r @ r
        except FloatingPointError as exc:
            raise OverflowError(f"expm overflowed for norm {norm:.3e}") from exc
    if not np.all(np.isfinite(r)):
        raise OverflowError(f"expm overflowed for norm {norm:.3e}")
    return r


# --------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class Polynomial:
    """Polynomial with complex coefficients in ascending degree."""

    coefficients: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coefficients, dtype=complex))
        object.__setattr__(self, "coefficients", c)

    @property
    def degree(self) -> int:
        nz = np.flatnonzero(self.coefficients)
        return int(nz[-1]) if len(nz) else -1

    @property
    def is_zero(self) -> bool:
        return self.degree < 0

    def trimmed(self, tol: float) -> "Polynomial":
        """Zero coefficients below ``tol * max|c|`` and drop trailing zeros."""
        c = self.coefficients.copy()
        big = np.max(np.abs(c)) if len(c) else 0.0
        c[np.abs(c) <= tol * big] = 0.0
        d = Polynomial(c).degree
        return Polynomial(c[: max(d, 0) + 1])

    def __call__(self, s):
        return np.polynomial.polynomial.polyval(s, self.coefficients)


def companion(p: Polynomial) -> np.ndarray:
    c = p.coefficients[: p.degree + 1]
    d = p.degree
    monic = c[:d] / c[d]
    comp = np.zeros((d, d), dtype=complex)
    comp[1:, :-1] = np.eye(d - 1)
    comp[:, -1] = -monic
    return comp


def poly_roots(p: Polynomial) -> Spectrum:
    """Roots as companion-matrix eigenvalues; count equals the degree."""
    if p.is_zero:
        raise DomainError("identically zero polynomial has no defined roots")
    if p.degree == 0:
        return Spectrum(np.zeros(0, complex))
    try:
        return Spectrum(np.linalg.eigvals(companion(p)))
    except np.linalg.LinAlgError as exc:
        raise EigenError(f"companion eigensolve failed: {exc}") from exc


# --------------------------------------------------------------------------
# linear systems


def solve(a, b, max_condition=1e13) -> np.ndarray:
    a = _square(a)
    b = np.asarray(b)
    cond = float(np.linalg.cond(a))
    if not np.isfinite(cond) or cond > max_condition:
        raise SingularMatrixError("matrix is singular to working precision", cond)
    return np.linalg.solve(a, b)
