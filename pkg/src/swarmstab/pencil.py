"""Regular matrix pencils ``(E, F)``: finite eigenvalues, impulse-freeness and
the slow/fast (Weierstrass) decomposition

    Q E P = diag(I, N),    Q F P = diag(A1, I),    N nilpotent.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .matkit import (
    DEFAULT_TOL,
    MatkitError,
    Polynomial,
    Spectrum,
    Tolerances,
    as_matrix,
    norm2,
    null_space,
    poly_roots,
    rank,
)

REGULAR = "regular"
SINGULAR = "singular"
INDETERMINATE = "indeterminate"


class PencilError(ValueError):
    pass


class SingularPencilError(PencilError):
    pass


class DecompositionError(MatkitError):
    pass


@dataclass(frozen=True)
class MatrixPencil:
    E: np.ndarray
    F: np.ndarray
    tol: Tolerances = DEFAULT_TOL

    def __post_init__(self):
        E = as_matrix(self.E, "E")
        F = as_matrix(self.F, "F")
        if E.shape[0] != E.shape[1] or F.shape != E.shape:
            raise PencilError(f"E and F must be square of equal order, got {E.shape} and {F.shape}")
        E.setflags(write=False)
        F.setflags(write=False)
        object.__setattr__(self, "E", E)
        object.__setattr__(self, "F", F)

    @property
    def n(self) -> int:
        return self.E.shape[0]

    @cached_property
    def rank_E(self) -> int:
        return rank(self.E, self.tol.rank * self.n)

    @property
    def is_real(self) -> bool:
        return not (np.iscomplexobj(self.E) or np.iscomplexobj(self.F))

    def scaled(self, c) -> "MatrixPencil":
        return MatrixPencil(self.E, c * self.F, self.tol)


def sampling_radius(p: MatrixPencil) -> float:
    e = norm2(p.E)
    f = norm2(p.F)
    return 2.0 * (f + 1.0) / e if e > 0 else 1.0


@dataclass(frozen=True)
class CharPoly:
    """``det(sE - F)`` recovered by interpolation."""

    poly: Polynomial
    status: str
    radius: float
    conditioning: float

    @property
    def regular(self) -> bool:
        return self.status == REGULAR

    @property
    def degree(self) -> int:
        return self.poly.degree


def char_poly(p: MatrixPencil) -> CharPoly:
    """Interpolate ``det(sE - F)`` from ``n + 1`` samples on a circle.

    The samples are equally spaced, so interpolation is a DFT; coefficients
    are compared (and trimmed) in the circle-scaled basis ``c_k r^k`` where
    they are all of comparable size.
    """
    n = p.n
    r = sampling_radius(p)
    count = n + 1
    nodes = r * np.exp(2j * np.pi * np.arange(count) / count)
    samples = np.empty(count, dtype=complex)
    conditioning = np.empty(count)
    for k, s in enumerate(nodes):
        M = s * p.E - p.F
        samples[k] = np.linalg.det(M)
        sv = np.linalg.svd(M, compute_uv=False)
        conditioning[k] = sv[-1] / sv[0] if sv[0] > 0 else 0.0
    scaled = np.fft.fft(samples) / count  # coefficient k times r**k
    # det(sE - F) vanishes identically iff sE - F is rank deficient at every
    # node; judge that by sigma_min / sigma_max, which is scale free
    best = float(conditioning.max())
    if best <= p.tol.regular * n:
        status = SINGULAR
    elif best <= 1e3 * p.tol.regular * n:
        status = INDETERMINATE
    else:
        status = REGULAR
    biggest = np.max(np.abs(scaled))
    scaled[np.abs(scaled) <= p.tol.trim * biggest] = 0.0
    if status != REGULAR:
        scaled[:] = 0.0
    coeffs = scaled / r ** np.arange(count)
    if p.is_real:
        coeffs = coeffs.real.astype(complex)
    poly = Polynomial(coeffs)
    poly = Polynomial(poly.coefficients[: max(poly.degree, 0) + 1])
    return CharPoly(poly=poly, status=status, radius=r, conditioning=best)


def _require_regular(cp: CharPoly):
    if cp.status == SINGULAR:
        raise SingularPencilError("pencil is not regular: det(sE - F) vanishes identically")
    if cp.status == INDETERMINATE:
        raise SingularPencilError("pencil regularity is indeterminate at the working tolerance")


def _polish(p: MatrixPencil, roots, steps=3):
    """A few Newton steps on det(sE - F) using d/ds log det = tr((sE-F)^-1 E)."""
    out = []
    for s in roots:
        best = s
        for _ in range(steps):
            M = s * p.E - p.F
            try:
                g = np.trace(np.linalg.solve(M, p.E))
            except np.linalg.LinAlgError:
                break
            if not np.isfinite(g) or g == 0:
                break
            step = 1.0 / g
            if abs(step) > 1e-3 * (1 + abs(s)):
                break
            s = s - step
            best = s
        out.append(best)
    return np.array(out, dtype=complex)


def finite_eigenvalues(p: MatrixPencil, polish: bool = True) -> Spectrum:
    cp = char_poly(p)
    _require_regular(cp)
    roots = poly_roots(cp.poly).values
    if polish and len(roots):
        roots = _polish(p, roots)
    if p.is_real:
        # conjugate pairs must stay exact pairs after polishing
        roots = np.where(np.abs(roots.imag) <= 1e-13 * (1 + np.abs(roots)), roots.real, roots)
    return Spectrum(roots)


def is_impulse_free(p: MatrixPencil) -> bool:
    cp = char_poly(p)
    _require_regular(cp)
    return cp.degree == p.rank_E


@dataclass(frozen=True)
class StandardDecomposition:
    Q: np.ndarray
    P: np.ndarray
    A1: np.ndarray
    N: np.ndarray
    n1: int
    n2: int
    h: int
    shift: float
    condition: float
    residual_E: float
    residual_F: float
    chain_index: int

    @property
    def ill_conditioned(self) -> bool:
        return self.condition > 1e8

    @property
    def P_slow(self) -> np.ndarray:
        return self.P[:, : self.n1]

    @property
    def P_fast(self) -> np.ndarray:
        return self.P[:, self.n1 :]


def _choose_shift(p: MatrixPencil) -> float:
    r = sampling_radius(p) / 2.0
    candidates = r * np.array([1.0, -1.0, 0.5, -0.5, 1.5, -1.5, 0.75, -0.75])
    dets = [abs(np.linalg.det(a * p.E - p.F)) for a in candidates]
    return float(candidates[int(np.argmax(dets))])


def _nilpotent_index(N, atol) -> int:
    """Smallest k with N**k = 0; roundoff in N grows like k ||N||**(k-1)."""
    if N.shape[0] == 0:
        return 0
    growth = max(1.0, norm2(N))
    power = np.eye(N.shape[0], dtype=N.dtype)
    for k in range(1, N.shape[0] + 2):
        power = power @ N
        if rank(power, atol=atol * k * growth ** (k - 1)) == 0:
            return k
    raise DecompositionError("fast block is not nilpotent")


def _kernel_chain(S, rtol, atol):
    """Orthonormal basis of ker(S^h) for the stabilising power h.

    Built by deflation, ker(S^(k+1)) = ker((I - K K^H) S) with K a basis of
    ker(S^k), so every rank decision is made on a matrix of norm <= ||S||
    and powers of S are never formed.
    """
    n = S.shape[0]
    K = np.zeros((n, 0), dtype=S.dtype)
    for chain in range(n + 1):
        grown = null_space(S - K @ (K.conj().T @ S), rtol, atol)
        if grown.shape[1] == K.shape[1]:
            return K, chain
        K = grown
    raise DecompositionError("kernel chain did not stabilise")


def standard_decomposition(p: MatrixPencil) -> StandardDecomposition:
    """Slow/fast split via the shift-inverted operator ``(aE - F)^-1 E``.

    Infinite eigenvalues of the pencil become the eigenvalue 0 of the
    shifted operator, so the fast subspace is the stable kernel of its
    powers and the slow subspace is the matching range.
    """
    cp = char_poly(p)
    _require_regular(cp)
    n = p.n
    E, F = p.E, p.F
    alpha = _choose_shift(p)
    shifted = np.linalg.solve(alpha * E - F, E)

    rtol = p.tol.rank * n
    atol = rtol * norm2(shifted)
    # C^n = ker(S^h) + range(S^h), and range(S^h) is the orthogonal
    # complement of ker((S^H)^h): both pieces come from kernel chains
    V_fast, chain = _kernel_chain(shifted, rtol, atol)
    W_fast, left_chain = _kernel_chain(shifted.conj().T, rtol, atol)
    n2 = V_fast.shape[1]
    n1 = n - n2
    if W_fast.shape[1] != n2 or left_chain != chain:
        raise DecompositionError("left and right kernel chains disagree")
    if n2 == 0:
        V_slow = np.eye(n, dtype=shifted.dtype)
    elif n1 == 0:
        V_slow = np.zeros((n, 0), dtype=shifted.dtype)
        V_fast = np.eye(n, dtype=shifted.dtype)
    else:
        U, _, _ = np.linalg.svd(W_fast)
        V_slow = U[:, n2:]

    P = np.hstack([V_slow, V_fast])
    Q_inv = np.hstack([E @ V_slow, F @ V_fast])
    cond_q = np.linalg.cond(Q_inv)
    if not np.isfinite(cond_q) or cond_q > 1e14:
        raise DecompositionError(f"slow and fast deflating subspaces are not complementary (cond {cond_q:.3e})")
    Q = np.linalg.inv(Q_inv)
    QEP = Q @ E @ P
    if n1:
        Q[:n1] = np.linalg.solve(QEP[:n1, :n1], Q[:n1])
    QEP = Q @ E @ P
    QFP = Q @ F @ P
    A1 = QFP[:n1, :n1]
    N = QEP[n1:, n1:]

    target_E = np.zeros((n, n), dtype=QEP.dtype)
    target_E[:n1, :n1] = np.eye(n1)
    target_E[n1:, n1:] = N
    target_F = np.zeros((n, n), dtype=QFP.dtype)
    target_F[:n1, :n1] = A1
    target_F[n1:, n1:] = np.eye(n2)
    res_E = float(np.linalg.norm(QEP - target_E))
    res_F = float(np.linalg.norm(QFP - target_F))
    lim_E = p.tol.split * (norm2(E) + 1.0)
    lim_F = p.tol.split * (norm2(F) + 1.0)
    if res_E > lim_E or res_F > lim_F:
        raise DecompositionError(
            f"reconstruction residuals {res_E:.3e} / {res_F:.3e} exceed {lim_E:.3e} / {lim_F:.3e}"
        )
    h = _nilpotent_index(N, atol=lim_E)
    return StandardDecomposition(
        Q=Q,
        P=P,
        A1=A1,
        N=N,
        n1=n1,
        n2=n2,
        h=h,
        shift=alpha,
        condition=float(cond_q * np.linalg.cond(P)),
        residual_E=res_E,
        residual_F=res_F,
        chain_index=chain,
    )


def scaled_pencil_eigenvalues(p: MatrixPencil, c) -> tuple[Spectrum, Spectrum]:
    """Finite eigenvalues of ``(E, cF)`` by direct interpolation and by scaling.

    Returns ``(direct, scaled)``; the two must agree as multisets.
    """
    if c == 0:
        raise PencilError("degenerate pencil (E, 0)")
    direct = finite_eigenvalues(p.scaled(c))
    scaled = finite_eigenvalues(p).scaled(c)
    return direct, scaled
