"""Closed-form trajectories of descriptor compartmental networks.

In the coordinates ``x_i = P [s_i; y_i]`` of the slow/fast decomposition the
stacked dynamics split into

    ds/dt = -(L kron A1) s            (slow, an ordinary ODE)
    N dy/dt = -(L kron I) y           (fast)

For every nonzero Laplacian mode the fast equation only admits the zero
smooth solution, so the fast part of the initial data is projected onto the
Laplacian kernel at ``t = 0+``; whatever is removed shows up as a jump (and,
for nilpotent index >= 2, as impulses) that cannot be sampled and is
reported instead.  The kernel component is held constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial.distance import pdist

from .criteria import Classification, check_consensus
from .matkit import eig, expm
from .network import NetworkSystem, assemble

__all__ = [
    "ImpulseReport",
    "ImpulseTerm",
    "Trajectory",
    "assemble",
    "consistent_projection",
    "simulate",
    "predicted_consensus_value",
    "reference_integrate",
    "empirical_classify",
    "dispersion",
    "CONSENSUS_LIKE",
    "CRITICAL_LIKE",
    "UNSTABLE_LIKE",
]

HOLD = "hold"
DISCARD = "discard"

CONSENSUS_LIKE = "consensus-like"
CRITICAL_LIKE = "critically-stable-like"
UNSTABLE_LIKE = "unstable-like"

CLASSIFICATION_HORIZON = 60.0
DEFAULT_SAMPLES = 400


class SimulationError(ArithmeticError):
    pass


@dataclass(frozen=True)
class ImpulseTerm:
    mode: Optional[int]  # 1-based Laplacian spectrum index; None = all nonzero modes
    order: int  # k in delta^(k-1)
    magnitude: float


@dataclass
class ImpulseReport:
    jump: float = 0.0
    terms: list = field(default_factory=list)
    nilpotent_index: int = 0

    @property
    def empty(self) -> bool:
        return not self.terms

    def to_json(self) -> dict:
        return {
            "jump": self.jump,
            "nilpotent_index": self.nilpotent_index,
            "impulses": [{"mode": t.mode, "order": t.order, "magnitude": t.magnitude} for t in self.terms],
        }


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # (samples, n, m); column i is agent i
    dispersion: np.ndarray
    impulse_report: ImpulseReport = field(default_factory=ImpulseReport)
    consensus_estimate: Optional[np.ndarray] = None

    def differences(self) -> np.ndarray:
        """States relative to agent 1, shape (samples, n, m)."""
        return self.states - self.states[:, :, :1]


def dispersion(X) -> float:
    """Largest Euclidean distance between two agents (columns of X)."""
    X = np.asarray(X)
    if X.shape[1] < 2:
        return 0.0
    return float(pdist(X.T).max())


def _kernel_projector(sys: NetworkSystem) -> np.ndarray:
    """Spectral projector of L onto its kernel, along its range."""
    L = sys.laplacian.L
    k = sys.laplacian.zero_multiplicity
    if k == 0:
        return np.zeros_like(L)
    if k == 1 and sys.laplacian.left_zero_vector is not None:
        return np.outer(np.ones(sys.m), sys.laplacian.left_zero_vector)
    # right and left kernels have dimension k when the zero eigenvalue is
    # semisimple; take the k weakest singular directions either way
    V = np.linalg.svd(L)[2][-k:].conj().T
    U = np.linalg.svd(L.T)[2][-k:].conj().T
    return V @ np.linalg.solve(U.conj().T @ V, U.conj().T)


def _transformed(sys: NetworkSystem, X0) -> np.ndarray:
    X0 = np.asarray(X0, dtype=float)
    if X0.shape != (sys.n, sys.m):
        raise ValueError(f"initial state must be {sys.n}x{sys.m}, got {X0.shape}")
    return np.linalg.solve(sys.decomposition.P, X0)


def _impulses(sys: NetworkSystem, discarded, scale) -> list:
    dec = sys.decomposition
    floor = 1e-12 * (1.0 + scale)  # roundoff from the projection itself
    if dec.h < 2 or np.linalg.norm(discarded) <= floor:
        return []
    terms = []
    lap = sys.laplacian
    if lap.diagonalizable:
        spec, T = eig(lap.L, sys.tol)
        modes = discarded @ np.linalg.inv(T).T  # column i: fast data of mode i
        for i, lam in enumerate(spec.values, start=1):
            if abs(lam) <= lap.cluster_tol:
                continue
            v = modes[:, i - 1]
            for k in range(1, dec.h):
                v = dec.N @ v / lam
                mag = float(np.linalg.norm(v))
                if mag > floor:
                    terms.append(ImpulseTerm(i, k, mag))
    else:
        v = discarded
        for k in range(1, dec.h):
            v = dec.N @ v
            mag = float(np.linalg.norm(v))
            if mag > floor:
                terms.append(ImpulseTerm(None, k, mag))
    return terms


def consistent_projection(sys: NetworkSystem, X0, zero_mode: str = HOLD):
    """Project ``X0`` onto the consistent manifold; returns ``(X0_plus, report)``.

    ``zero_mode`` picks the constant solution of the underdetermined
    Laplacian-kernel fast block: ``"hold"`` keeps the kernel component of
    the initial fast data, ``"discard"`` sets it to zero.  Pairwise
    differences do not depend on the choice.
    """
    dec = sys.decomposition
    Xt = _transformed(sys, X0)
    Y = Xt[dec.n1 :]
    if zero_mode == HOLD:
        kept = Y @ _kernel_projector(sys).T
    elif zero_mode == DISCARD:
        kept = np.zeros_like(Y)
    else:
        raise ValueError(f"unknown zero-mode convention {zero_mode!r}")
    kept = np.real_if_close(kept, tol=1e6)
    discarded = Y - Y @ _kernel_projector(sys).T
    report = ImpulseReport(
        jump=float(np.linalg.norm(discarded)),
        terms=_impulses(sys, discarded, float(np.linalg.norm(Y))),
        nilpotent_index=dec.h,
    )
    X0_plus = dec.P @ np.vstack([Xt[: dec.n1], kept])
    return _real(X0_plus), report


def _real(X, scale=None):
    X = np.asarray(X)
    if not np.iscomplexobj(X):
        return X
    scale = max(1.0, float(np.max(np.abs(X)))) if scale is None else scale
    if np.max(np.abs(X.imag)) > 1e-9 * scale:
        raise SimulationError(f"imaginary residue {np.max(np.abs(X.imag)):.3e} in a real trajectory")
    return X.real


def default_grid(t_end: float, samples: int = DEFAULT_SAMPLES) -> np.ndarray:
    return np.linspace(0.0, float(t_end), int(samples))


def simulate(sys: NetworkSystem, X0, t_grid, zero_mode: str = HOLD) -> Trajectory:
    """Sample the exact trajectory on ``t_grid`` (``t = 0`` means ``0+``)."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.ndim != 1 or len(t_grid) == 0:
        raise ValueError("t_grid must be a non-empty 1-D array")
    if t_grid[0] < 0 or np.any(np.diff(t_grid) <= 0):
        raise ValueError("t_grid must be ascending and nonnegative")
    dec = sys.decomposition
    n1, m = dec.n1, sys.m
    X0_plus, report = consistent_projection(sys, X0, zero_mode)
    Xt = np.linalg.solve(dec.P, X0_plus)
    s0 = Xt[:n1].T.reshape(-1)  # agent-major stacking
    fast = Xt[n1:]
    K = sys.slow_operator()

    states = np.empty((len(t_grid), sys.n, m))
    for k, t in enumerate(t_grid):
        s = expm(K * t) @ s0 if n1 else s0
        S = s.reshape(m, n1).T
        X = dec.P @ np.vstack([S, fast])
        states[k] = _real(X)
    disp = np.array([dispersion(X) for X in states])

    estimate = None
    if check_consensus(sys).classification is Classification.ASYMPTOTICALLY_SWARM_STABLE:
        estimate = predicted_consensus_value(sys, X0)
    return Trajectory(t_grid, states, disp, report, estimate)


def predicted_consensus_value(sys: NetworkSystem, X0) -> np.ndarray:
    """Common limit ``sum_i nu_i x_i(0)`` with ``nu`` the left zero vector of L.

    Both the slow coordinates and the held kernel part of the fast
    coordinates keep their ``nu``-weighted average, and ``P`` maps that
    average back to the ``nu``-weighted average of the original states.
    """
    verdict = check_consensus(sys)
    if verdict.classification is not Classification.ASYMPTOTICALLY_SWARM_STABLE:
        raise ValueError(f"no consensus value: system is {verdict.classification.value}")
    X0 = np.asarray(X0, dtype=float)
    if X0.shape != (sys.n, sys.m):
        raise ValueError(f"initial state must be {sys.n}x{sys.m}, got {X0.shape}")
    return _real(X0 @ sys.laplacian.left_zero_vector)


def _trapezoid_step(sys: NetworkSystem, h: float) -> np.ndarray:
    """One trapezoidal step of (I kron E) x' = -(L kron F) x as a matrix.

    The stacked pencil is never regular (the Laplacian kernel leaves the
    fast zero mode free), so each step also pins the kernel-weighted
    average of the agent states; that is the ``hold`` convention.
    """
    n, m = sys.n, sys.m
    M = np.kron(np.eye(m), sys.pencil.E)
    K = np.kron(sys.laplacian.L, sys.pencil.F)
    k = sys.laplacian.zero_multiplicity
    U = np.linalg.svd(sys.laplacian.L.T)[2][m - k :].conj().T  # left kernel of L
    B = np.kron(U.conj().T, np.eye(n))
    lhs = np.vstack([M / h + K / 2.0, B])
    sv = np.linalg.svd(lhs, compute_uv=False)
    if sv[-1] <= 1e-12 * sv[0]:
        raise np.linalg.LinAlgError("singular trapezoid iteration matrix")
    rhs = np.vstack([-K, np.zeros((B.shape[0], n * m))])
    delta = np.linalg.lstsq(lhs, rhs, rcond=None)[0]
    return np.eye(n * m) + delta


def _propagate(sys, x0, t_grid, level):
    out = np.empty((len(t_grid), sys.n * sys.m), dtype=x0.dtype)
    out[0] = x0
    cache = {}
    x = x0
    for k, dt in enumerate(np.diff(t_grid), start=1):
        key = round(dt, 12)
        if key not in cache:
            S = _trapezoid_step(sys, dt / 2**level)
            for _ in range(level):
                S = S @ S
            cache[key] = S
        x = cache[key] @ x
        out[k] = x
    return out


def reference_integrate(
    sys: NetworkSystem, X0_plus, t_grid, agree: float = 1e-7, max_level: int = 40
) -> Trajectory:
    """Implicit trapezoidal integration with step halving until two successive
    refinements agree to ``agree`` (max abs).  Independent of the slow/fast
    decomposition; meant as a test oracle for ``simulate``.

    Each grid interval is split into ``2**level`` equal trapezoid steps; the
    step matrix is applied by repeated squaring.
    """
    if not sys.impulse_free:
        raise ValueError("reference integration needs an impulse-free pencil")
    t_grid = np.asarray(t_grid, dtype=float)
    x0 = np.asarray(X0_plus, dtype=float).T.reshape(-1)
    previous = None
    level = 1
    while level <= max_level:
        try:
            current = _propagate(sys, x0, t_grid, level)
        except np.linalg.LinAlgError:
            level += 1
            continue
        if previous is not None and np.max(np.abs(current - previous)) <= agree:
            states = current.reshape(len(t_grid), sys.m, sys.n).transpose(0, 2, 1)
            disp = np.array([dispersion(X) for X in states])
            return Trajectory(t_grid, states, disp)
        previous = current
        level += 1
    raise SimulationError(f"trapezoid refinement did not settle by level {max_level}")


def empirical_classify(
    traj: Trajectory,
    horizon: float = CLASSIFICATION_HORIZON,
    decay: float = 1e-3,
    growth: float = 2.0,
    blowup: float = 1e3,
) -> str:
    """Heuristic label from the dispersion curve; advisory only.

    * final dispersion below ``decay`` times the initial one: consensus-like;
    * late-window peak above ``growth`` times the early-window peak, or any
      value above ``blowup`` times the initial one: unstable-like;
    * otherwise critically-stable-like.
    """
    if traj.times[-1] - traj.times[0] < horizon:
        raise ValueError(f"trajectory covers {traj.times[-1] - traj.times[0]:g} < horizon {horizon:g}")
    d = traj.dispersion
    d0 = d[0]
    if d0 == 0.0:
        return CONSENSUS_LIKE
    if d[-1] < decay * d0:
        return CONSENSUS_LIKE
    third = max(1, len(d) // 3)
    if d.max() > blowup * d0 or d[-third:].max() > growth * d[:third].max():
        return UNSTABLE_LIKE
    return CRITICAL_LIKE
