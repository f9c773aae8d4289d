"""Iterative frame scaling: margin sets, step-size proxy, main loop.

The solver keeps the square of the right scaling as a positive vector z and
leaves the isotropizing left scaling (UZU^T)^{-1/2} implicit. Each iteration
scales up the prefix set with the largest sorted-error gap, with the step
size chosen so that the leverage mass moved into the set lands in a band
proportional to the margin. The loop either drives ||lev(z) - c||^2 below
eps^2 or stops with a subset T certifying infeasibility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateMargin, FactorizationFailure, IterationCapExceeded
from .linalg import _EPS, Frame, leverage_scores, numerical_rank, validate_scaling

SCALED = "scaled"
INFEASIBLE = "infeasible"

# Integer rank vs float mass comparison guard.
CERTIFICATE_TOL = 1e-7


@dataclass(frozen=True)
class Marginals:
    """Target squared column norms c with <c, 1> = d and 0 < c_j <= 1."""

    values: np.ndarray
    d: int

    def __post_init__(self):
        c = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", c)
        if c.ndim != 1:
            raise ValueError("marginals must be a vector")
        if not np.all(np.isfinite(c)):
            raise ValueError("marginals must be finite")
        if np.any(c <= 0.0):
            raise ValueError("marginals must be strictly positive")
        if np.any(c > 1.0):
            # A marginal above 1 can never be met: a single column carries
            # leverage at most 1.
            raise ValueError("marginal exceeds 1; the instance is trivially infeasible")
        total = float(c.sum())
        if abs(total - self.d) > 1e-9 * self.d:
            raise ValueError(
                f"marginals sum to {total!r}, expected d={self.d} (tolerance 1e-9*d)"
            )

    @property
    def n(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class MarginSet:
    """Prefix set under the sort order of lev - c, with margin gamma at nu."""

    order: np.ndarray  # argsort permutation of lev - c, ascending
    k: int             # cut position; T = order[:k]
    gamma: float
    nu: float

    @property
    def indices(self) -> np.ndarray:
        return self.order[: self.k]

    @property
    def complement(self) -> np.ndarray:
        return self.order[self.k:]


def select_margin_set(lev, c) -> MarginSet:
    """Pick the prefix of sorted lev - c with the largest consecutive gap.

    Ties break toward the smallest cut. The returned margin satisfies
    gamma^2 >= ||lev - c||^2 / (2 n^3) whenever <lev - c, 1> = 0.
    """
    lev = np.asarray(lev, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    n = lev.shape[0]
    if n < 2:
        raise ValueError("margin selection needs n >= 2")
    x = lev - c
    total = float(x.sum())
    if abs(total) > 1e-8 * max(1.0, float(np.abs(c).sum())):
        raise ValueError(f"lev - c must sum to 0, got {total!r}")
    order = np.argsort(x, kind="stable")
    xs = x[order]
    gaps = xs[1:] - xs[:-1]
    k = int(np.argmax(gaps))  # first maximum: smallest cut wins ties
    gamma = float(gaps[k]) / 2.0
    nu = float(xs[k] + xs[k + 1]) / 2.0
    if gamma == 0.0 and float(np.abs(x).max()) > 0.0:
        raise DegenerateMargin("zero margin on a nonzero error vector")
    return MarginSet(order=order, k=k + 1, gamma=gamma, nu=nu)


class ProxyContext:
    """Step-size proxy h for uniformly scaling up the columns in T.

    h(alpha) is the total leverage mass of T after multiplying z on T by
    alpha; it is increasing and concave with h(1) the current mass and
    lim h = rk(U_T). Both h and h' come from one QR of the alpha-scaled
    frame: with P the Gram of the T-rows of the orthonormal factor,
    h = tr P and h' = (tr P - ||P||_F^2) / alpha. The QR route stays
    accurate out to extreme alpha where forming the shifted Gram directly
    loses the small subspace.
    """

    def __init__(self, frame: Frame, z, T):
        z = validate_scaling(z, frame.n)
        self.frame = frame
        self.z = z
        self.T = np.asarray(T, dtype=np.intp)
        if self.T.size == 0 or self.T.size >= frame.n:
            raise ValueError("T must be a nonempty proper subset of the columns")
        U = frame.matrix
        mask = np.zeros(frame.n, dtype=bool)
        mask[self.T] = True
        self._mask = mask
        self.m_t = (U[:, mask] * z[mask]) @ U[:, mask].T
        self.m_tbar = (U[:, ~mask] * z[~mask]) @ U[:, ~mask].T
        self._cache_alpha = None
        self._cache_vals = None

    def _evaluate(self, alpha: float) -> tuple[float, float]:
        if alpha < 1.0:
            raise ValueError(f"alpha must be >= 1, got {alpha!r}")
        if self._cache_alpha == alpha:
            return self._cache_vals
        w = self.z.copy()
        w[self._mask] *= alpha
        B = (self.frame.matrix * np.sqrt(w)).T  # n x d, rows sqrt(w_j) u_j
        q, r = np.linalg.qr(B, mode="reduced")
        rdiag = np.abs(np.diag(r))
        if rdiag.min(initial=np.inf) <= self.frame.d * _EPS * rdiag.max(initial=0.0):
            raise FactorizationFailure("shifted Gram numerically singular in proxy evaluation")
        qt = q[self._mask, :]
        p = qt.T @ qt
        h = float(np.trace(p))
        hp = (h - float((p * p).sum())) / alpha
        self._cache_alpha = alpha
        self._cache_vals = (h, max(hp, 0.0))
        return self._cache_vals

    def h(self, alpha: float) -> float:
        return self._evaluate(alpha)[0]

    def h_prime(self, alpha: float) -> float:
        return self._evaluate(alpha)[1]


def infeasibility_certificate(frame: Frame, c, T,
                              rank_tol: float | None = None) -> np.ndarray | None:
    """Return T as a certificate iff rk(U_T) < <c, 1_T> beyond tolerance."""
    T = np.asarray(T, dtype=np.intp)
    if T.size == 0 or T.size > frame.n:
        raise ValueError("T must be a nonempty subset")
    c = np.asarray(c, dtype=np.float64)
    mass = float(c[T].sum())
    rank = numerical_rank(frame.columns(T), tol=rank_tol)
    if rank < mass - CERTIFICATE_TOL:
        return np.sort(T)
    return None


@dataclass
class SolverConfig:
    """Knobs for the main loop; defaults match the analysed algorithm."""

    max_iters: int | None = None
    regularize: bool = True
    collect_trace: bool = True
    rank_tol: float | None = None
    eig_tol: float | None = None

    def iteration_cap(self, n: int, eps: float) -> int:
        if self.max_iters is not None:
            return self.max_iters
        return math.ceil(40.0 * n**3 * math.log(max(n, 2) / eps))


@dataclass(frozen=True)
class IterationRecord:
    """Per-iteration measurements; error_sq is the value before the step."""

    error_sq: float
    gamma: float
    alpha_hat: float
    h_gain: float
    progress: float
    nd_iters: int
    regularized: bool
    hp_one: float = float("nan")
    log_z_inf: float = float("nan")

    def as_dict(self) -> dict:
        return {
            "error_sq": self.error_sq,
            "gamma": self.gamma,
            "alpha_hat": self.alpha_hat,
            "progress": self.progress,
            "nd_iters": self.nd_iters,
            "regularized": self.regularized,
        }


@dataclass
class ScalingResult:
    """Outcome of a scaling run: a scaling vector or a certificate set."""

    status: str
    scaling: np.ndarray | None
    certificate: np.ndarray | None
    iterations: int
    final_error_sq: float
    trace: list[IterationRecord] = field(default_factory=list)

    @property
    def scaled(self) -> bool:
        return self.status == SCALED


def scale_frame(frame: Frame, marginals: Marginals, eps: float,
                config: SolverConfig | None = None) -> ScalingResult:
    """Scale a frame to eps-approximate (I_d, c)-position, or certify.

    Parameters
    ----------
    frame : Frame
        Full-row-rank d x n frame.
    marginals : Marginals
        Target squared norms; must sum to d with entries in (0, 1].
    eps : float
        Stop once ||lev(z) - c||_2^2 <= eps^2.
    config : SolverConfig, optional
        Iteration cap, regularization switch, trace collection.

    Returns
    -------
    ScalingResult
        Either status "scaled" with a positive scaling vector normalized to
        min 1, or status "infeasible" with a column subset T whose marginal
        mass exceeds rk(U_T).

    Raises
    ------
    IterationCapExceeded
        If the cap is hit; signals numerical breakdown, trace attached.
    """
    from .regularize import RhoCache, regularize
    from .update import compute_update

    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if marginals.d != frame.d or marginals.n != frame.n:
        raise ValueError("marginals do not match frame dimensions")
    config = config or SolverConfig()
    n = frame.n
    c = marginals.values
    eps_sq = eps * eps
    cap = config.iteration_cap(n, eps)
    rho_cache = RhoCache(frame, eig_tol=config.eig_tol) if config.regularize else None

    z = np.ones(n)
    lev = leverage_scores(frame, z)
    err_sq = float(((lev - c) ** 2).sum())
    trace: list[IterationRecord] = []
    it = 0
    while err_sq > eps_sq:
        if it >= cap:
            raise IterationCapExceeded(
                f"no convergence after {cap} iterations (error^2 {err_sq:g})",
                trace=trace,
            )
        it += 1
        ms = select_margin_set(lev, c)
        T = ms.indices
        cert = infeasibility_certificate(frame, c, T, rank_tol=config.rank_tol)
        if cert is not None:
            return ScalingResult(
                status=INFEASIBLE, scaling=None, certificate=cert,
                iterations=it, final_error_sq=err_sq, trace=trace,
            )
        upd = compute_update(frame, z, T, ms.gamma)
        z = z.copy()
        z[T] *= upd.alpha
        if config.regularize:
            delta = ms.gamma / (15.0 * n**2.5 * frame.d)
            z = regularize(frame, z, delta, cache=rho_cache)
        z = z / z.min()
        lev = leverage_scores(frame, z)
        new_err_sq = float(((lev - c) ** 2).sum())
        if config.collect_trace:
            trace.append(IterationRecord(
                error_sq=err_sq,
                gamma=ms.gamma,
                alpha_hat=upd.alpha,
                h_gain=upd.h_gain,
                progress=err_sq - new_err_sq,
                nd_iters=upd.nd_iters,
                regularized=config.regularize,
                hp_one=upd.hp_one,
                log_z_inf=float(np.abs(np.log(z)).max()),
            ))
        err_sq = new_err_sq
    return ScalingResult(
        status=SCALED, scaling=z, certificate=None,
        iterations=it, final_error_sq=err_sq, trace=trace,
    )
