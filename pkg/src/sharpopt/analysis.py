"""Instruments for finished or running trajectories.

Hessian-vector products by central differences of the analytic gradient,
power iteration for the dominant eigenvalue, regret and gradient-norm
curves, a generalization-bound calculator, and classification of toy-run
endpoints against the numerically located minima.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .core import as_vector, dot, l2_norm
from .objectives import (
    FULL_BATCH,
    SEED_STREAM_EIG,
    BatchSpec,
    Objective,
    ToyLandscape,
    toy_loss,
)

SHARP = "sharp"
FLAT = "flat"


@dataclass(frozen=True)
class StepRecord:
    """One step's observables; w is kept only for small problems."""

    t: int
    loss: float
    grad_norm: float
    sharpness: float | None = None
    w: np.ndarray | None = None


@dataclass(frozen=True)
class Trajectory:
    records: tuple[StepRecord, ...]
    final_w: np.ndarray

    def __post_init__(self):
        if len(self.records) == 0:
            raise ValueError("trajectory needs at least one record")
        steps = [r.t for r in self.records]
        if steps[0] < 1 or any(b <= a for a, b in zip(steps, steps[1:])):
            raise ValueError("record steps must increase strictly from >= 1")
        object.__setattr__(self, "final_w", as_vector(self.final_w))

    def __len__(self) -> int:
        return len(self.records)

    def steps(self) -> np.ndarray:
        return np.array([r.t for r in self.records], dtype=np.int64)

    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    def grad_norms(self) -> np.ndarray:
        return np.array([r.grad_norm for r in self.records])


def hvp(obj: Objective, w, v, batch: BatchSpec = FULL_BATCH, h: float | None = None) -> np.ndarray:
    """Hessian-vector product by central differences of the gradient."""
    w = as_vector(w)
    v = as_vector(v, dim=w.size)
    v_norm = l2_norm(v)
    if v_norm == 0.0:
        return np.zeros_like(w)
    if h is None:
        h = 1e-4 * (1.0 + l2_norm(w)) / v_norm
    elif h <= 0.0:
        raise ValueError("difference step h must be > 0")
    return (obj.grad(w + h * v, batch) - obj.grad(w - h * v, batch)) / (2.0 * h)


def dense_hessian(obj: Objective, w, batch: BatchSpec = FULL_BATCH, h: float | None = None) -> np.ndarray:
    """Column-by-column Hessian, symmetrized; oracle use only (n <= 50)."""
    w = as_vector(w)
    n = w.size
    if n > 50:
        raise ValueError("dense_hessian is limited to n <= 50")
    H = np.empty((n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        H[:, i] = hvp(obj, w, e, batch, h)
    return (H + H.T) / 2.0


@dataclass(frozen=True)
class EigEstimate:
    lambda_max: float
    iterations_used: int
    residual: float


def power_iteration(
    obj: Objective,
    w,
    batch: BatchSpec = FULL_BATCH,
    max_iters: int = 200,
    tol: float = 1e-6,
    seed: int = 0,
) -> EigEstimate:
    """Dominant (largest-magnitude) Hessian eigenvalue from a seeded start.

    Iterates v <- Hv/|Hv| and watches the Rayleigh quotient; stops when its
    relative change drops below tol. A vanishing Hv short-circuits to 0.
    """
    if tol <= 0.0:
        raise ValueError("tol must be > 0")
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    w = as_vector(w)
    rng = np.random.default_rng([seed, SEED_STREAM_EIG])
    v = rng.standard_normal(w.size)
    v = v / l2_norm(v)

    lam = 0.0
    lam_prev: float | None = None
    residual = math.inf
    for k in range(1, max_iters + 1):
        Hv = hvp(obj, w, v, batch)
        lam = dot(v, Hv)
        norm = l2_norm(Hv)
        if norm == 0.0:
            return EigEstimate(0.0, k, 0.0)
        v = Hv / norm
        if lam_prev is not None:
            residual = abs(lam - lam_prev) / max(abs(lam), 1e-300)
            if residual < tol:
                return EigEstimate(lam, k, residual)
        lam_prev = lam
    return EigEstimate(lam, max_iters, residual)


def regret_curve(traj: Trajectory, obj: Objective, w_star, batch_at=None) -> np.ndarray:
    """Prefix sums of l_t(w_t) - l_t(w*) on each step's own batch.

    batch_at maps a step number to its BatchSpec; omit it for full-batch
    runs. Per-step losses come from the trajectory records, so the curve is
    reproducible bitwise from the run's seeds.
    """
    w_star = as_vector(w_star, dim=obj.dim)
    increments = np.empty(len(traj))
    for i, rec in enumerate(traj.records):
        batch = batch_at(rec.t) if batch_at is not None else FULL_BATCH
        increments[i] = rec.loss - obj.loss(w_star, batch)
    return np.cumsum(increments)


def min_grad_norm_curve(traj: Trajectory) -> np.ndarray:
    """Running minimum of the squared recorded gradient norms."""
    sq = traj.grad_norms() ** 2
    return np.minimum.accumulate(sq)


@dataclass(frozen=True)
class GenBoundInputs:
    """Inputs to the weighted-loss generalization bound."""

    vc_dim: int
    sample_count: int
    param_dim: int
    rho: float
    gamma: float
    delta: float
    weight_norm: float
    empirical_wsam_loss: float

    def __post_init__(self):
        if self.vc_dim < 1:
            raise ValueError("vc_dim must be >= 1")
        if self.sample_count < 2:
            raise ValueError("sample_count must be >= 2")
        if self.param_dim < 1:
            raise ValueError("param_dim must be >= 1")
        if not self.rho > 0.0:
            raise ValueError("rho must be > 0")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must be in [0,1)")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must be in (0,1)")
        if self.weight_norm < 0.0:
            raise ValueError("weight_norm must be >= 0")
        if not 0.0 <= self.empirical_wsam_loss <= 1.0:
            raise ValueError("empirical_wsam_loss must be in [0,1]")
        if math.e * self.sample_count <= self.vc_dim:
            raise ValueError("need e*sample_count > vc_dim so the capacity log stays positive")


def generalization_bound(inp: GenBoundInputs) -> float:
    """Population-loss upper bound: empirical weighted loss plus two deviations."""
    d, m, n = inp.vc_dim, inp.sample_count, inp.param_dim
    c1 = 8.0 * d * math.log(math.e * m / d) + 2.0 * math.log(4.0 / inp.delta)
    ratio = (inp.weight_norm / inp.rho) ** 2 * (1.0 + math.sqrt(math.log(m) / n)) ** 2
    c2 = n * math.log1p(ratio)
    c3 = 4.0 * math.log(m / inp.delta) + 8.0 * math.log(6.0 * m + 3.0 * n)
    first = 2.0 * abs(1.0 - 2.0 * inp.gamma) / (1.0 - inp.gamma) * math.sqrt(c1 / m)
    second = inp.gamma / (1.0 - inp.gamma) * math.sqrt((c2 + c3) / (m - 1.0))
    return inp.empirical_wsam_loss + first + second


@dataclass(frozen=True)
class ToyMinima:
    sharp_w: np.ndarray
    sharp_loss: float
    flat_w: np.ndarray
    flat_loss: float


def _descend(obj: Objective, w0, lr: float, steps: int) -> np.ndarray:
    w = as_vector(w0)
    for _ in range(steps):
        w = w - lr * obj.grad(w)
    return w


@functools.lru_cache(maxsize=1)
def toy_minima() -> ToyMinima:
    """Locate both toy-landscape minima once by plain descent and cache them.

    Starts from coarse basin guesses; the basin with the lower loss is the
    sharp one.
    """
    obj = ToyLandscape()
    candidates = []
    for start in ((-16.8, 12.8), (19.8, 29.9)):
        w = _descend(obj, np.array(start), lr=2.0, steps=10_000)
        candidates.append((w, toy_loss(w)))
    candidates.sort(key=lambda pair: pair[1])
    (sharp_w, sharp_loss), (flat_w, flat_loss) = candidates
    return ToyMinima(sharp_w, sharp_loss, flat_w, flat_loss)


def classify_minimum(w_final) -> str:
    """Nearest catalogued toy minimum; ties go to the sharp one."""
    w = as_vector(w_final, dim=2)
    minima = toy_minima()
    d_sharp = l2_norm(w - minima.sharp_w)
    d_flat = l2_norm(w - minima.flat_w)
    return SHARP if d_sharp <= d_flat else FLAT
