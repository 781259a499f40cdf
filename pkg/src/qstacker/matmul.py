"""Three-stage matrix multiplication through Hadamard-test estimation.

Stage 1 encodes the rows of A and columns of B once each (memoized cache)
and records their Euclidean norms. Stage 2 dispatches one estimation job per
output element through a stacking plan; element (i, j) gets its own seed
derived from (master seed, i, j), so results are independent of the layout.
Stage 3 reconstructs C_ij = ||A_i|| * ||B_j|| * z_hat_ij.

Elements whose row or column norm is zero are written as exact zeros with no
job dispatched. In exact mode the sampler is bypassed and z_hat is the
analytic overlap, giving the classical product up to rounding; this is the
oracle the training harness uses for classical forward passes.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidEpsilon, ShapeMismatch
from .hadamard import HadamardJob, OverlapEstimate, analytic_overlap, estimate
from .seeding import derive_seed
from .stacking import StackingPattern, StackingPlan, execute_plan, plan_jobs
from .vectors import PrepCache, as_matrix, as_vector, col_norms, prepare_all, row_norms

UNBOUNDED_BUDGET = 1 << 40  # wide enough that no realistic plan ever splits


def _budget(cfg) -> int:
    return UNBOUNDED_BUDGET if cfg.qubit_budget is None else cfg.qubit_budget


@dataclass(frozen=True)
class MatMulConfig:
    shots: int = 16384
    epsilon: float = 0.1  # advisory, reporting only; shots are authoritative
    pattern: StackingPattern = StackingPattern.BATCH
    seed: int = 0
    exact: bool = False
    qubit_budget: int | None = None
    max_workers: int = 1

    def __post_init__(self):
        if self.shots < 1:
            raise ValueError("shots must be >= 1")
        if not (0.0 < self.epsilon < 1.0):
            raise InvalidEpsilon(f"epsilon must be in (0, 1), got {self.epsilon}")


@dataclass
class MatMulResult:
    c: np.ndarray
    estimates: list  # estimates[i][j] is an OverlapEstimate or None (no job)
    plan_used: StackingPlan
    cache_hits: int
    cache_misses: int
    job_count: int
    shots: int
    exact: bool
    norm_products: np.ndarray = field(repr=False, default=None)


def matmul(a, b, cfg: MatMulConfig, cache: PrepCache | None = None) -> MatMulResult:
    am = as_matrix(a)
    bm = as_matrix(b)
    if am.shape[1] != bm.shape[0]:
        raise ShapeMismatch(f"cannot multiply {am.shape} by {bm.shape}")
    rows, cols = am.shape[0], bm.shape[1]
    dim = am.shape[1]

    cache = prepare_all(am, bm, cache)
    a_norms = row_norms(am)
    b_norms = col_norms(bm)

    c = np.zeros((rows, cols))
    estimates = [[None] * cols for _ in range(rows)]
    norm_products = np.outer(a_norms, b_norms)

    live = [
        (i, j)
        for i in range(rows)
        for j in range(cols)
        if a_norms[i] != 0.0 and b_norms[j] != 0.0
    ]

    if cfg.exact:
        for i, j in live:
            mu = analytic_overlap(cache.get_row(am, i), cache.get_col(bm, j))
            estimates[i][j] = OverlapEstimate(
                z_hat=mu, true_overlap=mu, variance_theoretical=0.0
            )
            c[i, j] = norm_products[i, j] * mu
        the_plan = plan_jobs(0, cols, dim, cfg.pattern, _budget(cfg))
        return MatMulResult(
            c=c,
            estimates=estimates,
            plan_used=the_plan,
            cache_hits=cache.hits,
            cache_misses=cache.misses,
            job_count=0,
            shots=cfg.shots,
            exact=True,
            norm_products=norm_products,
        )

    jobs = [
        HadamardJob(
            psi=cache.get_row(am, i),
            phi=cache.get_col(bm, j),
            shots=cfg.shots,
            seed=derive_seed(cfg.seed, i, j),
        )
        for i, j in live
    ]
    the_plan = plan_jobs(len(jobs), cols, dim, cfg.pattern, _budget(cfg))
    results = execute_plan(the_plan, jobs, max_workers=cfg.max_workers)
    for (i, j), res, job in zip(live, results, jobs):
        mu = analytic_overlap(job.psi, job.phi)
        est = estimate(res, true_overlap=mu)
        estimates[i][j] = est
        c[i, j] = norm_products[i, j] * est.z_hat
    return MatMulResult(
        c=c,
        estimates=estimates,
        plan_used=the_plan,
        cache_hits=cache.hits,
        cache_misses=cache.misses,
        job_count=len(jobs),
        shots=cfg.shots,
        exact=False,
        norm_products=norm_products,
    )


def matvec(a, x, cfg: MatMulConfig) -> np.ndarray:
    """Matrix-vector product: the single-column special case of matmul."""
    xv = as_vector(x)
    return matmul(a, xv.reshape(-1, 1), cfg).c[:, 0]


def error_budget(norm_product: float, shots: int, mu: float | None = None) -> float:
    """One-sigma standard error of a reconstructed element.

    With the overlap unknown, returns the ceiling norm_product/sqrt(S);
    given mu, the exact norm_product * sqrt((1 - mu^2)/S).
    """
    if shots < 1:
        raise ValueError("shots must be >= 1")
    if norm_product == 0.0:
        return 0.0
    if mu is None:
        return abs(norm_product) / math.sqrt(shots)
    return abs(norm_product) * math.sqrt(max(0.0, 1.0 - mu * mu) / shots)


def write_result_csv(result: MatMulResult, path) -> None:
    """Per-element dump: i, j, z_hat, c_ij, stderr (plug-in estimate)."""
    with open(path, "w") as fh:
        fh.write("i,j,z_hat,c_ij,stderr\n")
        rows, cols = result.c.shape
        for i in range(rows):
            for j in range(cols):
                est = result.estimates[i][j]
                z = est.z_hat if est is not None else 0.0
                if result.exact or est is None:
                    se = 0.0
                else:
                    se = error_budget(float(result.norm_products[i, j]), result.shots, mu=z)
                fh.write(f"{i},{j},{float(z)!r},{float(result.c[i, j])!r},{float(se)!r}\n")


def summary_dict(result: MatMulResult, classical: np.ndarray | None = None) -> dict:
    out = {
        "rows": int(result.c.shape[0]),
        "cols": int(result.c.shape[1]),
        "pattern": result.plan_used.pattern.value,
        "shots": result.shots,
        "exact": result.exact,
        "job_count": result.job_count,
        "cache_hits": result.cache_hits,
        "cache_misses": result.cache_misses,
        "plan_cycles": result.plan_used.cycle_count,
        "plan_width": result.plan_used.width,
        "plan_degraded": result.plan_used.degraded,
    }
    if classical is not None:
        err = np.abs(result.c - classical)
        out["max_abs_error"] = float(err.max()) if err.size else 0.0
        out["mean_abs_error"] = float(err.mean()) if err.size else 0.0
    return out


def write_summary_json(result: MatMulResult, path, classical: np.ndarray | None = None) -> None:
    with open(path, "w") as fh:
        json.dump(summary_dict(result, classical), fh, indent=2)
        fh.write("\n")
