"""Finite-difference verification of the analytic prompt gradients.

Each trial builds a small random step context (including a genuine retrieval
vector on odd trials), evaluates grad_total, and compares it against central
differences of the frozen-step objective, coordinate by coordinate. The
relative error uses vector norms with an absolute floor so exact-zero
gradients at symmetric fixtures do not divide by zero.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .knowledge_base import RetrievalTables, retrieval_logits
from .numerics import l2_normalize, normalize_rows
from .objectives import FrozenStep, GradPair, freeze_step, frozen_loss, grad_total
from .prompts import PromptPair

TOL = 1e-4
FD_STEP = 1e-5


@dataclass(frozen=True)
class TrialResult:
    trial: int
    lam: float
    rel_err: float


@dataclass(frozen=True)
class SuiteResult:
    max_rel_err: float
    trials: list[TrialResult]
    elapsed_s: float

    @property
    def passed(self) -> bool:
        return self.max_rel_err < TOL


def random_instance(
    rng: np.random.Generator,
    lam: float,
    num_classes: int = 5,
    num_views: int = 8,
    dim: int = 16,
    rho: float = 0.5,
    alpha: float = 0.1,
    beta: float = 0.001,
) -> tuple[PromptPair, FrozenStep]:
    """Random step context frozen at random nonzero prompts."""
    views = rng.standard_normal((num_views, dim))
    protos = rng.standard_normal((num_classes, dim))
    prompts = PromptPair(
        p_t=0.05 * rng.standard_normal(dim),
        p_v=0.05 * rng.standard_normal(dim),
    )
    scale = rng.uniform(5.0, 30.0)
    if lam > 0:
        stored = min(3, num_classes)
        keys, _ = normalize_rows(rng.standard_normal((stored, dim)))
        values = np.zeros((stored, num_classes))
        values[np.arange(stored), rng.permutation(num_classes)[:stored]] = 1.0
        tables = RetrievalTables(keys=keys, values=values, class_ids=list(range(stored)))
        query = l2_normalize(rng.standard_normal(dim))
        l_r = retrieval_logits(query, tables, lam, 5.0)
    else:
        l_r = np.zeros(num_classes)
    frozen = freeze_step(views, protos, prompts, scale, l_r, rho, alpha, beta)
    return prompts, frozen


def finite_difference_grad(
    prompts: PromptPair, frozen: FrozenStep, h: float = FD_STEP
) -> GradPair:
    """Central differences of the frozen objective, one coordinate at a time."""

    def total_at(p_t, p_v):
        return frozen_loss(PromptPair(p_t=p_t, p_v=p_v), frozen).total

    dim = prompts.p_t.shape[0]
    g_t = np.zeros(dim)
    g_v = np.zeros(dim)
    for j in range(dim):
        bump = np.zeros(dim)
        bump[j] = h
        g_t[j] = (
            total_at(prompts.p_t + bump, prompts.p_v)
            - total_at(prompts.p_t - bump, prompts.p_v)
        ) / (2.0 * h)
        g_v[j] = (
            total_at(prompts.p_t, prompts.p_v + bump)
            - total_at(prompts.p_t, prompts.p_v - bump)
        ) / (2.0 * h)
    return GradPair(g_t=g_t, g_v=g_v)


def relative_error(analytic: GradPair, numeric: GradPair) -> float:
    a = np.concatenate([analytic.g_t, analytic.g_v])
    n = np.concatenate([numeric.g_t, numeric.g_v])
    denom = max(float(np.linalg.norm(n)), 1e-8)
    return float(np.linalg.norm(a - n)) / denom


def run_suite(
    trials: int = 20,
    seed: int = 0,
    perturb_grad: float = 0.0,
    h: float = FD_STEP,
) -> SuiteResult:
    """Run `trials` random gradient checks; lam alternates between 0 and 1."""
    rng = np.random.default_rng(seed)
    results = []
    t0 = time.perf_counter()
    for trial in range(trials):
        lam = float(trial % 2)
        prompts, frozen = random_instance(rng, lam)
        analytic = grad_total(prompts, frozen)
        if perturb_grad != 0.0:
            # fault injection: a corrupted gradient must make the suite fail
            g_t = analytic.g_t.copy()
            g_t[0] += perturb_grad
            analytic = GradPair(g_t=g_t, g_v=analytic.g_v)
        numeric = finite_difference_grad(prompts, frozen, h)
        results.append(
            TrialResult(trial=trial, lam=lam, rel_err=relative_error(analytic, numeric))
        )
    elapsed = time.perf_counter() - t0
    return SuiteResult(
        max_rel_err=max(r.rel_err for r in results),
        trials=results,
        elapsed_s=elapsed,
    )
