"""Vectorized batches of independent optimizer runs.

Monte-Carlo verification needs hundreds to thousands of independent
replications of the same configuration.  Running them one by one through the
scalar engine would dominate every experiment, so this module advances all
replications simultaneously: iterates are an (M, d) array, gradient tables an
(M, N, d) array, and each step applies the identical update rule elementwise
across replications.

Each replication m consumes the sampling stream of ``IndexSampler(seed_m)``
exactly as a scalar run with that seed would, so replications stay
independent, reproducible, and order-insensitive: results are aggregated by
replication index, never by completion order.  Replication seeds are derived
as ``base_seed XOR replication_index``.

``workers`` > 1 distributes replication chunks over processes; the chunks
are reassembled by index so the result is identical to a single-process run.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import _SAMPLER_BLOCK, IndexSampler
from .problems import FiniteSumProblem
from .schedule import StepSchedule


@dataclass
class EnsembleResult:
    """Per-replication outputs of a batched run.

    ``checkpoint_*`` dictionaries map an iteration index n (state counter,
    so n = n_iters + 1 is the final state) to an array over replications.
    """

    seeds: list[int]
    final_iterates: np.ndarray
    final_grad_eval_norm: np.ndarray
    checkpoint_iterates: dict[int, np.ndarray] = field(default_factory=dict)
    checkpoint_sq_error: dict[int, np.ndarray] = field(default_factory=dict)
    checkpoint_value_gap: dict[int, np.ndarray] = field(default_factory=dict)
    checkpoint_grad_eval_norm: dict[int, np.ndarray] = field(default_factory=dict)


def derive_seeds(base_seed: int, m_replications: int) -> list[int]:
    return [int(base_seed) ^ m for m in range(m_replications)]


def run_ensemble(
    problem: FiniteSumProblem,
    lam: float,
    schedule: StepSchedule,
    n_iters: int,
    m_replications: int,
    base_seed: int,
    x_ref: np.ndarray | None = None,
    checkpoints: tuple[int, ...] = (),
    x0: np.ndarray | None = None,
    keep_checkpoint_iterates: bool = False,
    workers: int = 1,
) -> EnsembleResult:
    """Run ``m_replications`` independent optimizer runs of ``n_iters`` steps.

    ``checkpoints`` are state counters n at which per-replication squared
    errors (needs ``x_ref``), value gaps, and table-mean norms are recorded;
    n ranges over 2..n_iters + 1 for a run of n_iters steps.
    """
    if not (0.0 <= lam <= 1.0):
        raise ValueError(f"lam must lie in [0, 1], got {lam}")
    if m_replications < 1:
        raise ValueError("m_replications must be positive")
    if n_iters < 1:
        raise ValueError("n_iters must be positive")
    bad = [n for n in checkpoints if not (2 <= n <= n_iters + 1)]
    if bad:
        raise ValueError(
            f"checkpoints {bad} outside the reachable range [2, {n_iters + 1}]"
        )

    seeds = derive_seeds(base_seed, m_replications)
    if workers <= 1 or m_replications < 2 * workers:
        return _run_chunk(
            problem, lam, schedule, n_iters, seeds, x_ref, tuple(checkpoints),
            x0, keep_checkpoint_iterates,
        )

    chunks = np.array_split(np.arange(m_replications), workers)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(
                _run_chunk,
                problem, lam, schedule, n_iters,
                [seeds[i] for i in chunk], x_ref, tuple(checkpoints),
                x0, keep_checkpoint_iterates,
            )
            for chunk in chunks
            if len(chunk)
        ]
        parts = [f.result() for f in futures]
    return _concat_results(parts)


def _concat_results(parts: list[EnsembleResult]) -> EnsembleResult:
    def cat(getter):
        return {
            n: np.concatenate([getter(p)[n] for p in parts])
            for n in getter(parts[0])
        }

    return EnsembleResult(
        seeds=[s for p in parts for s in p.seeds],
        final_iterates=np.concatenate([p.final_iterates for p in parts]),
        final_grad_eval_norm=np.concatenate(
            [p.final_grad_eval_norm for p in parts]
        ),
        checkpoint_iterates=cat(lambda p: p.checkpoint_iterates),
        checkpoint_sq_error=cat(lambda p: p.checkpoint_sq_error),
        checkpoint_value_gap=cat(lambda p: p.checkpoint_value_gap),
        checkpoint_grad_eval_norm=cat(lambda p: p.checkpoint_grad_eval_norm),
    )


def _run_chunk(
    problem,
    lam,
    schedule,
    n_iters,
    seeds,
    x_ref,
    checkpoints,
    x0,
    keep_checkpoint_iterates,
) -> EnsembleResult:
    n_comp, dim = problem.n_components, problem.dim
    m = len(seeds)
    if x0 is None:
        x0 = np.zeros(dim)
    x0 = np.asarray(x0, dtype=float)

    x = np.broadcast_to(x0, (m, dim)).copy()
    rows0 = problem.gradient_table(x0)
    table = np.broadcast_to(rows0, (m, n_comp, dim)).copy()
    mean = table.mean(axis=1)
    rep_idx = np.arange(m)

    samplers = [IndexSampler(s, n_comp) for s in seeds]
    gammas = schedule.gammas(1, n_iters)
    checkpoint_set = set(checkpoints)
    result = EnsembleResult(
        seeds=list(seeds),
        final_iterates=np.empty((m, dim)),
        final_grad_eval_norm=np.empty(m),
    )

    if x_ref is not None:
        x_ref = np.asarray(x_ref, dtype=float)
        f_ref = float(problem.value(x_ref))

    def record(n_state):
        if x_ref is not None:
            result.checkpoint_sq_error[n_state] = (
                ((x - x_ref) ** 2).sum(axis=1)
            )
            result.checkpoint_value_gap[n_state] = problem.values(x) - f_ref
        result.checkpoint_grad_eval_norm[n_state] = np.linalg.norm(mean, axis=1)
        if keep_checkpoint_iterates:
            result.checkpoint_iterates[n_state] = x.copy()

    pos = 0
    since_resync = 0
    while pos < n_iters:
        block = min(_SAMPLER_BLOCK, n_iters - pos)
        ks = np.empty((m, block), dtype=np.int64)
        for i, sampler in enumerate(samplers):
            ks[i] = sampler.take(block)
        for j in range(block):
            k = ks[:, j]
            gamma = gammas[pos + j]
            row_k = table[rep_idx, k]
            g_new = problem.component_gradients(k, x)
            x = x - gamma * ((g_new - lam * row_k) + lam * mean)
            mean += (g_new - row_k) / n_comp
            table[rep_idx, k] = g_new
            since_resync += 1
            if since_resync >= n_comp:
                mean = table.mean(axis=1)
                since_resync = 0
            n_state = pos + j + 2
            if n_state in checkpoint_set:
                record(n_state)
        pos += block

    result.final_iterates = x
    result.final_grad_eval_norm = np.linalg.norm(mean, axis=1)
    return result
