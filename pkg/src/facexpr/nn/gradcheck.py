"""Central-difference verification of the analytic gradients.

Intended for small configurations (a few hundred scalar parameters); every
scalar is perturbed individually, so cost grows linearly with parameter
count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import ModelConfig, ModelParams, backward, batch_cross_entropy, forward, init_model

SMALL_CONFIG = ModelConfig(
    feature_count=6, class_count=3, time_steps=3, filters=2, dense_sizes=(8, 4)
)


@dataclass
class GradCheckReport:
    max_rel_error: float
    per_tensor: dict[str, float]
    tol: float
    step: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tol

    def failing_tensors(self) -> list[str]:
        return sorted(k for k, v in self.per_tensor.items() if v > self.tol)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        worst = max(self.per_tensor, key=self.per_tensor.get)
        return (
            f"{status}: max rel error {self.max_rel_error:.3e} (tensor {worst!r}, "
            f"tol {self.tol:.1e}, h {self.step:.1e})"
        )


def _mean_loss(params: ModelParams, xs: np.ndarray, labels: np.ndarray) -> float:
    probs, _ = forward(params, xs)
    return batch_cross_entropy(probs, labels)


def finite_difference_check(
    params: ModelParams,
    xs: np.ndarray,
    labels: np.ndarray,
    tol: float = 1e-4,
    step: float = 1e-5,
) -> GradCheckReport:
    """Compare backward() against central differences on every parameter.

    Relative error metric per scalar: |analytic - numeric| / max(1, |analytic|).
    """
    xs = np.asarray(xs, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.intp)
    _, cache = forward(params, xs)
    analytic = backward(params, cache, labels)

    per_tensor: dict[str, float] = {}
    for key in sorted(params.tensors):
        tensor = params.tensors[key]
        worst = 0.0
        flat = tensor.reshape(-1)
        grad_flat = analytic[key].reshape(-1)
        for idx in range(flat.size):
            orig = flat[idx]
            flat[idx] = orig + step
            loss_plus = _mean_loss(params, xs, labels)
            flat[idx] = orig - step
            loss_minus = _mean_loss(params, xs, labels)
            flat[idx] = orig
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            rel = abs(grad_flat[idx] - numeric) / max(1.0, abs(grad_flat[idx]))
            worst = max(worst, rel)
        per_tensor[key] = worst
    return GradCheckReport(
        max_rel_error=max(per_tensor.values()), per_tensor=per_tensor, tol=tol, step=step
    )


def run_seeded_check(
    seed: int,
    config: ModelConfig = SMALL_CONFIG,
    sample_count: int = 3,
    tol: float = 1e-4,
    step: float = 1e-5,
) -> GradCheckReport:
    """Random params + random inputs for one seed of the small config."""
    rng = np.random.default_rng(seed + 1000)
    params = init_model(config.with_overrides(seed=seed))
    xs = rng.normal(0.0, 1.0, size=(sample_count, config.time_steps, config.feature_count))
    labels = rng.integers(0, config.class_count, size=sample_count)
    return finite_difference_check(params, xs, labels, tol=tol, step=step)
