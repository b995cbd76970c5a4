"""Central finite-difference check of ``loss_and_gradients``."""
from __future__ import annotations

from dataclasses import dataclass


from ..numerics import Rng
from .network import Network
from .train import Batch, TrainConfig, loss_and_gradients


@dataclass
class GradCheck:
    max_abs_err: float
    max_violation: float        # largest |err| / max(atol, rtol * |numeric|); <= 1 passes
    checked: int

    @property
    def ok(self) -> bool:
        return self.max_violation <= 1.0


def check_gradients(net: Network, batch: Batch, config: TrainConfig, rng: Rng,
                    step: float = 1e-6, atol: float = 1e-4, rtol: float = 1e-3) -> GradCheck:
    """Compare analytic gradients with central differences under one frozen noise draw."""
    noise = net.forward(batch.x, mode="train", rng=rng).noise
    analytic = loss_and_gradients(net, batch, config, noise=noise).grads
    worst_abs = worst = 0.0
    count = 0
    for p, g in zip(net.params, analytic):
        for key, arr in p.items():
            flat = arr.reshape(-1)
            for j in range(flat.size):
                old = flat[j]
                flat[j] = old + step
                up = loss_and_gradients(net, batch, config, noise=noise).loss
                flat[j] = old - step
                down = loss_and_gradients(net, batch, config, noise=noise).loss
                flat[j] = old
                numeric = (up - down) / (2 * step)
                err = abs(numeric - g[key].reshape(-1)[j])
                worst_abs = max(worst_abs, err)
                worst = max(worst, err / max(atol, rtol * abs(numeric)))
                count += 1
    return GradCheck(worst_abs, worst, count)
