"""Training optimizer: rectified adaptive moments wrapped in lookahead averaging."""

from __future__ import annotations

import torch


class Lookahead:
    """Lookahead wrapper: every ``k`` inner steps, pull slow weights toward the
    fast weights by ``alpha`` and restart the fast weights from them."""

    def __init__(self, base: torch.optim.Optimizer, k: int = 6, alpha: float = 0.5):
        if k < 1 or not (0.0 < alpha <= 1.0):
            raise ValueError(f"invalid lookahead parameters k={k}, alpha={alpha}")
        self.base = base
        self.k = k
        self.alpha = alpha
        self._step = 0
        self._slow = [
            [p.detach().clone() for p in group["params"]] for group in base.param_groups
        ]

    @property
    def param_groups(self):
        return self.base.param_groups

    def zero_grad(self, set_to_none: bool = True) -> None:
        self.base.zero_grad(set_to_none=set_to_none)

    @torch.no_grad()
    def step(self) -> None:
        self.base.step()
        self._step += 1
        if self._step % self.k != 0:
            return
        for group, slow_group in zip(self.base.param_groups, self._slow):
            for p, slow in zip(group["params"], slow_group):
                slow.add_(p.detach() - slow, alpha=self.alpha)
                p.copy_(slow)


def make_ranger(params, lr: float, k: int = 6, alpha: float = 0.5) -> Lookahead:
    """RAdam + Lookahead, the combination used for all encoder training."""
    return Lookahead(torch.optim.RAdam(params, lr=lr), k=k, alpha=alpha)
