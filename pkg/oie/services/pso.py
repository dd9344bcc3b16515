"""
Global-best particle swarm optimisation on a box.

Each particle owns its own random stream (SeedSequence.spawn), so results do
not depend on evaluation order. Objectives can be scalar (one point per call)
or vectorized (an (m, d) array per call, returning m values).
"""
import logging
from typing import Callable, Optional

import numpy as np

from oie.errors import DomainError
from oie.schemas import PsoConfig

logger = logging.getLogger(__name__)


class ParticleSwarm:
    def __init__(self, config: PsoConfig = PsoConfig()):
        self.config = config

    @staticmethod
    def _box(config: PsoConfig, dim: Optional[int], lower, upper) -> tuple[np.ndarray, np.ndarray]:
        if lower is None or upper is None:
            if dim is None:
                raise DomainError("PSO needs either explicit bounds or a dimension")
            lower = np.full(dim, config.bounds[0], dtype=float)
            upper = np.full(dim, config.bounds[1], dtype=float)
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        if lower.shape != upper.shape or lower.ndim != 1:
            raise DomainError("PSO bounds must be two vectors of equal length")
        if np.any(lower >= upper):
            raise DomainError("PSO search box is empty", detail=f"lower={lower.tolist()} upper={upper.tolist()}")
        return lower, upper

    @staticmethod
    def _evaluate(objective: Callable, positions: np.ndarray, vectorized: bool) -> np.ndarray:
        if vectorized:
            values = np.asarray(objective(positions), dtype=float).reshape(-1)
        else:
            values = np.array([objective(p) for p in positions], dtype=float)
        # non-finite objective values never become a best
        return np.where(np.isfinite(values), values, np.inf)

    def minimize(self, objective: Callable, dim: Optional[int] = None, lower=None, upper=None,
                 initial: Optional[np.ndarray] = None, vectorized: bool = False) -> tuple[np.ndarray, float]:
        cfg = self.config
        lower, upper = self._box(cfg, dim, lower, upper)
        d = lower.size
        n = cfg.swarm_size
        span = upper - lower

        seed = 0 if cfg.seed is None else cfg.seed
        streams = [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]

        pos = np.stack([lower + span * rng.random(d) for rng in streams])
        vel = np.stack([span * (rng.random(d) - 0.5) * 0.2 for rng in streams])
        if initial is not None:
            seeds = np.atleast_2d(np.asarray(initial, dtype=float))[:n]
            pos[: len(seeds)] = np.clip(seeds, lower, upper)

        values = self._evaluate(objective, pos, vectorized)
        best_pos = pos.copy()
        best_val = values.copy()
        g = int(np.argmin(best_val))
        g_pos, g_val = best_pos[g].copy(), float(best_val[g])

        for it in range(cfg.iterations):
            r1 = np.stack([rng.random(d) for rng in streams])
            r2 = np.stack([rng.random(d) for rng in streams])
            vel = (cfg.inertia * vel
                   + cfg.cognitive * r1 * (best_pos - pos)
                   + cfg.social * r2 * (g_pos - pos))
            vel = np.clip(vel, -span, span)
            pos = np.clip(pos + vel, lower, upper)

            values = self._evaluate(objective, pos, vectorized)
            improved = values < best_val
            best_pos[improved] = pos[improved]
            best_val[improved] = values[improved]

            g = int(np.argmin(best_val))
            if best_val[g] < g_val:
                g_pos, g_val = best_pos[g].copy(), float(best_val[g])
            if it % 100 == 0:
                logger.debug(f"PSO iteration {it}: best={g_val:.6g}")

        logger.debug(f"PSO finished after {cfg.iterations} iterations: best={g_val:.6g}")
        return g_pos, g_val


def pso_minimize(objective: Callable, config: PsoConfig = PsoConfig(), dim: Optional[int] = None,
                 lower=None, upper=None, initial=None, vectorized: bool = False) -> tuple[np.ndarray, float]:
    """Best point and value after `config.iterations` swarm updates."""
    return ParticleSwarm(config).minimize(objective, dim=dim, lower=lower, upper=upper,
                                          initial=initial, vectorized=vectorized)
