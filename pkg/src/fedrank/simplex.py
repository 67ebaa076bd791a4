"""Nelder-Mead downhill simplex minimizer used for fusion-weight search."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Callable, Mapping

import numpy as np


class OptimizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class SSConfig:
    """Stochastic-search settings.

    ``epsilon`` offsets each initial simplex vertex from the start point;
    the ``delta_*`` coefficients scale reflection, expansion, contraction
    and shrinkage.  ``delta_ext = 0`` disables expansion.
    """

    epsilon: float = 0.1
    max_iter: int = 500
    max_stagnation: int = 10
    delta_refl: float = 1.0
    delta_ext: float = 2.0
    delta_cont: float = 0.5
    delta_shr: float = 0.5
    k: int = 100
    init_subsample: int = 1000
    seed: int = 0
    normalize_scores: bool = False

    def __post_init__(self) -> None:
        if self.epsilon <= 0:
            raise ValueError("epsilon must be > 0")
        if self.delta_refl <= 0:
            raise ValueError("delta_refl must be > 0")
        if self.delta_ext < 0:
            raise ValueError("delta_ext must be >= 0")
        if not 0 < self.delta_cont < 1:
            raise ValueError("delta_cont must lie in (0, 1)")
        if not 0 < self.delta_shr <= 1:
            raise ValueError("delta_shr must lie in (0, 1]")
        if self.max_iter < 1 or self.max_stagnation < 1:
            raise ValueError("max_iter and max_stagnation must be >= 1")
        if self.k < 1 or self.init_subsample < 1:
            raise ValueError("k and init_subsample must be >= 1")

    @classmethod
    def from_mapping(cls, values: Mapping[str, object]) -> "SSConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(values) - known
        if unknown:
            raise ValueError(f"unknown stochastic-search setting(s): {', '.join(sorted(unknown))}")
        return cls(**values)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TraceEntry:
    iteration: int
    operation: str
    best_loss: float


@dataclass
class Simplex:
    vertices: np.ndarray  # (N + 1, N)
    losses: np.ndarray  # (N + 1,)

    @classmethod
    def around(cls, v0: np.ndarray, epsilon: float, loss: Callable[[np.ndarray], float]) -> "Simplex":
        n = v0.size
        vertices = np.tile(v0, (n + 1, 1))
        vertices[1:] += epsilon * np.eye(n)
        return cls(vertices, np.array([_evaluate(loss, v) for v in vertices]))

    def sort(self) -> None:
        order = np.argsort(self.losses, kind="stable")
        self.vertices = self.vertices[order]
        self.losses = self.losses[order]

    @property
    def best(self) -> tuple[np.ndarray, float]:
        i = int(np.argmin(self.losses))
        return self.vertices[i].copy(), float(self.losses[i])


def _evaluate(loss: Callable[[np.ndarray], float], v: np.ndarray) -> float:
    value = float(loss(v))
    if not math.isfinite(value):
        raise OptimizationError(f"loss is non-finite ({value!r}) at {v.tolist()}")
    return value


def nelder_mead(
    loss: Callable[[np.ndarray], float],
    v0,
    config: SSConfig = SSConfig(),
) -> tuple[np.ndarray, list[TraceEntry]]:
    """Minimize ``loss`` from ``v0``.

    The initial simplex is ``v0`` plus ``v0 + epsilon * e_j`` for every axis.
    Stops after ``max_iter`` iterations or once the best loss has failed to
    improve for ``max_stagnation`` consecutive iterations.

    Returns:
        The best vertex and one trace entry per iteration.

    Raises:
        OptimizationError: if ``loss`` returns NaN or infinity.
    """
    v0 = np.atleast_1d(np.asarray(v0, dtype=float))
    if v0.ndim != 1 or v0.size < 1:
        raise ValueError("start point must be a non-empty vector")
    simplex = Simplex.around(v0, config.epsilon, loss)
    best_loss = float(simplex.losses.min())
    stagnation = 0
    trace: list[TraceEntry] = []

    for iteration in range(1, config.max_iter + 1):
        simplex.sort()
        x, f = simplex.vertices, simplex.losses
        centroid = x[:-1].mean(axis=0)
        worst = x[-1]

        xr = centroid + config.delta_refl * (centroid - worst)
        fr = _evaluate(loss, xr)
        if fr < f[0]:
            op, x_new, f_new = "reflect", xr, fr
            if config.delta_ext > 0:
                xe = centroid + config.delta_ext * (xr - centroid)
                fe = _evaluate(loss, xe)
                if fe < fr:
                    op, x_new, f_new = "expand", xe, fe
        elif fr < f[-2]:
            op, x_new, f_new = "reflect", xr, fr
        elif fr < f[-1]:
            xc = centroid + config.delta_cont * (xr - centroid)
            fc = _evaluate(loss, xc)
            op, x_new, f_new = ("contract_out", xc, fc) if fc <= fr else ("shrink", None, None)
        else:
            xc = centroid + config.delta_cont * (worst - centroid)
            fc = _evaluate(loss, xc)
            op, x_new, f_new = ("contract_in", xc, fc) if fc < f[-1] else ("shrink", None, None)

        if op == "shrink":
            x[1:] = x[0] + config.delta_shr * (x[1:] - x[0])
            f[1:] = [_evaluate(loss, v) for v in x[1:]]
        else:
            x[-1], f[-1] = x_new, f_new

        current = float(f.min())
        if current < best_loss:
            best_loss, stagnation = current, 0
        else:
            stagnation += 1
        trace.append(TraceEntry(iteration, op, best_loss))
        if stagnation >= config.max_stagnation:
            break

    return simplex.best[0], trace
