"""scikit-learn style wrapper: fit a program, predict query probabilities."""

from __future__ import annotations

from typing import Iterable

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .inference import BoundsConfig, bounds, exact, explanation, kbest, monte_carlo
from .loader import add_prelude
from .parser import parse_program, parse_query
from .program import Program

__all__ = ["ProbLogEstimator", "MODES"]

MODES = ("exact", "explain", "kbest", "bounds", "mc")


class ProbLogEstimator(BaseEstimator):
    """Query probabilities under one inference mode.

    ``fit`` takes the program (source text or a :class:`Program`); there
    is nothing to learn, fitting only loads and indexes it.  ``predict``
    maps a sequence of query strings or terms to probabilities.  In
    ``bounds`` mode the point prediction is the interval midpoint and
    :meth:`predict_interval` returns both ends.

    Examples
    --------
    >>> est = ProbLogEstimator(mode="exact").fit(open("programs/example.pl").read())
    >>> est.predict(["path(c,d)"])
    array([0.94])
    """

    def __init__(
        self,
        mode: str = "exact",
        k: int = 10,
        delta: float = 0.01,
        gamma: float = 0.5,
        beta: float = 0.5,
        batch_size: int = 1000,
        seed: int = 0,
        max_depth: int | None = None,
    ):
        self.mode = mode
        self.k = k
        self.delta = delta
        self.gamma = gamma
        self.beta = beta
        self.batch_size = batch_size
        self.seed = seed
        self.max_depth = max_depth

    def fit(self, X, y=None) -> ProbLogEstimator:
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        if isinstance(X, Program):
            program = X
        elif isinstance(X, str):
            program = add_prelude(parse_program(X))
        else:
            raise TypeError("fit expects program source text or a Program")
        self.program_ = program
        self.n_facts_ = len(program.facts)
        return self

    def _goals(self, X: Iterable):
        if isinstance(X, str):
            X = [X]
        return [parse_query(q) if isinstance(q, str) else q for q in X]

    def _answer(self, goal):
        program, depth = self.program_, self.max_depth
        if self.mode == "exact":
            return exact(program, goal, max_depth=depth).probability
        if self.mode == "explain":
            return explanation(program, goal, max_depth=depth).probability
        if self.mode == "kbest":
            return kbest(program, goal, self.k, max_depth=depth).probability
        if self.mode == "bounds":
            cfg = BoundsConfig(self.delta, self.gamma, self.beta)
            interval = bounds(program, goal, cfg, max_depth=depth).interval
            return interval.low, interval.high
        return monte_carlo(program, goal, self.delta, self.batch_size, self.seed, max_depth=depth).probability

    def predict_interval(self, X) -> np.ndarray:
        """(n_queries, 2) array of lower and upper probabilities."""
        check_is_fitted(self, "program_")
        rows = []
        for goal in self._goals(X):
            value = self._answer(goal)
            rows.append(value if isinstance(value, tuple) else (value, value))
        return np.asarray(rows, dtype=float).reshape(-1, 2)

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "program_")
        if self.mode == "bounds":
            return self.predict_interval(X).mean(axis=1)
        return np.asarray([self._answer(goal) for goal in self._goals(X)], dtype=float)
