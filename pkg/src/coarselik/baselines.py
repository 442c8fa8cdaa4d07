"""Baseline hazard families.

A baseline is a nonnegative rate function of time together with its exact
integrated hazard. All evaluation methods broadcast over numpy arrays, and
`breakpoints` lists the interior times where the rate is discontinuous so
that quadrature panels and ODE solves can align with them.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


class Constant:
    """Time-constant rate."""

    def __init__(self, rate: float):
        if not np.isfinite(rate) or rate < 0:
            raise InvalidInputError(f"constant rate must be finite and >= 0, got {rate}")
        self.value = float(rate)
        self.breakpoints: tuple[float, ...] = ()
        self.time_constant = True

    def rate(self, t):
        return np.broadcast_to(np.float64(self.value), np.shape(t)).copy() if np.ndim(t) else self.value

    def cum0(self, t):
        return self.value * np.asarray(t, dtype=float) if np.ndim(t) else self.value * float(t)

    def cum(self, t0, t1):
        return self.value * np.maximum(np.asarray(t1, dtype=float) - t0, 0.0)

    def scaled(self, c: float) -> "Constant":
        return Constant(self.value * c)

    def __repr__(self):
        return f"Constant({self.value!r})"


class Weibull:
    """Weibull hazard a*b*t^(b-1) with integrated hazard a*t^b (a, b > 0)."""

    def __init__(self, a: float, b: float):
        if not (np.isfinite(a) and a > 0 and np.isfinite(b) and b > 0):
            raise InvalidInputError(f"weibull parameters must be positive, got a={a}, b={b}")
        self.a = float(a)
        self.b = float(b)
        self.breakpoints: tuple[float, ...] = ()
        self.time_constant = b == 1.0

    def rate(self, t):
        t = np.asarray(t, dtype=float)
        if self.b == 1.0:
            out = np.full(t.shape, self.a)
        else:
            with np.errstate(divide="ignore", over="ignore"):
                out = np.where(t > 0, self.a * self.b * t ** (self.b - 1.0), np.inf if self.b < 1 else 0.0)
        return out if out.ndim else float(out)

    def cum0(self, t):
        t = np.asarray(t, dtype=float)
        out = self.a * np.maximum(t, 0.0) ** self.b
        return out if out.ndim else float(out)

    def cum(self, t0, t1):
        return np.maximum(self.cum0(t1) - self.cum0(t0), 0.0)

    def scaled(self, c: float) -> "Weibull":
        return Weibull(self.a * c, self.b)

    def __repr__(self):
        return f"Weibull(a={self.a!r}, b={self.b!r})"


class PiecewiseConstant:
    """Step-function rate: rates[i] on (grid[i-1], grid[i]], last rate beyond.

    grid lists the interior cut points (strictly increasing, > 0); rates has
    one more entry than grid.
    """

    def __init__(self, grid, rates):
        grid = np.asarray(grid, dtype=float)
        rates = np.asarray(rates, dtype=float)
        if grid.ndim != 1 or rates.ndim != 1 or rates.size != grid.size + 1:
            raise InvalidInputError("need len(rates) == len(grid) + 1")
        if grid.size and (np.any(np.diff(grid) <= 0) or grid[0] <= 0 or not np.all(np.isfinite(grid))):
            raise InvalidInputError("grid must be finite, strictly increasing and > 0")
        if np.any(rates < 0) or not np.all(np.isfinite(rates)):
            raise InvalidInputError("rates must be finite and >= 0")
        self.grid = grid
        self.rates = rates
        # integrated hazard at each cut point, so cum0 is a local update
        edges = np.concatenate(([0.0], grid))
        self._cum_at_edge = np.concatenate(([0.0], np.cumsum(rates[:-1] * np.diff(edges))))
        self._edges = edges
        self.breakpoints = tuple(grid.tolist())
        self.time_constant = grid.size == 0

    def _index(self, t):
        return np.searchsorted(self.grid, t, side="left")

    def rate(self, t):
        t = np.asarray(t, dtype=float)
        out = self.rates[self._index(t)]
        return out if out.ndim else float(out)

    def cum0(self, t):
        t = np.asarray(t, dtype=float)
        i = self._index(t)
        out = self._cum_at_edge[i] + self.rates[i] * (np.maximum(t, 0.0) - self._edges[i])
        return out if out.ndim else float(out)

    def cum(self, t0, t1):
        return np.maximum(self.cum0(t1) - self.cum0(t0), 0.0)

    def scaled(self, c: float) -> "PiecewiseConstant":
        return PiecewiseConstant(self.grid, self.rates * c)

    def __repr__(self):
        return f"PiecewiseConstant(grid={self.grid.tolist()!r}, rates={self.rates.tolist()!r})"
