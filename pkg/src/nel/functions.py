"""Continuum function families with exact cell-average rules.

Each family carries a vectorized evaluator, a smoothness tag driving
the singular quadrature engines (one of ``lipschitz``, ``holder-half``,
``bounded``, ``l2`` or ``piecewise-constant``), optional breakpoints
(kink locations), and, where a closed form exists, an antiderivative so
cell averages avoid quadrature noise entirely.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .errors import UndefinedAtNodeError
from .quadrature import piecewise_adaptive

TAGS = ("lipschitz", "holder-half", "bounded", "l2", "piecewise-constant")


class ContinuumFunction:
    """Real function on the physical space, tagged by smoothness class."""

    def __init__(
        self,
        evaluate: Callable[[np.ndarray], np.ndarray],
        tag: str,
        name: str = "custom",
        antiderivative: Optional[Callable[[np.ndarray], np.ndarray]] = None,
        breakpoints: tuple[float, ...] = (),
    ):
        if tag not in TAGS:
            raise ValueError(f"unknown tag {tag!r}; expected one of {TAGS}")
        self._evaluate = evaluate
        self.tag = tag
        self.name = name
        self.antiderivative = antiderivative
        self.breakpoints = breakpoints

    def __call__(self, x):
        return self._evaluate(np.asarray(x, dtype=float))

    def value_at(self, x) -> float:
        """Scalar evaluation with an explicit undefined-value error."""
        try:
            value = float(self(x))
        except Exception as exc:
            raise UndefinedAtNodeError(f"{self.name} undefined at {x}") from exc
        if not np.isfinite(value):
            raise UndefinedAtNodeError(f"{self.name} not finite at {x}")
        return value

    def cell_average(self, lo, hi, tol: float = 1e-12) -> float:
        """Average over [lo, hi]: exact antiderivative rule or quadrature."""
        lo_f, hi_f = float(lo), float(hi)
        width = hi_f - lo_f
        if width <= 0.0:
            raise ValueError("cell must have positive width")
        if self.antiderivative is not None:
            F = self.antiderivative
            return (float(F(hi_f)) - float(F(lo_f))) / width
        integral = piecewise_adaptive(self, lo_f, hi_f, self.breakpoints, tol=tol)
        return integral / width


def polynomial(coeffs) -> ContinuumFunction:
    """Polynomial with the given ascending coefficients; exact averages."""
    poly = np.polynomial.Polynomial(list(coeffs))
    primitive = poly.integ()
    return ContinuumFunction(
        evaluate=poly,
        tag="lipschitz",
        name=f"poly{tuple(float(c) for c in coeffs)}",
        antiderivative=primitive,
    )


def linear() -> ContinuumFunction:
    fn = polynomial([0.0, 1.0])
    fn.name = "linear"
    return fn


def quadratic() -> ContinuumFunction:
    fn = polynomial([0.0, 0.0, 1.0])
    fn.name = "quadratic"
    return fn


def constant(value: float) -> ContinuumFunction:
    value = float(value)
    fn = polynomial([value])
    fn.name = f"constant({value})"
    return fn


def abs_power(center: float, alpha: float, scale: float = 1.0) -> ContinuumFunction:
    """f(x) = scale * |x - center|^alpha with its exact antiderivative.

    alpha = 1/2 with center at an interval endpoint is the standard
    half-Hoelder sample.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    center = float(center)

    def evaluate(x):
        return scale * np.abs(x - center) ** alpha

    def antiderivative(x):
        t = x - center
        return scale * np.sign(t) * np.abs(t) ** (alpha + 1.0) / (alpha + 1.0)

    if alpha >= 1.0:
        tag = "lipschitz"
    elif alpha >= 0.5:
        tag = "holder-half"
    else:
        tag = "bounded"
    return ContinuumFunction(
        evaluate=evaluate,
        tag=tag,
        name=f"abs_power(center={center},alpha={alpha})",
        antiderivative=antiderivative,
        breakpoints=(center,),
    )


def sqrt_edge() -> ContinuumFunction:
    """x -> sqrt(x): the C^(1/2) sample used for the i = 2 experiments."""
    return abs_power(0.0, 0.5)


def step(threshold: float, left: float = 0.0, right: float = 1.0) -> ContinuumFunction:
    """Step function jumping at ``threshold`` (value ``right`` from there on)."""
    threshold = float(threshold)

    def evaluate(x):
        return np.where(x >= threshold, float(right), float(left))

    def antiderivative(x):
        return np.where(
            x >= threshold,
            left * threshold + right * (x - threshold),
            left * x,
        )

    return ContinuumFunction(
        evaluate=evaluate,
        tag="bounded",
        name=f"step(at={threshold})",
        antiderivative=antiderivative,
        breakpoints=(threshold,),
    )


def sine(frequency: float, amplitude: float = 1.0, phase: float = 0.0) -> ContinuumFunction:
    freq, amp, ph = float(frequency), float(amplitude), float(phase)

    def evaluate(x):
        return amp * np.sin(freq * x + ph)

    def antiderivative(x):
        return -amp * np.cos(freq * x + ph) / freq

    return ContinuumFunction(
        evaluate=evaluate,
        tag="lipschitz",
        name=f"sine(freq={freq},amp={amp})",
        antiderivative=antiderivative,
    )


class PiecewiseConstantFunction(ContinuumFunction):
    """Piecewise-constant function on a sorted family of cells.

    Downstream seminorms and norms use the closed-form cell-pair
    interaction instead of quadrature; evaluation at cell boundaries
    follows the half-open cell conventions only up to measure zero.
    """

    def __init__(self, lows, highs, values, name: str = "pc"):
        lows = np.asarray(lows, dtype=float)
        highs = np.asarray(highs, dtype=float)
        values = np.asarray(values, dtype=float)
        if not (len(lows) == len(highs) == len(values)):
            raise ValueError("cell arrays must share a length")
        order = np.argsort(lows)
        self.lows = lows[order]
        self.highs = highs[order]
        self.values = values[order]

        def evaluate(x):
            x = np.asarray(x, dtype=float)
            idx = np.searchsorted(self.lows, x, side="right") - 1
            idx = np.clip(idx, 0, len(self.values) - 1)
            return self.values[idx]

        super().__init__(evaluate=evaluate, tag="piecewise-constant", name=name,
                         breakpoints=tuple(self.lows[1:]))

    def cell_average(self, lo, hi, tol: float = 1e-12) -> float:
        lo_f, hi_f = float(lo), float(hi)
        clip_lo = np.maximum(self.lows, lo_f)
        clip_hi = np.minimum(self.highs, hi_f)
        widths = np.clip(clip_hi - clip_lo, 0.0, None)
        total = float(np.sum(widths))
        if total <= 0.0:
            raise ValueError("cell does not meet the function's support")
        return float(np.sum(widths * self.values)) / total

    def l2_norm_sq(self) -> float:
        """Exact squared L2 norm over the union of cells."""
        return float(np.sum((self.highs - self.lows) * self.values**2))

    def clipped(self, a: float, b: float):
        """Cell pieces intersected with [a, b] as (lows, highs, values)."""
        lo = np.maximum(self.lows, a)
        hi = np.minimum(self.highs, b)
        keep = hi > lo
        return lo[keep], hi[keep], self.values[keep]


_REGISTRY: dict[str, Callable[[], ContinuumFunction]] = {
    "linear": linear,
    "quadratic": quadratic,
    "sqrt": sqrt_edge,
    "step": lambda: step(0.5),
    "constant": lambda: constant(1.0),
    "sine": lambda: sine(3.0),
}


def by_name(name: str) -> ContinuumFunction:
    """Look up a function family by its CLI/config name."""
    key = name.strip().lower()
    if key.startswith("constant:"):
        return constant(float(key.split(":", 1)[1]))
    if key.startswith("sine:"):
        return sine(float(key.split(":", 1)[1]))
    if key.startswith("step:"):
        return step(float(key.split(":", 1)[1]))
    if key not in _REGISTRY:
        raise KeyError(f"unknown function family {name!r}")
    return _REGISTRY[key]()
