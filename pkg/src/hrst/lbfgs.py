"""Limited-memory BFGS with a strong-Wolfe line search."""
from collections import deque
from dataclasses import dataclass, field
import math

import numpy as np

from .exceptions import InvalidArgumentError

GRAD_TOL = "grad-tol"
MAX_ITER = "max-iter"
LOSS_TOL = "loss-tol"
LINE_SEARCH_FAILURE = "line-search-failure"


@dataclass(frozen=True)
class LbfgsOptions:
    memory: int = 10
    max_iterations: int = 300
    grad_tolerance: float = 1e-6
    rel_loss_tolerance: float = 1e-9
    wolfe_c1: float = 1e-4
    wolfe_c2: float = 0.9
    max_line_search_evals: int = 30

    def __post_init__(self):
        if not 0.0 < self.wolfe_c1 < self.wolfe_c2 < 1.0:
            raise InvalidArgumentError("need 0 < wolfe_c1 < wolfe_c2 < 1")
        # memory == 0 keeps no curvature pairs: scaled steepest descent
        if self.memory < 0:
            raise InvalidArgumentError("memory must be >= 0")
        if self.max_iterations < 0:
            raise InvalidArgumentError("max_iterations must be >= 0")


@dataclass
class OptimReport:
    iterations_used: int
    final_loss: float
    termination_reason: str
    # loss at x0 followed by the loss after each accepted iteration
    loss_trace: list = field(default_factory=list)
    evaluations: int = 0


def _cubic_step(a_lo, f_lo, g_lo, a_hi, f_hi, g_hi):
    """Minimizer of the cubic through two points with slopes (nan if none)."""
    d1 = g_lo + g_hi - 3.0 * (f_lo - f_hi) / (a_lo - a_hi)
    disc = d1 * d1 - g_lo * g_hi
    if not np.isfinite(disc) or disc < 0:
        return math.nan
    d2 = math.copysign(math.sqrt(disc), a_hi - a_lo)
    denom = g_hi - g_lo + 2.0 * d2
    if denom == 0:
        return math.nan
    return a_hi - (a_hi - a_lo) * (g_hi + d2 - d1) / denom


class _LineFunction:
    def __init__(self, objective, x, d):
        self.objective = objective
        self.x = x
        self.d = d
        self.evals = 0
        self.best = None  # (f, alpha, x, g) of lowest loss seen

    def __call__(self, alpha):
        xa = self.x + alpha * self.d
        f, g = self.objective(xa)
        self.evals += 1
        f = float(f)
        g = np.asarray(g, dtype=np.float64).ravel()
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            return math.inf, math.nan, xa, g
        if self.best is None or f < self.best[0]:
            self.best = (f, alpha, xa, g)
        return f, float(g @ self.d), xa, g


def _strong_wolfe(line, f0, dphi0, alpha, opts):
    c1, c2 = opts.wolfe_c1, opts.wolfe_c2

    def zoom(lo, hi):
        a_lo, f_lo, d_lo = lo
        a_hi, f_hi, d_hi = hi
        while line.evals < opts.max_line_search_evals:
            a = _cubic_step(a_lo, f_lo, d_lo, a_hi, f_hi, d_hi)
            left, right = sorted((a_lo, a_hi))
            margin = 0.1 * (right - left)
            if not np.isfinite(a) or a < left + margin or a > right - margin:
                a = 0.5 * (a_lo + a_hi)
            if a == a_lo or a == a_hi:
                return None
            f, d, xa, g = line(a)
            if f > f0 + c1 * a * dphi0 or f >= f_lo:
                a_hi, f_hi, d_hi = a, f, d
            else:
                if abs(d) <= -c2 * dphi0:
                    return a, f, xa, g
                if d * (a_hi - a_lo) >= 0:
                    a_hi, f_hi, d_hi = a_lo, f_lo, d_lo
                a_lo, f_lo, d_lo = a, f, d
        return None

    prev = (0.0, f0, dphi0)
    first = True
    while line.evals < opts.max_line_search_evals:
        f, d, xa, g = line(alpha)
        if f > f0 + c1 * alpha * dphi0 or (not first and f >= prev[1]):
            return zoom(prev, (alpha, f, d))
        if abs(d) <= -c2 * dphi0:
            return alpha, f, xa, g
        if d >= 0:
            return zoom((alpha, f, d), prev)
        a_next = _cubic_step(prev[0], prev[1], prev[2], alpha, f, d)
        if not np.isfinite(a_next) or a_next < 2.0 * alpha:
            a_next = 2.0 * alpha
        prev = (alpha, f, d)
        alpha = min(a_next, 10.0 * alpha)
        first = False
    return None


def _two_loop(g, pairs, gamma):
    q = g.copy()
    coefs = []
    for s, y, rho in reversed(pairs):
        a = rho * (s @ q)
        coefs.append(a)
        q -= a * y
    r = gamma * q
    for (s, y, rho), a in zip(pairs, reversed(coefs)):
        b = rho * (y @ r)
        r += (a - b) * s
    return -r


def minimize(objective, x0, opts=None, callback=None):
    """Minimize ``objective`` starting from ``x0``.

    ``objective(x)`` must return ``(loss, gradient)`` for a flat float
    vector. Returns the final iterate and an OptimReport. A failed line
    search ends the run with the best point found so far.
    """
    opts = opts or LbfgsOptions()
    x = np.array(x0, dtype=np.float64).ravel()
    f, g = objective(x)
    f = float(f)
    g = np.asarray(g, dtype=np.float64).ravel()
    if g.shape != x.shape:
        raise InvalidArgumentError(f"gradient has shape {g.shape}, expected {x.shape}")
    if not np.isfinite(f) or not np.all(np.isfinite(g)):
        raise InvalidArgumentError("objective is not finite at the starting point")

    evals = 1
    trace = [f]
    pairs = deque(maxlen=opts.memory) if opts.memory > 0 else deque(maxlen=0)
    gamma = None
    reason = MAX_ITER

    def report():
        return OptimReport(len(trace) - 1, trace[-1], reason, trace, evals)

    if np.max(np.abs(g), initial=0.0) <= opts.grad_tolerance:
        reason = GRAD_TOL
        return x, report()

    for _ in range(opts.max_iterations):
        if gamma is None:
            d = -g
            alpha0 = 1.0 / np.linalg.norm(g)
        else:
            d = _two_loop(g, pairs, gamma)
            alpha0 = 1.0
        dphi0 = float(g @ d)
        if not dphi0 < 0:
            pairs.clear()
            d = -g
            dphi0 = float(g @ d)
            alpha0 = 1.0 / np.linalg.norm(g)

        line = _LineFunction(objective, x, d)
        found = _strong_wolfe(line, f, dphi0, alpha0, opts)
        evals += line.evals
        if found is None:
            reason = LINE_SEARCH_FAILURE
            if line.best is not None and line.best[0] < f:
                f, _, x, g = line.best
                trace.append(f)
            break
        alpha, f_new, x_new, g_new = found

        s = x_new - x
        y = g_new - g
        sy = float(s @ y)
        if sy > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            if opts.memory > 0:
                pairs.append((s, y, 1.0 / sy))
            gamma = sy / float(y @ y)
        elif gamma is None:
            gamma = alpha / np.linalg.norm(g) if np.linalg.norm(g) > 0 else 1.0

        f_old = f
        x, f, g = x_new, f_new, g_new
        trace.append(f)
        if callback is not None:
            callback(x, f)

        if np.max(np.abs(g)) <= opts.grad_tolerance:
            reason = GRAD_TOL
            break
        if f_old - f <= opts.rel_loss_tolerance * max(abs(f_old), abs(f)):
            reason = LOSS_TOL
            break

    return x, report()
