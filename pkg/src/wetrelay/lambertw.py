"""Real branches of the Lambert W function."""

from __future__ import annotations

import math

INV_E = math.exp(-1.0)

PRINCIPAL = "principal"
MINUS_ONE = "minus-one"
BRANCHES = (PRINCIPAL, MINUS_ONE)


class LambertDomainError(ValueError):
    """Argument outside the real domain of the requested branch."""


def _seed(branch: str, x: float) -> float:
    p2 = 2.0 * (math.e * x + 1.0)
    if branch == PRINCIPAL:
        if x < -0.25:
            # series about the branch point
            p = math.sqrt(max(p2, 0.0))
            return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
        if x < 3.0:
            return math.log1p(x) * (1.0 - math.log1p(math.log1p(x)) / (2.0 + math.log1p(x))) if x > 0 else x
        lx = math.log(x)
        return lx - math.log(lx)
    # minus-one branch, x in [-1/e, 0)
    if x < -0.25:
        p = -math.sqrt(max(p2, 0.0))
        return -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p**3
    lx = math.log(-x)
    return lx - math.log(-lx)


def lambert_w(branch: str, x: float, tol: float = 1e-13, max_iter: int = 100) -> float:
    """Solve ``w * exp(w) = x`` on a real branch by Halley iteration.

    ``branch`` is ``"principal"`` (``w >= -1``, ``x >= -1/e``) or
    ``"minus-one"`` (``w <= -1``, ``-1/e <= x < 0``). Arguments within a few
    ulps below ``-1/e`` are treated as the branch point itself.
    """
    if branch not in BRANCHES:
        raise ValueError(f"unknown branch {branch!r}; expected one of {BRANCHES}")
    x = float(x)
    if math.isnan(x):
        raise LambertDomainError("argument is NaN")
    slack = 4 * math.ulp(INV_E)
    if x < -INV_E - slack:
        raise LambertDomainError(f"x = {x!r} lies below -1/e")
    if branch == MINUS_ONE and x >= 0:
        raise LambertDomainError("the minus-one branch needs -1/e <= x < 0")
    if x <= -INV_E:
        return -1.0
    if x == 0.0:
        return 0.0
    if math.isinf(x):
        return math.inf
    w = _seed(branch, x)
    for _ in range(max_iter):
        ew = math.exp(w)
        f = w * ew - x
        if abs(f) <= 0.25 * tol * abs(x):
            break
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w_new = w - step
        if branch == PRINCIPAL:
            w_new = max(w_new, -1.0)
        else:
            w_new = min(w_new, -1.0)
        done = abs(w_new - w) <= 1e-16 * max(1.0, abs(w))
        w = w_new
        if done:
            break
    return w
