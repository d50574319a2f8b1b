"""Augmented Lagrangian driver for one smooth inequality constraint.

Solves ``min f(x)`` subject to ``g(x) >= 0`` over a box, using
:func:`scipy.optimize.minimize` (L-BFGS-B) for the bounded inner problems.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize


@dataclass
class ALTrace:
    """Per-outer-iteration record: multiplier, penalty, objective, violation."""

    multipliers: list = field(default_factory=list)
    penalties: list = field(default_factory=list)
    objectives: list = field(default_factory=list)
    violations: list = field(default_factory=list)

    def append(self, lam, mu, obj, viol):
        self.multipliers.append(float(lam))
        self.penalties.append(float(mu))
        self.objectives.append(float(obj))
        self.violations.append(float(viol))

    def to_json(self) -> dict:
        return {
            "multipliers": self.multipliers,
            "penalties": self.penalties,
            "objectives": self.objectives,
            "violations": self.violations,
        }


def augmented_lagrangian(fun, cons, x0, bounds, *, outer=8, mu0=10.0, growth=10.0,
                         lam0=0.0, inner_maxiter=500):
    """Minimise ``fun`` subject to ``cons >= 0``.

    ``fun`` and ``cons`` take ``x`` and return ``(value, gradient)``. The
    penalty is multiplied by ``growth`` after every outer loop and the
    multiplier follows the first-order update ``max(0, lam - mu * g)``.
    Returns ``(x_last, x_least_violating, trace)``; the trace records the
    violation ``max(0, -g)`` of each outer iterate.
    """
    x = np.clip(np.asarray(x0, dtype=np.float64), [b[0] for b in bounds], [b[1] for b in bounds])
    lam, mu = float(lam0), float(mu0)
    trace = ALTrace()
    best_x, best_viol = x.copy(), max(0.0, -cons(x)[0])

    def lagrangian(z):
        fv, fg = fun(z)
        gv, gg = cons(z)
        if gv - lam / mu < 0.0:
            val = fv - lam * gv + 0.5 * mu * gv * gv
            grad = fg + (mu * gv - lam) * gg
        else:
            val = fv - 0.5 * lam * lam / mu
            grad = fg
        return val, grad

    for _ in range(outer):
        res = minimize(lagrangian, x, jac=True, method="L-BFGS-B", bounds=bounds,
                       options={"maxiter": inner_maxiter, "ftol": 1e-15, "gtol": 1e-12})
        x = res.x
        gv = cons(x)[0]
        viol = max(0.0, -gv)
        if viol <= best_viol:
            best_x, best_viol = x.copy(), viol
        trace.append(lam, mu, fun(x)[0], viol)
        lam = max(0.0, lam - mu * gv)
        mu *= growth
    return x, best_x, trace
