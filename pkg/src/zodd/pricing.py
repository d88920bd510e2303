"""Multiproduct pricing simulation with price-dependent demand.

A seller sets normalized prices ``x`` for ``n`` products. Each of
``m_buyers`` buyers independently picks one product (or nothing) with
multinomial-logit probabilities driven by the price gaps ``theta_i - x_i``,
so the demand distribution shifts with the decision. The per-realization
objective is cost minus revenue: ``f(x, xi) = -sum_i x_i xi_i + sum_i
cost_i(xi_i)`` with a piecewise-linear unit cost that is cheap in a middle
volume band and expensive outside it. Minimizing f maximizes expected
profit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .env import Environment, SampleBatch, SampleLedger, as_decision_vector, mean_objective

__all__ = [
    "PricingEnvSpec",
    "PricingEnv",
    "make_pricing_spec",
    "choice_probs",
    "sample_demand",
    "piecewise_cost",
    "pricing_f",
    "synth_theta",
    "load_theta",
    "eval_obj_metric",
]


@dataclass(frozen=True)
class PricingEnvSpec:
    """Immutable description of one pricing problem instance.

    Attributes
    ----------
    n : number of products.
    m_buyers : buyers per demand realization.
    theta : (n,) reference prices, > 0.
    gamma_sens : (n,) price sensitivities, > 0.
    a0 : no-purchase weight in the choice model, > 0.
    w : (n,) unit costs, >= 0.
    l, u : (n,) volume breakpoints of the cost function, ``l < u``.
    """

    n: int
    m_buyers: int
    theta: np.ndarray
    gamma_sens: np.ndarray
    a0: float
    w: np.ndarray
    l: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        if self.n < 1 or self.m_buyers < 1:
            raise ValueError("n and m_buyers must be >= 1")
        for name in ("theta", "gamma_sens", "w", "l", "u"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            if arr.shape != (self.n,) or not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} must be a finite vector of length n")
            object.__setattr__(self, name, arr)
        if np.any(self.theta <= 0):
            raise ValueError("theta entries must be > 0")
        if np.any(self.gamma_sens <= 0):
            raise ValueError("gamma_sens entries must be > 0")
        if np.any(self.w < 0):
            raise ValueError("w entries must be >= 0")
        if not (self.a0 > 0 and np.isfinite(self.a0)):
            raise ValueError("a0 must be finite and > 0")
        if np.any(self.l >= self.u):
            raise ValueError("cost breakpoints must satisfy l < u")


def make_pricing_spec(
    n: int,
    m_buyers: int,
    theta,
    w,
    gamma_sens=None,
    a0: float | None = None,
) -> PricingEnvSpec:
    """Build a spec with the standard defaults filled in.

    Defaults: sensitivities 1.0, no-purchase weight ``0.1 n``, and cost
    breakpoints ``l = 0.5 m_buyers / n``, ``u = 1.5 m_buyers / n`` for every
    product.
    """
    theta = np.asarray(theta, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    if gamma_sens is None:
        gamma_sens = np.ones(n)
    elif np.isscalar(gamma_sens):
        gamma_sens = np.full(n, float(gamma_sens))
    if a0 is None:
        a0 = 0.1 * n
    per = m_buyers / n
    return PricingEnvSpec(
        n=int(n),
        m_buyers=int(m_buyers),
        theta=theta,
        gamma_sens=np.asarray(gamma_sens, dtype=np.float64),
        a0=float(a0),
        w=w,
        l=np.full(n, 0.5 * per),
        u=np.full(n, 1.5 * per),
    )


def choice_probs(spec: PricingEnvSpec, x) -> np.ndarray:
    """Buyer choice probabilities at prices ``x``, length ``n + 1``.

    Index 0 is the no-purchase option with weight ``a0``; product ``i`` has
    weight ``exp(gamma_i (theta_i - x_i))``. Computed as a max-shifted
    softmax so extreme prices cannot overflow.
    """
    x = as_decision_vector(x, spec.n)
    logits = np.concatenate(([np.log(spec.a0)], spec.gamma_sens * (spec.theta - x)))
    logits -= logits.max()
    e = np.exp(logits)
    return e / e.sum()


def _tally_choices(p: np.ndarray, n: int, m_buyers: int, draws: np.ndarray) -> np.ndarray:
    # draws: uniform[0,1) of shape (..., m_buyers); inverse-CDF categorical.
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    idx = np.searchsorted(cdf, draws, side="right")
    idx = np.minimum(idx, n)
    if idx.ndim == 1:
        return np.bincount(idx, minlength=n + 1).astype(np.int64)
    rows = idx.shape[0]
    flat = idx + (n + 1) * np.arange(rows)[:, None]
    counts = np.bincount(flat.ravel(), minlength=rows * (n + 1))
    return counts.reshape(rows, n + 1).astype(np.int64)


def sample_demand(spec: PricingEnvSpec, x, rng: np.random.Generator) -> np.ndarray:
    """One demand realization: per-option buyer counts, summing to m_buyers.

    Each buyer draws independently from the choice probabilities
    (inverse-CDF on the stabilized vector); entry 0 counts the buyers who
    bought nothing.
    """
    p = choice_probs(spec, x)
    return _tally_choices(p, spec.n, spec.m_buyers, rng.random(spec.m_buyers))


def piecewise_cost(spec: PricingEnvSpec, counts) -> np.ndarray:
    """Per-product cost of selling ``counts`` units, elementwise.

    Three linear pieces with slopes ``2 w`` below ``l``, ``w`` between ``l``
    and ``u``, and ``3 w`` above ``u``, joined continuously. ``counts`` may
    carry any leading batch shape over the trailing product axis.
    """
    q = np.asarray(counts, dtype=np.float64)
    w, l, u = spec.w, spec.l, spec.u
    low = 2.0 * w * q
    mid = w * (q - l) + 2.0 * w * l
    high = 3.0 * w * (q - u) + w * (u - l) + 2.0 * w * l
    return np.where(q <= l, low, np.where(q <= u, mid, high))


def pricing_f(spec: PricingEnvSpec, x, xi) -> float:
    """Cost minus revenue for one demand realization ``xi`` (length n+1)."""
    x = np.asarray(x, dtype=np.float64)
    sold = np.asarray(xi, dtype=np.float64)[1:]
    return float(-x @ sold + piecewise_cost(spec, sold).sum())


class PricingEnv(Environment):
    """The pricing problem as a sampling environment."""

    def __init__(self, spec: PricingEnvSpec) -> None:
        self.spec = spec

    def dim(self) -> int:
        return self.spec.n

    def sample(self, x, m, rng) -> SampleBatch:
        spec = self.spec
        probe = np.array(x, dtype=np.float64, copy=True)
        p = choice_probs(spec, probe)
        draws = rng.random((m, spec.m_buyers))
        outcomes = _tally_choices(p, spec.n, spec.m_buyers, draws)
        return SampleBatch(probe=probe, outcomes=outcomes, batch_size=m)

    def eval_f(self, x, xi) -> float:
        return pricing_f(self.spec, x, xi)

    def eval_f_batch(self, x, outcomes) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        sold = np.asarray(outcomes, dtype=np.float64)[:, 1:]
        return -sold @ x + piecewise_cost(self.spec, sold).sum(axis=-1)


def synth_theta(
    n: int,
    rng: np.random.Generator,
    theta_low: float = 0.55,
    theta_high: float = 1.0,
) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic reference prices and unit costs for one instance.

    ``theta_i`` is uniform on ``[theta_low, theta_high]``, standing in for
    recorded average selling prices normalized by the top price, so the
    stock 0.5-filled starting point prices near break-even. ``w_i =
    rho_i theta_i`` with ``rho_i`` uniform on ``[0.25, 0.5]``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if not (0 < theta_low < theta_high):
        raise ValueError("need 0 < theta_low < theta_high")
    theta = rng.uniform(theta_low, theta_high, n)
    rho = rng.uniform(0.25, 0.5, n)
    return theta, rho * theta


def load_theta(path) -> np.ndarray:
    """Read reference prices from a text file, one positive decimal per line."""
    values = []
    with open(path) as fh:
        for line_no, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(float(text))
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: not a number: {text!r}") from exc
    theta = np.asarray(values, dtype=np.float64)
    if theta.size == 0:
        raise ValueError(f"{path}: no values")
    if np.any(theta <= 0) or not np.all(np.isfinite(theta)):
        raise ValueError(f"{path}: all values must be finite and > 0")
    return theta


def eval_obj_metric(
    spec: PricingEnvSpec,
    x_hat,
    n_eval: int,
    rng: np.random.Generator,
    ledger: SampleLedger | None = None,
) -> float:
    """Mean of f over ``n_eval`` fresh demand realizations at ``x_hat``.

    Post-hoc solution metric; draws land on the separate ``ledger`` (when
    given), never on any optimizer budget.
    """
    return mean_objective(PricingEnv(spec), x_hat, n_eval, rng, ledger)
