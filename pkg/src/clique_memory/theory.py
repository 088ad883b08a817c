"""Closed-form capacity and efficiency calculators.

Entropies are computed in nats and converted to bits on request. The
informational efficiency is ``2 * alpha / h(alpha)`` with ``h`` the Poisson
entropy in nats; it crosses 1 near ``alpha = 0.4225``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

LN2 = math.log(2.0)


def _check_positive(**kw):
    for name, x in kw.items():
        if not x > 0:
            raise ValueError(f"{name} must be > 0, got {x}")


def poisson_entropy(alpha: float, tol: float = 1e-12) -> float:
    """Entropy of Poisson(alpha) in nats.

    Evaluates ``alpha*(1 - ln alpha) + exp(-alpha) * sum_k alpha^k ln(k!)/k!``.
    Terms are generated in log space; summation stops once ``k > alpha`` and
    the current term drops below ``tol * exp(alpha) / 10``, past which the
    terms decay at least geometrically.
    """
    _check_positive(alpha=alpha, tol=tol)
    log_a = math.log(alpha)
    cutoff = tol * math.exp(alpha) / 10.0
    total = 0.0
    log_fact = 0.0
    k = 1
    while True:
        k += 1
        log_fact += math.log(k)
        term = math.exp(k * log_a - log_fact) * log_fact
        total += term
        if k > alpha and term < cutoff:
            break
    return alpha * (1.0 - log_a) + math.exp(-alpha) * total


def poisson_entropy_bits(alpha: float, tol: float = 1e-12) -> float:
    return poisson_entropy(alpha, tol) / LN2


@dataclass(frozen=True)
class EfficiencyReport:
    alpha: float
    entropy_bits: float
    eta: float


def efficiency(alpha: float) -> EfficiencyReport:
    """Ratio of message-set entropy to bond description length at load ``alpha``."""
    _check_positive(alpha=alpha)
    h_nats = poisson_entropy(alpha)
    return EfficiencyReport(alpha=alpha, entropy_bits=h_nats / LN2, eta=2.0 * alpha / h_nats)


def eta(alpha: float) -> float:
    return efficiency(alpha).eta


def efficiency_unity_root(bracket: tuple[float, float] = (0.1, 1.0), tol: float = 1e-6) -> float:
    """Load at which the efficiency equals 1, by bisection."""
    lo, hi = bracket
    f_lo, f_hi = eta(lo) - 1.0, eta(hi) - 1.0
    if not (f_lo < 0.0 < f_hi):
        raise ValueError(
            f"bracket ({lo}, {hi}) does not straddle eta = 1 (eta values {f_lo + 1:.4f}, {f_hi + 1:.4f})"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if eta(mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def stability_exponent(kappa: float, alpha: float) -> float:
    """Exponent ``e`` in the single-neuron error bound ``l**e``: ``kappa - alpha - kappa*ln(kappa/alpha)``."""
    _check_positive(kappa=kappa, alpha=alpha)
    kappa, alpha = float(kappa), float(alpha)
    return kappa - alpha - kappa * math.log(kappa / alpha)


@dataclass(frozen=True)
class Thresholds:
    thm1_pointwise: float
    thm1_global: float
    thm2: float
    thm3: float
    alpha_star: float

    def as_dict(self) -> dict[str, float]:
        return {
            "thm1_pointwise": self.thm1_pointwise,
            "thm1_global": self.thm1_global,
            "thm2": self.thm2,
            "thm3": self.thm3,
            "alpha_star": self.alpha_star,
        }


THM3_LOAD = -math.log(1.0 - math.exp(-1.0))


def alpha_star(c: int) -> float:
    return (1.0 - 1.0 / c) * math.exp(-1.0 - c / (c - 1.0))


def thresholds(c: int, kappa: float) -> Thresholds:
    """Critical loads for block count ``c`` and threshold coefficient ``kappa``.

    ``thm1_pointwise``: single-neuron stability holds below it.
    ``thm1_global``: all stored messages stable (union bound over ``M*l*c`` events).
    ``thm2``: one-step correction of random errors; also the fixed-point regime.
    ``thm3``: above it stored messages are unstable.
    ``alpha_star``: ``thm2`` at the largest admissible ``kappa = 1 - 1/c``.
    """
    if c < 2:
        raise ValueError("c must be >= 2")
    kappa = float(kappa)
    if not 0.0 < kappa <= 1.0:
        raise ValueError(f"kappa must lie in (0, 1], got {kappa}")
    return Thresholds(
        thm1_pointwise=kappa,
        thm1_global=kappa * math.exp(-(3.0 + kappa) / kappa),
        thm2=kappa * math.exp(-(1.0 + kappa) / kappa),
        thm3=THM3_LOAD,
        alpha_star=alpha_star(c),
    )


def lemma3_pmf(c: int, alpha: float, i: int) -> float:
    """Leading-order law of the number of message neurons wired to a fixed non-message neuron.

    Binomial(c - 1, 1 - exp(-alpha)) evaluated at ``i``; zero off the support.
    """
    if isinstance(i, bool) or int(i) != i:
        raise ValueError(f"i must be an integer, got {i!r}")
    i = int(i)
    if not 0 <= i <= c - 1:
        return 0.0
    q = 1.0 - math.exp(-alpha)
    return math.comb(c - 1, i) * q**i * math.exp(-alpha * (c - 1 - i))


def lemma3_distribution(c: int, alpha: float) -> list[float]:
    return [lemma3_pmf(c, alpha, i) for i in range(c)]


def poisson_pmf(alpha: float, kmax: int) -> list[float]:
    """Poisson(alpha) pmf on ``0..kmax``."""
    out, term = [], math.exp(-alpha)
    for k in range(kmax + 1):
        out.append(term)
        term *= alpha / (k + 1)
    return out


def tv_distance(p, q) -> float:
    """Total variation distance between two pmfs on ``0, 1, ...`` (shorter one zero-padded).

    Mass missing from either vector is counted as sitting off the common support.
    """
    p, q = list(map(float, p)), list(map(float, q))
    n = max(len(p), len(q))
    p += [0.0] * (n - len(p))
    q += [0.0] * (n - len(q))
    diff = sum(abs(a - b) for a, b in zip(p, q))
    tail = abs((1.0 - sum(p)) - (1.0 - sum(q)))
    return 0.5 * (diff + tail)
