"""Statistical checks used by the simulator and the acceptance suite."""

from __future__ import annotations

import math
from collections import Counter
from fractions import Fraction
from typing import Iterable, Sequence

from scipy.special import gammaincc


class InsufficientDataError(ValueError):
    pass


MIN_FAIRNESS_ROUNDS = 500


def fairness_statistic(
    win_counts: Sequence[int], expected_weights: Sequence[float], min_rounds: int = MIN_FAIRNESS_ROUNDS
) -> tuple[float, float]:
    """Pearson chi-square of ``win_counts`` against ``expected_weights``.

    Returns ``(chi2, p)`` with ``p = Q(k/2, chi2/2)``, the regularized upper
    incomplete gamma function, for ``k = len(win_counts) - 1`` degrees of
    freedom.
    """
    if len(win_counts) != len(expected_weights) or len(win_counts) < 2:
        raise ValueError("need matching counts and weights for at least 2 categories")
    if not math.isclose(sum(expected_weights), 1.0, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"expected weights sum to {sum(expected_weights)}, not 1")
    total = sum(win_counts)
    if total < min_rounds:
        raise InsufficientDataError(f"{total} rounds with winners, need >= {min_rounds}")
    chi2 = 0.0
    for obs, w in zip(win_counts, expected_weights):
        exp = total * w
        if exp <= 0:
            if obs:
                return math.inf, 0.0
            continue
        chi2 += (obs - exp) ** 2 / exp
    df = len(win_counts) - 1
    return chi2, float(gammaincc(df / 2, chi2 / 2))


def binomial_tail(n: int, p: Fraction | float, k: int) -> float:
    """``Pr[M > k]`` for ``M ~ Binomial(n, p)``, summed exactly when ``p`` is rational."""
    p = Fraction(p) if not isinstance(p, Fraction) else p
    cdf = sum(math.comb(n, i) * p**i * (1 - p) ** (n - i) for i in range(0, min(k, n) + 1))
    return float(1 - cdf)


def expected_grind_trials(alpha: float) -> float:
    return math.inf if alpha == 0 else 1 / alpha


def monobit(values: Iterable[bytes]) -> tuple[int, int]:
    """(number of one bits, total bits)."""
    ones = total = 0
    for v in values:
        ones += int.from_bytes(v, "big").bit_count()
        total += 8 * len(v)
    return ones, total


def monobit_z(values: Sequence[bytes]) -> float:
    """Standardized deviation of the one-bit count from half the bits."""
    ones, total = monobit(values)
    return (ones - total / 2) / math.sqrt(total / 4)


def byte_histogram_chi2(values: Iterable[bytes]) -> tuple[float, float]:
    counts = Counter()
    for v in values:
        counts.update(v)
    total = sum(counts.values())
    if total == 0:
        raise InsufficientDataError("no bytes")
    exp = total / 256
    chi2 = sum((counts.get(b, 0) - exp) ** 2 / exp for b in range(256))
    return chi2, float(gammaincc(255 / 2, chi2 / 2))


def accuracy_base_rate(guesses: Sequence[bool], truths: Sequence[bool]) -> tuple[float, float, float]:
    """Empirical accuracy, the accuracy of an uninformed guesser, and its sigma.

    The uninformed guesser says "yes" at the same rate ``q`` as ``guesses``
    but independently of the truth, so with realized frequency ``p`` its
    expected accuracy is ``q*p + (1-q)*(1-p)``.
    """
    n = len(truths)
    if n == 0 or len(guesses) != n:
        raise InsufficientDataError("need equally many guesses and truths")
    acc = sum(g == t for g, t in zip(guesses, truths)) / n
    p = sum(truths) / n
    q = sum(guesses) / n
    base = q * p + (1 - q) * (1 - p)
    sigma = math.sqrt(max(base * (1 - base), 1e-12) / n)
    return acc, base, sigma
