"""Herbst-type tail bounds for Lipschitz statistics of Haar unitaries.

For ``f`` Lipschitz (constant ``L``) with respect to the 2-norm on tuples of
n x n unitaries,

    P(|f - E f| >= delta) <= 4 exp(-n^2 delta^2 / (12 L^2)).

:func:`empirical_tail` measures exceedance frequencies against this bound.
The expectation is replaced by the empirical mean; the report also carries
the frequency at threshold ``delta`` shrunk by the 99% confidence radius of
that mean, a worst case for the centring error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import stats

from .coupling import reference_phases
from .freeness import WordSpec, stream_id
from .haar import RngStream, sample_haar_unitary
from .linalg import normalized_trace, two_norm
from .parallel import map_ordered

__all__ = [
    "LipschitzStatistic",
    "TailReport",
    "herbst_bound",
    "statistic_registry",
    "get_statistic",
    "lipschitz_ratio",
    "binomial_ci_radius",
    "empirical_tail",
]

CONFIDENCE = 0.99
_Z99 = float(stats.norm.ppf(0.5 + CONFIDENCE / 2))


def herbst_bound(n: int, delta: float, lip: float) -> float:
    """``4 exp(-n^2 delta^2 / (12 lip^2))`` (not clamped to 1)."""
    if n <= 0 or not delta > 0 or not lip > 0:
        raise ValueError("n, delta and lip must all be positive")
    return 4.0 * math.exp(-(n**2) * delta**2 / (12.0 * lip**2))


@dataclass(frozen=True)
class LipschitzStatistic:
    """Real statistic of ``arity`` unitaries with a certified Lipschitz constant.

    ``lip`` bounds ``|f(u) - f(v)| / sum_j ||u_j - v_j||_2``; it also bounds the
    constant for the Euclidean product metric ``(sum_j ||u_j - v_j||_2^2)^(1/2)``
    whenever each unitary enters with weight at most ``lip`` (true for every
    registry entry).
    """

    name: str
    evaluator: Callable
    lip: float
    arity: int
    description: str = ""

    def __call__(self, unitaries) -> float:
        return float(self.evaluator(unitaries))


def _re_tr(us):
    return normalized_trace(us[0]).real


def _re_tr_product(us):
    return normalized_trace(us[0] @ us[1]).real


def _word_statistic(k: int) -> Callable:
    word = WordSpec(tuple(1 + (t % 2) for t in range(k)))

    def f(us):
        n = us[0].shape[0]
        # frozen operands A^t (t = 1..k): trace zero, so already centred, norm 1
        prod = np.eye(n, dtype=np.complex128)
        for t, i in enumerate(word.indices, start=1):
            U = us[i - 1]
            a = np.exp(1j * t * reference_phases(n))
            if t % n == 0:
                a = np.zeros(n)
            prod = prod @ ((U * a) @ U.conj().T)
        return normalized_trace(prod).real

    return f


def statistic_registry(k: int = 4) -> list[LipschitzStatistic]:
    """Certified statistics.

    * ``tr1``: ``Re tr U_1``, L = 1 (``|tr M| <= ||M||_2``).
    * ``tr12``: ``Re tr U_1 U_2``, L = 2 (one term per unitary).
    * ``word``: ``Re tr[U_1 X_1 U_1* U_2 X_2 U_2* ...]`` of length ``k`` with
      frozen centred operands of norm <= 1, L = 2k (each of the 2k unitary
      factors contributes at most its own 2-norm change).
    """
    return [
        LipschitzStatistic("tr1", _re_tr, 1.0, 1, "Re tr_n(U1)"),
        LipschitzStatistic("tr12", _re_tr_product, 2.0, 2, "Re tr_n(U1 U2)"),
        LipschitzStatistic("word", _word_statistic(k), 2.0 * k, 2, f"centred word statistic, k={k}"),
    ]


def get_statistic(name: str, k: int = 4) -> LipschitzStatistic:
    for stat in statistic_registry(k):
        if stat.name == name:
            return stat
    raise KeyError(f"unknown statistic {name!r}")


def lipschitz_ratio(stat: LipschitzStatistic, us, vs) -> float:
    """``|f(u) - f(v)| / sum_j ||u_j - v_j||_2`` (0 when u == v)."""
    dist = sum(two_norm(u - v) for u, v in zip(us, vs))
    if dist == 0:
        return 0.0
    return abs(stat(us) - stat(vs)) / dist


def binomial_ci_radius(count: int, total: int, confidence: float = CONFIDENCE) -> float:
    """Upper Wilson confidence limit minus the observed proportion."""
    ci = stats.binomtest(count, total).proportion_ci(confidence_level=confidence, method="wilson")
    return float(ci.high - count / total)


@dataclass
class TailReport:
    stat: str
    n: int
    reps: int
    lip: float
    mean: float
    mean_se: float
    rows: list = field(default_factory=list)

    @property
    def sound(self) -> bool:
        return all(r["sound"] for r in self.rows)


def _sample_statistic(stat, n, seed, reps, threads):
    def job(r):
        gen = RngStream(seed, stream_id(n, r)).generator()
        return stat([sample_haar_unitary(n, gen) for _ in range(stat.arity)])

    return np.array(map_ordered(job, range(reps), threads))


def empirical_tail(
    stat: LipschitzStatistic,
    n: int,
    reps: int,
    deltas,
    seed: int,
    threads: int = 1,
    min_reps: int = 1000,
) -> TailReport:
    """Exceedance frequencies of ``|f - mean| >= delta`` vs the Herbst bound.

    Replicate ``r`` draws its unitaries from ``RngStream(seed, stream_id(n, r))``.
    """
    if reps < min_reps:
        raise ValueError(f"need at least {min_reps} replicates, got {reps}")
    values = _sample_statistic(stat, n, seed, reps, threads)
    mean = float(values.mean())
    se = float(values.std(ddof=1) / math.sqrt(reps))
    dev = np.abs(values - mean)
    report = TailReport(stat.name, n, reps, stat.lip, mean, se)
    for delta in deltas:
        count = int(np.count_nonzero(dev >= delta))
        freq = count / reps
        shifted = float(np.count_nonzero(dev >= max(delta - _Z99 * se, 0.0)) / reps)
        raw = herbst_bound(n, delta, stat.lip) if stat.lip > 0 else 0.0
        bound = min(1.0, raw)
        radius = binomial_ci_radius(count, reps)
        report.rows.append({
            "n": n,
            "delta": float(delta),
            "freq": freq,
            "bound": bound,
            "raw_bound": raw,
            "ci_radius": radius,
            "shifted_freq": shifted,
            "vacuous": raw >= 1.0,
            "sound": freq <= bound + radius,
        })
    return report
