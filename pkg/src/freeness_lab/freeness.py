"""Alternating-word moments, approximate-commutant adversaries and error budgets.

Freeness of families is tested through centred alternating words: for
``i_1 != i_2 != ... != i_k`` the normalized trace of

    (p_1(B_{i_1}) - tr p_1(B_{i_1})) ... (p_k(B_{i_k}) - tr p_k(B_{i_k}))

must vanish asymptotically.  The adversaries build matrices ``B_j`` that
(nearly) commute with the Haar unitary ``U_j`` while depending on the whole
family, and the experiment records how large these moments get.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .band import BandPattern, band_project, covering_log_bound
from .coupling import CoupledFamily, couple
from .haar import RngStream, as_generator
from .linalg import NumericalFailure, commutator, normalized_trace, operator_norm, two_norm
from .polynomial import NCPolynomial, parse_polynomial

__all__ = [
    "WordSpec",
    "PolynomialInU",
    "ConjugatedBand",
    "RandomRestartSearch",
    "Commutant",
    "SearchResult",
    "MomentReport",
    "centered",
    "centered_word_moment",
    "polynomial_word_moment",
    "declared_budget",
    "adversarial_commutant",
    "restart_search",
    "freeness_error_budget",
    "freeness_budget_for_m",
    "run_freeness_experiment",
    "stream_id",
]


@dataclass(frozen=True)
class WordSpec:
    """Alternating index word ``i_1 != i_2 != ... != i_k`` (1-based indices)."""

    indices: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        if not idx:
            raise ValueError("word must be nonempty")
        if min(idx) < 1:
            raise ValueError("word indices are 1-based")
        if any(a == b for a, b in zip(idx, idx[1:])):
            raise ValueError(f"consecutive indices must differ: {idx}")
        object.__setattr__(self, "indices", idx)

    @classmethod
    def parse(cls, text: str) -> "WordSpec":
        return cls(tuple(int(tok) for tok in text.split(",") if tok.strip()))

    @property
    def k(self) -> int:
        return len(self.indices)

    @property
    def families(self) -> int:
        return max(self.indices)

    def __str__(self) -> str:
        return ",".join(map(str, self.indices))


def centered(M: np.ndarray) -> np.ndarray:
    out = M.copy()
    out[np.diag_indices(M.shape[0])] -= normalized_trace(M)
    return out


def _trace_of_product(factors) -> complex:
    if len(factors) == 1:
        # a single centred factor has trace zero exactly
        return 0j
    prod = factors[0]
    for F in factors[1:]:
        prod = prod @ F
    return normalized_trace(prod)


def centered_word_moment(V, X, word: WordSpec) -> complex:
    """``tr[ prod_t V_{i_t} (X_t - tr X_t) V_{i_t}* ]``, product left to right."""
    if len(X) != word.k:
        raise ValueError(f"need {word.k} operands, got {len(X)}")
    if word.families > len(V):
        raise ValueError(f"word uses family {word.families}, only {len(V)} given")
    shape = V[0].shape
    if any(M.shape != shape for M in list(V) + list(X)):
        raise ValueError("dimension mismatch")
    factors = []
    for i, Xt in zip(word.indices, X):
        Vi = V[i - 1]
        factors.append(Vi @ centered(Xt) @ Vi.conj().T)
    return _trace_of_product(factors)


def polynomial_word_moment(B, word: WordSpec, polys) -> complex:
    """``tr[ prod_t (p_t(B_{i_t}) - tr p_t(B_{i_t})) ]`` for tuples ``B_i``."""
    polys = [parse_polynomial(p) if isinstance(p, str) else p for p in polys]
    if len(polys) != word.k:
        raise ValueError(f"need {word.k} polynomials, got {len(polys)}")
    if word.families > len(B):
        raise ValueError(f"word uses family {word.families}, only {len(B)} given")
    factors = []
    for i, p in zip(word.indices, polys):
        args = B[i - 1]
        args = tuple(args) if isinstance(args, (tuple, list)) else (args,)
        if p.letter_count > len(args):
            raise ValueError(f"polynomial needs {p.letter_count} letters, family {i} has {len(args)}")
        factors.append(centered(p.evaluate(args)))
    return _trace_of_product(factors)


# -- adversaries ------------------------------------------------------------


@dataclass(frozen=True)
class PolynomialInU:
    """``B_j = p(U_j) / max(1, ||p(U_j)||)``; commutes with ``U_j`` exactly."""

    poly: NCPolynomial
    kind: str = field(default="polynomial_in_U", init=False)


@dataclass(frozen=True)
class ConjugatedBand:
    """``B_j = V_j P_eps(V_j* C V_j) V_j*`` for a carrier polynomial ``C`` in all ``U_i``."""

    epsilon: float
    carrier: NCPolynomial
    kind: str = field(default="conjugated_band", init=False)


@dataclass(frozen=True)
class RandomRestartSearch:
    """Random carriers (Gaussian combinations of words of length <= ``degree``).

    ``carrier`` (optional) is tried as restart 0.  Each restart is followed by
    ``steps`` hill-climbing proposals on the carrier coefficients.
    """

    epsilon: float
    restarts: int = 10
    steps: int = 0
    degree: int = 2
    step_size: float = 0.3
    carrier: NCPolynomial | None = None
    kind: str = field(default="random_restart_search", init=False)


@dataclass(frozen=True)
class Commutant:
    matrix: np.ndarray
    budget: float
    commutator_norm: float


# rounding allowance added to declared budgets
_BUDGET_SLACK = 1e-12


def declared_budget(family: CoupledFamily, j: int, epsilon: float) -> float:
    """Carrier-independent bound on ``||[U_j, B]||_2`` for band adversaries.

    With ``U_j = V_j D V_j* + E`` and ``B = V_j X V_j*``, ``X`` in the band and
    ``||X|| <= 1``::

        ||[U_j, B]||_2 <= max_{band pairs} |d_a - d_b| * ||X||_2 + 2 ||E||_2.
    """
    d = np.exp(1j * family.phases[j - 1])
    mask = BandPattern(family.n, epsilon).mask()
    gap = float(np.max(np.abs(d[:, None] - d[None, :])[mask]))
    return gap + 2 * family.identity_errors[j - 1] + _BUDGET_SLACK


def _band_commutant(family: CoupledFamily, j: int, C: np.ndarray, epsilon: float) -> Commutant:
    Vj = family.V[j - 1]
    X = band_project(Vj.conj().T @ C @ Vj, epsilon)
    scale = max(1.0, operator_norm(X))
    B = Vj @ (X / scale) @ Vj.conj().T
    budget = declared_budget(family, j, epsilon)
    measured = two_norm(commutator(family.U[j - 1], B))
    if measured > budget:
        raise NumericalFailure(f"band adversary broke its budget: {measured:.3e} > {budget:.3e}", measured)
    return Commutant(B, budget, measured)


def _carrier_basis(family: CoupledFamily, degree: int) -> list[np.ndarray]:
    letters = []
    for U in family.U:
        letters.extend([U, U.conj().T])
    basis = []
    for length in range(1, degree + 1):
        for combo in itertools.product(letters, repeat=length):
            prod = combo[0]
            for F in combo[1:]:
                prod = prod @ F
            basis.append(prod)
    return basis


def _random_coefficients(gen: np.random.Generator, size: int) -> np.ndarray:
    z = gen.standard_normal((size, 2))
    return (z[:, 0] + 1j * z[:, 1]) * np.sqrt(0.5)


def adversarial_commutant(family: CoupledFamily, j: int, strategy, rng=None) -> Commutant:
    """Build an approximate commutant of ``U_j`` (``j`` 1-based) per ``strategy``.

    Output has operator norm ``<= 1`` and commutator 2-norm within the
    declared budget.  ``RandomRestartSearch`` draws a single random carrier
    here; use :func:`restart_search` to optimize over restarts.
    """
    if not 1 <= j <= family.m:
        raise ValueError(f"j must lie in [1, {family.m}]")
    if isinstance(strategy, PolynomialInU):
        P = strategy.poly.evaluate((family.U[j - 1],))
        B = P / max(1.0, operator_norm(P))
        measured = two_norm(commutator(family.U[j - 1], B))
        return Commutant(B, 1e-10, measured)
    if isinstance(strategy, ConjugatedBand):
        C = strategy.carrier.evaluate(tuple(family.U))
        return _band_commutant(family, j, C, strategy.epsilon)
    if isinstance(strategy, RandomRestartSearch):
        gen = as_generator(rng)
        basis = _carrier_basis(family, strategy.degree)
        C = np.tensordot(_random_coefficients(gen, len(basis)), np.stack(basis), axes=1)
        return _band_commutant(family, j, C, strategy.epsilon)
    raise TypeError(f"unknown strategy {strategy!r}")


@dataclass
class SearchResult:
    commutants: list
    moment: complex
    history: list  # best |moment| after each restart


def restart_search(
    family: CoupledFamily,
    word: WordSpec,
    polys,
    strategy: RandomRestartSearch,
    rng,
) -> SearchResult:
    """Maximize ``|polynomial_word_moment|`` over random band-adversary carriers.

    Each family member ``j`` used by the word gets its own carrier.  Every
    candidate obeys the declared commutator budget by construction.
    """
    gen = as_generator(rng)
    members = sorted(set(word.indices))
    basis = np.stack(_carrier_basis(family, strategy.degree))
    fixed = strategy.carrier.evaluate(tuple(family.U)) if strategy.carrier is not None else None

    def build(carriers):
        comms = {j: _band_commutant(family, j, carriers[j], strategy.epsilon) for j in members}
        B = [(comms[j].matrix,) if j in comms else (family.U[j - 1],) for j in range(1, family.m + 1)]
        return comms, polynomial_word_moment(B, word, polys)

    best_comms, best_moment, history = None, 0j, []
    for restart in range(strategy.restarts):
        if restart == 0 and fixed is not None:
            coeffs = None
            carriers = {j: fixed for j in members}
        else:
            coeffs = {j: _random_coefficients(gen, len(basis)) for j in members}
            carriers = {j: np.tensordot(coeffs[j], basis, axes=1) for j in members}
        comms, moment = build(carriers)
        for _ in range(strategy.steps if coeffs is not None else 0):
            proposal = {
                j: c + strategy.step_size * np.abs(c).mean() * _random_coefficients(gen, len(c))
                for j, c in coeffs.items()
            }
            p_comms, p_moment = build({j: np.tensordot(c, basis, axes=1) for j, c in proposal.items()})
            if abs(p_moment) > abs(moment):
                coeffs, comms, moment = proposal, p_comms, p_moment
        if best_comms is None or abs(moment) > abs(best_moment):
            best_comms, best_moment = comms, moment
        history.append(abs(best_moment))
    return SearchResult([best_comms[j] for j in members], best_moment, history)


# -- error budget -----------------------------------------------------------


def freeness_error_budget(k: int, epsilon: float, delta: float) -> float:
    """``4 k eps + 2 k sqrt(12 k delta)``."""
    if k < 1 or not epsilon > 0 or not delta > 0:
        raise ValueError("need k >= 1, epsilon > 0, delta > 0")
    return 4 * k * epsilon + 2 * k * math.sqrt(12 * k * delta)


def freeness_budget_for_m(k: int, m: int, R: float) -> float:
    """``4k/m + 2k sqrt(24 k log(3 R m) / m)``: the budget at ``eps = 1/m``, ``delta = 2 eps log(3R/eps)``."""
    if k < 1 or m < 1 or not R > 0 or 3 * R * m <= 1:
        raise ValueError("need k >= 1, m >= 1, 3 R m > 1")
    return 4 * k / m + 2 * k * math.sqrt(24 * k * math.log(3 * R * m) / m)


# -- experiment -------------------------------------------------------------


def stream_id(n: int, replicate: int) -> int:
    """Stream key for replicate ``replicate`` at dimension ``n``: ``(n << 32) | replicate``."""
    return (int(n) << 32) | int(replicate)


@dataclass
class MomentReport:
    rows: list
    summary: dict


def _strategy_from_config(config):
    if config.strategy == "polynomial":
        return PolynomialInU(parse_polynomial(config.adversary_poly))
    carrier = parse_polynomial(config.carrier) if config.carrier else None
    if config.strategy == "band":
        return ConjugatedBand(config.epsilon, carrier)
    return RandomRestartSearch(config.epsilon, restarts=config.restarts, steps=config.steps, carrier=carrier)


def _moment_polys(config, word: WordSpec):
    if config.polys:
        if len(config.polys) != word.k:
            raise ValueError(f"need {word.k} moment polynomials, got {len(config.polys)}")
        return [parse_polynomial(p) for p in config.polys]
    return [NCPolynomial.letter(1)] * word.k


def _config_budget(config, k: int) -> float:
    """Budget with the covering exponent ``delta = 2 eps log(3R/eps)``; NaN when ``eps >= R``."""
    if not config.epsilon < config.R:
        return float("nan")
    return freeness_error_budget(k, config.epsilon, covering_log_bound(config.epsilon, config.R))


def freeness_replicate(config, n: int, replicate: int) -> list[dict]:
    """All rows (one per word) for a single ``(n, replicate)`` job."""
    words = [WordSpec(w) for w in config.word]
    strategy = _strategy_from_config(config)
    gen = RngStream(config.seed, stream_id(n, replicate)).generator()
    m = max(w.families for w in words)
    family = couple(n, m, gen, config.eig_tol)

    rows = []
    for word in words:
        polys = _moment_polys(config, word)
        if isinstance(strategy, RandomRestartSearch):
            result = restart_search(family, word, polys, strategy, gen)
            comms, moment = result.commutants, result.moment
        else:
            comms = [adversarial_commutant(family, j, strategy, gen) for j in sorted(set(word.indices))]
            by_j = dict(zip(sorted(set(word.indices)), comms))
            B = [(by_j[j].matrix,) if j in by_j else (family.U[j - 1],) for j in range(1, m + 1)]
            moment = polynomial_word_moment(B, word, polys)
        rows.append({
            "n": n,
            "replicate": replicate,
            "word": str(word),
            "moment_re": moment.real,
            "moment_im": moment.imag,
            "abs_moment": abs(moment),
            "commutator_max": max(c.commutator_norm for c in comms),
            "declared_budget_max": max(c.budget for c in comms),
            "freeness_budget": _config_budget(config, word.k),
            "error": "",
        })
    return rows


def loglog_slope(ns, values) -> float:
    ns, values = np.asarray(ns, float), np.asarray(values, float)
    ok = values > 0
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(ns[ok]), np.log(values[ok]), 1)[0])


def summarize_moments(rows: list[dict]) -> dict:
    """Per word: per-n median/max/mean |moment| and standard error, decay slope."""
    out = {}
    good = [r for r in rows if not r["error"]]
    for word in sorted({r["word"] for r in good}):
        per_n = {}
        for n in sorted({r["n"] for r in good if r["word"] == word}):
            vals = np.array([r["abs_moment"] for r in good if r["word"] == word and r["n"] == n])
            budget = [r["freeness_budget"] for r in good if r["word"] == word and r["n"] == n][0]
            per_n[n] = {
                "reps": len(vals),
                "median_abs_moment": float(np.median(vals)),
                "max_abs_moment": float(np.max(vals)),
                "mean_abs_moment": float(np.mean(vals)),
                "se_abs_moment": float(np.std(vals, ddof=1) / np.sqrt(len(vals))) if len(vals) > 1 else 0.0,
                "budget": budget,
            }
        ns = sorted(per_n)
        medians = [per_n[n]["median_abs_moment"] for n in ns]
        out[word] = {
            "per_n": per_n,
            "decay_slope": loglog_slope(ns, medians),
            "median_nonincreasing": bool(all(b <= a for a, b in zip(medians, medians[1:]))),
        }
    return out


def run_freeness_experiment(config, threads: int = 1) -> MomentReport:
    """Sample, attack and measure every ``(n, replicate)`` in the config grid.

    Replicate jobs are keyed by ``(n, replicate)`` and merged in key order, so
    the report does not depend on ``threads``.  A numerical failure turns into
    a row with the ``error`` field set.
    """
    from .parallel import map_ordered

    jobs = [(n, r) for n in config.n_grid for r in range(config.reps)]

    def job(key):
        n, r = key
        try:
            return freeness_replicate(config, n, r)
        except NumericalFailure as exc:
            return [{
                "n": n, "replicate": r, "word": str(WordSpec(w)),
                "moment_re": float("nan"), "moment_im": float("nan"), "abs_moment": float("nan"),
                "commutator_max": float("nan"), "declared_budget_max": float("nan"),
                "freeness_budget": float("nan"), "error": str(exc),
            } for w in config.word]

    rows = [row for chunk in map_ordered(job, jobs, threads) for row in chunk]
    return MomentReport(rows, summarize_moments(rows))
