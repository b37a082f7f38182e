"""Correlation measurements and an adversarial statistical-query oracle.

Concepts are (word, start) -> final-state maps realized by semiautomata;
the input distribution is uniform over all words of a fixed length and
all start states.  The correlation of two concepts is their agreement
probability minus the always-guess baseline ``1/labels``.

The oracle answers a bounded statistic ``h(x, y)`` with the
concept-independent value ``E_x[(1/labels) * sum_y h(x, y)]`` — the
projection of the query onto the label-average direction.  A learner can
then eliminate exactly the candidates whose centered statistic exceeds
the tolerance in magnitude, and with pairwise-uncorrelated candidate
families that number is provably small per query.  Sessions keep a
ledger of every answer and elimination.

Queries are named built-ins with parameters, not arbitrary code, so
transcripts are reproducible:

- ``label-indicator``     h(x, y) = 1 if y equals a fixed label
- ``state-agreement``     h(x, y) = 1 if y equals a reference member's output
- ``final-state-parity``  h(x, y) = +1 for even y, -1 for odd y
- ``constant``            h(x, y) = a fixed value in [-1, 1]
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .automata import Semiautomaton, ShuffleFamily, iter_word_blocks, run_words
from .walk import (
    MAX_SPECTRAL_STATES,
    agreement_brute_force,
    agreement_exact,
    agreement_monte_carlo,
    brute_force_limit,
)

__all__ = [
    "BUILTIN_QUERIES",
    "CertificateReport",
    "ConceptHandle",
    "CorrelationEstimate",
    "OracleSession",
    "QueryRecord",
    "StatQuery",
    "WordDistribution",
    "certify_sq_dimension",
    "elimination_bound",
    "make_session",
    "oracle_answer",
    "pairwise_correlation",
    "query_lower_bound",
]

DEFAULT_ENUMERATION_LIMIT = 10**7
ORACLE_STRATA = 64


@dataclass(frozen=True)
class ConceptHandle:
    """A concept realized by a semiautomaton; labels are its final states."""

    automaton: Semiautomaton

    @property
    def label_count(self) -> int:
        return self.automaton.n_states

    def evaluate(self, words: np.ndarray, starts: np.ndarray) -> np.ndarray:
        return run_words(self.automaton, words, starts)


@dataclass(frozen=True)
class WordDistribution:
    """Uniform distribution over (word of fixed length, start state) inputs."""

    n_states: int
    n_symbols: int
    word_length: int

    def n_inputs(self) -> int:
        return self.n_symbols**self.word_length * self.n_states


@dataclass(frozen=True)
class CorrelationEstimate:
    """Agreement probability minus ``1/labels``, with how it was obtained."""

    value: float
    method: str
    label_count: int
    stderr: float | None = None

    def __post_init__(self) -> None:
        slack = 1e-9 if self.stderr is None else 6.0 * self.stderr + 1e-9
        low = -1.0 / self.label_count
        high = 1.0 - 1.0 / self.label_count
        if not low - slack <= self.value <= high + slack:
            raise ValueError(
                f"correlation {self.value} outside [{low}, {high}] for "
                f"{self.label_count} labels"
            )


def pairwise_correlation(
    a: Semiautomaton,
    b: Semiautomaton,
    word_length: int,
    method: str = "auto",
    samples: int = 100_000,
    seed: int = 0,
) -> CorrelationEstimate:
    """Correlation of the two concepts under the shared word distribution.

    ``spectral`` evaluates the agreement residual through the Fourier
    matrix, ``exact`` enumerates every word (guard permitting), and
    ``monte-carlo`` samples.  ``auto`` picks spectral at desk scale.
    """
    if method == "auto":
        method = "spectral" if a.n_states <= MAX_SPECTRAL_STATES else "monte-carlo"
    if method == "spectral":
        report = agreement_exact(a, b, word_length)
    elif method == "exact":
        report = agreement_brute_force(a, b, word_length)
    elif method == "monte-carlo":
        report = agreement_monte_carlo(a, b, word_length, samples, seed)
    else:
        raise ValueError(f"unknown correlation method {method!r}")
    return CorrelationEstimate(report.residual, method, a.n_states, stderr=report.stderr)


@dataclass(frozen=True)
class CertificateReport:
    """Pairwise-correlation certificate over the first ``dim`` family members."""

    dim: int
    word_length: int
    n_pairs: int
    threshold: float
    max_abs_correlation: float
    violating_pair: tuple[int, int] | None
    passed: bool


def certify_sq_dimension(
    members: Sequence[Semiautomaton], word_length: int, dim: int
) -> CertificateReport:
    """Verify ``|correlation| <= 1/dim`` for all distinct pairs among the first ``dim``."""
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    if len(members) < dim:
        raise ValueError(f"need at least {dim} members, got {len(members)}")
    threshold = 1.0 / dim
    worst = 0.0
    worst_pair: tuple[int, int] | None = None
    n_pairs = 0
    for i in range(dim):
        for j in range(i + 1, dim):
            n_pairs += 1
            estimate = pairwise_correlation(members[i], members[j], word_length, "spectral")
            if abs(estimate.value) > worst:
                worst = abs(estimate.value)
                worst_pair = (i, j)
    passed = worst <= threshold
    return CertificateReport(
        dim,
        word_length,
        n_pairs,
        threshold,
        worst,
        None if passed else worst_pair,
        passed,
    )


def query_lower_bound(dim: int, tolerance: float, label_count: int) -> float:
    """Worst-case query count ``(d-1)(d*tau^2 - Y) / (2d(Y-1))``; may be vacuous (<= 0)."""
    if dim < 1:
        raise ValueError("dimension must be >= 1")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    if label_count < 2:
        raise ValueError("need at least 2 labels")
    return (dim - 1) * (dim * tolerance**2 - label_count) / (2 * dim * (label_count - 1))


def elimination_bound(dim: int, tolerance: float, label_count: int) -> float:
    """Per-query elimination cap ``2d(Y-1) / (d*tau^2 - Y)``; needs ``d*tau^2 > Y``."""
    if dim * tolerance**2 <= label_count:
        raise ValueError("elimination cap requires dim * tolerance^2 > label_count")
    return 2 * dim * (label_count - 1) / (dim * tolerance**2 - label_count)


@dataclass(frozen=True)
class StatQuery:
    """A named built-in statistic with its parameters."""

    builtin: str
    params: Mapping[str, int] = field(default_factory=dict)


@dataclass
class QueryRecord:
    """Ledger entry for one oracle answer."""

    query_id: int
    builtin: str
    params: dict
    answer: float
    eliminated_ids: tuple[int, ...]
    survivor_count: int
    method: str
    max_stderr: float | None = None


@dataclass
class OracleSession:
    """Mutable session state: candidate concepts, distribution, tolerance, ledger."""

    concepts: tuple[ConceptHandle, ...]
    distribution: WordDistribution
    tolerance: float
    seed: int = 0
    enumeration_limit: int = DEFAULT_ENUMERATION_LIMIT
    mc_samples: int = 100_000
    survivors: list[int] = field(default_factory=list)
    ledger: list[QueryRecord] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if not self.concepts:
            raise ValueError("need at least one concept")
        if not self.survivors:
            self.survivors = list(range(len(self.concepts)))


def make_session(
    family: ShuffleFamily,
    word_length: int,
    tolerance: float,
    seed: int = 0,
    enumeration_limit: int | None = None,
    mc_samples: int = 100_000,
) -> OracleSession:
    """Session over all family members as candidate concepts."""
    concepts = tuple(ConceptHandle(member) for member in family.members)
    distribution = WordDistribution(
        family.config.n_states, family.config.alphabet_size, word_length
    )
    if enumeration_limit is None:
        enumeration_limit = brute_force_limit(DEFAULT_ENUMERATION_LIMIT)
    return OracleSession(
        concepts, distribution, tolerance, seed, enumeration_limit, mc_samples
    )


Evaluator = Callable[[np.ndarray, np.ndarray, np.ndarray], np.ndarray]


def _builtin_label_indicator(params: Mapping[str, int], session: OracleSession) -> Evaluator:
    label = int(params["label"])
    if not 0 <= label < session.distribution.n_states:
        raise ValueError(f"label {label} out of range")

    def evaluate(words, starts, labels):
        return (labels == label).astype(float)

    return evaluate


def _builtin_state_agreement(params: Mapping[str, int], session: OracleSession) -> Evaluator:
    member = int(params["member"])
    if not 0 <= member < len(session.concepts):
        raise ValueError(f"member {member} out of range")
    reference = session.concepts[member].automaton

    def evaluate(words, starts, labels):
        return (labels == run_words(reference, words, starts)).astype(float)

    return evaluate


def _builtin_final_state_parity(params: Mapping[str, int], session: OracleSession) -> Evaluator:
    def evaluate(words, starts, labels):
        return np.where(labels % 2 == 0, 1.0, -1.0)

    return evaluate


def _builtin_constant(params: Mapping[str, float], session: OracleSession) -> Evaluator:
    value = float(params["value"])
    if not -1.0 <= value <= 1.0:
        raise ValueError(f"constant value {value} outside [-1, 1]")

    def evaluate(words, starts, labels):
        return np.full(labels.shape[0], value)

    return evaluate


BUILTIN_QUERIES: dict[str, Callable[[Mapping[str, int], OracleSession], Evaluator]] = {
    "label-indicator": _builtin_label_indicator,
    "state-agreement": _builtin_state_agreement,
    "final-state-parity": _builtin_final_state_parity,
    "constant": _builtin_constant,
}


def _check_range(values: np.ndarray) -> None:
    if values.size and float(np.max(np.abs(values))) > 1.0 + 1e-12:
        raise ValueError("query statistic left the range [-1, 1]")


def _exact_statistics(
    session: OracleSession, evaluate: Evaluator
) -> tuple[float, np.ndarray, None]:
    """Answer and centered per-survivor statistics by full enumeration."""
    dist = session.distribution
    n = dist.n_states
    survivors = session.survivors
    centered_sums = np.zeros(len(survivors))
    answer_sum = 0.0
    total = 0
    start_cycle = np.arange(n, dtype=np.int64)
    for words in iter_word_blocks(dist.n_symbols, dist.word_length):
        block_words = np.repeat(words, n, axis=0)
        starts = np.tile(start_cycle, words.shape[0])
        label_average = np.zeros(block_words.shape[0])
        for label in range(n):
            values = evaluate(block_words, starts, np.full(block_words.shape[0], label))
            _check_range(values)
            label_average += values
        label_average /= n
        answer_sum += float(label_average.sum())
        for k, concept_index in enumerate(survivors):
            labels = session.concepts[concept_index].evaluate(block_words, starts)
            values = evaluate(block_words, starts, labels)
            _check_range(values)
            centered_sums[k] += float((values - label_average).sum())
        total += block_words.shape[0]
    return answer_sum / total, centered_sums / total, None


def _sampled_statistics(
    session: OracleSession, evaluate: Evaluator
) -> tuple[float, np.ndarray, np.ndarray]:
    """Stratified sampling fallback; also returns per-survivor standard errors."""
    dist = session.distribution
    n = dist.n_states
    survivors = session.survivors
    query_index = len(session.ledger)
    base, extra = divmod(session.mc_samples, ORACLE_STRATA)
    sums = np.zeros(len(survivors))
    sums_sq = np.zeros(len(survivors))
    answer_sum = 0.0
    total = 0
    for stratum in range(ORACLE_STRATA):
        count = base + (1 if stratum < extra else 0)
        if count == 0:
            continue
        sequence = np.random.SeedSequence(
            entropy=session.seed, spawn_key=(query_index, stratum)
        )
        rng = np.random.Generator(np.random.Philox(sequence))
        words = rng.integers(0, dist.n_symbols, size=(count, dist.word_length))
        starts = rng.integers(0, n, size=count)
        label_average = np.zeros(count)
        for label in range(n):
            values = evaluate(words, starts, np.full(count, label))
            _check_range(values)
            label_average += values
        label_average /= n
        answer_sum += float(label_average.sum())
        for k, concept_index in enumerate(survivors):
            labels = session.concepts[concept_index].evaluate(words, starts)
            values = evaluate(words, starts, labels)
            _check_range(values)
            centered = values - label_average
            sums[k] += float(centered.sum())
            sums_sq[k] += float((centered * centered).sum())
        total += count
    means = sums / total
    variances = np.maximum(sums_sq / total - means**2, 0.0)
    stderr = np.sqrt(variances / total)
    return answer_sum / total, means, stderr


def oracle_answer(session: OracleSession, query: StatQuery) -> float:
    """Answer a query adversarially and eliminate over-correlated survivors.

    The answer is the label-average projection of the statistic, which is
    within tolerance of every survivor's true statistic.  Exact
    enumeration is used when the input space fits the session's limit;
    otherwise elimination is decided conservatively at
    ``tolerance + 4 * stderr`` from stratified samples.  Ties at the
    tolerance are kept, never eliminated.
    """
    if query.builtin not in BUILTIN_QUERIES:
        raise ValueError(f"unknown built-in query {query.builtin!r}")
    evaluate = BUILTIN_QUERIES[query.builtin](query.params, session)
    if session.distribution.n_inputs() <= session.enumeration_limit:
        method = "exact"
        answer, centered, stderr = _exact_statistics(session, evaluate)
    else:
        method = "monte-carlo"
        answer, centered, stderr = _sampled_statistics(session, evaluate)
    eliminated = []
    for k, concept_index in enumerate(session.survivors):
        cut = session.tolerance if stderr is None else session.tolerance + 4.0 * stderr[k]
        if abs(float(centered[k])) > cut:
            eliminated.append(concept_index)
    session.survivors = [i for i in session.survivors if i not in set(eliminated)]
    record = QueryRecord(
        query_id=len(session.ledger),
        builtin=query.builtin,
        params=dict(query.params),
        answer=float(answer),
        eliminated_ids=tuple(eliminated),
        survivor_count=len(session.survivors),
        method=method,
        max_stderr=None if stderr is None else float(np.max(stderr)),
    )
    session.ledger.append(record)
    return float(answer)
