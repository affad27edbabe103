"""Biterm topic model: biterm extraction, collapsed Gibbs sampling,
document inference, and top-word summaries.

A biterm is an unordered pair of word positions co-occurring in one short
document; topics are learned from the biterms pooled over the whole corpus,
which sidesteps the per-document sparsity that cripples LDA on tweets.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .corpus import DocTermStats, TokenizedDoc
from .errors import DegenerateCorpusError

MODEL_FORMAT_VERSION = 1

DEFAULT_BETA = 0.01
DEFAULT_ITERATIONS = 1000
DEFAULT_TOPIC_CAP = 20


def default_alpha(k: int) -> float:
    """Conventional topic-smoothing prior 50/k."""
    return 50.0 / k


@dataclass(frozen=True, order=True)
class Biterm:
    """Canonical unordered pair of vocabulary indices (w1 <= w2)."""

    w1: int
    w2: int

    def __post_init__(self) -> None:
        if self.w1 > self.w2:
            raise ValueError(f"biterm must be canonical: ({self.w1}, {self.w2})")


def make_biterm(a: int, b: int) -> Biterm:
    return Biterm(a, b) if a <= b else Biterm(b, a)


@dataclass(frozen=True)
class BtmModel:
    """Fitted model state: count tables plus the derived distributions."""

    k: int
    alpha: float
    beta: float
    vocab_size: int
    vocabulary: tuple[str, ...]
    n_z: np.ndarray  # (k,) biterm-to-topic counts
    n_wz: np.ndarray  # (W, k) word-to-topic counts
    phi: np.ndarray  # (k, W) row-stochastic topic-word distributions
    theta: np.ndarray  # (k,) global topic proportions
    rng_seed: int
    iterations: int

    def __post_init__(self) -> None:
        if int(self.n_z.sum()) * 2 != int(self.n_wz.sum()):
            raise ValueError("word-topic counts must be twice the biterm-topic counts")
        per_topic = self.n_wz.sum(axis=0)
        if not np.array_equal(per_topic, 2 * self.n_z):
            raise ValueError("per-topic word counts must equal 2*n_z")
        if np.any(np.abs(self.phi.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("phi rows must sum to 1")
        if abs(float(self.theta.sum()) - 1.0) > 1e-9:
            raise ValueError("theta must sum to 1")


@dataclass(frozen=True)
class DocTopicDist:
    """Inferred per-document topic mixture."""

    tweet_id: str
    proportions: tuple[float, ...]
    dominant_topic: int
    degenerate: bool  # True when the document produced zero biterms


def choose_k(stats: DocTermStats, cap: int | None = DEFAULT_TOPIC_CAP) -> int:
    """Topic count heuristic: the reciprocal of the doc-term sparsity.

    Rounded, floored at 2, and clamped to `cap` when one is given.
    """
    if not 0.0 < stats.sparsity <= 1.0:
        raise ValueError(f"sparsity must be in (0, 1], got {stats.sparsity}")
    k = round(1.0 / stats.sparsity)
    k = max(2, k)
    if cap is not None:
        k = min(k, cap)
    return k


def extract_biterms(
    docs: Sequence[TokenizedDoc], window: int | None = None
) -> tuple[list[list[Biterm]], list[Biterm]]:
    """Enumerate unordered position pairs per document.

    window=None treats the whole document as one context (tweets average
    ~5 tokens, so no window is needed); otherwise only positions closer
    than `window` pair up.  Returns per-document lists plus the corpus
    aggregate in document order.
    """
    if window is not None and window < 2:
        raise ValueError(f"window must be >= 2, got {window}")
    per_doc: list[list[Biterm]] = []
    aggregate: list[Biterm] = []
    for doc in docs:
        tokens = doc.tokens
        pairs: list[Biterm] = []
        for i in range(len(tokens)):
            for j in range(i + 1, len(tokens)):
                if window is not None and (j - i) >= window:
                    break
                pairs.append(make_biterm(tokens[i], tokens[j]))
        per_doc.append(pairs)
        aggregate.extend(pairs)
    return per_doc, aggregate


def fit(
    biterms: Sequence[Biterm],
    k: int,
    vocab_size: int,
    alpha: float | None = None,
    beta: float = DEFAULT_BETA,
    iterations: int = DEFAULT_ITERATIONS,
    seed: int = 0,
    vocabulary: tuple[str, ...] | None = None,
    on_sweep: Callable[[int, list[int], list[list[int]]], None] | None = None,
) -> BtmModel:
    """Collapsed Gibbs sampling over biterm topic assignments.

    Each sweep resamples every biterm's topic from its full conditional

        P(z=k' | rest) ~ (n_k' + a) * (n_w1|k' + b)(n_w2|k' + b)
                          / ((2 n_k' + W b)(2 n_k' + 1 + W b))

    with the biterm's own counts removed.  Point estimates are taken from
    the final sweep:

        phi_w|z  = (n_w|z + b) / (2 n_z + W b)
        theta_z  = (n_z + a) / (|B| + k a)

    Deterministic for a fixed (seed, iterations, input order).  `on_sweep`
    is called after every sweep with (sweep_index, n_z, n_wz) views for
    diagnostics; the callback must not mutate them.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    if not biterms:
        raise DegenerateCorpusError("cannot fit a topic model on zero biterms")
    if alpha is None:
        alpha = default_alpha(k)
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")

    if vocab_size < 1 or max(max(b.w1 for b in biterms), max(b.w2 for b in biterms)) >= vocab_size:
        raise ValueError("vocab_size too small for the given biterms")

    assignments, n_z, n_wz = _gibbs(
        biterms, k, vocab_size, alpha, beta, iterations, seed, on_sweep
    )

    n_z_arr = np.array(n_z, dtype=np.int64)
    n_wz_arr = np.array(n_wz, dtype=np.int64)
    phi, theta = estimate_distributions(n_z_arr, n_wz_arr, alpha, beta, k, vocab_size)
    return BtmModel(
        k=k,
        alpha=alpha,
        beta=beta,
        vocab_size=vocab_size,
        vocabulary=vocabulary if vocabulary is not None else tuple(f"w{i}" for i in range(vocab_size)),
        n_z=n_z_arr,
        n_wz=n_wz_arr,
        phi=phi,
        theta=theta,
        rng_seed=seed,
        iterations=iterations,
    )


def estimate_distributions(
    n_z: np.ndarray, n_wz: np.ndarray, alpha: float, beta: float, k: int, vocab_size: int
) -> tuple[np.ndarray, np.ndarray]:
    """Smoothed point estimates of phi (k x W) and theta (k,) from counts."""
    totals = 2.0 * n_z + vocab_size * beta  # (k,)
    phi = (n_wz.T + beta) / totals[:, None]
    n_biterms = float(n_z.sum())
    theta = (n_z + alpha) / (n_biterms + k * alpha)
    return phi, theta


def infer_doc(model: BtmModel, tweet_id: str, doc_biterms: Sequence[Biterm]) -> DocTopicDist:
    """Topic mixture of one document.

    P(z|d) = sum_b P(z|b) P(b|d), with P(z|b) ~ theta_z phi_w1|z phi_w2|z
    and P(b|d) the empirical biterm frequency.  Documents with no biterms
    get a uniform distribution and are flagged degenerate.
    """
    k = model.k
    if not doc_biterms:
        uniform = tuple([1.0 / k] * k)
        return DocTopicDist(tweet_id=tweet_id, proportions=uniform, dominant_topic=0, degenerate=True)
    counts = Counter(doc_biterms)
    total = sum(counts.values())
    mixture = np.zeros(k)
    for biterm, count in counts.items():
        joint = model.theta * model.phi[:, biterm.w1] * model.phi[:, biterm.w2]
        joint_sum = joint.sum()
        if joint_sum > 0:
            mixture += (count / total) * (joint / joint_sum)
        else:
            mixture += (count / total) * (1.0 / k)
    mixture /= mixture.sum()
    dominant = int(np.argmax(mixture))  # argmax takes the lowest index on ties
    return DocTopicDist(
        tweet_id=tweet_id,
        proportions=tuple(float(p) for p in mixture),
        dominant_topic=dominant,
        degenerate=False,
    )


def infer_corpus(
    model: BtmModel, docs: Sequence[TokenizedDoc], per_doc_biterms: Sequence[Sequence[Biterm]]
) -> list[DocTopicDist]:
    return [
        infer_doc(model, doc.tweet_id, biterms) for doc, biterms in zip(docs, per_doc_biterms)
    ]


def top_words(model: BtmModel, topic: int, n: int = 10) -> list[tuple[str, float]]:
    """Top-n terms of a topic by phi, ties broken lexicographically."""
    if not 0 <= topic < model.k:
        raise ValueError(f"topic {topic} out of range for k={model.k}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    row = model.phi[topic]
    ranked = sorted(zip(model.vocabulary, row), key=lambda pair: (-pair[1], pair[0]))
    return [(term, float(p)) for term, p in ranked[:n]]


def topic_summary(model: BtmModel, n: int = 10) -> str:
    """Human-readable report, one block per topic: the annotator's artifact."""
    lines: list[str] = []
    for topic in range(model.k):
        lines.append(f"topic {topic}  (theta={model.theta[topic]:.4f})")
        for term, p in top_words(model, topic, n):
            lines.append(f"    {term:<24s} {p:.6f}")
        lines.append("")
    return "\n".join(lines)


def save_model(model: BtmModel, path: str | Path) -> None:
    """Persist counts and hyperparameters; phi/theta are recomputed on load."""
    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kind": "btm",
        "k": model.k,
        "alpha": model.alpha,
        "beta": model.beta,
        "vocab_size": model.vocab_size,
        "vocabulary": list(model.vocabulary),
        "n_z": model.n_z.tolist(),
        "n_wz": model.n_wz.tolist(),
        "seed": model.rng_seed,
        "iterations": model.iterations,
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, separators=(",", ":")), "utf-8")


def load_model(path: str | Path) -> BtmModel:
    payload = json.loads(Path(path).read_text("utf-8"))
    if payload.get("format_version") != MODEL_FORMAT_VERSION or payload.get("kind") != "btm":
        raise ValueError(f"unsupported model file: {path}")
    n_z = np.array(payload["n_z"], dtype=np.int64)
    n_wz = np.array(payload["n_wz"], dtype=np.int64)
    k = int(payload["k"])
    vocab_size = int(payload["vocab_size"])
    alpha = float(payload["alpha"])
    beta = float(payload["beta"])
    phi, theta = estimate_distributions(n_z, n_wz, alpha, beta, k, vocab_size)
    return BtmModel(
        k=k,
        alpha=alpha,
        beta=beta,
        vocab_size=vocab_size,
        vocabulary=tuple(payload["vocabulary"]),
        n_z=n_z,
        n_wz=n_wz,
        phi=phi,
        theta=theta,
        rng_seed=int(payload["seed"]),
        iterations=int(payload["iterations"]),
    )


def exact_assignment_posterior(
    biterms: Sequence[Biterm], k: int, vocab_size: int, alpha: float, beta: float
) -> dict[tuple[int, ...], float]:
    """Exact posterior over full assignment vectors by brute-force enumeration.

    Only feasible for tiny corpora (k^len(biterms) states).  Assumes every
    biterm has two distinct words, for which the sampler's conditional is the
    exact full conditional of this collapsed joint:

        log P(z | B) = sum_k' lgamma(n_k' + a)
                     + sum_k' sum_w lgamma(n_w|k' + b)
                     - sum_k' lgamma(2 n_k' + W b)   (+ const)
    """
    for b in biterms:
        if b.w1 == b.w2:
            raise ValueError("exact enumeration assumes distinct-word biterms")
    n_biterms = len(biterms)
    log_weights: dict[tuple[int, ...], float] = {}
    for code in range(k**n_biterms):
        assignment = []
        c = code
        for _ in range(n_biterms):
            assignment.append(c % k)
            c //= k
        assignment = tuple(assignment)
        n_z = [0] * k
        n_wz = [[0] * k for _ in range(vocab_size)]
        for b, z in zip(biterms, assignment):
            n_z[z] += 1
            n_wz[b.w1][z] += 1
            n_wz[b.w2][z] += 1
        logw = 0.0
        for kk in range(k):
            logw += math.lgamma(n_z[kk] + alpha)
            logw -= math.lgamma(2 * n_z[kk] + vocab_size * beta)
            for w in range(vocab_size):
                logw += math.lgamma(n_wz[w][kk] + beta)
        log_weights[assignment] = logw
    peak = max(log_weights.values())
    weights = {a: math.exp(lw - peak) for a, lw in log_weights.items()}
    total = sum(weights.values())
    return {a: w / total for a, w in weights.items()}


def final_assignments(
    biterms: Sequence[Biterm], k: int, vocab_size: int, alpha: float, beta: float,
    iterations: int, seed: int,
) -> tuple[int, ...]:
    """Run one seeded chain and return its final assignment vector."""
    assignments, _, _ = _gibbs(biterms, k, vocab_size, alpha, beta, iterations, seed, None)
    return tuple(assignments)


def _gibbs(
    biterms: Sequence[Biterm],
    k: int,
    vocab_size: int,
    alpha: float,
    beta: float,
    iterations: int,
    seed: int,
    on_sweep: Callable[[int, list[int], list[list[int]]], None] | None,
) -> tuple[list[int], list[int], list[list[int]]]:
    """The collapsed Gibbs core shared by fit() and final_assignments().

    Count tables are plain lists: the sweep is a tight scalar loop and
    Python floats beat numpy scalars here by a wide margin.
    """
    w1s = [b.w1 for b in biterms]
    w2s = [b.w2 for b in biterms]
    n_biterms = len(biterms)
    rng = np.random.default_rng(seed)
    assignments = [int(z) for z in rng.integers(0, k, size=n_biterms)]
    n_z = [0] * k
    n_wz = [[0] * k for _ in range(vocab_size)]
    for i in range(n_biterms):
        z = assignments[i]
        n_z[z] += 1
        n_wz[w1s[i]][z] += 1
        n_wz[w2s[i]][z] += 1
    wbeta = vocab_size * beta
    probs = [0.0] * k
    for sweep in range(iterations):
        uniforms = rng.random(n_biterms).tolist()
        for i in range(n_biterms):
            z = assignments[i]
            row1 = n_wz[w1s[i]]
            row2 = n_wz[w2s[i]]
            n_z[z] -= 1
            row1[z] -= 1
            row2[z] -= 1
            total = 0.0
            for kk in range(k):
                nz = n_z[kk]
                two_nz = 2.0 * nz
                p = (
                    (nz + alpha)
                    * (row1[kk] + beta)
                    * (row2[kk] + beta)
                    / ((two_nz + wbeta) * (two_nz + 1.0 + wbeta))
                )
                total += p
                probs[kk] = p
            threshold = uniforms[i] * total
            acc = 0.0
            z_new = k - 1
            for kk in range(k):
                acc += probs[kk]
                if threshold < acc:
                    z_new = kk
                    break
            n_z[z_new] += 1
            row1[z_new] += 1
            row2[z_new] += 1
            assignments[i] = z_new
        if on_sweep is not None:
            on_sweep(sweep, n_z, n_wz)
    return assignments, n_z, n_wz
