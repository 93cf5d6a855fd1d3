"""Incremental dictionary parsing of occupancy strings and word statistics.

The parser scans left to right and cuts the shortest word not seen before,
growing a dictionary trie over the (unbounded) integer alphabet; the trailing
remainder, which may duplicate an earlier word, is kept as a final word so
the words tile the string exactly.  The headline statistic is

    lz_rate = C * log2(ell) / ell,

with C the word count: the compressed size per site when each word is coded
by a fixed-width pointer.  code_rate = C * log2(C) / ell is the matching
self-referential pointer cost.

Word-level diagnostics weigh each parsed word against the mode profiles of
the generating ensemble: word_ensemble_entropy sums the per-site entropy
profile across the word's window, and typical_membership tests whether the
window's occupancy deviates from the mean profile by more than an allowance
per site.  classify_words splits a parse into typical words below an entropy
budget, remaining typical words, and non-typical words.
"""

import math
from dataclasses import dataclass

import numpy as np

from .ensemble import EnsembleSpec, entropy_of_mean, marginal_entropy, \
    marginal_mean, site_entropies, site_means
from .errors import DomainError

LN2 = math.log(2.0)


def _as_values(string) -> np.ndarray:
    values = getattr(string, "values", string)
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DomainError("occupancy string must be one-dimensional")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        raise DomainError("occupancies must be integers")
    return arr.astype(np.int64, copy=False)


@dataclass(frozen=True)
class LzParse:
    """A tiling of a length-ell string into dictionary words.

    starts/lengths describe consecutive windows: word w covers
    [starts[w], starts[w] + lengths[w]).  All words except possibly the last
    are distinct, and every proper prefix of a word occurs earlier as a word.
    """

    ell: int
    starts: np.ndarray
    lengths: np.ndarray

    def __post_init__(self):
        starts = np.ascontiguousarray(self.starts, dtype=np.int64)
        lengths = np.ascontiguousarray(self.lengths, dtype=np.int64)
        if starts.shape != lengths.shape or starts.ndim != 1:
            raise DomainError("starts and lengths must be matching vectors")
        if starts.size:
            if np.any(lengths < 1):
                raise DomainError("words must be nonempty")
            if starts[0] != 0 or np.any(starts[1:] != starts[:-1] + lengths[:-1]):
                raise DomainError("words must tile the string contiguously")
            if starts[-1] + lengths[-1] != self.ell:
                raise DomainError("words must cover the whole string")
        elif self.ell != 0:
            raise DomainError("nonempty string needs at least one word")
        starts.flags.writeable = False
        lengths.flags.writeable = False
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "lengths", lengths)

    @property
    def word_count(self) -> int:
        return self.starts.size

    @property
    def words(self) -> list[tuple[int, int]]:
        return list(zip(self.starts.tolist(), self.lengths.tolist()))


def lz78_parse(string) -> LzParse:
    """Shortest-new-word incremental parse with a dictionary trie.

    The trailing remainder is emitted as a final word even when it repeats an
    earlier one, so the word count matches the pointer count of the coder.
    """
    arr = _as_values(string)
    root: dict[int, dict] = {}
    starts: list[int] = []
    lengths: list[int] = []
    node = root
    start = 0
    for i, sym in enumerate(arr.tolist()):
        child = node.get(sym)
        if child is None:
            node[sym] = {}
            starts.append(start)
            lengths.append(i - start + 1)
            node = root
            start = i + 1
        else:
            node = child
    if start < arr.size:
        starts.append(start)
        lengths.append(arr.size - start)
    return LzParse(int(arr.size), np.asarray(starts, dtype=np.int64),
                   np.asarray(lengths, dtype=np.int64))


def lz_rate_from_count(word_count: int, ell: int) -> float:
    """Pointer-code rate C log2(ell) / ell in bits per site; needs ell >= 2."""
    if ell < 2:
        raise DomainError("rate is defined for strings of length at least 2")
    if word_count < 0:
        raise DomainError("word count must be nonnegative")
    return word_count * math.log2(ell) / ell


def lz_rate(parse: LzParse) -> float:
    return lz_rate_from_count(parse.word_count, parse.ell)


def code_rate(parse: LzParse) -> float:
    """Self-referential pointer cost C log2(C) / ell in bits per site."""
    if parse.ell < 2:
        raise DomainError("rate is defined for strings of length at least 2")
    c = parse.word_count
    if c <= 1:
        return 0.0
    return c * math.log2(c) / parse.ell


def word_ensemble_entropy(spec: EnsembleSpec, ell: int, start: int,
                          length: int) -> float:
    """Summed per-site entropy profile (bits) across one word's window."""
    if not (0 <= start and length >= 1 and start + length <= ell):
        raise DomainError("word window must lie inside the string")
    idx = np.arange(start, start + length)
    return float(np.sum(np.asarray(marginal_entropy(spec, idx / ell))))


@dataclass(frozen=True)
class TypicalParams:
    """Per-site deviation allowance for the typical-window test.

    eps_prime = eps * e(L) / (2 L), where L is the supremum of the mean
    profile and e(.) the entropy of the marginal law with that mean.  A
    window of length M is typical when its summed occupancy exceeds the
    summed mean profile by at most M * eps_prime (one-sided by default;
    two_sided also rejects windows that undershoot by more than that).
    """

    eps: float
    eps_prime: float
    sup_mean: float
    entropy_at_sup: float
    two_sided: bool = False

    @classmethod
    def from_ensemble(cls, spec: EnsembleSpec, eps: float,
                      grid: int = 1 << 16, two_sided: bool = False) -> "TypicalParams":
        if not (0.0 < eps < 1.0):
            raise DomainError(f"eps must lie in (0, 1), got {eps}")
        ys = np.linspace(0.0, 1.0, grid + 1)
        sup_mean = float(np.max(np.asarray(marginal_mean(spec, ys))))
        e_sup = float(entropy_of_mean(spec.stats, sup_mean))
        eps_prime = eps * e_sup / (2.0 * sup_mean)
        return cls(eps, eps_prime, sup_mean, e_sup, two_sided)


def typical_membership(string, start: int, length: int,
                       mean_profile: np.ndarray, params: TypicalParams) -> bool:
    """Whether the window [start, start+length) passes the deviation test."""
    arr = _as_values(string)
    if not (0 <= start and length >= 1 and start + length <= arr.size):
        raise DomainError("window must lie inside the string")
    profile = np.asarray(mean_profile, dtype=float)
    if profile.shape != arr.shape:
        raise DomainError("mean profile must match the string length")
    window = slice(start, start + length)
    dev = float(arr[window].sum() - profile[window].sum())
    allowance = length * params.eps_prime
    if params.two_sided:
        return abs(dev) <= allowance
    return dev <= allowance


@dataclass(frozen=True)
class WordClassCounts:
    """Counts of parse words by typicality and ensemble-entropy budget."""

    low_typical: int
    other_typical: int
    non_typical: int

    @property
    def total(self) -> int:
        return self.low_typical + self.other_typical + self.non_typical


def classify_words(parse: LzParse, string, spec: EnsembleSpec,
                   params: TypicalParams) -> WordClassCounts:
    """Split the parse words into low-entropy typical, other typical, and
    non-typical, with entropy budget (1 - eps^2) log2(ell) bits per word."""
    arr = _as_values(string)
    if arr.size != parse.ell:
        raise DomainError("parse and string lengths disagree")
    if parse.ell < 2:
        raise DomainError("classification needs a string of length at least 2")
    means = site_means(spec, parse.ell)
    ents = site_entropies(spec, parse.ell)
    dev_prefix = np.concatenate([[0.0], np.cumsum(arr - means)])
    ent_prefix = np.concatenate([[0.0], np.cumsum(ents)])
    ends = parse.starts + parse.lengths
    devs = dev_prefix[ends] - dev_prefix[parse.starts]
    if params.two_sided:
        typical = np.abs(devs) <= parse.lengths * params.eps_prime
    else:
        typical = devs <= parse.lengths * params.eps_prime
    word_entropy = ent_prefix[ends] - ent_prefix[parse.starts]
    budget = (1.0 - params.eps**2) * math.log2(parse.ell)
    low = typical & (word_entropy <= budget)
    return WordClassCounts(
        low_typical=int(np.count_nonzero(low)),
        other_typical=int(np.count_nonzero(typical & ~low)),
        non_typical=int(np.count_nonzero(~typical)),
    )


def max_word_count(ell: int, alphabet_size: int = 2) -> int:
    """Largest word count any length-ell string over the alphabet can produce.

    Greedy extreme: exhaust all words of length 1, then 2, and so on; the
    remainder contributes complete words of the next length plus at most one
    trailing word.
    """
    if ell < 0 or alphabet_size < 1:
        raise DomainError("need ell >= 0 and a nonempty alphabet")
    count = 0
    remaining = ell
    d = 1
    while True:
        block = d * alphabet_size**d
        if remaining < block:
            full, part = divmod(remaining, d)
            return count + full + (1 if part else 0)
        count += alphabet_size**d
        remaining -= block
        d += 1
