"""Occupancy-string samplers: independent modes and fixed-total conditioning.

Grand sampling draws every mode independently from its marginal law by
inverse transform, one uniform per site.  Canonical sampling conditions the
same product law on a fixed total occupancy n and draws sites left to right:
at site j with remaining total s, the occupancy k is drawn with weight

    p_j(k) * T_{j+1}(s - k),

where T_{j+1} is the law of the remaining suffix sum.  The suffix rows are
computed by backward convolution.  Rows are kept in the linear domain and
rescaled so the entry at the predicted conditional center is one (per-row
scale factors cancel inside each site's draw weights); the far tails then
underflow or overflow the double range and are dropped, which is what
bounds the window width.  For long strings only every sqrt(ell)-th row is
retained; the rows inside a block are recomputed from the next checkpoint
while the draws pass through it.  The recomputation repeats the identical
float operations, so draws do not depend on how much is cached.

Determinism: each (seed, ell, replica) triple owns a counter-based random
stream, and a replica consumes exactly one uniform per site.  A string is
therefore a pure function of (ensemble, ell, n, seed, replica), independent
of batching, caching, and process count.

Bose marginals are truncated once their tail mass drops below a tolerance;
the summed truncation bound is reported in the string provenance.
"""

import math
from dataclasses import dataclass

import numpy as np

from .disttab import DistTable
from .ensemble import EnsembleSpec, Statistics, marginal_mean
from .errors import (
    DomainError,
    ImpossibleConditionError,
    NumericError,
)

_DEFAULT_TAIL_TOL = 1e-12
_DEFAULT_MAX_CELLS = 1 << 24


@dataclass(frozen=True)
class ParticleTarget:
    """Total occupancy n = round(r * ell), rounding halves away from zero."""

    ell: int
    r: float
    n: int


def choose_n(r: float, ell: int) -> ParticleTarget:
    if not (ell >= 1):
        raise DomainError("ell must be at least 1")
    if not (math.isfinite(r) and r > 0.0):
        raise DomainError(f"target density must be positive, got {r}")
    n = math.floor(r * ell + 0.5)
    return ParticleTarget(ell, r, n)


@dataclass(frozen=True)
class Provenance:
    spec_label: str
    kind: str
    ell: int
    n: int | None
    seed: int
    replica: int
    truncation_tail: float = 0.0


@dataclass(frozen=True)
class OccupancyString:
    values: np.ndarray
    provenance: Provenance

    def __post_init__(self):
        arr = np.ascontiguousarray(self.values, dtype=np.int64)
        if arr.ndim != 1 or arr.size == 0:
            raise DomainError("occupancy string must be a nonempty vector")
        if np.any(arr < 0):
            raise DomainError("occupancies must be nonnegative")
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def ell(self) -> int:
        return self.values.size


def make_rng(seed: int, ell: int, replica: int) -> np.random.Generator:
    """Counter-based stream owned by the (seed, ell, replica) triple."""
    if not (0 <= int(seed) < 2**63):
        raise DomainError("seed must be a nonnegative 63-bit integer")
    if replica < 0:
        raise DomainError("replica index must be nonnegative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(ell), int(replica)))
    return np.random.Generator(np.random.Philox(ss))


def marginal_pmf(spec: EnsembleSpec, j: int, ell: int,
                 tail_tol: float = _DEFAULT_TAIL_TOL) -> DistTable:
    """Occupancy law of site j of an ell-site string (the mode at y = j/ell)."""
    if not (0 <= j < ell):
        raise DomainError(f"site index must lie in [0, {ell - 1}], got {j}")
    mean = float(marginal_mean(spec, j / ell))
    if spec.stats is Statistics.FERMI:
        return DistTable.bernoulli(mean)
    return DistTable.geometric(mean, tail_tol=tail_tol)


def marginal_tables(spec: EnsembleSpec, ell: int,
                    tail_tol: float = _DEFAULT_TAIL_TOL) -> list[DistTable]:
    """Occupancy laws of all ell sites."""
    if ell < 1:
        raise DomainError("ell must be at least 1")
    return [marginal_pmf(spec, j, ell, tail_tol) for j in range(ell)]


def sample_grand(spec: EnsembleSpec, ell: int, seed: int,
                 replica: int = 0) -> OccupancyString:
    """Independent draw of every site from its marginal law."""
    if ell < 1:
        raise DomainError("ell must be at least 1")
    rng = make_rng(seed, ell, replica)
    u = rng.random(ell)
    x = spec.beta * (spec.dispersion.base_energy(np.arange(ell) / ell) - spec.mu)
    if spec.stats is Statistics.FERMI:
        p = 1.0 / (1.0 + np.exp(x))
        vals = (u < p).astype(np.int64)
    else:
        # Geometric inverse transform: smallest k with 1 - q^{k+1} > u.
        logq = -x
        vals = np.floor(np.log1p(-u) / logq).astype(np.int64)
    prov = Provenance(spec.label(), "grand", ell, None, int(seed), int(replica))
    return OccupancyString(vals, prov)


class CanonicalSampler:
    """Shared machinery for fixed-total draws at one (ensemble, ell, n).

    Building the checkpoint rows is the expensive part; do it once and draw
    any number of replicas from it.  Degenerate targets (n = 0, or a full
    Fermi string) bypass the row machinery entirely.
    """

    def __init__(self, spec: EnsembleSpec, ell: int, n: int,
                 tail_tol: float = _DEFAULT_TAIL_TOL,
                 max_cells: int = _DEFAULT_MAX_CELLS):
        if ell < 1:
            raise DomainError("ell must be at least 1")
        if n < 0:
            raise DomainError("target total must be nonnegative")
        self.spec = spec
        self.ell = int(ell)
        self.n = int(n)

        if spec.stats is Statistics.FERMI and n > ell:
            raise ImpossibleConditionError(
                f"Fermi string of length {ell} cannot hold {n} particles"
            )
        tables = marginal_tables(spec, ell, tail_tol=tail_tol)
        self.truncation_tail = float(sum(t.truncation_tail for t in tables))
        if sum(t.support_max for t in tables) < n:
            raise ImpossibleConditionError(
                f"total {n} exceeds the summed (truncated) site supports"
            )
        self._kernels = [t.probs for t in tables]

        if self.n == 0:
            self._degenerate = np.zeros(ell, dtype=np.int64)
            return
        if spec.stats is Statistics.FERMI and self.n == self.ell:
            self._degenerate = np.ones(ell, dtype=np.int64)
            return
        self._degenerate = None

        km = np.array([float(np.arange(k.size) @ k) for k in self._kernels])
        kv = np.array([float(np.arange(k.size) ** 2 @ k) for k in self._kernels])
        kv = kv - km ** 2
        suf_m = np.concatenate([np.cumsum(km[::-1])[::-1], [0.0]])
        suf_v = np.concatenate([np.cumsum(kv[::-1])[::-1], [0.0]])
        shift = (n - suf_m[0]) / suf_v[0] if suf_v[0] > 0.0 else 0.0
        if not math.isfinite(shift):
            shift = 0.0
        self._centers = np.clip(np.rint(suf_m + shift * suf_v), 0, n).astype(np.int64)

        if (ell + 1) * (n + 1) <= max_cells:
            self._stride = ell
        else:
            self._stride = max(1, math.isqrt(ell - 1) + 1)
        self._checkpoints: dict[int, tuple[int, np.ndarray]] = {}
        off, arr = 0, np.ones(1)
        self._checkpoints[ell] = (off, arr)
        for j in range(ell - 1, -1, -1):
            off, arr = self._step(j, off, arr)
            if j > 0 and (self._stride == ell or j % self._stride == 0):
                self._checkpoints[j] = (off, arr)

    # Kept row entries stay inside [_ROW_FLOOR, _ROW_BOUND]; reachable
    # states sit within a few hundred nats of the anchor, far from both
    # edges.  The floor also keeps the convolutions out of the denormal
    # range, which hardware handles an order of magnitude slower.
    _ROW_FLOOR = 1e-290
    _ROW_BOUND = 1e260

    def _step(self, j: int, off: int, arr: np.ndarray) -> tuple[int, np.ndarray]:
        """One backward convolution: the suffix-sum row gains one site.

        Rows are (offset, window) pairs over remaining-total coordinates.
        The recursion for entry s reads only entries at or below s, so the
        hard ceiling at the target total is exact.  Each row is rescaled so
        its entry at the predicted conditional center (a Gaussian moment
        estimate, fixed at build time) is one; states the draws can reach
        lie within a few hundred nats of that anchor, where doubles have
        full precision even when the target total is deep in the tail of
        the unconditioned sum.  Entries outside [_ROW_FLOOR, _ROW_BOUND]
        are dropped; the anchor is a fixed function of the site index, so
        the cut cannot feed back on itself, and a dropped entry sits
        hundreds of nats away from every reachable state, where its loss
        perturbs only the few window-edge entries next to it (information
        flows upward in s, so entries above _ROW_BOUND cannot perturb the
        window at all).  Row log-concavity (preserved by convolution)
        makes the kept set one contiguous window.  Scale factors are
        per-row constants and cancel in the conditional draw weights.
        """
        conv = np.convolve(arr, self._kernels[j])
        if off + conv.size - 1 > self.n:
            conv = conv[: self.n + 1 - off]
        anchor = int(self._centers[j]) - off
        scale = conv[anchor] if 0 <= anchor < conv.size else 0.0
        if not scale > 0.0:
            scale = conv.max()
        if not scale > 0.0:
            raise NumericError(
                "suffix row underflowed to zero; the target total is too "
                "deep in the tail of the site laws"
            )
        with np.errstate(over="ignore"):
            row = conv / scale
        live = np.nonzero((row >= self._ROW_FLOOR) & (row <= self._ROW_BOUND))[0]
        if live.size == 0:
            raise NumericError(
                "suffix row has no representable entries near the predicted "
                "conditional center"
            )
        lo, hi = int(live[0]), int(live[-1])
        return off + lo, row[lo:hi + 1]

    def _block_bounds(self) -> list[tuple[int, int]]:
        stride = self._stride
        return [(lo, min(lo + stride, self.ell)) for lo in range(0, self.ell, stride)]

    def _rows_for_block(self, lo: int, hi: int) -> dict[int, tuple[int, np.ndarray]]:
        rows = {hi: self._checkpoints[hi]}
        for j in range(hi - 1, lo, -1):
            off, arr = rows[j + 1]
            rows[j] = self._step(j, off, arr)
        return rows

    def sample_from_uniforms(self, uniforms: np.ndarray) -> np.ndarray:
        """Draw one string per row of uniforms; uniforms has shape (m, ell)."""
        U = np.asarray(uniforms, dtype=float)
        if U.ndim != 2 or U.shape[1] != self.ell:
            raise DomainError(f"uniforms must have shape (m, {self.ell})")
        m = U.shape[0]
        if self._degenerate is not None:
            return np.tile(self._degenerate, (m, 1))
        out = np.empty((m, self.ell), dtype=np.int64)
        states = np.full(m, self.n, dtype=np.int64)
        for lo, hi in self._block_bounds():
            rows = self._rows_for_block(lo, hi)
            for j in range(lo, hi):
                kern = self._kernels[j]
                off_next, row_next = rows[j + 1]
                ks = np.arange(kern.size)
                rel = states[:, None] - ks[None, :] - off_next
                in_win = (rel >= 0) & (rel < row_next.size)
                w = np.where(in_win, row_next[np.clip(rel, 0, row_next.size - 1)], 0.0)
                w *= kern[None, :]
                c = np.cumsum(w, axis=1)
                tot = c[:, -1]
                if not np.all(tot > 0.0):
                    raise NumericError(
                        "conditional draw weights underflowed; the target total "
                        "is too deep in the tail for the rescaled suffix rows"
                    )
                draw = (c < (U[:, j] * tot)[:, None]).sum(axis=1)
                draw = np.minimum(draw, kern.size - 1)
                out[:, j] = draw
                states -= draw
            del rows
        if not np.all(states == 0):
            raise NumericError("draws failed to consume the target total exactly")
        return out

    def sample_batch(self, seed: int, replicas) -> list[OccupancyString]:
        """Deterministic per-replica draws; output depends only on
        (ensemble, ell, n, seed, replica), never on the batch composition."""
        reps = [int(r) for r in replicas]
        U = np.empty((len(reps), self.ell))
        for i, rep in enumerate(reps):
            U[i] = make_rng(seed, self.ell, rep).random(self.ell)
        vals = self.sample_from_uniforms(U)
        out = []
        for i, rep in enumerate(reps):
            prov = Provenance(self.spec.label(), "canonical", self.ell, self.n,
                              int(seed), rep, self.truncation_tail)
            s = OccupancyString(vals[i], prov)
            assert int(s.values.sum()) == self.n
            out.append(s)
        return out

    def sample_bulk(self, rng: np.random.Generator, m: int) -> np.ndarray:
        """m law-exact draws from one shared stream (for large Monte Carlo
        checks where per-replica addressing is not needed)."""
        if m < 1:
            raise DomainError("need at least one draw")
        vals = self.sample_from_uniforms(rng.random((m, self.ell)))
        assert np.all(vals.sum(axis=1) == self.n)
        return vals


def sample_canonical(spec: EnsembleSpec, ell: int, n: int, seed: int,
                     replica: int = 0,
                     sampler: CanonicalSampler | None = None) -> OccupancyString:
    """One fixed-total draw.  For many replicas at one (ell, n), build a
    CanonicalSampler once and use sample_batch; this convenience wrapper
    rebuilds the rows on every call."""
    if sampler is None:
        sampler = CanonicalSampler(spec, ell, n)
    elif (sampler.ell, sampler.n) != (ell, n):
        raise DomainError("sampler was built for a different (ell, n)")
    return sampler.sample_batch(seed, [replica])[0]
