"""Erasure sampling, boundary-spanning detection and threshold scans.

One trial draws a (zz, xx) recovery pair for every encoded Bell measurement
in the network, erases the affected outcomes, merges checks across erased
outcomes with union-find, and reports a logical loss when the merged
components connect the spanning terminals of the primal or the dual graph.

Randomness is counter-addressable: the stream for one trial is derived from
(master seed, distance index, eta index, sample index) alone, and every
Bell's draws sit at a fixed offset inside that stream.  Results are
therefore bit-identical for any worker count or scheduling order.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import lru_cache
from multiprocessing import get_context

import numpy as np

from .encodings import EncodingSpec, LossModel, sample_bell_recovery_batch
from .lattice import SyndromeGraph, build_ghz_network, build_syndrome_graphs, erase_and_merge

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        def wrap(f):
            return f

        return wrap if not (args and callable(args[0])) else args[0]


DEFAULT_SEED = 20250817
DEFAULT_WORK_CAP = 5e11  # pair draws per command invocation


class WorkCapError(RuntimeError):
    """Requested scan exceeds the work cap; rerun with the override flag."""


class CrossingError(RuntimeError):
    """Rate curves do not cross inside the scanned window."""

    def __init__(self, message: str, ordering: str):
        super().__init__(message)
        self.ordering = ordering


@dataclass(frozen=True)
class TrialConfig:
    encoding: EncodingSpec
    kind: str  # 'nl' | 'lo'
    eta: float
    distance: int
    samples: int
    master_seed: int = DEFAULT_SEED
    distance_index: int = 0
    eta_index: int = 0

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples >= 1 required")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")

    @property
    def model(self) -> LossModel:
        return LossModel(self.eta, self.kind)


@dataclass(frozen=True)
class LossRateEstimate:
    failures: int
    samples: int
    rate: float
    ci_low: float
    ci_high: float
    primal_failures: int = 0
    dual_failures: int = 0

    @staticmethod
    def from_counts(failures: int, samples: int, primal: int = 0, dual: int = 0):
        rate = failures / samples
        lo, hi = wilson_interval(failures, samples)
        return LossRateEstimate(failures, samples, rate, lo, hi, primal, dual)


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval; well behaved at rates near 0 and 1."""
    if n == 0:
        return 0.0, 1.0
    p = k / n
    z2 = z * z
    denom = 1.0 + z2 / n
    centre = (p + z2 / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n)) / denom
    lo = 0.0 if k == 0 else max(0.0, centre - half)
    hi = 1.0 if k == n else min(1.0, centre + half)
    return lo, hi


# ---------------------------------------------------------------------------
# Compiled lattice: flat arrays for the percolation kernel
# ---------------------------------------------------------------------------


@dataclass
class CompiledLattice:
    distance: int
    primal: SyndromeGraph
    dual: SyndromeGraph
    n_bells: int
    n_sites: int
    site_starts: np.ndarray  # int64, len sites+1
    zz_u: np.ndarray  # int32, len bells (unified node ids)
    zz_v: np.ndarray
    xp_u: np.ndarray  # int32, len sites
    xp_v: np.ndarray
    n_nodes: int
    west: int
    east: int
    south: int
    north: int
    bulk_zz_bell: int  # a bulk primal zz outcome, for marginal tests
    bulk_xp_site: int  # a bulk primal x-product site


@lru_cache(maxsize=8)
def compile_lattice(d: int) -> CompiledLattice:
    net = build_ghz_network(d)
    primal, dual = build_syndrome_graphs(d)
    n_bells, n_sites = len(net.bells), len(net.sites)
    offset = primal.num_nodes
    zz_u = np.empty(n_bells, dtype=np.int32)
    zz_v = np.empty(n_bells, dtype=np.int32)
    xp_u = np.empty(n_sites, dtype=np.int32)
    xp_v = np.empty(n_sites, dtype=np.int32)
    for graph, shift in ((primal, 0), (dual, offset)):
        for oid, _kind, u, v in graph.edges:
            if oid < n_bells:
                zz_u[oid], zz_v[oid] = u + shift, v + shift
            else:
                s = oid - n_bells
                xp_u[s], xp_v[s] = u + shift, v + shift
    centre = (d, d, 2 * d + 1)
    bulk_edge_site = net.coord_to_site[(centre[0], centre[1] + 1, centre[2] + 1)]
    bulk_face_site = net.coord_to_site[(centre[0], centre[1], centre[2] + 1)]
    return CompiledLattice(
        distance=d,
        primal=primal,
        dual=dual,
        n_bells=n_bells,
        n_sites=n_sites,
        site_starts=net.site_bell_start.copy(),
        zz_u=zz_u,
        zz_v=zz_v,
        xp_u=xp_u,
        xp_v=xp_v,
        n_nodes=primal.num_nodes + dual.num_nodes,
        west=primal.spanning[0],
        east=primal.spanning[1],
        south=dual.spanning[0] + offset,
        north=dual.spanning[1] + offset,
        bulk_zz_bell=int(net.site_bell_start[bulk_edge_site]),
        bulk_xp_site=bulk_face_site,
    )


@njit(cache=True)
def _uf_find(parent, a):
    while parent[a] != a:
        parent[a] = parent[parent[a]]
        a = parent[a]
    return a


@njit(cache=True)
def _percolate_one(parent, zz_fail, xp_fail, zz_u, zz_v, xp_u, xp_v, w, e, s, n):
    for i in range(parent.size):
        parent[i] = i
    for b in range(zz_fail.size):
        if zz_fail[b]:
            ra = _uf_find(parent, zz_u[b])
            rb = _uf_find(parent, zz_v[b])
            if ra != rb:
                parent[rb] = ra
    for t in range(xp_fail.size):
        if xp_fail[t]:
            ra = _uf_find(parent, xp_u[t])
            rb = _uf_find(parent, xp_v[t])
            if ra != rb:
                parent[rb] = ra
    primal_loss = _uf_find(parent, w) == _uf_find(parent, e)
    dual_loss = _uf_find(parent, s) == _uf_find(parent, n)
    return primal_loss, dual_loss


# ---------------------------------------------------------------------------
# Per-trial sampling
# ---------------------------------------------------------------------------


def trial_stream(master_seed: int, distance_index: int, eta_index: int, sample_index: int):
    """Counter-addressable per-trial generator."""
    seq = np.random.SeedSequence(
        master_seed, spawn_key=(distance_index, eta_index, sample_index)
    )
    return np.random.Generator(np.random.Philox(seq))


def draw_bell_failures(
    compiled: CompiledLattice, cfg: TrialConfig, sample_index: int
) -> tuple[np.ndarray, np.ndarray]:
    """(zz_fail, xp_fail) boolean arrays for one trial.

    Bell draws are laid out bell-major inside the per-trial stream; the
    x-product of a site fails when any of its Bells lost the xx eigenvalue.
    """
    rng = trial_stream(
        cfg.master_seed, cfg.distance_index, cfg.eta_index, sample_index
    )
    zz_ok, xx_ok = sample_bell_recovery_batch(
        cfg.encoding, cfg.model, rng, compiled.n_bells
    )
    zz_fail = ~zz_ok
    xx_fail = ~xx_ok
    xp_fail = np.logical_or.reduceat(xx_fail, compiled.site_starts[:-1])
    return zz_fail, xp_fail


def sample_erasures(
    compiled: CompiledLattice, cfg: TrialConfig, sample_index: int
) -> tuple[set[int], set[int]]:
    """Erased outcome ids for one trial, split into (primal set, dual set)."""
    zz_fail, xp_fail = draw_bell_failures(compiled, cfg, sample_index)
    primal_ids = compiled.primal.outcome_ids
    erased_primal: set[int] = set()
    erased_dual: set[int] = set()
    for b in np.nonzero(zz_fail)[0]:
        (erased_primal if int(b) in primal_ids else erased_dual).add(int(b))
    for t in np.nonzero(xp_fail)[0]:
        oid = compiled.n_bells + int(t)
        (erased_primal if oid in primal_ids else erased_dual).add(oid)
    return erased_primal, erased_dual


def logical_loss(
    compiled: CompiledLattice, erased_primal, erased_dual, per_lattice: bool = False
):
    """Spanning test via supercheck merging, primal OR dual."""
    primal = erase_and_merge(compiled.primal, erased_primal).spanning_connected()
    dual = erase_and_merge(compiled.dual, erased_dual).spanning_connected()
    if per_lattice:
        return primal, dual
    return primal or dual


def _run_samples(
    compiled: CompiledLattice, cfg: TrialConfig, start: int, count: int
) -> tuple[int, int, int]:
    parent = np.empty(compiled.n_nodes, dtype=np.int64)
    any_fail = primal_fail = dual_fail = 0
    for s in range(start, start + count):
        zz_fail, xp_fail = draw_bell_failures(compiled, cfg, s)
        p, dl = _percolate_one(
            parent,
            zz_fail,
            xp_fail,
            compiled.zz_u,
            compiled.zz_v,
            compiled.xp_u,
            compiled.xp_v,
            compiled.west,
            compiled.east,
            compiled.south,
            compiled.north,
        )
        primal_fail += p
        dual_fail += dl
        any_fail += p or dl
    return any_fail, primal_fail, dual_fail


_WORKER_STATE: dict = {}


def _worker_init(d: int, cfg: TrialConfig):
    _WORKER_STATE["compiled"] = compile_lattice(d)
    _WORKER_STATE["cfg"] = cfg


def _worker_block(args: tuple[int, int]) -> tuple[int, int, int]:
    start, count = args
    return _run_samples(_WORKER_STATE["compiled"], _WORKER_STATE["cfg"], start, count)


def estimate_logical_loss(cfg: TrialConfig, workers: int = 1) -> LossRateEstimate:
    """Monte Carlo estimate of the logical loss rate at one (d, eta) point.

    The failure count is a deterministic function of (cfg, master seed); the
    worker count only changes wall time.
    """
    compiled = compile_lattice(cfg.distance)
    if workers <= 1 or cfg.samples < 4 * workers:
        counts = _run_samples(compiled, cfg, 0, cfg.samples)
    else:
        block = max(32, cfg.samples // (workers * 8))
        jobs = []
        start = 0
        while start < cfg.samples:
            n = min(block, cfg.samples - start)
            jobs.append((start, n))
            start += n
        ctx = get_context("fork")
        with ctx.Pool(workers, initializer=_worker_init, initargs=(cfg.distance, cfg)) as pool:
            results = pool.map(_worker_block, jobs)
        counts = tuple(int(sum(col)) for col in zip(*results))
    any_fail, primal_fail, dual_fail = counts
    return LossRateEstimate.from_counts(any_fail, cfg.samples, primal_fail, dual_fail)


# ---------------------------------------------------------------------------
# Threshold extraction
# ---------------------------------------------------------------------------


@dataclass
class ThresholdEstimate:
    encoding: EncodingSpec
    kind: str
    distances: list[int]
    etas: list[float]
    rates: dict[tuple[int, float], LossRateEstimate]
    crossings: list[float]
    threshold: float
    half_spread: float
    ci_low: float
    ci_high: float
    samples: int
    master_seed: int
    wall_time_s: float = 0.0

    def to_json_dict(self) -> dict:
        return {
            "encoding": self.encoding.label(),
            "model": self.kind,
            "distances": self.distances,
            "etas": self.etas,
            "crossings": self.crossings,
            "threshold": self.threshold,
            "uncertainty": {
                "half_spread": self.half_spread,
                "bootstrap_ci": [self.ci_low, self.ci_high],
            },
            "samples_per_point": self.samples,
            "seed": self.master_seed,
            "wall_time_s": self.wall_time_s,
        }


def isotonic_fit(ys: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators fit of a non-decreasing sequence."""
    values = [float(y) for y in ys]
    ws = [float(w) for w in weights]
    blocks = [[v, w, 1] for v, w in zip(values, ws)]  # value, weight, length
    merged: list[list[float]] = []
    for b in blocks:
        merged.append(list(b))
        while len(merged) > 1 and merged[-2][0] > merged[-1][0]:
            v2, w2, n2 = merged.pop()
            v1, w1, n1 = merged.pop()
            w = w1 + w2
            merged.append([(v1 * w1 + v2 * w2) / w, w, n1 + n2])
    out: list[float] = []
    for v, _w, n in merged:
        out.extend([v] * int(n))
    return np.asarray(out)


def crossing_point(
    etas: np.ndarray, low_d: np.ndarray, high_d: np.ndarray
) -> float | None:
    """Crossing of two isotonic rate curves by linear interpolation.

    Below threshold the larger distance has the smaller rate, so the
    difference low_d - high_d moves from positive to negative; the last such
    sign change is the crossing.
    """
    diff = low_d - high_d
    idx = None
    for i in range(len(diff) - 1):
        if diff[i] > 0 >= diff[i + 1]:
            idx = i
    if idx is None:
        return None
    span = diff[idx] - diff[idx + 1]
    frac = diff[idx] / span if span > 0 else 0.5
    return float(etas[idx] + frac * (etas[idx + 1] - etas[idx]))


def _crossings_from_rates(
    distances: list[int], etas: np.ndarray, rate_matrix: np.ndarray, samples: int
) -> list[float] | None:
    weights = np.full(len(etas), float(samples))
    iso = [isotonic_fit(rate_matrix[i], weights) for i in range(len(distances))]
    out = []
    for i in range(len(distances) - 1):
        c = crossing_point(etas, iso[i], iso[i + 1])
        if c is None:
            return None
        out.append(c)
    return out


def estimate_work(distances, etas, samples: int, spec: EncodingSpec) -> float:
    total = 0.0
    for d in distances:
        bells = 8.0 * d * d * (2 * d + 1)  # leading-order bell count
        total += bells * spec.pairs * len(etas) * samples
    return total


def scan_thresholds(
    encoding: EncodingSpec,
    kind: str,
    distances: list[int],
    etas: list[float],
    samples: int,
    master_seed: int = DEFAULT_SEED,
    workers: int = 1,
    work_cap: float = DEFAULT_WORK_CAP,
    force: bool = False,
    bootstrap: int = 200,
) -> ThresholdEstimate:
    """Full (d, eta) rate table plus pairwise curve crossings.

    The threshold is the mean of the successive-distance crossings; its
    uncertainty combines the half-spread of the crossings with a parametric
    bootstrap over the binomial trial counts.
    """
    import time

    if len(distances) < 2:
        raise ValueError("at least two distances are required")
    if sorted(distances) != list(distances):
        raise ValueError("distances must be sorted ascending")
    if sorted(etas) != list(etas) or len(etas) < 2:
        raise ValueError("eta grid must be sorted and contain at least two points")
    work = estimate_work(distances, etas, samples, encoding)
    if work > work_cap and not force:
        raise WorkCapError(
            f"estimated work {work:.2e} pair draws exceeds the cap {work_cap:.2e}; "
            "rerun with --force to override"
        )
    t0 = time.time()
    rates: dict[tuple[int, float], LossRateEstimate] = {}
    for di, d in enumerate(distances):
        for ei, eta in enumerate(etas):
            cfg = TrialConfig(
                encoding=encoding,
                kind=kind,
                eta=eta,
                distance=d,
                samples=samples,
                master_seed=master_seed,
                distance_index=di,
                eta_index=ei,
            )
            rates[(d, eta)] = estimate_logical_loss(cfg, workers=workers)
    eta_arr = np.asarray(etas)
    rate_matrix = np.asarray(
        [[rates[(d, eta)].rate for eta in etas] for d in distances]
    )
    crossings = _crossings_from_rates(distances, eta_arr, rate_matrix, samples)
    if crossings is None:
        ordering = _describe_ordering(distances, etas, rate_matrix)
        raise CrossingError(
            "rate curves do not cross inside the eta window; widen the window "
            f"(observed ordering: {ordering})",
            ordering,
        )
    threshold = float(np.mean(crossings))
    half_spread = float((max(crossings) - min(crossings)) / 2.0)

    boot_rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(master_seed, spawn_key=(0xB007,)))
    )
    boot_means = []
    fail_matrix = np.asarray(
        [[rates[(d, eta)].failures for eta in etas] for d in distances]
    )
    for _ in range(bootstrap):
        resampled = boot_rng.binomial(samples, fail_matrix / samples) / samples
        cs = _crossings_from_rates(distances, eta_arr, resampled, samples)
        if cs is not None:
            boot_means.append(float(np.mean(cs)))
    if boot_means:
        ci_low, ci_high = np.percentile(boot_means, [2.5, 97.5])
    else:
        ci_low = ci_high = threshold
    return ThresholdEstimate(
        encoding=encoding,
        kind=kind,
        distances=list(distances),
        etas=list(etas),
        rates=rates,
        crossings=crossings,
        threshold=threshold,
        half_spread=half_spread,
        ci_low=float(ci_low),
        ci_high=float(ci_high),
        samples=samples,
        master_seed=master_seed,
        wall_time_s=time.time() - t0,
    )


def _describe_ordering(distances, etas, rate_matrix) -> str:
    left = " < ".join(
        f"d{d}:{rate_matrix[i][0]:.3f}" for i, d in enumerate(distances)
    )
    right = " < ".join(
        f"d{d}:{rate_matrix[i][-1]:.3f}" for i, d in enumerate(distances)
    )
    return f"at eta={etas[0]:.4f}: {left}; at eta={etas[-1]:.4f}: {right}"


def default_workers() -> int:
    return max(1, min(8, os.cpu_count() or 1))
