"""Parity-encoded 2-chain resource states and Bell outcome recovery.

A resource state is a two-qubit chain whose qubits are first doubled (a two
qubit repetition code, photons ``a`` and ``b`` per chain qubit) and then
parity encoded with n blocks of m photons each.  An encoded Bell measurement
is performed transversally, one physical Bell measurement per photon pair,
so a pair is usable only when both photons survive; that happens with
probability 1 - gamma where gamma = 1 - (1 - eta)^2.

Outcome recovery under the two measurement models:

  nonlinear (nl)      a physical Bell measurement that receives both photons
                      always returns both the xx and zz eigenvalues.
  linear-optical (lo) the block-level outcome that needs a fully intact
                      block additionally fails with probability 1/2 (one
                      fair coin per block), independent of survival.

For the standard (shor) variant the block-structured logical pair is
  Z_L = X on every photon of one block     (needs one fully intact block)
  X_L = Z on one photon of every block     (needs every block non-empty)
and the rotated variant swaps the two roles.  The n*m == 1 case is the
plain doubled chain with the trivial encoding.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .pauli import GeneratorSet, PauliOperator, logical_recoverable, multiply_all

MAX_BRUTE_FORCE_PAIRS = 16
MAX_PHOTONS_PER_STATE = 1024

CHAIN_QUBITS = ("1a", "1b", "2a", "2b")


class ResourceCapError(ValueError):
    """Requested encoding exceeds the configured photon cap."""


class EnumerationBoundError(ValueError):
    """Brute-force enumeration bound exceeded."""


@dataclass(frozen=True)
class EncodingSpec:
    """Parity code parameters: n blocks of m photons, doubled chain (r=2)."""

    n: int
    m: int
    repetition: int = 2
    variant: str = "shor"

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n >= 1 required")
        if self.m < 1:
            raise ValueError("m >= 1 required")
        if self.repetition != 2:
            raise ValueError("only the doubled chain (r = 2) is supported")
        if self.variant not in ("shor", "rotated"):
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def pairs(self) -> int:
        """Photon pairs per encoded Bell measurement."""
        return self.n * self.m

    @property
    def photons_per_qubit(self) -> int:
        return self.n * self.m

    @property
    def photons_per_state(self) -> int:
        return 2 * self.repetition * self.n * self.m

    def label(self) -> str:
        suffix = ",rotated" if self.variant == "rotated" else ""
        return f"qpc:{self.n},{self.m}{suffix}"


_ENCODING_RE = re.compile(r"^qpc:(\d+),(\d+)(?:,(rotated|shor))?$")


def parse_encoding(text: str) -> EncodingSpec:
    """Parse an encoding string of the form ``qpc:n,m[,rotated]``."""
    match = _ENCODING_RE.match(text.strip().lower())
    if not match:
        raise ValueError(
            f"invalid encoding {text!r}; expected qpc:n,m[,rotated], e.g. qpc:2,2"
        )
    n, m = int(match.group(1)), int(match.group(2))
    if n < 1:
        raise ValueError("invalid encoding: n >= 1 required")
    if m < 1:
        raise ValueError("invalid encoding: m >= 1 required")
    return EncodingSpec(n=n, m=m, variant=match.group(3) or "shor")


@dataclass(frozen=True)
class LossModel:
    """Per-photon loss rate and measurement model kind ('nl' or 'lo')."""

    eta: float
    kind: str = "nl"

    def __post_init__(self):
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")
        if self.kind not in ("nl", "lo"):
            raise ValueError(f"unknown model kind {self.kind!r}")

    @property
    def gamma(self) -> float:
        """Pair-loss probability: both photons of a measured pair must survive."""
        return 1.0 - (1.0 - self.eta) ** 2


@dataclass(frozen=True)
class ReturnProbabilities:
    p_zz: float
    p_xx: float

    def __post_init__(self):
        if not (0.0 <= self.p_zz <= 1.0 and 0.0 <= self.p_xx <= 1.0):
            raise ValueError("probabilities must lie in [0, 1]")

    def swapped(self) -> "ReturnProbabilities":
        return ReturnProbabilities(self.p_xx, self.p_zz)


# ---------------------------------------------------------------------------
# Parity code structure on the nm pair qubits of one encoded Bell measurement
# ---------------------------------------------------------------------------


def _pair_labels(n: int, m: int) -> tuple[str, ...]:
    return tuple(f"blk{k}.pos{j}" for k in range(n) for j in range(m))


@lru_cache(maxsize=None)
def parity_code(n: int, m: int, variant: str) -> tuple[GeneratorSet, PauliOperator, PauliOperator]:
    """(stabilisers, logical_z, logical_x) of the parity code on n*m qubits.

    With a single physical qubit the encoding is trivial and the logicals
    are the bare Z and X regardless of variant.
    """
    labels = _pair_labels(n, m)
    nm = n * m
    stabs: list[PauliOperator] = []
    for k in range(n):
        for j in range(m - 1):
            z = (1 << (k * m + j)) | (1 << (k * m + j + 1))
            stabs.append(PauliOperator(nm, 0, z))
    block = lambda k: ((1 << m) - 1) << (k * m)
    for k in range(n - 1):
        stabs.append(PauliOperator(nm, block(k) | block(k + 1), 0))
    if nm == 1:
        logical_z = PauliOperator(1, 0, 1)
        logical_x = PauliOperator(1, 1, 0)
    else:
        full_block_x = PauliOperator(nm, block(0), 0)
        one_z_per_block = PauliOperator(nm, 0, sum(1 << (k * m) for k in range(n)))
        if variant == "shor":
            logical_z, logical_x = full_block_x, one_z_per_block
        else:
            logical_z, logical_x = one_z_per_block, full_block_x
    return GeneratorSet(labels, stabs), logical_z, logical_x


@dataclass(frozen=True)
class ResourceStateSpec:
    """Photon-level description of one encoded doubled-chain resource state."""

    encoding: EncodingSpec
    photon_labels: tuple[str, ...]
    stabilisers: GeneratorSet  # parity-code stabilisers of the four encoded qubits
    logical_ops: GeneratorSet  # the four doubled-chain generators, lifted

    def full_group(self) -> GeneratorSet:
        return GeneratorSet(
            self.photon_labels,
            list(self.stabilisers.generators) + list(self.logical_ops.generators),
        )


def build_encoded_2chain(spec: EncodingSpec) -> ResourceStateSpec:
    """Photon-level stabilisers and lifted chain generators for one state.

    Photons are labelled ``q<chain qubit><a|b>.blk<k>.pos<j>``; the encoded
    qubit blocks are laid out contiguously in chain-qubit order 1a, 1b, 2a,
    2b.  The doubled-chain generators are
        X(1a) X(1b) Z(2a),  Z(1a) X(2a) X(2b),  Z(1a) Z(1b),  Z(2a) Z(2b)
    lifted through the encoding's logical operators.
    """
    if spec.photons_per_state > MAX_PHOTONS_PER_STATE:
        raise ResourceCapError(
            f"{spec.photons_per_state} photons per state exceeds the cap of "
            f"{MAX_PHOTONS_PER_STATE}"
        )
    nm = spec.pairs
    total = 4 * nm
    labels = tuple(
        f"q{eq}.{lab}" for eq in CHAIN_QUBITS for lab in _pair_labels(spec.n, spec.m)
    )
    code_stabs, logical_z, logical_x = parity_code(spec.n, spec.m, spec.variant)

    def lift(op: PauliOperator, slot: int) -> PauliOperator:
        return PauliOperator(
            total, op.x_bits << (slot * nm), op.z_bits << (slot * nm), op.sign
        )

    stabs = [
        lift(s, slot) for slot in range(4) for s in code_stabs.generators
    ]
    q1a, q1b, q2a, q2b = range(4)

    def mul(ops):
        return multiply_all(ops, total)

    chain = [
        mul([lift(logical_x, q1a), lift(logical_x, q1b), lift(logical_z, q2a)]),
        mul([lift(logical_z, q1a), lift(logical_x, q2a), lift(logical_x, q2b)]),
        mul([lift(logical_z, q1a), lift(logical_z, q1b)]),
        mul([lift(logical_z, q2a), lift(logical_z, q2b)]),
    ]
    return ResourceStateSpec(
        encoding=spec,
        photon_labels=labels,
        stabilisers=GeneratorSet(labels, stabs),
        logical_ops=GeneratorSet(labels, chain),
    )


# ---------------------------------------------------------------------------
# Return probabilities
# ---------------------------------------------------------------------------


def analytic_return_prob(spec: EncodingSpec, model: LossModel) -> ReturnProbabilities:
    """Closed-form eigenvalue return probabilities for one encoded Bell.

    The zz outcome needs at least one fully intact block (with the extra
    per-block fair coin in the lo model); the xx outcome needs at least one
    intact pair in every block.  The rotated variant swaps the pair.
    """
    g = model.gamma
    n, m = spec.n, spec.m
    block_full = (1.0 - g) ** m
    if model.kind == "nl":
        p_zz = 1.0 - (1.0 - block_full) ** n
    else:
        p_zz = 1.0 - (1.0 - 0.5 * block_full) ** n
    p_xx = (1.0 - g**m) ** n
    probs = ReturnProbabilities(p_zz, p_xx)
    return probs.swapped() if spec.variant == "rotated" else probs


def brute_force_return_prob(spec: EncodingSpec, model: LossModel) -> ReturnProbabilities:
    """Oracle: enumerate every pair-loss pattern and test recoverability.

    Each of the 2^(n*m) intact/lost patterns is weighted by its probability
    and the two encoded outcomes are decided with
    :func:`ghzloss.pauli.logical_recoverable` on the parity code (a pair is
    one code qubit here; losing the pair removes it from both sides of the
    transversal measurement).  The lo model's per-block coin is folded in
    analytically: with F fully intact blocks the zz outcome survives with
    probability 1 - 2^-F.
    """
    nm = spec.pairs
    if nm > MAX_BRUTE_FORCE_PAIRS:
        raise EnumerationBoundError(
            f"{nm} pairs exceeds the enumeration bound of {MAX_BRUTE_FORCE_PAIRS}"
        )
    g = model.gamma
    # Recoverability is computed in the shor convention and swapped at the
    # end for the rotated variant, mirroring the analytic forms.
    zz_total = 0.0
    xx_total = 0.0
    for pattern in range(1 << nm):
        lost = {q for q in range(nm) if (pattern >> q) & 1}
        k = nm - len(lost)
        weight = (1.0 - g) ** k * g ** len(lost)
        if weight == 0.0:
            continue
        zz_ok = _recoverable_cached(spec.n, spec.m, "z", pattern)
        xx_ok = _recoverable_cached(spec.n, spec.m, "x", pattern)
        if model.kind == "nl":
            zz_total += weight if zz_ok else 0.0
        else:
            full_blocks = _full_block_count(spec.n, spec.m, pattern)
            zz_total += weight * (1.0 - 0.5**full_blocks)
        xx_total += weight if xx_ok else 0.0
    probs = ReturnProbabilities(min(zz_total, 1.0), min(xx_total, 1.0))
    return probs.swapped() if spec.variant == "rotated" else probs


@lru_cache(maxsize=1 << 20)
def _recoverable_cached(n: int, m: int, which: str, pattern: int) -> bool:
    stabs, logical_z, logical_x = parity_code(n, m, "shor")
    lost = {q for q in range(n * m) if (pattern >> q) & 1}
    logical = logical_z if which == "z" else logical_x
    return logical_recoverable(logical, stabs, lost)


def _full_block_count(n: int, m: int, pattern: int) -> int:
    full = 0
    for k in range(n):
        block_mask = ((1 << m) - 1) << (k * m)
        if pattern & block_mask == 0:
            full += 1
    return full


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------


def sample_bell_recovery(
    spec: EncodingSpec, model: LossModel, rng: np.random.Generator
) -> tuple[bool, bool]:
    """One encoded Bell measurement draw: (zz recovered, xx recovered)."""
    zz, xx = sample_bell_recovery_batch(spec, model, rng, 1)
    return bool(zz[0]), bool(xx[0])


def sample_bell_recovery_batch(
    spec: EncodingSpec, model: LossModel, rng: np.random.Generator, count: int
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised draws for `count` independent encoded Bell measurements.

    Draw layout is fixed (pair uniforms first, then lo coins) so results are
    reproducible from the generator state alone; a batch of size 1 consumes
    the stream exactly like the scalar wrapper.
    """
    keep = 1.0 - model.gamma
    u = rng.random((count, spec.n, spec.m))
    intact = u < keep
    block_full = intact.all(axis=2)
    block_any = intact.any(axis=2)
    if model.kind == "lo":
        coins = rng.random((count, spec.n)) < 0.5
        zz = (block_full & coins).any(axis=1)
    else:
        zz = block_full.any(axis=1)
    xx = block_any.all(axis=1)
    if spec.variant == "rotated":
        zz, xx = xx, zz
    return zz, xx


def standard_error(p: float, draws: int) -> float:
    return math.sqrt(max(p * (1.0 - p), 1e-12) / draws)
