"""Signed Pauli operators and stabiliser groups over GF(2).

An operator is stored as ``sign * X^x * Z^z`` with the X block written to the
left of the Z block and ``sign`` in {+1, -1}.  Every generator handled by
this package is X-separable or Z-separable (graph-state style), so group
products stay inside the +/-1 sign group and the imaginary unit never
arises; a qubit carrying both an X and a Z bit is printed as the formal
symbol ``Y`` meaning the product X*Z on that qubit.

Masks are plain Python ints (bit i = qubit i), which gives word-parallel
XOR/AND/popcount for free; the heavy multi-thousand-qubit paths convert to
the packed matrices in :mod:`ghzloss.gf2`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gf2


class DimensionError(ValueError):
    """Operands act on different numbers of qubits."""


class LabelMismatchError(ValueError):
    """Generator sets use different qubit labellings."""


def _parity(v: int) -> int:
    return v.bit_count() & 1


@dataclass(frozen=True)
class PauliOperator:
    """A signed Pauli string on ``num_qubits`` labelled qubits."""

    num_qubits: int
    x_bits: int = 0
    z_bits: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("operator needs at least one qubit")
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        mask = (1 << self.num_qubits) - 1
        if (self.x_bits | self.z_bits) & ~mask:
            raise ValueError("mask exceeds qubit count")

    @property
    def is_identity(self) -> bool:
        return self.x_bits == 0 and self.z_bits == 0

    @property
    def weight(self) -> int:
        return (self.x_bits | self.z_bits).bit_count()

    def support(self) -> set[int]:
        bits = self.x_bits | self.z_bits
        return {i for i in range(self.num_qubits) if (bits >> i) & 1}

    def symplectic_vector(self) -> int:
        """Concatenated (x | z) bit vector, z block shifted up."""
        return self.x_bits | (self.z_bits << self.num_qubits)


def identity(num_qubits: int) -> PauliOperator:
    return PauliOperator(num_qubits)


def single(num_qubits: int, qubit: int, kind: str, sign: int = 1) -> PauliOperator:
    if kind == "X":
        return PauliOperator(num_qubits, 1 << qubit, 0, sign)
    if kind == "Z":
        return PauliOperator(num_qubits, 0, 1 << qubit, sign)
    if kind == "Y":
        return PauliOperator(num_qubits, 1 << qubit, 1 << qubit, sign)
    raise ValueError(f"unknown Pauli kind {kind!r}")


def symplectic_product(p: PauliOperator, q: PauliOperator) -> int:
    """0 iff the operators commute, 1 iff they anticommute."""
    if p.num_qubits != q.num_qubits:
        raise DimensionError(f"{p.num_qubits} vs {q.num_qubits} qubits")
    return _parity(p.x_bits & q.z_bits) ^ _parity(p.z_bits & q.x_bits)


def commutes(p: PauliOperator, q: PauliOperator) -> bool:
    return symplectic_product(p, q) == 0


def multiply(p: PauliOperator, q: PauliOperator) -> PauliOperator:
    """Group product p * q with the +/-1 sign tracked.

    Moving q's X block through p's Z block flips the sign once per
    overlapping site; the global phase i is never produced under the
    X-left-of-Z normal form used here.
    """
    if p.num_qubits != q.num_qubits:
        raise DimensionError(f"{p.num_qubits} vs {q.num_qubits} qubits")
    sign = p.sign * q.sign
    if _parity(p.z_bits & q.x_bits):
        sign = -sign
    return PauliOperator(p.num_qubits, p.x_bits ^ q.x_bits, p.z_bits ^ q.z_bits, sign)


def multiply_all(ops: list[PauliOperator], num_qubits: int) -> PauliOperator:
    acc = identity(num_qubits)
    for op in ops:
        acc = multiply(acc, op)
    return acc


def format_pauli(p: PauliOperator, labels: tuple[str, ...] | None = None) -> str:
    """Signed symbol string, e.g. ``+X1a.Z2b``; identity prints ``+I``."""
    if labels is None:
        labels = tuple(str(i) for i in range(p.num_qubits))
    parts = []
    for i in range(p.num_qubits):
        x = (p.x_bits >> i) & 1
        z = (p.z_bits >> i) & 1
        if x and z:
            parts.append(f"Y{labels[i]}")
        elif x:
            parts.append(f"X{labels[i]}")
        elif z:
            parts.append(f"Z{labels[i]}")
    body = ".".join(parts) if parts else "I"
    return ("+" if p.sign > 0 else "-") + body


def parse_pauli(text: str, labels: tuple[str, ...]) -> PauliOperator:
    """Inverse of :func:`format_pauli` over the given qubit labelling."""
    text = text.strip()
    sign = 1
    if text.startswith(("+", "-")):
        sign = 1 if text[0] == "+" else -1
        text = text[1:]
    index = {lab: i for i, lab in enumerate(labels)}
    x = z = 0
    if text != "I":
        for token in text.split("."):
            kind, lab = token[0], token[1:]
            if lab not in index:
                raise LabelMismatchError(f"unknown qubit label {lab!r}")
            bit = 1 << index[lab]
            if kind in ("X", "Y"):
                x |= bit
            if kind in ("Z", "Y"):
                z |= bit
            if kind not in ("X", "Y", "Z"):
                raise ValueError(f"bad Pauli token {token!r}")
    return PauliOperator(len(labels), x, z, sign)


@dataclass
class GeneratorSet:
    """An ordered list of Pauli generators over a fixed qubit labelling."""

    qubit_labels: tuple[str, ...]
    generators: list[PauliOperator] = field(default_factory=list)

    def __post_init__(self):
        n = len(self.qubit_labels)
        for g in self.generators:
            if g.num_qubits != n:
                raise DimensionError("generator size does not match labelling")

    @property
    def num_qubits(self) -> int:
        return len(self.qubit_labels)

    @property
    def rank(self) -> int:
        return len(canonical_basis(self).generators)

    def is_stabiliser_group(self) -> bool:
        gens = self.generators
        return all(
            commutes(gens[i], gens[j])
            for i in range(len(gens))
            for j in range(i + 1, len(gens))
        )

    def packed_rows(self) -> np.ndarray:
        ncols = 2 * self.num_qubits
        return gf2.pack_ints([g.symplectic_vector() for g in self.generators], ncols)


def canonical_basis(gset: GeneratorSet) -> GeneratorSet:
    """Independent generating set in reduced echelon form (idempotent).

    Row operations are performed as genuine Pauli multiplications so the
    surviving generators keep consistent signs.  Pivots are the lowest set
    bit of each symplectic vector; each pivot bit appears in exactly one
    basis element, which makes reduction order-independent.
    """
    basis: list[tuple[int, PauliOperator]] = []  # (pivot bit, element)
    for op in gset.generators:
        cur = op
        for pivot, b in basis:
            if cur.symplectic_vector() & pivot:
                cur = multiply(cur, b)
        if cur.is_identity:
            continue
        vec = cur.symplectic_vector()
        pivot = vec & -vec
        for k, (pv, b) in enumerate(basis):
            if b.symplectic_vector() & pivot:
                basis[k] = (pv, multiply(b, cur))
        basis.append((pivot, cur))
    basis.sort(key=lambda item: item[0])
    return GeneratorSet(gset.qubit_labels, [b for _, b in basis])


@dataclass(frozen=True)
class Expression:
    """Result of expressing an operator over a canonical basis."""

    coefficients: tuple[int, ...]
    sign_mismatch: int  # +1 when the rebuilt product matches p's sign

    @property
    def matches_sign(self) -> bool:
        return self.sign_mismatch == 1


def express_in_basis(p: PauliOperator, gset: GeneratorSet) -> Expression | None:
    """Coefficients of p over canonical_basis(gset), or None if not in span.

    The rebuilt product reproduces p up to sign; the sign discrepancy is
    reported in the result rather than raised.
    """
    basis = canonical_basis(gset)
    if p.num_qubits != basis.num_qubits:
        raise DimensionError("operator does not match basis labelling")
    cur = p
    coeffs = [0] * len(basis.generators)
    for i, b in enumerate(basis.generators):
        low = b.symplectic_vector() & -b.symplectic_vector()
        if cur.symplectic_vector() & low:
            cur = multiply(cur, b)
            coeffs[i] = 1
    if cur.x_bits or cur.z_bits:
        return None
    rebuilt = multiply_all(
        [b for i, b in enumerate(basis.generators) if coeffs[i]], basis.num_qubits
    )
    return Expression(tuple(coeffs), 1 if rebuilt.sign == p.sign else -1)


def intersect(a: GeneratorSet, b: GeneratorSet) -> GeneratorSet:
    """Generators of span(a) ∩ span(b), signed from the a-side expression."""
    if a.qubit_labels != b.qubit_labels:
        raise LabelMismatchError("generator sets use different qubit labellings")
    elements = intersect_with_expressions(a, b)
    return GeneratorSet(a.qubit_labels, [op for op, _, _ in elements])


def intersect_with_expressions(
    a: GeneratorSet, b: GeneratorSet
) -> list[tuple[PauliOperator, list[int], list[int]]]:
    """Intersection basis with, per element, the a- and b-side generator combos.

    The returned operator carries the a-side sign; multiplying out the b-side
    combo may give the opposite sign, which is exactly the deterministic
    parity callers need to record.
    """
    if a.qubit_labels != b.qubit_labels:
        raise LabelMismatchError("generator sets use different qubit labellings")
    ncols = 2 * a.num_qubits
    if not a.generators or not b.generators:
        return []
    raw = gf2.intersect_spans(a.packed_rows(), b.packed_rows(), ncols)
    out = []
    for _vec, combo_a, combo_b in raw:
        idx_a = [i for i in range(len(a.generators)) if gf2.get_bit(combo_a, i)]
        idx_b = [j for j in range(len(b.generators)) if gf2.get_bit(combo_b, j)]
        op = multiply_all([a.generators[i] for i in idx_a], a.num_qubits)
        out.append((op, idx_a, idx_b))
    return out


def logical_recoverable(
    logical: PauliOperator, stabilisers: GeneratorSet, lost: set[int]
) -> bool:
    """True iff some stabiliser-equivalent of `logical` avoids the lost qubits.

    Solved as a GF(2) linear system on the lost-qubit columns: pick a subset
    T of stabilisers with (logical * prod T) supported away from `lost`.
    """
    if logical.num_qubits != stabilisers.num_qubits:
        raise DimensionError("logical does not match stabiliser labelling")
    for s in stabilisers.generators:
        if not commutes(logical, s):
            raise ValueError("logical must commute with all stabilisers")
    lost_list = sorted(lost)
    if not lost_list:
        return True
    gens = stabilisers.generators
    if not gens:
        support = logical.x_bits | logical.z_bits
        return all(((support >> q) & 1) == 0 for q in lost_list)
    # Equations: for each lost qubit, the x bit and the z bit must cancel.
    ncols = 2 * len(lost_list)
    rows = []
    for g in gens:
        row = 0
        for k, q in enumerate(lost_list):
            row |= ((g.x_bits >> q) & 1) << (2 * k)
            row |= ((g.z_bits >> q) & 1) << (2 * k + 1)
        rows.append(row)
    rhs = 0
    for k, q in enumerate(lost_list):
        rhs |= ((logical.x_bits >> q) & 1) << (2 * k)
        rhs |= ((logical.z_bits >> q) & 1) << (2 * k + 1)
    packed = gf2.pack_ints(rows, ncols)
    return gf2.solve(packed, ncols, gf2.pack_int(rhs, ncols)) is not None
