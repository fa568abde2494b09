"""The 16-dimensional hypercomplex algebra and its ground-truth product.

The algebra has a real unit (index 0) and fifteen imaginary units
i1..i15.  The four generators satisfy i1^2 = +1, i2^2 = i3^2 = i4^2 = -1
and anti-commute pairwise; composite units are ascending ordered products
(i5 = i1*i2, ..., i15 = i1*i2*i3*i4).  Everything else in the package is
checked against the table built here and against the schoolbook product.
"""

from __future__ import annotations

import os
from typing import NamedTuple

from .exactnum import lf_from_b
from .linalg import Mat

DIM = 16

# composite-unit layout: index -> generator bitmask (bit g-1 for generator g)
_INDEX_TO_MASK = (
    0b0000,
    0b0001, 0b0010, 0b0100, 0b1000,
    0b0011, 0b0101, 0b1001, 0b0110, 0b1010, 0b1100,
    0b0111, 0b1011, 0b1101, 0b1110,
    0b1111,
)
_MASK_TO_INDEX = {m: i for i, m in enumerate(_INDEX_TO_MASK)}

# squares of the generators i1..i4
_GEN_SQUARE = {1: 1, 2: -1, 3: -1, 4: -1}


class SignedBasis(NamedTuple):
    """A product result +-i_index; index 0 is the real unit."""

    sign: int
    index: int


class MultTable:
    """16x16 grid of SignedBasis; entries[p][q] = i_p * i_q."""

    def __init__(self, entries):
        entries = [list(row) for row in entries]
        if len(entries) != DIM or any(len(r) != DIM for r in entries):
            raise ValueError("table must be 16x16")
        for row in entries:
            for e in row:
                if e.sign not in (-1, 1) or not 0 <= e.index < DIM:
                    raise ValueError(f"bad table entry {e}")
        self.entries = [tuple(row) for row in entries]

    def __getitem__(self, p: int):
        return self.entries[p]

    def __eq__(self, other) -> bool:
        if not isinstance(other, MultTable):
            return NotImplemented
        return self.entries == other.entries

    def is_unital(self) -> bool:
        return all(
            self.entries[0][q] == SignedBasis(1, q) and self.entries[p][0] == SignedBasis(1, p)
            for p in range(DIM)
            for q in range(DIM)
        )

    def rows_are_permutations(self) -> bool:
        for p in range(DIM):
            if sorted(e.index for e in self.entries[p]) != list(range(DIM)):
                return False
        for q in range(DIM):
            if sorted(self.entries[p][q].index for p in range(DIM)) != list(range(DIM)):
                return False
        return True

    def associativity_failures(self) -> list[tuple[int, int, int]]:
        """All basis triples (p, q, r) with (i_p i_q) i_r != i_p (i_q i_r)."""
        bad = []
        t = self.entries
        for p in range(DIM):
            for q in range(DIM):
                s1, k1 = t[p][q]
                for r in range(DIM):
                    sl, kl = t[k1][r]
                    s2, k2 = t[q][r]
                    sr, kr = t[p][k2]
                    if kl != kr or s1 * sl != s2 * sr:
                        bad.append((p, q, r))
        return bad

    def diagonal_signs(self) -> list[int]:
        """Signs of the unit squares i_p^2 (+-1)."""
        return [self.entries[p][p].sign for p in range(DIM)]


def _blade_mul(mask1: int, mask2: int) -> SignedBasis:
    # reorder the concatenated generator strings into ascending order,
    # one sign flip per transposition, then cancel squared generators
    sign = 1
    for g in range(1, 5):
        if mask2 & (1 << (g - 1)):
            higher = mask1 >> g  # generators in mask1 strictly greater than g
            if bin(higher).count("1") % 2 == 1:
                sign = -sign
    common = mask1 & mask2
    for g in range(1, 5):
        if common & (1 << (g - 1)):
            sign *= _GEN_SQUARE[g]
    return SignedBasis(sign, _MASK_TO_INDEX[mask1 ^ mask2])


def build_table_from_generators() -> MultTable:
    """Ground-truth table: associative by construction."""
    entries = [
        [_blade_mul(_INDEX_TO_MASK[p], _INDEX_TO_MASK[q]) for q in range(DIM)]
        for p in range(DIM)
    ]
    return MultTable(entries)


def _asset_dir() -> str:
    override = os.environ.get("DIRAC_ASSET_DIR")
    if override:
        return override
    return os.path.join(os.path.dirname(__file__), "assets")


def parse_table_text(text: str) -> MultTable:
    """Parse the documented table format: 16 lines of 16 tokens, each an
    optional '-' followed by an index 0..15 ('-5' means -i5)."""
    rows = []
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if len(lines) != DIM:
        raise ValueError(f"expected 16 table rows, got {len(lines)}")
    for ln in lines:
        tokens = ln.split()
        if len(tokens) != DIM:
            raise ValueError(f"expected 16 tokens per row, got {len(tokens)}: {ln!r}")
        row = []
        for tok in tokens:
            sign = 1
            if tok.startswith("-"):
                sign = -1
                tok = tok[1:]
            row.append(SignedBasis(sign, int(tok)))
        rows.append(row)
    return MultTable(rows)


def parse_printed_table(asset_dir: str | None = None) -> MultTable:
    """The reference table shipped as a static asset, no corrections applied."""
    path = os.path.join(asset_dir or _asset_dir(), "table_printed.txt")
    with open(path, encoding="ascii") as fh:
        return parse_table_text(fh.read())


def table_errata(printed: MultTable, derived: MultTable):
    """Cells where two tables disagree, sorted by (row, col)."""
    diffs = []
    for p in range(DIM):
        for q in range(DIM):
            if printed[p][q] != derived[p][q]:
                diffs.append((p, q, printed[p][q], derived[p][q]))
    return diffs


class DiracNumber:
    """16 coefficients over a scalar ring; coeffs[0] is the real part."""

    __slots__ = ("coeffs", "ring")

    def __init__(self, coeffs, ring):
        coeffs = list(coeffs)
        if len(coeffs) != DIM:
            raise ValueError("a Dirac number has exactly 16 coefficients")
        self.coeffs = coeffs
        self.ring = ring

    @classmethod
    def from_ints(cls, values, ring) -> "DiracNumber":
        return cls([ring.wrap(v) for v in values], ring)

    @classmethod
    def basis(cls, index: int, ring) -> "DiracNumber":
        coeffs = [ring.zero()] * DIM
        coeffs[index] = ring.one()
        return cls(coeffs, ring)

    @classmethod
    def zero(cls, ring) -> "DiracNumber":
        return cls([ring.zero()] * DIM, ring)

    def add(self, other: "DiracNumber") -> "DiracNumber":
        r = self.ring
        return DiracNumber([r.add(a, b) for a, b in zip(self.coeffs, other.coeffs)], r)

    def neg(self) -> "DiracNumber":
        r = self.ring
        return DiracNumber([r.neg(a) for a in self.coeffs], r)

    def scale(self, k) -> "DiracNumber":
        r = self.ring
        return DiracNumber([r.mul(k, a) for a in self.coeffs], r)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiracNumber):
            return NotImplemented
        return all(self.ring.eq(a, b) for a, b in zip(self.coeffs, other.coeffs))

    def __repr__(self) -> str:
        return f"DiracNumber({self.coeffs!r})"


def mul_schoolbook(a: DiracNumber, b: DiracNumber, table: MultTable) -> DiracNumber:
    """Direct product: one 16-term accumulation chain per output.

    Issues exactly 256 scalar multiplications and 240 additions; sign
    flips are negations, never multiplications.  Accumulation order is
    fixed (ascending left index) so exact results and operation counts
    are deterministic.
    """
    ring = a.ring
    out = [None] * DIM
    for n in range(DIM):
        an = a.coeffs[n]
        row = table[n]
        for m in range(DIM):
            sign, k = row[m]
            p = ring.mul(an, b.coeffs[m])
            acc = out[k]
            if acc is None:
                out[k] = ring.neg(p) if sign < 0 else p
            elif sign < 0:
                out[k] = ring.sub(acc, p)
            else:
                out[k] = ring.add(acc, p)
    return DiracNumber(out, ring)


def derive_b_matrix(b: DiracNumber, table: MultTable) -> Mat:
    """The 16x16 matrix M with M . a = a * b for every a.

    Row k, column n holds sign * b_m where i_n * i_m = sign * i_k; for
    each (k, n) exactly one such m exists.
    """
    ring = b.ring
    entries = [[None] * DIM for _ in range(DIM)]
    for n in range(DIM):
        for m in range(DIM):
            sign, k = table[n][m]
            val = b.coeffs[m]
            entries[k][n] = ring.neg(val) if sign < 0 else val
    return Mat(DIM, DIM, entries)


def symbolic_b() -> DiracNumber:
    """The fully symbolic right-hand operand over linear forms."""
    from .exactnum import FORMS

    return DiracNumber([lf_from_b(m) for m in range(DIM)], FORMS)


def symbolic_b_matrix(table: MultTable | None = None) -> Mat:
    if table is None:
        table = build_table_from_generators()
    return derive_b_matrix(symbolic_b(), table)


def parse_signed_index_matrix(text: str, rows: int, cols: int):
    """Parse a grid of signed indices ('-5' = -1 at index 5), one row per line."""
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if len(lines) != rows:
        raise ValueError(f"expected {rows} rows, got {len(lines)}")
    out = []
    for ln in lines:
        tokens = ln.split()
        if len(tokens) != cols:
            raise ValueError(f"expected {cols} tokens per row: {ln!r}")
        row = []
        for tok in tokens:
            sign = 1
            if tok.startswith("-"):
                sign = -1
                tok = tok[1:]
            row.append((sign, int(tok)))
        out.append(row)
    return out


def parse_printed_b_matrix(asset_dir: str | None = None) -> Mat:
    """The reference product matrix transcription, as linear forms."""
    path = os.path.join(asset_dir or _asset_dir(), "b16_printed.txt")
    with open(path, encoding="ascii") as fh:
        grid = parse_signed_index_matrix(fh.read(), DIM, DIM)
    entries = []
    for row in grid:
        entries.append([
            -lf_from_b(m) if sign < 0 else lf_from_b(m) for sign, m in row
        ])
    return Mat(DIM, DIM, entries)


def b_matrix_errata(printed: Mat, derived: Mat):
    """Best-effort cell diff of the transcribed reference matrix."""
    diffs = []
    for r in range(DIM):
        for c in range(DIM):
            if printed.entries[r][c] != derived.entries[r][c]:
                diffs.append((r, c, printed.entries[r][c], derived.entries[r][c]))
    return diffs
