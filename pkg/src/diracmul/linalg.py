"""Small dense matrix toolkit over any scalar ring.

Covers exactly what the factorized pipeline needs: Kronecker products,
direct sums, signed permutations, the 2x2 Hadamard matrix, the 2x3/3x2
combiners, and the two block-decomposition templates.  Structural
matrices (entries in {-1, 0, +1}) are applied to vectors by skipping
zero entries and folding +-1 into copy/negate/add/subtract, which is
what makes operation counting faithful.
"""

from __future__ import annotations


class Mat:
    """Row-major rows x cols grid; entries belong to whatever ring the
    caller is working over (plain ints for structural matrices)."""

    __slots__ = ("rows", "cols", "entries")

    def __init__(self, rows: int, cols: int, entries):
        entries = [list(r) for r in entries]
        if len(entries) != rows or any(len(r) != cols for r in entries):
            raise ValueError(f"shape mismatch: want {rows}x{cols}")
        self.rows = rows
        self.cols = cols
        self.entries = entries

    @staticmethod
    def from_rows(entries) -> "Mat":
        return Mat(len(entries), len(entries[0]), entries)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Mat):
            return NotImplemented
        return (
            self.rows == other.rows
            and self.cols == other.cols
            and self.entries == other.entries
        )

    def __repr__(self) -> str:
        return f"Mat({self.rows}x{self.cols})"

    def transpose(self) -> "Mat":
        return Mat(self.cols, self.rows, [[self.entries[r][c] for r in range(self.rows)] for c in range(self.cols)])

    def block(self, r0: int, c0: int, rows: int, cols: int) -> "Mat":
        return Mat(rows, cols, [row[c0 : c0 + cols] for row in self.entries[r0 : r0 + rows]])

    def map(self, fn) -> "Mat":
        return Mat(self.rows, self.cols, [[fn(e) for e in row] for row in self.entries])

    def is_structural(self) -> bool:
        return all(e in (-1, 0, 1) for row in self.entries for e in row)

    def serialize(self) -> str:
        """Plain text grid: header 'rows cols', then row-major entries."""
        lines = [f"{self.rows} {self.cols}"]
        for row in self.entries:
            lines.append(" ".join(str(e) for e in row))
        return "\n".join(lines) + "\n"


def eye(n: int) -> Mat:
    return Mat(n, n, [[1 if r == c else 0 for c in range(n)] for r in range(n)])


def zeros(rows: int, cols: int) -> Mat:
    return Mat(rows, cols, [[0] * cols for _ in range(rows)])


H2 = Mat(2, 2, [[1, 1], [1, -1]])
T2X3 = Mat(2, 3, [[1, 0, 1], [0, 1, 1]])
T3X2 = Mat(3, 2, [[1, 0], [0, 1], [1, 1]])


def kron(a: Mat, b: Mat) -> Mat:
    out = zeros(a.rows * b.rows, a.cols * b.cols)
    for i in range(a.rows):
        for j in range(a.cols):
            aij = a.entries[i][j]
            if aij == 0:
                continue
            for k in range(b.rows):
                for l in range(b.cols):
                    out.entries[i * b.rows + k][j * b.cols + l] = aij * b.entries[k][l]
    return out


def dirsum(blocks) -> Mat:
    blocks = list(blocks)
    if not blocks:
        raise ValueError("direct sum of no blocks")
    rows = sum(b.rows for b in blocks)
    cols = sum(b.cols for b in blocks)
    out = zeros(rows, cols)
    r0 = c0 = 0
    for b in blocks:
        for i in range(b.rows):
            out.entries[r0 + i][c0 : c0 + b.cols] = list(b.entries[i])
        r0 += b.rows
        c0 += b.cols
    return out


def mat_add(ring, a: Mat, b: Mat) -> Mat:
    if (a.rows, a.cols) != (b.rows, b.cols):
        raise ValueError("size mismatch")
    return Mat(a.rows, a.cols, [[ring.add(x, y) for x, y in zip(ra, rb)] for ra, rb in zip(a.entries, b.entries)])


def mat_sub(ring, a: Mat, b: Mat) -> Mat:
    if (a.rows, a.cols) != (b.rows, b.cols):
        raise ValueError("size mismatch")
    return Mat(a.rows, a.cols, [[ring.sub(x, y) for x, y in zip(ra, rb)] for ra, rb in zip(a.entries, b.entries)])


def mat_neg(ring, a: Mat) -> Mat:
    return a.map(ring.neg)


def mat_halve(ring, a: Mat) -> Mat:
    return a.map(ring.halve)


def mat_mul(ring, a: Mat, b: Mat) -> Mat:
    if a.cols != b.rows:
        raise ValueError("size mismatch")
    out = []
    for i in range(a.rows):
        row = []
        for j in range(b.cols):
            acc = ring.zero()
            for k in range(a.cols):
                acc = ring.add(acc, ring.mul(a.entries[i][k], b.entries[k][j]))
            row.append(acc)
        out.append(row)
    return Mat(a.rows, b.cols, out)


def int_mat_mul(a: Mat, b: Mat) -> Mat:
    if a.cols != b.rows:
        raise ValueError("size mismatch")
    out = zeros(a.rows, b.cols)
    for i in range(a.rows):
        for k in range(a.cols):
            aik = a.entries[i][k]
            if aik == 0:
                continue
            for j in range(b.cols):
                if b.entries[k][j]:
                    out.entries[i][j] += aik * b.entries[k][j]
    return out


def lift(ring, a: Mat) -> Mat:
    """Turn an integer matrix into a ring-valued one."""
    return a.map(ring.wrap)


def structural_apply(ring, m: Mat, vec):
    """Matrix-vector product for a {-1,0,+1} matrix over ring scalars.

    Zero entries are skipped (structurally free), +-1 entries fold into
    copy/negate for the first term and add/subtract afterwards, so the
    ring only ever sees genuine two-operand additions.
    """
    if len(vec) != m.cols:
        raise ValueError("vector length mismatch")
    out = []
    for row in m.entries:
        acc = None
        for c, e in enumerate(row):
            if e == 0:
                continue
            if acc is None:
                acc = ring.neg(vec[c]) if e < 0 else vec[c]
            elif e < 0:
                acc = ring.sub(acc, vec[c])
            else:
                acc = ring.add(acc, vec[c])
        out.append(ring.zero() if acc is None else acc)
    return out


class SignedPermutation:
    """output[i] = signs[i] * input[src[i]]; zero-based internally."""

    __slots__ = ("size", "src", "signs")

    def __init__(self, src, signs=None):
        src = list(src)
        n = len(src)
        if sorted(src) != list(range(n)):
            raise ValueError("src is not a permutation of 0..n-1")
        signs = [1] * n if signs is None else list(signs)
        if len(signs) != n or any(s not in (-1, 1) for s in signs):
            raise ValueError("signs must be +-1, one per coordinate")
        self.size = n
        self.src = src
        self.signs = signs

    @classmethod
    def identity(cls, n: int) -> "SignedPermutation":
        return cls(list(range(n)))

    @classmethod
    def from_one_based(cls, order, neg_positions=()) -> "SignedPermutation":
        """Reference index lists are one-based; negations name output slots."""
        src = [o - 1 for o in order]
        signs = [1] * len(src)
        for pos in neg_positions:
            signs[pos - 1] = -1
        return cls(src, signs)

    def apply(self, ring, vec):
        if len(vec) != self.size:
            raise ValueError("vector length mismatch")
        out = []
        for i in range(self.size):
            v = vec[self.src[i]]
            out.append(ring.neg(v) if self.signs[i] < 0 else v)
        return out

    def compose(self, other: "SignedPermutation") -> "SignedPermutation":
        """self after other: (self.compose(other)).apply = self.apply(other.apply(.))."""
        if self.size != other.size:
            raise ValueError("size mismatch")
        src = [other.src[self.src[i]] for i in range(self.size)]
        signs = [self.signs[i] * other.signs[self.src[i]] for i in range(self.size)]
        return SignedPermutation(src, signs)

    def inverse(self) -> "SignedPermutation":
        src = [0] * self.size
        signs = [1] * self.size
        for i in range(self.size):
            src[self.src[i]] = i
            signs[self.src[i]] = self.signs[i]
        return SignedPermutation(src, signs)

    def concat(self, other: "SignedPermutation") -> "SignedPermutation":
        """Direct sum: this permutation on the first block, other on the rest."""
        src = self.src + [s + self.size for s in other.src]
        return SignedPermutation(src, self.signs + other.signs)

    def is_identity(self) -> bool:
        return self.src == list(range(self.size)) and all(s == 1 for s in self.signs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SignedPermutation):
            return NotImplemented
        return self.src == other.src and self.signs == other.signs

    def __repr__(self) -> str:
        return f"SignedPermutation(src={self.src}, signs={self.signs})"


def signed_perm_matrix(p: SignedPermutation) -> Mat:
    """Matrix form: exactly one +-1 per row and column."""
    out = zeros(p.size, p.size)
    for i in range(p.size):
        out.entries[i][p.src[i]] = p.signs[i]
    return out


def perm_concat(perms) -> SignedPermutation:
    acc = None
    for p in perms:
        acc = p if acc is None else acc.concat(p)
    return acc


def _check_blocks(a: Mat, b: Mat) -> int:
    if a.rows != a.cols or b.rows != b.cols or a.rows != b.rows:
        raise ValueError("blocks must be square and equally sized")
    return a.rows


def template_AB(a: Mat, b: Mat) -> Mat:
    """[[A, B], [B, A]]: one halved butterfly sandwich multiplies it."""
    n = _check_blocks(a, b)
    rows = [list(a.entries[i]) + list(b.entries[i]) for i in range(n)]
    rows += [list(b.entries[i]) + list(a.entries[i]) for i in range(n)]
    return Mat(2 * n, 2 * n, rows)


def template_EF(e: Mat, f: Mat, ring=None) -> Mat:
    """[[E, F], [F, -E]]: one 2x3/3x2 combiner sandwich multiplies it.

    Pass a ring for non-integer entries (negation comes from it).
    """
    n = _check_blocks(e, f)
    neg = (lambda x: -x) if ring is None else ring.neg
    rows = [list(e.entries[i]) + list(f.entries[i]) for i in range(n)]
    rows += [list(f.entries[i]) + [neg(x) for x in e.entries[i]] for i in range(n)]
    return Mat(2 * n, 2 * n, rows)


def template_AB_factored(ring, a: Mat, b: Mat) -> Mat:
    """(H2 (x) I_n) . 1/2 (A+B (+) A-B) . (H2 (x) I_n), evaluated entrywise."""
    n = a.rows
    h = lift(ring, kron(H2, eye(n)))
    mid = dirsum_ring([mat_halve(ring, mat_add(ring, a, b)), mat_halve(ring, mat_sub(ring, a, b))], ring)
    return mat_mul(ring, mat_mul(ring, h, mid), h)


def template_EF_factored(ring, e: Mat, f: Mat) -> Mat:
    """(T2x3 (x) I_n) . (E-F (+) -(E+F) (+) F) . (T3x2 (x) I_n)."""
    n = e.rows
    left = lift(ring, kron(T2X3, eye(n)))
    right = lift(ring, kron(T3X2, eye(n)))
    mid = dirsum_ring(
        [mat_sub(ring, e, f), mat_neg(ring, mat_add(ring, e, f)), f], ring
    )
    return mat_mul(ring, mat_mul(ring, left, mid), right)


def dirsum_ring(blocks, ring) -> Mat:
    blocks = list(blocks)
    rows = sum(b.rows for b in blocks)
    cols = sum(b.cols for b in blocks)
    out = Mat(rows, cols, [[ring.zero()] * cols for _ in range(rows)])
    r0 = c0 = 0
    for b in blocks:
        for i in range(b.rows):
            out.entries[r0 + i][c0 : c0 + b.cols] = list(b.entries[i])
        r0 += b.rows
        c0 += b.cols
    return out
