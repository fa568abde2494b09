"""Reconstruction of the factorized pipeline from its seed data.

The constant stages of the fast product are only partially pinned down by
the reference material: the combiner matrices are given explicitly, but
the outer signed permutations and some block reorderings have to be
recovered.  This module rebuilds everything from first principles:

* the ground-truth product matrix (from the generator-built table);
* the two transcribed 8x8 seed matrices (``m8_diff``/``m8_negsum``);
* the stated row/column shuffles for each recursion branch.

It solves for the outer signed permutations, checks every intermediate
block structure, derives the diagonal-block coefficient formulas for all
three refinement levels, and can regenerate the plain-text stage assets
shipped with the package.  The symbolic pipeline identity (see
``fastmult.verify_pipeline``) is the final arbiter for all of it.

Run ``python -m diracmul.derive --write`` to regenerate the assets in
place; the test suite re-derives them into a scratch directory and
asserts they match what is shipped.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

from .exactnum import FORMS, LinearForm, lf_from_b
from .linalg import (
    Mat,
    SignedPermutation,
    mat_add,
    mat_halve,
    mat_neg,
    mat_sub,
    perm_concat,
)

DIM = 16

# Row/column shuffles of the recursion branches, exactly as stated for the
# reference decomposition: (order, negated positions), both one-based; the
# negations apply to positions of the shuffled matrix.
BRANCH_A = {  # first 8x8 block-pair target [[A,B],[B,A]]
    "cols": ([1, 2, 4, 7, 5, 3, 8, 6], [6, 8]),
    "rows": ([1, 7, 3, 4, 5, 6, 2, 8], [6, 7]),
}
BRANCH_B = {  # second 8x8 block-pair target [[A,B],[B,A]]
    # The stated row order {1,7,3,4,5,6,2,8} does not produce the displayed
    # matrix (or any [[A,B],[B,A]] shape); the displayed result pins the row
    # order to the same list as the columns.  Recorded in the errata notes.
    "cols": ([1, 2, 4, 7, 5, 3, 8, 6], [6, 8]),
    "rows": ([1, 2, 4, 7, 5, 3, 8, 6], [6, 8]),
}
BRANCH_C = {  # third 8x8 target [[E,F],[F,-E]]
    "cols": ([4, 2, 3, 8, 1, 6, 7, 5], []),
    "rows": ([1, 6, 7, 5, 4, 2, 3, 8], [5, 6, 7, 8]),
}
BRANCH_D = {  # 4x4 -> [[A,B],[B,A]] (used twice)
    "cols": ([1, 2, 4, 3], [4]),
    "rows": ([1, 2, 4, 3], [4]),
}
BRANCH_E = {  # 4x4 -> [[E,F],[F,-E]]
    "cols": ([1, 4, 3, 2], []),
    "rows": ([1, 2, 3, 4], [4]),
}
BRANCH_F = {  # 2x2 sign fix before the final butterfly
    "cols": ([1, 2], []),
    "rows": ([1, 2], [2]),
}

# Shared two-term combinations of the right-hand coefficients.  Every
# 4x4-block cell is one addition of two "quad" terms, every 2x2-block cell
# one addition of two "duo" terms, each 1x1 block one addition of a duo and
# a quad term.  Keeping the two families separate (even where contents
# coincide up to sign) is what reproduces the published cost accounting.
QUAD_POOL = [
    (0, 5), (10, 15), (1, 2), (13, 14),
    (-3, 4), (-11, 12), (-6, 7), (-8, 9),
    (6, 7), (8, 9), (3, 4), (11, 12),
    (1, -2), (13, -14), (0, -5), (10, -15),
]
DUO_POOL = [
    (-4, 10), (-12, 15), (-7, -9), (-13, -14),
    (7, -9), (-13, 14), (-4, -10), (12, 15),
]


class ReconstructionError(RuntimeError):
    """A block failed to take the structure the factorization requires."""


# ---------------------------------------------------------------------------
# linear-form helpers


def form_to_signed_terms(form: LinearForm):
    """Decompose a +-1-coefficient form into a tuple of (sign, index)."""
    if not form.coeffs[0].is_zero():
        raise ReconstructionError("form has a constant term")
    terms = []
    for m, c in enumerate(form.coeffs[1:]):
        if c.is_zero():
            continue
        cn = c.normalized()
        if cn.exp != 0 or cn.num not in (1, -1):
            raise ReconstructionError(f"non-unit coefficient {cn} on b{m}")
        terms.append((cn.num, m))
    return tuple(terms)


def single_signed_entry(form: LinearForm):
    """(sign, index) for a form that is exactly one +-b_m."""
    terms = form_to_signed_terms(form)
    if len(terms) != 1:
        raise ReconstructionError(f"expected a single-term form, got {form!r}")
    return terms[0]


# ---------------------------------------------------------------------------
# seed-matrix loading


def _asset_dir() -> str:
    override = os.environ.get("DIRAC_ASSET_DIR")
    if override:
        return override
    return os.path.join(os.path.dirname(__file__), "assets")


def load_cell_grid(path: str) -> Mat:
    """Cell-per-line grid of signed index lists, as linear forms."""
    with open(path, encoding="ascii") as fh:
        lines = [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    rows, cols = (int(x) for x in lines[0].split())
    cells = lines[1:]
    if len(cells) != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} cells, got {len(cells)}")
    entries = []
    it = iter(cells)
    for _ in range(rows):
        row = []
        for _ in range(cols):
            toks = next(it).split()
            acc = FORMS.zero()
            for tok in toks:
                sign = -1 if tok.startswith("-") else 1
                idx = int(tok.lstrip("+-"))
                term = lf_from_b(idx)
                acc = acc + (-term if sign < 0 else term)
            row.append(acc)
        entries.append(row)
    return Mat(rows, cols, entries)


def load_seed_matrices(asset_dir: str | None = None):
    d = asset_dir or _asset_dir()
    diff = load_cell_grid(os.path.join(d, "m8_diff.txt"))
    negsum = load_cell_grid(os.path.join(d, "m8_negsum.txt"))
    return diff, negsum


# ---------------------------------------------------------------------------
# reorder machinery


def reorder_perms(branch):
    row_order, row_negs = branch["rows"]
    col_order, col_negs = branch["cols"]
    return (
        SignedPermutation.from_one_based(row_order, row_negs),
        SignedPermutation.from_one_based(col_order, col_negs),
    )


def apply_reorder(m: Mat, branch) -> Mat:
    """Shuffle rows/columns and apply the stated negations (new positions)."""
    rp, cp = reorder_perms(branch)
    n = m.rows
    out = []
    for i in range(n):
        src_row = m.entries[rp.src[i]]
        row = []
        for j in range(m.cols):
            v = src_row[cp.src[j]]
            if rp.signs[i] * cp.signs[j] < 0:
                v = -v
            row.append(v)
        out.append(row)
    return Mat(n, m.cols, out)


def split_ab(m: Mat):
    """Check [[A,B],[B,A]] structure and return (A, B)."""
    n = m.rows // 2
    a = m.block(0, 0, n, n)
    b = m.block(0, n, n, n)
    if m.block(n, 0, n, n) != b or m.block(n, n, n, n) != a:
        raise ReconstructionError("matrix does not have the [[A,B],[B,A]] structure")
    return a, b

def split_ef(m: Mat):
    """Check [[E,F],[F,-E]] structure and return (E, F)."""
    n = m.rows // 2
    e = m.block(0, 0, n, n)
    f = m.block(0, n, n, n)
    if m.block(n, 0, n, n) != f or m.block(n, n, n, n) != mat_neg(FORMS, e):
        raise ReconstructionError("matrix does not have the [[E,F],[F,-E]] structure")
    return e, f


# ---------------------------------------------------------------------------
# top-level signed-permutation solver


def _signed_entry_grid(m: Mat):
    return [[single_signed_entry(m.entries[r][c]) for c in range(m.cols)] for r in range(m.rows)]


def solve_outer_permutations(m16: Mat, b16: Mat):
    """Find signed permutations R, C with  B16 = R . M16 . C.

    Both matrices have one +-b_m per row and column, so a candidate image
    for the first row forces the column map; the remaining rows then
    either fall into place or refute the candidate.
    """
    gm = _signed_entry_grid(m16)
    gb = _signed_entry_grid(b16)
    # b-index -> (column, sign) lookup per row of the target
    lookup = []
    for r in range(DIM):
        d = {}
        for c in range(DIM):
            s, m = gb[r][c]
            d[m] = (c, s)
        lookup.append(d)

    for r0 in range(DIM):
        for rho0 in (1, -1):
            pi = [0] * DIM
            kappa = [0] * DIM
            ok = True
            for j in range(DIM):
                s, m = gm[0][j]
                c, s_b = lookup[r0][m]
                pi[j] = c
                kappa[j] = rho0 * s * s_b  # s_b = rho0 * kappa_j * s
            rowmap = [r0]
            rho = [rho0]
            used = {r0}
            for i in range(1, DIM):
                s0, m0 = gm[i][0]
                found = None
                for r in range(DIM):
                    if r in used:
                        continue
                    c, s_b = lookup[r][m0]
                    if c != pi[0]:
                        continue
                    rho_i = s_b * kappa[0] * s0
                    good = True
                    for j in range(1, DIM):
                        s, m = gm[i][j]
                        c, s_b = lookup[r][m]
                        if c != pi[j] or s_b != rho_i * kappa[j] * s:
                            good = False
                            break
                    if good:
                        found = (r, rho_i)
                        break
                if found is None:
                    ok = False
                    break
                rowmap.append(found[0])
                rho.append(found[1])
                used.add(found[0])
            if not ok:
                continue
            # R[rowmap[i]][i] = rho[i]  ->  out[rowmap[i]] = rho[i] * in[i]
            r_src = [0] * DIM
            r_signs = [1] * DIM
            for i in range(DIM):
                r_src[rowmap[i]] = i
                r_signs[rowmap[i]] = rho[i]
            # C[j][pi[j]] = kappa[j]    ->  out[j] = kappa[j] * in[pi[j]]
            return SignedPermutation(r_src, r_signs), SignedPermutation(pi, kappa)
    raise ReconstructionError("no signed permutations link the seed blocks to the product matrix")


# ---------------------------------------------------------------------------
# block-formula derivation


@dataclass
class BlockSpec:
    """One diagonal block: name, cell formulas, halving flag, pool family."""

    name: str
    size: int
    halved: bool
    family: str  # quad | duo | mixed | direct
    cells: list  # row-major LinearForm list

    @property
    def dim(self) -> int:
        return self.size


def _block(name, size, halved, family, mat: Mat) -> BlockSpec:
    cells = [mat.entries[i][j] for i in range(size) for j in range(size)]
    return BlockSpec(name, size, halved, family, cells)


@dataclass
class Derivation:
    """Everything reconstructed from the seed data."""

    outer_rows: SignedPermutation  # R with B16 = R . M16 . C
    outer_cols: SignedPermutation
    blocks_level1: list
    blocks_level2: list
    blocks_level3: list
    perm_in_24: SignedPermutation
    perm_out_24: SignedPermutation
    perm_in_28: SignedPermutation
    perm_out_28: SignedPermutation
    perm_out_30: SignedPermutation
    m16: Mat


def derive_all(asset_dir: str | None = None, b16: Mat | None = None) -> Derivation:
    from .algebra import symbolic_b_matrix

    if b16 is None:
        b16 = symbolic_b_matrix()
    diff, negsum = load_seed_matrices(asset_dir)

    # seed blocks:  diff = A8 - B8,  negsum = -(A8 + B8)
    half = lambda m: mat_halve(FORMS, m)
    a8 = half(mat_sub(FORMS, diff, negsum))
    b8 = mat_neg(FORMS, half(mat_add(FORMS, diff, negsum)))
    from .linalg import template_EF

    m16 = template_EF(a8, b8, ring=FORMS)
    outer_rows, outer_cols = solve_outer_permutations(m16, b16)

    # branch shuffles; the shuffled matrices must expose the block templates
    shuffled_a = apply_reorder(diff, BRANCH_A)
    a4, b4 = split_ab(shuffled_a)
    q0 = mat_add(FORMS, a4, b4)
    q1 = mat_sub(FORMS, a4, b4)

    shuffled_b = apply_reorder(negsum, BRANCH_B)
    c4, d4 = split_ab(shuffled_b)
    q2 = mat_add(FORMS, c4, d4)
    q3 = mat_sub(FORMS, c4, d4)

    shuffled_c = apply_reorder(b8, BRANCH_C)
    e4, f4 = split_ef(shuffled_c)
    t0 = mat_sub(FORMS, e4, f4)
    t1 = mat_neg(FORMS, mat_add(FORMS, e4, f4))
    t2 = f4

    shuffled_d0 = apply_reorder(t0, BRANCH_D)
    a2, b2 = split_ab(shuffled_d0)
    d0 = mat_add(FORMS, a2, b2)
    d1 = mat_sub(FORMS, a2, b2)

    shuffled_d1 = apply_reorder(t1, BRANCH_D)
    c2, d2m = split_ab(shuffled_d1)
    d2 = mat_add(FORMS, c2, d2m)
    d3 = mat_sub(FORMS, c2, d2m)

    shuffled_e = apply_reorder(t2, BRANCH_E)
    e2, f2 = split_ef(shuffled_e)
    e0 = mat_sub(FORMS, e2, f2)
    e1 = mat_neg(FORMS, mat_add(FORMS, e2, f2))

    ab_u0 = split_ab(e0)
    u0 = mat_add(FORMS, ab_u0[0], ab_u0[1])
    u1 = mat_sub(FORMS, ab_u0[0], ab_u0[1])

    shuffled_f = apply_reorder(e1, BRANCH_F)
    ab_u2 = split_ab(shuffled_f)
    u2 = mat_add(FORMS, ab_u2[0], ab_u2[1])
    u3 = mat_sub(FORMS, ab_u2[0], ab_u2[1])

    blocks_level1 = [
        _block("q0", 4, True, "quad", q0),
        _block("q1", 4, True, "quad", q1),
        _block("q2", 4, True, "quad", q2),
        _block("q3", 4, True, "quad", q3),
        _block("t0", 4, False, "direct", t0),
        _block("t1", 4, False, "direct", t1),
        _block("t2", 4, False, "direct", t2),
    ]
    blocks_level2 = [
        _block("q0", 4, True, "quad", q0),
        _block("q1", 4, True, "quad", q1),
        _block("q2", 4, True, "quad", q2),
        _block("q3", 4, True, "quad", q3),
        _block("d0", 2, True, "duo", d0),
        _block("d1", 2, True, "duo", d1),
        _block("d2", 2, True, "duo", d2),
        _block("d3", 2, True, "duo", d3),
        _block("e0", 2, False, "direct", e0),
        _block("e1", 2, False, "direct", e1),
        _block("f", 2, False, "direct", f2),
    ]
    blocks_level3 = [
        _block("q0", 4, True, "quad", q0),
        _block("q1", 4, True, "quad", q1),
        _block("q2", 4, True, "quad", q2),
        _block("q3", 4, True, "quad", q3),
        _block("d0", 2, True, "duo", d0),
        _block("d1", 2, True, "duo", d1),
        _block("d2", 2, True, "duo", d2),
        _block("d3", 2, True, "duo", d3),
        _block("u0", 1, True, "mixed", u0),
        _block("u1", 1, True, "mixed", u1),
        _block("u2", 1, True, "mixed", u2),
        _block("u3", 1, True, "mixed", u3),
        _block("f", 2, False, "direct", f2),
    ]

    # composed permutation stages; for a stated shuffle the input-side stage
    # is the column op inverse (= the shuffle read as a signed permutation)
    # and the output-side stage is the row op inverse.
    rp_a, cp_a = reorder_perms(BRANCH_A)
    rp_b, cp_b = reorder_perms(BRANCH_B)
    rp_c, cp_c = reorder_perms(BRANCH_C)
    rp_d, cp_d = reorder_perms(BRANCH_D)
    rp_e, cp_e = reorder_perms(BRANCH_E)
    rp_f, _ = reorder_perms(BRANCH_F)
    ident = SignedPermutation.identity

    perm_in_24 = perm_concat([cp_a, cp_b, cp_c])
    perm_out_24 = perm_concat([rp_a.inverse(), rp_b.inverse(), rp_c.inverse()])
    perm_in_28 = perm_concat([ident(16), cp_d, cp_d, cp_e])
    perm_out_28 = perm_concat([ident(16), rp_d.inverse(), rp_d.inverse(), rp_e.inverse()])
    perm_out_30 = perm_concat([ident(26), rp_f.inverse(), ident(2)])

    return Derivation(
        outer_rows=outer_rows,
        outer_cols=outer_cols,
        blocks_level1=blocks_level1,
        blocks_level2=blocks_level2,
        blocks_level3=blocks_level3,
        perm_in_24=perm_in_24,
        perm_out_24=perm_out_24,
        perm_in_28=perm_in_28,
        perm_out_28=perm_out_28,
        perm_out_30=perm_out_30,
        m16=m16,
    )


# ---------------------------------------------------------------------------
# asset writing


def _perm_text(p: SignedPermutation, comment: str) -> str:
    lines = [f"# {comment}", "kind signed_perm", f"size {p.size}"]
    lines.append("src " + " ".join(str(s + 1) for s in p.src))
    lines.append("signs " + " ".join("+" if s > 0 else "-" for s in p.signs))
    return "\n".join(lines) + "\n"


def _structural_text(expr: str, comment: str) -> str:
    return f"# {comment}\nkind structural\nexpr {expr}\n"


def _term_token(sign: int, index: int) -> str:
    return f"{'+' if sign > 0 else '-'}{index}"


def _blocks_text(blocks, comment: str) -> str:
    lines = [f"# {comment}",
             "# block <name> <size> <halved|plain> <pool family>; then size^2 cells"]
    for blk in blocks:
        lines.append(f"block {blk.name} {blk.size} {'halved' if blk.halved else 'plain'} {blk.family}")
        for cell in blk.cells:
            terms = form_to_signed_terms(cell)
            lines.append(" ".join(_term_token(s, m) for s, m in terms))
    return "\n".join(lines) + "\n"


def _pool_text() -> str:
    lines = ["# shared two-term combinations of the right-hand coefficients",
             "# family (quad: 4x4-block cells, duo: 2x2-block cells) then the pair"]
    for pair in QUAD_POOL:
        lines.append("quad " + " ".join(_term_token(1 if t >= 0 else -1, abs(t)) for t in pair))
    for pair in DUO_POOL:
        lines.append("duo " + " ".join(_term_token(1 if t >= 0 else -1, abs(t)) for t in pair))
    return "\n".join(lines) + "\n"


STRUCTURAL_STAGES = {
    "expand_16_24": "kron(T3x2, I8)",
    "expand_24_28": "dirsum(kron(I2, kron(H2, I4)), kron(T3x2, I4))",
    "expand_28_30": "dirsum(I16, kron(I2, kron(H2, I2)), kron(T3x2, I2))",
    "expand_30_30": "dirsum(I24, kron(I2, H2), I2)",
    "reduce_30_30": "dirsum(I24, kron(I2, H2), I2)",
    "reduce_30_28": "dirsum(I16, kron(I2, kron(H2, I2)), kron(T2x3, I2))",
    "reduce_28_24": "dirsum(kron(I2, kron(H2, I4)), kron(T2x3, I4))",
    "reduce_24_16": "kron(T2x3, I8)",
}

MANIFESTS = {
    1: [
        "stage perm_in_16",
        "stage expand_16_24",
        "stage perm_in_24",
        "stage expand_24_28",
        "core blocks_level1",
        "stage reduce_28_24",
        "stage perm_out_24",
        "stage reduce_24_16",
        "stage perm_out_16",
        "stage signs_out_16",
    ],
    2: [
        "stage perm_in_16",
        "stage expand_16_24",
        "stage perm_in_24",
        "stage expand_24_28",
        "stage perm_in_28",
        "stage expand_28_30",
        "core blocks_level2",
        "stage reduce_30_28",
        "stage perm_out_28",
        "stage reduce_28_24",
        "stage perm_out_24",
        "stage reduce_24_16",
        "stage perm_out_16",
        "stage signs_out_16",
    ],
    3: [
        "stage perm_in_16",
        "stage expand_16_24",
        "stage perm_in_24",
        "stage expand_24_28",
        "stage perm_in_28",
        "stage expand_28_30",
        "stage expand_30_30",
        "core blocks_level3",
        "stage reduce_30_30",
        "stage perm_out_30",
        "stage reduce_30_28",
        "stage perm_out_28",
        "stage reduce_28_24",
        "stage perm_out_24",
        "stage reduce_24_16",
        "stage perm_out_16",
        "stage signs_out_16",
    ],
}


def generated_asset_texts(derivation: Derivation | None = None) -> dict:
    """filename -> text for every derived (non-transcribed) asset."""
    d = derivation if derivation is not None else derive_all()

    # split the outer row operation into a pure permutation followed by a
    # sign diagonal, mirroring the two named output stages
    perm_part = SignedPermutation(d.outer_rows.src)
    sign_part = SignedPermutation(list(range(DIM)), d.outer_rows.signs)

    out = {
        "perm_in_16.txt": _perm_text(d.outer_cols, "input shuffle of the left-hand coefficients"),
        "perm_in_24.txt": _perm_text(d.perm_in_24, "per-branch input column ops, 8+8+8"),
        "perm_in_28.txt": _perm_text(d.perm_in_28, "second-level input column ops, 16+4+4+4"),
        "perm_out_30.txt": _perm_text(d.perm_out_30, "final-level output sign fix"),
        "perm_out_28.txt": _perm_text(d.perm_out_28, "second-level output row ops, 16+4+4+4"),
        "perm_out_24.txt": _perm_text(d.perm_out_24, "per-branch output row ops, 8+8+8"),
        "perm_out_16.txt": _perm_text(perm_part, "output shuffle (permutation part)"),
        "signs_out_16.txt": _perm_text(sign_part, "output sign diagonal"),
        "pool_pairs.txt": _pool_text(),
        "blocks_level1.txt": _blocks_text(d.blocks_level1, "diagonal blocks, first refinement (28-wide core)"),
        "blocks_level2.txt": _blocks_text(d.blocks_level2, "diagonal blocks, second refinement (30-wide core)"),
        "blocks_level3.txt": _blocks_text(d.blocks_level3, "diagonal blocks, final refinement (30-wide core)"),
    }
    for name, expr in STRUCTURAL_STAGES.items():
        out[f"{name}.txt"] = _structural_text(expr, "constant combiner stage")
    for level, lines in MANIFESTS.items():
        out[f"pipeline_level{level}.txt"] = (
            "# ordered stage chain, input side first; 'core' is the b-dependent stage\n"
            + "\n".join(lines)
            + "\n"
        )
    return out


def write_assets(dest_dir: str, derivation: Derivation | None = None) -> list:
    os.makedirs(dest_dir, exist_ok=True)
    texts = generated_asset_texts(derivation)
    for name, text in sorted(texts.items()):
        with open(os.path.join(dest_dir, name), "w", encoding="ascii") as fh:
            fh.write(text)
    return sorted(texts)


def main(argv=None) -> int:
    import argparse

    parser = argparse.ArgumentParser(description="regenerate derived pipeline assets")
    parser.add_argument("--write", action="store_true", help="write into the package asset directory")
    parser.add_argument("--out", default=None, help="write into this directory instead")
    args = parser.parse_args(argv)
    dest = args.out or (_asset_dir() if args.write else None)
    if dest is None:
        parser.error("pass --write or --out DIR")
    names = write_assets(dest)
    print(f"wrote {len(names)} assets to {dest}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
