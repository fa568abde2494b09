import pytest

from diracmul.derive import (
    BRANCH_A,
    BRANCH_C,
    ReconstructionError,
    apply_reorder,
    derive_all,
    form_to_signed_terms,
    load_seed_matrices,
    solve_outer_permutations,
    split_ab,
    split_ef,
)
from diracmul.exactnum import FORMS
from diracmul.linalg import Mat, mat_neg


def grid(block):
    n = block.size
    return [
        [form_to_signed_terms(block.cells[i * n + j]) for j in range(n)]
        for i in range(n)
    ]


def t(*tokens):
    # expected cell: tuple of (sign, coefficient index); tokens are ints or,
    # where index 0 needs a sign, strings like "-0"
    out = []
    for tok in tokens:
        if isinstance(tok, str):
            out.append((-1 if tok.startswith("-") else 1, int(tok.lstrip("+-"))))
        else:
            out.append((-1, -tok) if tok < 0 else (1, tok))
    return tuple(out)


# transcribed displays of the reference decomposition, used as independent
# expected values for the derived block formulas
EXPECTED_Q0 = [
    [t(0, 5, 10, 15), t(1, 2, 13, 14), t(-3, 4, -11, 12), t(-6, 7, -8, 9)],
    [t(-6, -7, 8, 9), t(-3, -4, 11, 12), t(1, -2, -13, 14), t(0, -5, -10, 15)],
    [t(-1, 2, -13, 14), t("-0", 5, -10, 15), t(-6, 7, 8, -9), t(-3, 4, 11, -12)],
    [t(3, 4, 11, 12), t(6, 7, 8, 9), t(0, 5, -10, -15), t(1, 2, -13, -14)],
]
EXPECTED_T0 = [
    [t(-4, 10), t(-7, -13), t(9, 14), t(-12, 15)],
    [t(7, -13), t(-4, -10), t(-12, -15), t(-9, 14)],
    [t(9, -14), t(-12, -15), t(-4, -10), t(-7, 13)],
    [t(-12, 15), t(-9, -14), t(7, 13), t(-4, 10)],
]
EXPECTED_T2 = [
    [t(-10), t(7), t(-9), t(-15)],
    [t(-7), t(10), t(15), t(9)],
    [t(-9), t(15), t(10), t(7)],
    [t(-15), t(9), t(-7), t(-10)],
]


@pytest.fixture(scope="module")
def derivation():
    return derive_all()


class TestDerivedBlocks:
    def test_first_quad_matches_display(self, derivation):
        q0 = derivation.blocks_level1[0]
        assert grid(q0) == [[cell for cell in row] for row in EXPECTED_Q0]

    def test_first_plain_level1_block_matches_display(self, derivation):
        t0 = derivation.blocks_level1[4]
        assert t0.name == "t0"
        assert grid(t0) == EXPECTED_T0

    def test_third_plain_level1_block_matches_display(self, derivation):
        t2 = derivation.blocks_level1[6]
        assert t2.name == "t2"
        assert grid(t2) == EXPECTED_T2

    def test_levels_share_the_quad_blocks(self, derivation):
        for i in range(4):
            assert derivation.blocks_level1[i].cells == derivation.blocks_level3[i].cells

    def test_expected_cells_are_well_formed(self):
        for row in EXPECTED_Q0 + EXPECTED_T0 + EXPECTED_T2:
            for cell in row:
                for sign, idx in cell:
                    assert sign in (-1, 1) and 0 <= idx <= 15


class TestReorders:
    def test_branch_a_produces_block_pair_structure(self):
        diff, _ = load_seed_matrices()
        shuffled = apply_reorder(diff, BRANCH_A)
        a4, b4 = split_ab(shuffled)  # raises if the structure is absent
        assert a4.rows == b4.rows == 4

    def test_branch_c_produces_ef_structure(self):
        diff, negsum = load_seed_matrices()
        from diracmul.linalg import mat_add, mat_halve

        b8 = mat_neg(FORMS, mat_halve(FORMS, mat_add(FORMS, diff, negsum)))
        shuffled = apply_reorder(b8, BRANCH_C)
        e4, f4 = split_ef(shuffled)
        assert grid_of(f4) == EXPECTED_T2

    def test_wrong_reorder_fails_structure_check(self):
        diff, _ = load_seed_matrices()
        bad = dict(BRANCH_A)
        bad["rows"] = ([1, 2, 3, 4, 5, 6, 7, 8], [])
        with pytest.raises(ReconstructionError):
            split_ab(apply_reorder(diff, bad))


def grid_of(mat: Mat):
    return [
        [form_to_signed_terms(mat.entries[i][j]) for j in range(mat.cols)]
        for i in range(mat.rows)
    ]


class TestSolver:
    def test_tampered_target_is_rejected(self, derivation, table):
        from diracmul.algebra import symbolic_b_matrix

        b16 = symbolic_b_matrix(table)
        entries = [list(row) for row in b16.entries]
        entries[4][9] = FORMS.neg(entries[4][9])
        with pytest.raises(ReconstructionError):
            solve_outer_permutations(derivation.m16, Mat(16, 16, entries))

    def test_outer_column_permutation_is_signless(self, derivation):
        assert all(s == 1 for s in derivation.outer_cols.signs)

    def test_outer_row_signs_are_mixed(self, derivation):
        signs = set(derivation.outer_rows.signs)
        assert signs == {-1, 1}
