"""The factorized fast product.

A pipeline is a chain of constant stages (signed permutations and
structural {-1,0,+1} combiners) around one b-dependent block-diagonal
core.  Three refinement levels exist; the final one spends 88 generic
multiplications inside a 30-wide core.  Stages are loaded from plain-text
assets; ``verify_pipeline`` proves the whole chain equal to the
ground-truth product matrix symbolically, which is the package's central
correctness check.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

from .algebra import DIM, DiracNumber, build_table_from_generators, derive_b_matrix, symbolic_b
from .exactnum import FORMS, LinearForm
from .linalg import H2, T2X3, T3X2, Mat, SignedPermutation, dirsum, eye, kron

LEVELS = (1, 2, 3)


class AssetError(RuntimeError):
    """A stage asset is missing, malformed, or fails validation."""


# ---------------------------------------------------------------------------
# asset parsing


def default_asset_dir() -> str:
    override = os.environ.get("DIRAC_ASSET_DIR")
    if override:
        return override
    return os.path.join(os.path.dirname(__file__), "assets")


def _read_lines(path: str):
    try:
        with open(path, encoding="ascii") as fh:
            return [ln.strip() for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    except OSError as exc:
        raise AssetError(f"stage {os.path.basename(path)}: {exc}") from exc


def _parse_kv(lines, path):
    fields = {}
    for ln in lines:
        key, _, rest = ln.partition(" ")
        fields[key] = rest.strip()
    if "kind" not in fields:
        raise AssetError(f"stage {os.path.basename(path)}: missing 'kind' line")
    return fields


def load_perm(path: str) -> SignedPermutation:
    fields = _parse_kv(_read_lines(path), path)
    name = os.path.basename(path)
    if fields["kind"] != "signed_perm":
        raise AssetError(f"stage {name}: expected kind signed_perm, got {fields['kind']!r}")
    try:
        size = int(fields["size"])
        src = [int(t) - 1 for t in fields["src"].split()]
        signs = [1 if t == "+" else -1 for t in fields["signs"].split()]
        perm = SignedPermutation(src, signs)
    except (KeyError, ValueError) as exc:
        raise AssetError(f"stage {name}: {exc}") from exc
    if perm.size != size:
        raise AssetError(f"stage {name}: size field disagrees with src length")
    return perm


_ATOMS = {"H2": H2, "T2x3": T2X3, "T3x2": T3X2}


def _parse_expr(text: str) -> Mat:
    pos = 0

    def skip_ws():
        nonlocal pos
        while pos < len(text) and text[pos] in " \t":
            pos += 1

    def ident():
        nonlocal pos
        start = pos
        while pos < len(text) and (text[pos].isalnum() or text[pos] in "_x"):
            pos += 1
        return text[start:pos]

    def expr() -> Mat:
        nonlocal pos
        skip_ws()
        name = ident()
        skip_ws()
        if pos < len(text) and text[pos] == "(":
            pos += 1
            args = [expr()]
            skip_ws()
            while pos < len(text) and text[pos] == ",":
                pos += 1
                args.append(expr())
                skip_ws()
            if pos >= len(text) or text[pos] != ")":
                raise ValueError(f"unbalanced parentheses in {text!r}")
            pos += 1
            if name == "kron":
                if len(args) != 2:
                    raise ValueError("kron takes two arguments")
                return kron(args[0], args[1])
            if name == "dirsum":
                return dirsum(args)
            raise ValueError(f"unknown function {name!r}")
        if name in _ATOMS:
            return _ATOMS[name]
        if name.startswith("I") and name[1:].isdigit():
            return eye(int(name[1:]))
        raise ValueError(f"unknown atom {name!r}")

    result = expr()
    skip_ws()
    if pos != len(text):
        raise ValueError(f"trailing characters in {text!r}")
    return result


def load_structural(path: str) -> Mat:
    fields = _parse_kv(_read_lines(path), path)
    name = os.path.basename(path)
    if fields["kind"] != "structural":
        raise AssetError(f"stage {name}: expected kind structural, got {fields['kind']!r}")
    try:
        mat = _parse_expr(fields["expr"])
    except ValueError as exc:
        raise AssetError(f"stage {name}: {exc}") from exc
    if not mat.is_structural():
        raise AssetError(f"stage {name}: entries outside -1/0/+1")
    return mat


def load_pools(path: str) -> dict:
    pools: dict = {"quad": [], "duo": []}
    for ln in _read_lines(path):
        family, *tokens = ln.split()
        if family not in pools or len(tokens) != 2:
            raise AssetError(f"stage {os.path.basename(path)}: bad pool line {ln!r}")
        pools[family].append(tuple(_parse_term(t) for t in tokens))
    return pools


def _parse_term(tok: str):
    sign = -1 if tok.startswith("-") else 1
    return (sign, int(tok.lstrip("+-")))


def decompose_terms(terms, family: str, pools: dict):
    """Build the construction recipe of one core cell.

    One- and two-term cells are built directly; four-term cells must be
    one addition of two shared pool terms of the block's family (the
    singleton blocks mix the two families).
    """
    terms = tuple(terms)
    if len(terms) == 1:
        s, m = terms[0]
        return ("copy", s, m)
    if len(terms) == 2:
        return ("sum2", terms[0], terms[1])
    if len(terms) != 4:
        raise AssetError(f"core cell has {len(terms)} terms")
    families = {"quad": ["quad"], "duo": ["duo"], "mixed": ["duo", "quad"]}.get(family)
    if families is None:
        raise AssetError(f"unknown pool family {family!r}")
    searchable = [(fam, i, pair) for fam in families for i, pair in enumerate(pools[fam])]
    target = {m: s for s, m in terms}
    for fam1, i1, p1 in searchable:
        for s1 in (1, -1):
            part1 = [(s1 * s, m) for s, m in p1]
            if not all(target.get(m) == s for s, m in part1):
                continue
            rest = {m: s for m, s in target.items() if m not in {m for _, m in part1}}
            for fam2, i2, p2 in searchable:
                for s2 in (1, -1):
                    part2 = [(s2 * s, m) for s, m in p2]
                    if len(rest) == 2 and all(rest.get(m) == s for s, m in part2):
                        return ("pair", (s1, fam1, i1), (s2, fam2, i2))
    raise AssetError(f"core cell {terms} does not split over the {family} pools")


@dataclass
class CoreBlock:
    """One b-dependent diagonal block of the core stage."""

    name: str
    size: int
    halved: bool
    family: str
    formulas: list  # row-major tuples of (sign, b_index)
    recipes: list   # construction recipes, same order

    def formula_forms(self):
        out = []
        for terms in self.formulas:
            acc = FORMS.zero()
            for s, m in terms:
                v = LinearForm.variable(m)
                acc = acc + (-v if s < 0 else v)
            out.append(acc)
        return out


def load_blocks(path: str, pools: dict):
    lines = _read_lines(path)
    name = os.path.basename(path)
    blocks = []
    i = 0
    while i < len(lines):
        head = lines[i].split()
        if head[0] != "block" or len(head) != 5:
            raise AssetError(f"stage {name}: expected block header, got {lines[i]!r}")
        _, blk_name, size_s, mode, family = head
        if mode not in ("halved", "plain"):
            raise AssetError(f"stage {name}: bad mode {mode!r}")
        try:
            size = int(size_s)
            cells = lines[i + 1 : i + 1 + size * size]
            if len(cells) != size * size:
                raise ValueError(f"block {blk_name} is short of cells")
            formulas = [tuple(_parse_term(t) for t in ln.split()) for ln in cells]
        except ValueError as exc:
            raise AssetError(f"stage {name}: {exc}") from exc
        try:
            recipes = [decompose_terms(terms, family, pools) for terms in formulas]
        except AssetError as exc:
            raise AssetError(f"stage {name}: block {blk_name}: {exc}") from exc
        blocks.append(CoreBlock(blk_name, size, mode == "halved", family, formulas, recipes))
        i += 1 + size * size
    return blocks


# ---------------------------------------------------------------------------
# pipeline


@dataclass
class Stage:
    """One constant linear map (or the b-dependent core) of the chain."""

    name: str
    kind: str  # signed_perm | structural | core
    in_dim: int
    out_dim: int
    perm: SignedPermutation | None = None
    mat: Mat | None = None
    blocks: list | None = None
    # structural rows precompiled to their nonzero (column, sign) terms
    compiled: list | None = None


def _compile_structural(mat: Mat):
    return [[(c, e) for c, e in enumerate(row) if e] for row in mat.entries]


@dataclass
class Pipeline:
    level: int
    stages: list
    core_index: int
    asset_dir: str
    verified: bool = field(default=False, compare=False)

    @property
    def core(self) -> Stage:
        return self.stages[self.core_index]

    def dims(self):
        return [self.stages[0].in_dim] + [s.out_dim for s in self.stages]

    def replace_stage(self, index: int, stage: Stage) -> "Pipeline":
        stages = list(self.stages)
        stages[index] = stage
        return Pipeline(self.level, stages, self.core_index, self.asset_dir, verified=False)


_EXPECTED_DIMS = {
    1: [16, 16, 24, 24, 28, 28, 24, 24, 16, 16, 16],
    2: [16, 16, 24, 24, 28, 28, 30, 30, 28, 28, 24, 24, 16, 16, 16],
    3: [16, 16, 24, 24, 28, 28, 30, 30, 30, 30, 30, 28, 28, 24, 24, 16, 16, 16],
}


def _assemble(level: int, asset_dir: str) -> Pipeline:
    if level not in LEVELS:
        raise ValueError(f"level must be 1, 2 or 3, not {level!r}")
    manifest = os.path.join(asset_dir, f"pipeline_level{level}.txt")
    pools = load_pools(os.path.join(asset_dir, "pool_pairs.txt"))
    stages = []
    core_index = -1
    for ln in _read_lines(manifest):
        what, _, ref = ln.partition(" ")
        ref = ref.strip()
        path = os.path.join(asset_dir, f"{ref}.txt")
        if what == "stage":
            fields = _parse_kv(_read_lines(path), path)
            if fields["kind"] == "signed_perm":
                perm = load_perm(path)
                stages.append(Stage(ref, "signed_perm", perm.size, perm.size, perm=perm))
            elif fields["kind"] == "structural":
                mat = load_structural(path)
                compiled = _compile_structural(mat)
                if any(not terms for terms in compiled):
                    raise AssetError(f"stage {ref}: structurally zero output row")
                stages.append(Stage(ref, "structural", mat.cols, mat.rows, mat=mat,
                                    compiled=compiled))
            else:
                raise AssetError(f"stage {ref}: unknown kind {fields['kind']!r}")
        elif what == "core":
            blocks = load_blocks(path, pools)
            dim = sum(b.size for b in blocks)
            core_index = len(stages)
            stages.append(Stage(ref, "core", dim, dim, blocks=blocks))
        else:
            raise AssetError(f"stage manifest pipeline_level{level}: bad line {ln!r}")
    if core_index < 0:
        raise AssetError(f"stage manifest pipeline_level{level}: no core stage")
    pipe = Pipeline(level, stages, core_index, asset_dir)
    dims = pipe.dims()
    if dims != _EXPECTED_DIMS[level]:
        raise AssetError(f"stage manifest pipeline_level{level}: dimension chain {dims}")
    for prev, cur in zip(stages, stages[1:]):
        if prev.out_dim != cur.in_dim:
            raise AssetError(f"stage {cur.name}: expects {cur.in_dim} inputs, gets {prev.out_dim}")
    return pipe


@lru_cache(maxsize=None)
def _assemble_cached(level: int, asset_dir: str) -> Pipeline:
    return _assemble(level, asset_dir)


def assemble_pipeline(level: int, asset_dir: str | None = None) -> Pipeline:
    d = os.path.realpath(asset_dir or default_asset_dir())
    return _assemble_cached(level, d)


# ---------------------------------------------------------------------------
# binding the core to a right-hand operand


class BoundCore:
    """Core-block entries evaluated for one fixed right-hand operand."""

    __slots__ = ("blocks", "entries")

    def __init__(self, blocks, entries):
        self.blocks = blocks
        self.entries = entries  # list of per-block scalar lists


def _pool_value(ring, pool_cache, pools, b, fam, idx):
    key = (fam, idx)
    val = pool_cache.get(key)
    if val is None:
        (s1, m1), (s2, m2) = pools[fam][idx]
        val = _signed_sum(ring, b[m1], s1, b[m2], s2)
        pool_cache[key] = val
    return val


def _signed_sum(ring, x, sx, y, sy):
    first = ring.neg(x) if sx < 0 else x
    return ring.sub(first, y) if sy < 0 else ring.add(first, y)


def bind_block(block: CoreBlock, b, ring, pools, pool_cache) -> list:
    """Evaluate one block's entries; shared pool terms are reused."""
    out = []
    for recipe in block.recipes:
        kind = recipe[0]
        if kind == "copy":
            _, s, m = recipe
            val = ring.neg(b[m]) if s < 0 else b[m]
        elif kind == "sum2":
            _, (s1, m1), (s2, m2) = recipe
            val = _signed_sum(ring, b[m1], s1, b[m2], s2)
        else:
            _, (s1, f1, i1), (s2, f2, i2) = recipe
            t1 = _pool_value(ring, pool_cache, pools, b, f1, i1)
            t2 = _pool_value(ring, pool_cache, pools, b, f2, i2)
            val = _signed_sum(ring, t1, s1, t2, s2)
        if block.halved:
            val = ring.halve(val)
        out.append(val)
    return out


def bind_core(core: Stage, b, ring, pools) -> BoundCore:
    pool_cache: dict = {}
    entries = [bind_block(blk, b, ring, pools, pool_cache) for blk in core.blocks]
    return BoundCore(core.blocks, entries)


def block_matvec(block: CoreBlock, entries, x, ring):
    """Dense block times vector: size-1 additions per output row."""
    n = block.size
    out = []
    for i in range(n):
        acc = ring.mul(entries[i * n], x[0])
        for j in range(1, n):
            acc = ring.add(acc, ring.mul(entries[i * n + j], x[j]))
        out.append(acc)
    return out


def apply_core(bound: BoundCore, x, ring):
    out = []
    offset = 0
    for blk, entries in zip(bound.blocks, bound.entries):
        out.extend(block_matvec(blk, entries, x[offset : offset + blk.size], ring))
        offset += blk.size
    return out


def _load_pipeline_pools(pipeline: Pipeline) -> dict:
    return load_pools(os.path.join(pipeline.asset_dir, "pool_pairs.txt"))


def run_pipeline(pipeline: Pipeline, a_coeffs, b_coeffs, ring):
    bound = bind_core(pipeline.core, b_coeffs, ring, _load_pipeline_pools(pipeline))
    return run_pipeline_bound(pipeline, a_coeffs, bound, ring)


def run_pipeline_bound(pipeline: Pipeline, a_coeffs, bound: BoundCore, ring):
    vec = list(a_coeffs)
    neg, add, sub = ring.neg, ring.add, ring.sub
    for stage in pipeline.stages:
        if stage.kind == "signed_perm":
            perm = stage.perm
            vec = [neg(vec[s]) if g < 0 else vec[s] for s, g in zip(perm.src, perm.signs)]
        elif stage.kind == "structural":
            # same operation stream as linalg.structural_apply, minus the
            # zero-entry scan (rows are precompiled to nonzero terms)
            out = []
            for terms in stage.compiled:
                c0, e0 = terms[0]
                acc = neg(vec[c0]) if e0 < 0 else vec[c0]
                for c, e in terms[1:]:
                    acc = sub(acc, vec[c]) if e < 0 else add(acc, vec[c])
                out.append(acc)
            vec = out
        else:
            vec = apply_core(bound, vec, ring)
    return vec


# ---------------------------------------------------------------------------
# public operations


def mul_fast(a: DiracNumber, b: DiracNumber, level: int = 3, asset_dir: str | None = None) -> DiracNumber:
    """Product a*b through the factorized pipeline; exact on exact rings."""
    pipeline = assemble_pipeline(level, asset_dir)
    out = run_pipeline(pipeline, a.coeffs, b.coeffs, a.ring)
    return DiracNumber(out, a.ring)


class PrecomputedOperator:
    """Multiplication by a fixed right-hand operand, core entries reused."""

    __slots__ = ("pipeline", "bound", "ring")

    def __init__(self, pipeline: Pipeline, bound: BoundCore, ring):
        self.pipeline = pipeline
        self.bound = bound
        self.ring = ring

    def apply(self, a: DiracNumber) -> DiracNumber:
        out = run_pipeline_bound(self.pipeline, a.coeffs, self.bound, self.ring)
        return DiracNumber(out, self.ring)


def precompute(b: DiracNumber, level: int = 3, asset_dir: str | None = None) -> PrecomputedOperator:
    pipeline = assemble_pipeline(level, asset_dir)
    bound = bind_core(pipeline.core, b.coeffs, b.ring, _load_pipeline_pools(pipeline))
    return PrecomputedOperator(pipeline, bound, b.ring)


def apply_operator(op: PrecomputedOperator, a: DiracNumber) -> DiracNumber:
    return op.apply(a)


# ---------------------------------------------------------------------------
# symbolic verification


@dataclass
class VerifyReport:
    level: int
    mismatches: list  # (row, col, got LinearForm, want LinearForm)

    @property
    def total(self) -> int:
        return DIM * DIM

    @property
    def matches(self) -> int:
        return self.total - len(self.mismatches)

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def summary(self) -> str:
        return f"level {self.level}: symbolic {self.matches}/{self.total} entries match"


def pipeline_matrix(pipeline: Pipeline) -> Mat:
    """The 16x16 matrix the pipeline computes, symbolic in b."""
    b = symbolic_b()
    bound = bind_core(pipeline.core, b.coeffs, FORMS, _load_pipeline_pools(pipeline))
    cols = []
    for n in range(DIM):
        a = [FORMS.one() if k == n else FORMS.zero() for k in range(DIM)]
        cols.append(run_pipeline_bound(pipeline, a, bound, FORMS))
    return Mat(DIM, DIM, [[cols[n][k] for n in range(DIM)] for k in range(DIM)])


def verify_pipeline(pipeline: Pipeline | int, asset_dir: str | None = None) -> VerifyReport:
    """Prove the pipeline equals the table-derived product matrix in b."""
    if isinstance(pipeline, int):
        pipeline = assemble_pipeline(pipeline, asset_dir)
    got = pipeline_matrix(pipeline)
    want = derive_b_matrix(symbolic_b(), build_table_from_generators())
    mismatches = []
    for r in range(DIM):
        for c in range(DIM):
            if got.entries[r][c] != want.entries[r][c]:
                mismatches.append((r, c, got.entries[r][c], want.entries[r][c]))
    report = VerifyReport(pipeline.level, mismatches)
    if report.ok:
        pipeline.verified = True
    return report
