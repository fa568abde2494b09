"""Straight-line program generation.

Flattens an assembled pipeline into a branch-free, single-assignment
sequence of scalar instructions and interprets or pretty-prints it.  The
flattened program shares the pooled two-term combinations exactly the way
the cost accounting does, so its opcode histogram agrees with the
counting ring.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import DIM, MultTable
from .fastmult import Pipeline, PrecomputedOperator, bind_core, run_pipeline_bound, _load_pipeline_pools
from .linalg import Mat

OPCODES = ("load_a", "load_b", "const", "add", "sub", "neg", "mul", "shift", "store_y")


class SLPError(ValueError):
    """Malformed straight-line program."""


@dataclass(frozen=True)
class SLPInstr:
    """One instruction; dest is None only for store_y."""

    op: str
    dest: int | None
    args: tuple = ()
    aux: object = None  # input/output index, shift amount, or const (num, exp)


class SLProgram:
    """Branch-free single-assignment program computing a 16-wide product.

    Inputs are the left-hand coefficients (``load_a``) plus either the
    right-hand coefficients (``load_b``) or baked-in constants; outputs
    are the sixteen ``store_y`` coordinates.
    """

    def __init__(self, instrs, a_arity: int = DIM, b_arity: int = DIM):
        self.instrs = list(instrs)
        self.a_arity = a_arity
        self.b_arity = b_arity
        self.validate()

    @property
    def n_values(self) -> int:
        return sum(1 for i in self.instrs if i.dest is not None)

    def histogram(self) -> dict:
        counts = {op: 0 for op in OPCODES}
        for i in self.instrs:
            counts[i.op] += 1
        counts["add_total"] = counts["add"] + counts["sub"]
        return counts

    def validate(self) -> None:
        """Single assignment, topological operand order, 16 stores."""
        next_id = 0
        stores = set()
        for pos, ins in enumerate(self.instrs):
            if ins.op not in OPCODES:
                raise SLPError(f"unknown opcode {ins.op!r} at {pos}")
            for a in ins.args:
                if not 0 <= a < next_id:
                    raise SLPError(f"instruction {pos} reads undefined value v{a}")
            if ins.op == "store_y":
                if ins.dest is not None:
                    raise SLPError("store_y carries no destination")
                if ins.aux in stores:
                    raise SLPError(f"output {ins.aux} stored twice")
                stores.add(ins.aux)
            else:
                if ins.dest != next_id:
                    raise SLPError(f"instruction {pos}: expected destination v{next_id}")
                next_id += 1
        if stores != set(range(DIM)):
            raise SLPError("program must store each of the 16 outputs exactly once")


class _Emitter:
    """Ring facade whose values are SSA ids; operations append instructions."""

    def __init__(self):
        self.instrs: list[SLPInstr] = []
        self.next_id = 0

    def _push(self, op, args=(), aux=None) -> int:
        vid = self.next_id
        self.next_id += 1
        self.instrs.append(SLPInstr(op, vid, tuple(args), aux))
        return vid

    def load_a(self, k: int) -> int:
        return self._push("load_a", aux=k)

    def load_b(self, k: int) -> int:
        return self._push("load_b", aux=k)

    def const(self, num: int, exp: int) -> int:
        return self._push("const", aux=(num, exp))

    def store(self, k: int, src: int) -> None:
        self.instrs.append(SLPInstr("store_y", None, (src,), k))

    # ring surface used by the pipeline kernels
    def add(self, a: int, b: int) -> int:
        return self._push("add", (a, b))

    def sub(self, a: int, b: int) -> int:
        return self._push("sub", (a, b))

    def neg(self, a: int) -> int:
        return self._push("neg", (a,))

    def mul(self, a: int, b: int) -> int:
        return self._push("mul", (a, b))

    def halve(self, a: int) -> int:
        return self._push("shift", (a,), 1)

    def zero(self):
        raise SLPError("pipeline stages must not produce structurally zero outputs")


def flatten(pipeline: Pipeline, include_precompute: bool = True,
            operator: PrecomputedOperator | None = None) -> SLProgram:
    """Emit the pipeline as a straight-line program.

    With ``include_precompute`` the program takes both operands and
    rebuilds the core entries (sharing the pooled terms once, as the
    accounting does).  Without it, a precomputed operator must be given
    and its core entries are baked in as constants, leaving only the
    apply phase.
    """
    if not pipeline.verified:
        raise SLPError("refusing to flatten an unverified pipeline")
    em = _Emitter()
    a_ids = [em.load_a(k) for k in range(DIM)]
    if include_precompute:
        b_ids = [em.load_b(k) for k in range(DIM)]
        bound = bind_core(pipeline.core, b_ids, em, _load_pipeline_pools(pipeline))
        b_arity = DIM
    else:
        if operator is None or operator.pipeline is not pipeline:
            raise SLPError("apply-only flattening needs a precomputed operator for this pipeline")
        from .fastmult import BoundCore

        entries = []
        for blk_entries in operator.bound.entries:
            ids = []
            for val in blk_entries:
                num, exp = _as_dyadic_pair(val)
                ids.append(em.const(num, exp))
            entries.append(ids)
        bound = BoundCore(operator.bound.blocks, entries)
        b_arity = 0
    out = run_pipeline_bound(pipeline, a_ids, bound, em)
    for k in range(DIM):
        em.store(k, out[k])
    return SLProgram(em.instrs, DIM, b_arity)


def _as_dyadic_pair(val):
    from .exactnum import CountingScalar, DyadicRational

    if isinstance(val, CountingScalar):
        val = val.value
    if isinstance(val, DyadicRational):
        n = val.normalized()
        return n.num, n.exp
    if isinstance(val, int):
        return val, 0
    raise SLPError(f"cannot bake value {val!r} into a constant")


def schoolbook_program(table: MultTable) -> SLProgram:
    """The naive product as a reference program: 256 muls, 240 adds."""
    em = _Emitter()
    a_ids = [em.load_a(k) for k in range(DIM)]
    b_ids = [em.load_b(k) for k in range(DIM)]
    acc: list[int | None] = [None] * DIM
    for n in range(DIM):
        for m in range(DIM):
            sign, k = table[n][m]
            p = em.mul(a_ids[n], b_ids[m])
            if acc[k] is None:
                acc[k] = em.neg(p) if sign < 0 else p
            elif sign < 0:
                acc[k] = em.sub(acc[k], p)
            else:
                acc[k] = em.add(acc[k], p)
    for k in range(DIM):
        em.store(k, acc[k])
    return SLProgram(em.instrs, DIM, DIM)


def structural_program(mat: Mat) -> SLProgram:
    """Flatten one structural stage alone (inputs via load_a).

    Pads the outputs onto the 16 store slots so the result is still a
    well-formed program; only the add/sub/neg histogram is interesting.
    """
    from .linalg import structural_apply

    if mat.rows > DIM:
        raise SLPError("structural_program only handles stages up to 16 outputs")
    em = _Emitter()
    a_ids = [em.load_a(k) for k in range(mat.cols)]
    out = structural_apply(em, mat, a_ids)
    pad = out[0]
    for k in range(DIM):
        em.store(k, out[k] if k < len(out) else pad)
    return SLProgram(em.instrs, mat.cols, 0)


def interpret(program: SLProgram, a_vals, b_vals, ring):
    """Evaluate in instruction order; exact on exact rings."""
    if len(a_vals) != program.a_arity or len(b_vals) != program.b_arity:
        raise SLPError("operand arity mismatch")
    values = []
    out = [None] * DIM
    for ins in program.instrs:
        if ins.op == "load_a":
            values.append(a_vals[ins.aux])
        elif ins.op == "load_b":
            values.append(b_vals[ins.aux])
        elif ins.op == "const":
            num, exp = ins.aux
            values.append(ring.from_dyadic(num, exp))
        elif ins.op == "add":
            values.append(ring.add(values[ins.args[0]], values[ins.args[1]]))
        elif ins.op == "sub":
            values.append(ring.sub(values[ins.args[0]], values[ins.args[1]]))
        elif ins.op == "neg":
            values.append(ring.neg(values[ins.args[0]]))
        elif ins.op == "mul":
            values.append(ring.mul(values[ins.args[0]], values[ins.args[1]]))
        elif ins.op == "shift":
            v = values[ins.args[0]]
            for _ in range(ins.aux):
                v = ring.halve(v)
            values.append(v)
        else:  # store_y
            out[ins.aux] = values[ins.args[0]]
    return out


def emit_text(program: SLProgram) -> str:
    """Deterministic, diff-stable rendering with a histogram header."""
    h = program.histogram()
    lines = [
        f"# mul={h['mul']} add={h['add_total']} neg={h['neg']} shift={h['shift']}",
        f"# inputs: a={program.a_arity} b={program.b_arity} const={h['const']} outputs=16",
    ]
    for ins in program.instrs:
        if ins.op in ("load_a", "load_b"):
            lines.append(f"v{ins.dest} = {ins.op} {ins.aux}")
        elif ins.op == "const":
            num, exp = ins.aux
            token = str(num) if exp == 0 else f"{num}/2^{exp}"
            lines.append(f"v{ins.dest} = const {token}")
        elif ins.op == "shift":
            lines.append(f"v{ins.dest} = shift v{ins.args[0]} {ins.aux}")
        elif ins.op == "neg":
            lines.append(f"v{ins.dest} = neg v{ins.args[0]}")
        elif ins.op == "store_y":
            lines.append(f"store_y {ins.aux} v{ins.args[0]}")
        else:
            lines.append(f"v{ins.dest} = {ins.op} v{ins.args[0]} v{ins.args[1]}")
    return "\n".join(lines) + "\n"


def parse_text(text: str) -> SLProgram:
    """Inverse of :func:`emit_text` (header lines are ignored)."""
    instrs = []
    a_arity = 0
    b_arity = 0
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("store_y"):
            _, k, src = line.split()
            instrs.append(SLPInstr("store_y", None, (_vid(src),), int(k)))
            continue
        dest_s, _, rhs = line.partition(" = ")
        dest = _vid(dest_s)
        parts = rhs.split()
        op = parts[0]
        if op in ("load_a", "load_b"):
            idx = int(parts[1])
            instrs.append(SLPInstr(op, dest, (), idx))
            if op == "load_a":
                a_arity = max(a_arity, idx + 1)
            else:
                b_arity = max(b_arity, idx + 1)
        elif op == "const":
            token = parts[1]
            if "/" in token:
                num_s, den_s = token.split("/")
                instrs.append(SLPInstr(op, dest, (), (int(num_s), int(den_s[2:]))))
            else:
                instrs.append(SLPInstr(op, dest, (), (int(token), 0)))
        elif op == "neg":
            instrs.append(SLPInstr(op, dest, (_vid(parts[1]),)))
        elif op == "shift":
            instrs.append(SLPInstr(op, dest, (_vid(parts[1]),), int(parts[2])))
        elif op in ("add", "sub", "mul"):
            instrs.append(SLPInstr(op, dest, (_vid(parts[1]), _vid(parts[2]))))
        else:
            raise SLPError(f"cannot parse line {line!r}")
    return SLProgram(instrs, a_arity, b_arity)


def _vid(token: str) -> int:
    if not token.startswith("v"):
        raise SLPError(f"expected a value token, got {token!r}")
    return int(token[1:])
