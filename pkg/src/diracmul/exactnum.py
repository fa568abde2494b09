"""Scalar rings used throughout the package.

One generic pipeline serves four purposes depending on the ring it runs
over:

* ``FloatRing``     -- machine reals, for benchmarking;
* ``DyadicRing``    -- exact numbers of the form n / 2**k, for bit-exact
                       verification;
* ``LinearFormRing``-- degree-one symbolic forms in the sixteen right-hand
                       coefficients, for proving matrix identities;
* ``CountingRing``  -- dyadic values plus an operation tally, for
                       reproducing arithmetic-cost claims.

Every ring exposes the same small surface: ``wrap``, ``zero``, ``one``,
``add``, ``sub``, ``neg``, ``mul``, ``halve``, ``eq``.  Values are
immutable; the one mutable object is the :class:`Counter` handle, which is
meant for single-threaded measurement runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field


class LinearFormError(ValueError):
    """Raised for operations that would leave the degree<=1 carrier."""


class DyadicRational:
    """Exact number num / 2**exp with arbitrary-precision numerator.

    Instances are kept lazily normalized: ``num`` may be even with
    ``exp > 0`` internally, but equality, hashing and formatting always
    use the canonical form (odd numerator or zero exponent).
    """

    __slots__ = ("num", "exp")

    def __init__(self, num: int, exp: int = 0):
        if exp < 0:
            raise ValueError("exponent must be non-negative")
        self.num = num
        self.exp = exp

    def normalized(self) -> "DyadicRational":
        num, exp = self.num, self.exp
        if num == 0:
            return DyadicRational(0, 0)
        while exp > 0 and num % 2 == 0:
            num //= 2
            exp -= 1
        return DyadicRational(num, exp)

    def key(self) -> tuple[int, int]:
        n = self.normalized()
        return (n.num, n.exp)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DyadicRational):
            return NotImplemented
        return self.num << other.exp == other.num << self.exp

    def __hash__(self):
        return hash(self.key())

    def __float__(self) -> float:
        return self.num / (1 << self.exp)

    def is_zero(self) -> bool:
        return self.num == 0

    def is_integer(self) -> bool:
        n = self.normalized()
        return n.exp == 0

    def as_int(self) -> int:
        n = self.normalized()
        if n.exp != 0:
            raise ValueError(f"{self} is not an integer")
        return n.num

    def __repr__(self) -> str:
        n = self.normalized()
        if n.exp == 0:
            return str(n.num)
        return f"{n.num}/2^{n.exp}"


def dyadic_add(a: DyadicRational, b: DyadicRational) -> DyadicRational:
    ea, eb = a.exp, b.exp
    if ea == eb:
        return DyadicRational(a.num + b.num, ea)
    if ea < eb:
        return DyadicRational((a.num << (eb - ea)) + b.num, eb)
    return DyadicRational(a.num + (b.num << (ea - eb)), ea)


def dyadic_sub(a: DyadicRational, b: DyadicRational) -> DyadicRational:
    ea, eb = a.exp, b.exp
    if ea == eb:
        return DyadicRational(a.num - b.num, ea)
    if ea < eb:
        return DyadicRational((a.num << (eb - ea)) - b.num, eb)
    return DyadicRational(a.num - (b.num << (ea - eb)), ea)


def dyadic_mul(a: DyadicRational, b: DyadicRational) -> DyadicRational:
    return DyadicRational(a.num * b.num, a.exp + b.exp)


def parse_dyadic(token: str) -> DyadicRational:
    """Parse ``n`` or ``n/2^k`` (the number-file grammar)."""
    token = token.strip()
    if "/" in token:
        num_s, den_s = token.split("/", 1)
        if not den_s.startswith("2^"):
            raise ValueError(f"bad dyadic token {token!r}: denominator must be 2^k")
        return DyadicRational(int(num_s), int(den_s[2:])).normalized()
    return DyadicRational(int(token))


class LinearForm:
    """c0 + sum(c[m] * b_m) with dyadic coefficients, m = 0..15.

    Closed under addition, negation and halving.  Multiplication is only
    defined when at least one factor is a pure constant, which keeps the
    degree at most one.
    """

    __slots__ = ("coeffs",)
    NVARS = 16

    def __init__(self, coeffs):
        coeffs = tuple(coeffs)
        if len(coeffs) != self.NVARS + 1:
            raise LinearFormError("a linear form has 17 coefficients")
        self.coeffs = coeffs

    @staticmethod
    def constant(value: DyadicRational) -> "LinearForm":
        zero = DyadicRational(0)
        return LinearForm((value,) + (zero,) * LinearForm.NVARS)

    @staticmethod
    def variable(index: int) -> "LinearForm":
        if not 0 <= index < LinearForm.NVARS:
            raise LinearFormError(f"variable index {index} out of range 0..15")
        zero = DyadicRational(0)
        coeffs = [zero] * (LinearForm.NVARS + 1)
        coeffs[index + 1] = DyadicRational(1)
        return LinearForm(coeffs)

    def is_constant(self) -> bool:
        return all(c.is_zero() for c in self.coeffs[1:])

    def __add__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(tuple(dyadic_add(a, b) for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: "LinearForm") -> "LinearForm":
        return LinearForm(tuple(dyadic_sub(a, b) for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> "LinearForm":
        return LinearForm(tuple(DyadicRational(-c.num, c.exp) for c in self.coeffs))

    def __mul__(self, other: "LinearForm") -> "LinearForm":
        if other.is_constant():
            k = other.coeffs[0]
            return LinearForm(tuple(dyadic_mul(c, k) for c in self.coeffs))
        if self.is_constant():
            k = self.coeffs[0]
            return LinearForm(tuple(dyadic_mul(k, c) for c in other.coeffs))
        raise LinearFormError("product of two non-constant forms leaves degree <= 1")

    def halve(self) -> "LinearForm":
        return LinearForm(tuple(DyadicRational(c.num, c.exp + 1) for c in self.coeffs))

    def __eq__(self, other) -> bool:
        if not isinstance(other, LinearForm):
            return NotImplemented
        return all(a == b for a, b in zip(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash(tuple(c.key() for c in self.coeffs))

    def evaluate(self, values) -> DyadicRational:
        """Evaluate at b_m = values[m] (dyadic)."""
        acc = self.coeffs[0]
        for coeff, val in zip(self.coeffs[1:], values):
            if not coeff.is_zero():
                acc = dyadic_add(acc, dyadic_mul(coeff, val))
        return acc

    def __repr__(self) -> str:
        parts = []
        if not self.coeffs[0].is_zero():
            parts.append(repr(self.coeffs[0]))
        for m, c in enumerate(self.coeffs[1:]):
            if c.is_zero():
                continue
            cn = c.normalized()
            if cn.num == 1 and cn.exp == 0:
                parts.append(f"+b{m}")
            elif cn.num == -1 and cn.exp == 0:
                parts.append(f"-b{m}")
            else:
                sign = "+" if cn.num > 0 else "-"
                mag = DyadicRational(abs(cn.num), cn.exp)
                parts.append(f"{sign}{mag!r}*b{m}")
        if not parts:
            return "0"
        text = "".join(parts)
        return text[1:] if text.startswith("+") else text


@dataclass
class Counter:
    """Mutable tally of the cost model: generic multiplications and
    additions are the priced operations, negations and power-of-two
    shifts are tracked but free."""

    nontrivial_mults: int = 0
    additions: int = 0
    negations: int = 0
    shifts: int = 0

    def as_dict(self) -> dict:
        return {
            "nontrivial_mults": self.nontrivial_mults,
            "additions": self.additions,
            "negations": self.negations,
            "shifts": self.shifts,
        }

    def report(self) -> str:
        """Flat key=value text block (the CLI interchange format)."""
        return "\n".join(f"{k}={v}" for k, v in self.as_dict().items())

    def snapshot(self) -> tuple[int, int, int, int]:
        return (self.nontrivial_mults, self.additions, self.negations, self.shifts)


def counter_report(handle: Counter) -> dict:
    return handle.as_dict()


@dataclass(frozen=True)
class CountingScalar:
    """A dyadic value whose arithmetic feeds a shared :class:`Counter`."""

    value: DyadicRational
    counter: Counter = field(compare=False)


def _is_pow2_magnitude(n: int) -> bool:
    n = abs(n)
    return n != 0 and (n & (n - 1)) == 0


class FloatRing:
    """Machine reals; halving is exact in binary floating point."""

    name = "float"

    @staticmethod
    def wrap(n):
        return float(n)

    @staticmethod
    def from_dyadic(num, exp):
        return num / (1 << exp)

    @staticmethod
    def zero():
        return 0.0

    @staticmethod
    def one():
        return 1.0

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def sub(a, b):
        return a - b

    @staticmethod
    def neg(a):
        return -a

    @staticmethod
    def mul(a, b):
        return a * b

    @staticmethod
    def halve(a):
        return a * 0.5

    @staticmethod
    def eq(a, b):
        return a == b


class DyadicRing:
    name = "dyadic"

    @staticmethod
    def wrap(n):
        return DyadicRational(n)

    @staticmethod
    def from_dyadic(num, exp):
        return DyadicRational(num, exp)

    @staticmethod
    def zero():
        return DyadicRational(0)

    @staticmethod
    def one():
        return DyadicRational(1)

    add = staticmethod(dyadic_add)
    sub = staticmethod(dyadic_sub)
    mul = staticmethod(dyadic_mul)

    @staticmethod
    def neg(a):
        return DyadicRational(-a.num, a.exp)

    @staticmethod
    def halve(a):
        return DyadicRational(a.num, a.exp + 1)

    @staticmethod
    def eq(a, b):
        return a == b


class LinearFormRing:
    name = "linear-form"

    @staticmethod
    def wrap(n):
        return LinearForm.constant(DyadicRational(n))

    @staticmethod
    def from_dyadic(num, exp):
        return LinearForm.constant(DyadicRational(num, exp))

    @staticmethod
    def zero():
        return LinearForm.constant(DyadicRational(0))

    @staticmethod
    def one():
        return LinearForm.constant(DyadicRational(1))

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def sub(a, b):
        return a - b

    @staticmethod
    def neg(a):
        return -a

    @staticmethod
    def mul(a, b):
        return a * b

    @staticmethod
    def halve(a):
        return a.halve()

    @staticmethod
    def eq(a, b):
        return a == b


class CountingRing:
    """Dyadic arithmetic instrumented per the cost model.

    Multiplication is free when either factor is 0 or +-1 and a shift when
    either factor is another signed power of two; additions always count
    (structural zeros never reach the ring because matrix kernels skip
    zero entries); negation and halving are tracked separately.
    """

    name = "counting"

    def __init__(self, counter: Counter | None = None):
        self.counter = counter if counter is not None else Counter()

    def wrap(self, n):
        return CountingScalar(DyadicRational(n), self.counter)

    def from_dyadic(self, num, exp):
        return CountingScalar(DyadicRational(num, exp), self.counter)

    def zero(self):
        return CountingScalar(DyadicRational(0), self.counter)

    def one(self):
        return CountingScalar(DyadicRational(1), self.counter)

    def add(self, a, b):
        self.counter.additions += 1
        return CountingScalar(dyadic_add(a.value, b.value), self.counter)

    def sub(self, a, b):
        # subtraction = addition plus a free negation
        self.counter.additions += 1
        return CountingScalar(dyadic_sub(a.value, b.value), self.counter)

    def neg(self, a):
        self.counter.negations += 1
        return CountingScalar(DyadicRational(-a.value.num, a.value.exp), self.counter)

    def _classify(self, v: DyadicRational) -> str:
        n = v.normalized()
        if n.num == 0:
            return "zero"
        if n.num in (1, -1) and n.exp == 0:
            return "unit"
        if _is_pow2_magnitude(n.num) or (n.num in (1, -1) and n.exp > 0):
            return "pow2"
        return "generic"

    def mul(self, a, b):
        ka = self._classify(a.value)
        kb = self._classify(b.value)
        if ka == "generic" and kb == "generic":
            self.counter.nontrivial_mults += 1
        elif "zero" in (ka, kb) or "unit" in (ka, kb):
            pass
        else:
            self.counter.shifts += 1
        return CountingScalar(dyadic_mul(a.value, b.value), self.counter)

    def halve(self, a):
        self.counter.shifts += 1
        return CountingScalar(DyadicRational(a.value.num, a.value.exp + 1), self.counter)

    @staticmethod
    def eq(a, b):
        return a.value == b.value


class IntRing:
    """Plain integers: the exponent-zero corner of the dyadic ring.

    Internal fast path for halving-free computations (the schoolbook
    product, table checks).  Not one of the four contract realizations.
    """

    name = "int"

    @staticmethod
    def wrap(n):
        return int(n)

    @staticmethod
    def from_dyadic(num, exp):
        if exp != 0:
            raise ValueError("non-integer constant in an integer computation")
        return num

    @staticmethod
    def zero():
        return 0

    @staticmethod
    def one():
        return 1

    @staticmethod
    def add(a, b):
        return a + b

    @staticmethod
    def sub(a, b):
        return a - b

    @staticmethod
    def neg(a):
        return -a

    @staticmethod
    def mul(a, b):
        return a * b

    @staticmethod
    def halve(a):
        raise ValueError("integers are not closed under halving")

    @staticmethod
    def eq(a, b):
        return a == b


FLOAT = FloatRing()
DYADIC = DyadicRing()
FORMS = LinearFormRing()
INTS = IntRing()


def lf_from_b(index: int) -> LinearForm:
    """The basis form b_index."""
    return LinearForm.variable(index)
