"""Arithmetic over GF(2^q) for coding coefficients and payload symbols."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Irreducible reduction polynomials, bit i = coefficient of x^i.
REDUCTION_POLYNOMIALS = {
    1: 0b11,  # x + 1
    4: 0b1_0011,  # x^4 + x + 1
    8: 0x11B,  # x^8 + x^4 + x^3 + x + 1
    16: 0x1_100B,  # x^16 + x^12 + x^3 + x + 1
}

# Largest q that gets log/antilog tables; wider fields multiply directly.
TABLE_MAX_Q = 8


class FieldError(ValueError):
    pass


class InversionOfZeroError(ZeroDivisionError, FieldError):
    pass


def clmul(a: int, b: int) -> int:
    """Carry-less (GF(2)[x]) product of two polynomials, no reduction."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_mod(a: int, poly: int) -> int:
    deg = poly.bit_length() - 1
    while a.bit_length() - 1 >= deg:
        a ^= poly << (a.bit_length() - 1 - deg)
    return a


def is_irreducible(poly: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for cand in range(1 << d, 1 << (d + 1)):
            if poly_mod(poly, cand) == 0:
                return False
    return True


def _find_generator(q: int, poly: int) -> int:
    order = (1 << q) - 1
    for g in range(2 if q > 1 else 1, 1 << q):
        x, seen = 1, 0
        for _ in range(order):
            x = poly_mod(clmul(x, g), poly)
            seen += 1
            if x == 1:
                break
        if seen == order:
            return g
    raise FieldError(f"no generator found for q={q}")


@dataclass(frozen=True)
class FieldContext:
    """The field GF(2^q); immutable and safe to share between workers.

    ``exp`` has length ``2 * order`` so that ``exp[log[a] + log[b]]`` needs no
    modular reduction. All tables are empty for q > 8, where multiplication
    falls back to carry-less products.
    """

    q: int = 8
    reduction_polynomial: int = 0
    exp: np.ndarray = field(default=None, repr=False, compare=False)
    log: np.ndarray = field(default=None, repr=False, compare=False)
    mul_table: np.ndarray = field(default=None, repr=False, compare=False)
    inv_table: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.q not in REDUCTION_POLYNOMIALS:
            raise FieldError(
                f"unsupported field width q={self.q}; choose from {sorted(REDUCTION_POLYNOMIALS)}"
            )
        poly = self.reduction_polynomial or REDUCTION_POLYNOMIALS[self.q]
        if poly.bit_length() - 1 != self.q or not is_irreducible(poly):
            raise FieldError(f"{poly:#x} is not an irreducible polynomial of degree {self.q}")
        object.__setattr__(self, "reduction_polynomial", poly)

        if self.q <= TABLE_MAX_Q:
            exp, log = _build_tables(self.q, poly)
            mul_table, inv_table = _product_tables(self.q, exp, log)
        else:
            exp = np.zeros(0, dtype=np.int64)
            log = np.zeros(0, dtype=np.int64)
            mul_table = np.zeros((0, 0), dtype=np.uint16)
            inv_table = np.zeros(0, dtype=np.uint16)
        for name, arr in (("exp", exp), ("log", log), ("mul_table", mul_table), ("inv_table", inv_table)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def size(self) -> int:
        return 1 << self.q

    @property
    def order(self) -> int:
        """Order of the multiplicative group."""
        return (1 << self.q) - 1

    @property
    def has_tables(self) -> bool:
        return self.exp.size > 0

    @property
    def kernel_args(self) -> tuple:
        """Field arguments in the order the compiled kernels expect."""
        return (self.reduction_polynomial, self.q, self.mul_table, self.inv_table)

    def check(self, a: int) -> int:
        if not 0 <= a < self.size:
            raise FieldError(f"{a} is not an element of GF(2^{self.q})")
        return a


def _build_tables(q: int, poly: int) -> tuple[np.ndarray, np.ndarray]:
    order = (1 << q) - 1
    g = _find_generator(q, poly)
    exp = np.zeros(2 * order, dtype=np.int64)
    log = np.zeros(1 << q, dtype=np.int64)
    x = 1
    for i in range(order):
        exp[i] = x
        log[x] = i
        x = poly_mod(clmul(x, g), poly)
    exp[order:] = exp[:order]
    return exp, log


def _product_tables(q: int, exp: np.ndarray, log: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    size = 1 << q
    order = size - 1
    la = log[:, None] + log[None, :]
    mul_table = exp[la].astype(np.uint16)
    mul_table[0, :] = 0
    mul_table[:, 0] = 0
    inv_table = np.zeros(size, dtype=np.uint16)
    inv_table[1:] = exp[(order - log[1:]) % order]
    return mul_table, inv_table


_CONTEXTS: dict[int, FieldContext] = {}


def get_field(q: int = 8) -> FieldContext:
    """Cached default-polynomial context for width ``q``."""
    ctx = _CONTEXTS.get(q)
    if ctx is None:
        ctx = _CONTEXTS[q] = FieldContext(q)
    return ctx


def gf_add(ctx: FieldContext, a: int, b: int) -> int:
    return a ^ b


def gf_mul(ctx: FieldContext, a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    if ctx.has_tables:
        return int(ctx.exp[ctx.log[a] + ctx.log[b]])
    return poly_mod(clmul(a, b), ctx.reduction_polynomial)


def gf_inv(ctx: FieldContext, a: int) -> int:
    if a == 0:
        raise InversionOfZeroError("zero has no multiplicative inverse")
    if ctx.has_tables:
        return int(ctx.exp[(ctx.order - ctx.log[a]) % ctx.order])
    # a^(2^q - 2) by square-and-multiply.
    result, base, e = 1, a, ctx.order - 1
    while e:
        if e & 1:
            result = gf_mul(ctx, result, base)
        base = gf_mul(ctx, base, base)
        e >>= 1
    return result


def gf_scale(ctx: FieldContext, c: int, vec: np.ndarray) -> np.ndarray:
    """Multiply every entry of ``vec`` by the scalar ``c``."""
    vec = np.asarray(vec, dtype=np.int64)
    if c == 0:
        return np.zeros_like(vec)
    if c == 1:
        return vec.copy()
    if ctx.has_tables:
        out = ctx.exp[ctx.log[vec] + ctx.log[c]]
        return np.where(vec == 0, 0, out)
    return np.array([gf_mul(ctx, c, int(v)) for v in vec], dtype=np.int64)
