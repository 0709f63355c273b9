"""Random linear network coding over GF(2^q).

Each node keeps a :class:`SubspaceBuffer`: the reduced row-echelon basis of
the coefficient vectors it has received, with payloads carried through the
same row operations. Encoding draws a random combination of the basis rows;
decoding reads the payloads off once the basis is the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .galois import FieldContext, gf_inv, gf_mul, get_field


class CodingError(ValueError):
    pass


class NotDecodableError(CodingError):
    pass


@dataclass(frozen=True)
class InformationPacket:
    symbols: np.ndarray
    origin: int

    def __post_init__(self) -> None:
        sym = np.asarray(self.symbols, dtype=np.int64).reshape(-1)
        if sym.size < 1:
            raise CodingError("an information packet needs at least one symbol")
        object.__setattr__(self, "symbols", sym)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, InformationPacket)
            and self.origin == other.origin
            and np.array_equal(self.symbols, other.symbols)
        )


@dataclass(frozen=True)
class CodedMessage:
    coefficients: np.ndarray
    payload: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=np.int64).reshape(-1))
        object.__setattr__(self, "payload", np.asarray(self.payload, dtype=np.int64).reshape(-1))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, CodedMessage)
            and np.array_equal(self.coefficients, other.coefficients)
            and np.array_equal(self.payload, other.payload)
        )

    def to_bytes(self, q: int = 8) -> bytes:
        """Header (coefficients) then body (payload), q bits per element, big-endian."""
        return pack_elements(np.concatenate([self.coefficients, self.payload]), q)

    @classmethod
    def from_bytes(cls, data: bytes, n: int, r: int, q: int = 8) -> "CodedMessage":
        values = unpack_elements(data, n + r, q)
        return cls(values[:n], values[n:])


def pack_elements(values, q: int) -> bytes:
    """Concatenate q-bit elements MSB-first, zero-padding to a whole byte."""
    acc = 0
    count = 0
    for v in values:
        v = int(v)
        if not 0 <= v < (1 << q):
            raise CodingError(f"{v} does not fit in {q} bits")
        acc = (acc << q) | v
        count += 1
    nbits = count * q
    pad = (-nbits) % 8
    return (acc << pad).to_bytes((nbits + pad) // 8, "big")


def unpack_elements(data: bytes, count: int, q: int) -> np.ndarray:
    nbits = count * q
    nbytes = (nbits + 7) // 8
    if len(data) != nbytes:
        raise CodingError(f"expected {nbytes} bytes for {count} elements of {q} bits, got {len(data)}")
    acc = int.from_bytes(data, "big") >> (nbytes * 8 - nbits)
    mask = (1 << q) - 1
    out = [(acc >> (q * (count - 1 - k))) & mask for k in range(count)]
    return np.array(out, dtype=np.int64)


class SubspaceBuffer:
    """A node's received subspace, kept in reduced row-echelon form.

    Rows sit in insertion order rather than pivot order; the only invariant is
    that every pivot entry is 1 and its column is zero elsewhere.
    """

    def __init__(self, n: int, r: int, ctx: FieldContext | None = None):
        if n < 1 or r < 1:
            raise CodingError(f"need N >= 1 and r >= 1, got N={n}, r={r}")
        self.n = n
        self.r = r
        self.ctx = ctx or get_field(8)
        self.rows = np.zeros((n, n + r), dtype=_kernels.ELEMENT)
        self.pivots = np.zeros(n, dtype=np.int64)
        self.dim = 0

    @classmethod
    def from_arrays(cls, rows, pivots, dim: int, r: int, ctx: FieldContext | None = None) -> "SubspaceBuffer":
        """Wrap a node's slice of engine state (copied)."""
        n = rows.shape[0]
        buf = cls(n, r, ctx)
        buf.rows[:] = rows
        buf.pivots[:] = pivots
        buf.dim = int(dim)
        return buf

    @property
    def basis_rows(self) -> list[tuple[np.ndarray, np.ndarray]]:
        return [(row[: self.n].copy(), row[self.n :].copy()) for row in self.rows[: self.dim]]

    @property
    def pivot_columns(self) -> list[int]:
        return [int(p) for p in self.pivots[: self.dim]]

    @property
    def coefficient_matrix(self) -> np.ndarray:
        return self.rows[: self.dim, : self.n].copy()

    @property
    def complete(self) -> bool:
        return self.dim == self.n

    def _check(self, msg: CodedMessage) -> None:
        if msg.coefficients.size != self.n or msg.payload.size != self.r:
            raise CodingError(
                f"message shape ({msg.coefficients.size}, {msg.payload.size}) "
                f"does not match buffer ({self.n}, {self.r})"
            )

    def insert(self, msg: CodedMessage) -> bool:
        """Add ``msg`` if it is innovative; return whether the dimension grew."""
        self._check(msg)
        vec = np.concatenate([msg.coefficients, msg.payload]).astype(_kernels.ELEMENT)
        new_dim = _kernels.insert(self.rows, self.pivots, self.dim, self.n, vec, *self.ctx.kernel_args)
        grew = new_dim > self.dim
        self.dim = new_dim
        return grew

    def contains(self, coefficients) -> bool:
        """Whether a coefficient vector lies in the span of the basis."""
        vec = np.zeros(self.n + self.r, dtype=_kernels.ELEMENT)
        vec[: self.n] = coefficients
        for i in range(self.dim):
            c = int(vec[self.pivots[i]])
            if c:
                _kernels.axpy(c, self.rows[i], vec, *self.ctx.kernel_args)
        return not vec[: self.n].any()

    def copy(self) -> "SubspaceBuffer":
        return SubspaceBuffer.from_arrays(self.rows, self.pivots, self.dim, self.r, self.ctx)


def buffer_init(own_packet: InformationPacket, n: int, ctx: FieldContext | None = None) -> SubspaceBuffer:
    """Buffer holding only the node's own packet, with coefficient vector e_origin."""
    return buffer_init_many([own_packet], n, ctx)


def buffer_init_many(packets, n: int, ctx: FieldContext | None = None) -> SubspaceBuffer:
    """Buffer seeded with one or more information packets; start from ``SubspaceBuffer(n, r)`` for none."""
    packets = list(packets)
    if not packets:
        raise CodingError("cannot infer payload length from an empty packet list")
    r = packets[0].symbols.size
    buf = SubspaceBuffer(n, r, ctx)
    for pkt in packets:
        if not 0 <= pkt.origin < n:
            raise CodingError(f"origin {pkt.origin} outside 0..{n - 1}")
        if pkt.symbols.size != r:
            raise CodingError("all packets must have the same length")
        coeffs = np.zeros(n, dtype=np.int64)
        coeffs[pkt.origin] = 1
        buf.insert(CodedMessage(coeffs, pkt.symbols))
    return buf


def encode(buffer: SubspaceBuffer, rng: np.random.Generator) -> CodedMessage:
    """Random nonzero combination of the buffer's basis rows."""
    if buffer.dim < 1:
        raise CodingError("cannot encode from an empty buffer")
    size = buffer.ctx.size
    while True:
        beta = rng.integers(0, size, size=buffer.dim)
        if beta.any():
            break
    out = np.zeros(buffer.n + buffer.r, dtype=_kernels.ELEMENT)
    for b, row in zip(beta, buffer.rows[: buffer.dim]):
        _kernels.axpy(int(b), row, out, *buffer.ctx.kernel_args)
    return CodedMessage(out[: buffer.n], out[buffer.n :])


def insert(buffer: SubspaceBuffer, msg: CodedMessage) -> bool:
    return buffer.insert(msg)


def decode(buffer: SubspaceBuffer) -> list[InformationPacket]:
    """Recover all N information packets, in origin order."""
    if buffer.dim < buffer.n:
        raise NotDecodableError(f"rank {buffer.dim} < N={buffer.n}; cannot decode")
    # A full-rank reduced basis is a row permutation of the identity.
    out: list[InformationPacket | None] = [None] * buffer.n
    for row, p in zip(buffer.rows, buffer.pivots):
        out[int(p)] = InformationPacket(row[buffer.n :].copy(), int(p))
    return out


def combine_packets(ctx: FieldContext, coefficients, packets) -> np.ndarray:
    """sum_k coefficients[k] * packets[k], computed element by element."""
    coefficients = [int(c) for c in coefficients]
    r = packets[0].symbols.size
    out = [0] * r
    for c, pkt in zip(coefficients, packets):
        for j in range(r):
            out[j] ^= gf_mul(ctx, c, int(pkt.symbols[j]))
    return np.array(out, dtype=np.int64)


def rank_oracle(rows, ctx: FieldContext | None = None) -> int:
    """Rank by plain Gauss-Jordan on a private copy, independent of SubspaceBuffer."""
    ctx = ctx or get_field(8)
    mat = [[int(v) for v in row] for row in rows]
    if not mat:
        return 0
    ncols = len(mat[0])
    rank = 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(mat)) if mat[i][col]), None)
        if pivot is None:
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        lead_inv = gf_inv(ctx, mat[rank][col])
        mat[rank] = [gf_mul(ctx, lead_inv, v) for v in mat[rank]]
        for i in range(len(mat)):
            if i != rank and mat[i][col]:
                c = mat[i][col]
                mat[i] = [a ^ gf_mul(ctx, c, b) for a, b in zip(mat[i], mat[rank])]
        rank += 1
        if rank == len(mat):
            break
    return rank
