"""Modeling layer: Hermitian-valued affine expressions over named variables.

A variable is a real coordinate vector ``x`` together with a fixed basis of
Hermitian matrices, so its value is ``sum_j x_j B_j``. A Hermitian block of
size n uses n^2 coordinates; a diagonal block uses n; a scalar uses one.
Expressions keep one coefficient stack per variable, shaped ``(k, m, m)``,
plus a constant; every structured map (partial trace, dephasing, tensor with
a constant, factor permutation) is applied to the whole stack at once.
"""

from typing import Callable

import numpy as np

from .. import linalg


def herm_basis(n: int) -> np.ndarray:
    """Orthonormal basis of n x n Hermitian matrices under Re Tr[x^dag y].

    Order: diagonal units, then for each i<j the symmetric and the
    antisymmetric-imaginary unit.
    """
    out = np.zeros((n * n, n, n), dtype=complex)
    k = 0
    for i in range(n):
        out[k, i, i] = 1
        k += 1
    r = 1 / np.sqrt(2)
    for i in range(n):
        for j in range(i + 1, n):
            out[k, i, j] = out[k, j, i] = r
            k += 1
            out[k, i, j] = 1j * r
            out[k, j, i] = -1j * r
            k += 1
    return out


def hvec(m) -> np.ndarray:
    """Coordinates of Hermitian matrices (last two axes) in :func:`herm_basis`."""
    m = np.asarray(m)
    n = m.shape[-1]
    iu = np.triu_indices(n, 1)
    d = np.real(np.diagonal(m, axis1=-2, axis2=-1))
    up = m[..., iu[0], iu[1]]
    re = np.sqrt(2) * up.real
    im = np.sqrt(2) * up.imag
    inter = np.stack([re, im], axis=-1).reshape(m.shape[:-2] + (-1,))
    return np.concatenate([d, inter], axis=-1)


def hunvec(v, n: int) -> np.ndarray:
    return np.tensordot(np.asarray(v, float), herm_basis(n), axes=(0, 0))


class Variable:
    def __init__(self, name: str, basis: np.ndarray, kind: str):
        self.name = name
        self.basis = basis
        self.kind = kind          # 'hermitian' | 'diagonal' | 'scalar' | 'vector'
        self.index = -1
        self.offset = -1

    @property
    def size(self) -> int:
        return self.basis.shape[0]

    def __repr__(self):
        return f"Variable({self.name!r}, {self.kind}, k={self.size})"


class Affine:
    """``sum_v coeff_v . x_v + const`` with ``coeff_v`` of shape (k_v, m, m)."""

    __array_priority__ = 100

    def __init__(self, terms: dict, const: np.ndarray):
        self.terms = terms
        self.const = np.asarray(const, dtype=complex)

    @property
    def dim(self) -> int:
        return self.const.shape[-1]

    @staticmethod
    def constant(m) -> "Affine":
        m = np.asarray(m, dtype=complex)
        if m.ndim == 0:
            m = m.reshape(1, 1)
        return Affine({}, m)

    def map(self, fn: Callable) -> "Affine":
        """Apply a linear map (acting on the last two axes, batch-aware)."""
        return Affine({v: fn(c) for v, c in self.terms.items()}, fn(self.const))

    def _combine(self, other, sign):
        other = _as_affine(other, self.dim)
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch {self.dim} vs {other.dim}")
        terms = dict(self.terms)
        for v, c in other.terms.items():
            terms[v] = terms[v] + sign * c if v in terms else sign * c
        return Affine(terms, self.const + sign * other.const)

    def __add__(self, other):
        return self._combine(other, 1)

    __radd__ = __add__

    def __sub__(self, other):
        return self._combine(other, -1)

    def __rsub__(self, other):
        return (-self)._combine(other, 1)

    def __neg__(self):
        return self * -1.0

    def __mul__(self, a):
        if not np.isscalar(a):
            raise TypeError("use left/right for matrix products")
        return Affine({v: c * a for v, c in self.terms.items()}, self.const * a)

    __rmul__ = __mul__

    def __truediv__(self, a):
        return self * (1.0 / a)

    # structured maps
    def ptrace(self, dims, keep) -> "Affine":
        return self.map(lambda m: linalg.partial_trace(m, dims, keep))

    def dephase(self, dims=None, which=None) -> "Affine":
        return self.map(lambda m: linalg.dephase(m, dims, which))

    def permute(self, dims, perm) -> "Affine":
        return self.map(lambda m: linalg.permute_factors(m, dims, perm))

    def embed(self, dims, factors) -> "Affine":
        return self.map(lambda m: linalg.embed(m, dims, factors))

    def kron(self, left=None, right=None) -> "Affine":
        def fn(m):
            if left is not None:
                m = np.einsum("ij,...kl->...ikjl", left, m).reshape(
                    m.shape[:-2] + (left.shape[0] * m.shape[-1],) * 2)
            if right is not None:
                m = np.einsum("...ij,kl->...ikjl", m, right).reshape(
                    m.shape[:-2] + (m.shape[-1] * right.shape[0],) * 2)
            return m
        return self.map(fn)

    def sandwich(self, left, right) -> "Affine":
        """``left @ X @ right``; the caller keeps the result Hermitian."""
        return self.map(lambda m: left @ m @ right)

    def trace(self) -> "Affine":
        return self.map(lambda m: np.trace(m, axis1=-2, axis2=-1)[..., None, None])

    def inner(self, c) -> "Affine":
        """Scalar expression ``Tr[c X]`` for a constant Hermitian ``c``."""
        c = np.asarray(c)
        return self.map(lambda m: np.einsum("ij,...ji->...", c, m)[..., None, None])

    def entry(self, i: int, j: int) -> "Affine":
        return self.map(lambda m: m[..., i:i + 1, j:j + 1])

    def value(self, values: dict) -> np.ndarray:
        out = self.const.copy()
        for v, c in self.terms.items():
            out = out + np.tensordot(values[v.name], c, axes=(0, 0))
        return out


def _as_affine(x, dim) -> Affine:
    if isinstance(x, Affine):
        return x
    x = np.asarray(x, dtype=complex)
    if x.ndim == 0:
        if dim != 1:
            raise ValueError("scalars can only be combined with 1x1 expressions")
        x = x.reshape(1, 1)
    return Affine.constant(x)


class Constraint:
    def __init__(self, kind: str, expr: Affine, name: str, mats=None):
        self.kind = kind      # 'eq' | 'psd' | 'orth'
        self.expr = expr
        self.name = name
        self.mats = mats


class ConicProblem:
    """Block-structured SDP: Hermitian/diagonal/scalar variables, affine
    equalities, Hermitian LMIs and a real linear objective."""

    def __init__(self, name: str = "sdp"):
        self.name = name
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.objective: Affine | None = None
        self.sense = "min"

    def _add_var(self, name, basis, kind):
        if any(v.name == name for v in self.variables):
            raise ValueError(f"duplicate variable name {name!r}")
        v = Variable(name, basis, kind)
        v.index = len(self.variables)
        self.variables.append(v)
        return v

    def hermitian(self, name: str, n: int) -> Affine:
        b = herm_basis(n)
        v = self._add_var(name, b, "hermitian")
        return Affine({v: b}, np.zeros((n, n)))

    def diagonal(self, name: str, n: int) -> Affine:
        b = np.zeros((n, n, n), dtype=complex)
        b[np.arange(n), np.arange(n), np.arange(n)] = 1
        v = self._add_var(name, b, "diagonal")
        return Affine({v: b}, np.zeros((n, n)))

    def scalar(self, name: str) -> Affine:
        b = np.ones((1, 1, 1), dtype=complex)
        v = self._add_var(name, b, "scalar")
        return Affine({v: b}, np.zeros((1, 1)))

    def combination(self, name: str, mats) -> Affine:
        """Real combination ``sum_i t_i mats[i]`` with free coefficients t."""
        b = np.asarray(mats, dtype=complex)
        v = self._add_var(name, b, "vector")
        return Affine({v: b}, np.zeros(b.shape[1:]))

    def add_psd(self, expr: Affine, name: str | None = None):
        self.constraints.append(Constraint("psd", expr, name or f"psd{len(self.constraints)}"))

    def add_eq(self, expr: Affine, rhs=0.0, name: str | None = None):
        if not (np.isscalar(rhs) and rhs == 0):
            expr = expr - _as_affine(rhs, expr.dim)
        self.constraints.append(Constraint("eq", expr, name or f"eq{len(self.constraints)}"))

    def add_orthogonal(self, expr: Affine, mats, name: str | None = None):
        """``Tr[M_i expr] = 0`` for each Hermitian ``M_i`` in ``mats``."""
        mats = np.asarray(mats, dtype=complex)
        self.constraints.append(Constraint("orth", expr, name or f"orth{len(self.constraints)}", mats))

    def add_ge(self, expr: Affine, rhs=0.0, name: str | None = None):
        """``expr - rhs`` is PSD; for 1x1 expressions a scalar inequality."""
        if not (np.isscalar(rhs) and rhs == 0):
            expr = expr - _as_affine(rhs, expr.dim)
        self.add_psd(expr, name)

    def minimize(self, expr: Affine):
        self._set_obj(expr, "min")

    def maximize(self, expr: Affine):
        self._set_obj(expr, "max")

    def _set_obj(self, expr, sense):
        if expr.dim != 1:
            raise ValueError("objective must be a scalar expression")
        self.objective = expr
        self.sense = sense

    def dump(self) -> str:
        """Plain-text description of blocks and constraints, for debugging."""
        lines = [f"problem {self.name} sense={self.sense}"]
        for v in self.variables:
            lines.append(f"var {v.name} kind={v.kind} coords={v.size} dim={v.basis.shape[-1]}")
        for c in self.constraints:
            names = ",".join(v.name for v in c.expr.terms)
            lines.append(f"{c.kind} {c.name} dim={c.expr.dim} vars=[{names}]")
        if self.objective is not None:
            obj = " ".join(f"{v.name}:{np.abs(cf).max():.3g}" for v, cf in self.objective.terms.items())
            lines.append(f"objective {obj} const={self.objective.const.real[0, 0]:.6g}")
        return "\n".join(lines)
