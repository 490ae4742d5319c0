"""Brute-force spectral ground truth for truncated operators.

Matrices are written in mu-orthonormal coordinates (conjugated by
mu^{1/2}) so they are symmetric; matrix functions come from a dense
eigendecomposition.  Nothing here shares code with the closed-form kernel
path it is used to check.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import expm_multiply

from .tree import Truncation


class DenseCapExceeded(ValueError):
    pass


class NearSingular(ValueError):
    def __init__(self, eigenvalue: float, floor: float):
        super().__init__(f"eigenvalue {eigenvalue:.3e} below the spectral floor {floor:.0e}")
        self.eigenvalue = eigenvalue


def dense_cap() -> int:
    return int(os.environ.get("FLOWTREE_DENSE_CAP", 4096))


def adjacency(t: Truncation) -> sparse.csr_matrix:
    child = np.arange(1, t.size)
    par = t.parent[1:]
    A = sparse.coo_matrix((np.ones(2 * len(child)),
                           (np.r_[child, par], np.r_[par, child])), shape=(t.size, t.size))
    return A.tocsr()


def sparse_matrix_of(op_tag: str, domain) -> sparse.csr_matrix:
    if op_tag == "z_laplacian":
        M = 2 * int(domain) + 1
        off = np.full(M - 1, -0.5)
        return sparse.diags([off, np.ones(M), off], [-1, 0, 1], format="csr")
    t = domain
    A = adjacency(t)
    eye = sparse.identity(t.size, format="csr")
    if op_tag == "flow_laplacian":
        # mu^{1/2} L mu^{-1/2} = I - A / (2 sqrt q)
        return (eye - A / (2 * np.sqrt(t.q))).tocsr()
    if op_tag == "combinatorial_laplacian":
        return (eye - A / (t.q + 1)).tocsr()
    raise ValueError(f"unknown operator tag {op_tag!r}")


@dataclass(frozen=True)
class DenseOperator:
    matrix: np.ndarray
    op_tag: str
    domain: object

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def eigh(self):
        return np.linalg.eigh(self.matrix)


def dense_matrix_of(op_tag: str, domain) -> DenseOperator:
    """Compression of a Laplacian to a truncation (or a Z-window half width)."""
    size = 2 * int(domain) + 1 if op_tag == "z_laplacian" else domain.size
    if size > dense_cap():
        raise DenseCapExceeded(f"{size} exceeds the dense cap {dense_cap()}")
    M = sparse_matrix_of(op_tag, domain).toarray()
    return DenseOperator(M, op_tag, domain)


def matrix_function_apply(op: DenseOperator, fn: str, v, t: float = 1.0, floor: float = 1e-8):
    """f(A) v for ``fn`` in {"exp", "inverse_sqrt"} (exp means exp(-t A))."""
    w, V = op.eigh()
    if fn == "exp":
        s = np.exp(-t * w)
    elif fn == "inverse_sqrt":
        if w.min() < floor:
            raise NearSingular(float(w.min()), floor)
        s = 1 / np.sqrt(w)
    else:
        raise ValueError(f"unknown matrix function {fn!r}")
    coeffs = V.T @ np.asarray(v)
    if coeffs.ndim == 2:
        s = s[:, None]
    return V @ (s * coeffs)


def heat_apply_sparse(op_tag: str, domain, t: float, v) -> np.ndarray:
    """exp(-t A) v via Krylov/Taylor action; for truncations beyond the dense cap."""
    return expm_multiply(-t * sparse_matrix_of(op_tag, domain).tocsc(), np.asarray(v, dtype=float))


def to_orthonormal(t: Truncation, f: np.ndarray) -> np.ndarray:
    return f * np.power(float(t.q), t.level / 2.0)


def from_orthonormal(t: Truncation, v: np.ndarray) -> np.ndarray:
    return v * np.power(float(t.q), -t.level / 2.0)
