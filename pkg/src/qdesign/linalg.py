"""Dense linear algebra over a ``GF`` instance with int-coded entries.

Matrices are lists of row lists.  Every routine copies its input.
"""
from __future__ import annotations

from typing import Optional, Sequence

from .fields import GF


def rref(F: GF, M: Sequence[Sequence[int]]) -> tuple[list[list[int]], list[int]]:
    """Reduced row echelon form (nonzero rows only) and pivot columns."""
    A = [list(r) for r in M]
    if not A:
        return [], []
    ncols = len(A[0])
    pivots: list[int] = []
    row = 0
    for col in range(ncols):
        piv = None
        for i in range(row, len(A)):
            if A[i][col]:
                piv = i
                break
        if piv is None:
            continue
        A[row], A[piv] = A[piv], A[row]
        inv = F.inv(A[row][col])
        if inv != 1:
            A[row] = [F.mul(inv, x) for x in A[row]]
        prow = A[row]
        for i in range(len(A)):
            if i != row and A[i][col]:
                c = A[i][col]
                A[i] = [F.sub(a, F.mul(c, b)) for a, b in zip(A[i], prow)]
        pivots.append(col)
        row += 1
        if row == len(A):
            break
    return A[:row], pivots


def rank(F: GF, M: Sequence[Sequence[int]]) -> int:
    return len(rref(F, M)[1])


def transpose(M):
    return [list(c) for c in zip(*M)]


def matmul(F: GF, A, B):
    Bt = transpose(B)
    out = []
    for row in A:
        out_row = []
        for col in Bt:
            acc = 0
            for a, b in zip(row, col):
                if a and b:
                    acc = F.add(acc, F.mul(a, b))
            out_row.append(acc)
        out.append(out_row)
    return out


def matvec(F: GF, A, v):
    out = []
    for row in A:
        acc = 0
        for a, b in zip(row, v):
            if a and b:
                acc = F.add(acc, F.mul(a, b))
        out.append(acc)
    return out


def vecmat(F: GF, v, A):
    """Row vector times matrix."""
    return matvec(F, transpose(A), v) if A else []


def inverse(F: GF, M) -> Optional[list[list[int]]]:
    """Inverse of a square matrix, or None if singular."""
    n = len(M)
    aug = [list(r) + [1 if i == j else 0 for j in range(n)] for i, r in enumerate(M)]
    R, piv = rref(F, aug)
    if piv[:n] != list(range(n)) or len(piv) < n:
        return None
    return [r[n:] for r in R]


def solve(F: GF, A, b) -> Optional[list[int]]:
    """One solution x of A x = b, or None."""
    ncols = len(A[0]) if A else 0
    aug = [list(r) + [bi] for r, bi in zip(A, b)]
    R, piv = rref(F, aug)
    if ncols in piv:
        return None
    x = [0] * ncols
    for r, c in zip(R, piv):
        x[c] = r[ncols]
    return x


def nullspace(F: GF, A, ncols: Optional[int] = None) -> list[list[int]]:
    """Basis of {x : A x = 0}."""
    if ncols is None:
        ncols = len(A[0]) if A else 0
    R, piv = rref(F, A) if A else ([], [])
    free = [c for c in range(ncols) if c not in piv]
    basis = []
    for f in free:
        x = [0] * ncols
        x[f] = 1
        for r, c in zip(R, piv):
            x[c] = F.neg(r[f])
        basis.append(x)
    return basis


def det(F: GF, M) -> int:
    n = len(M)
    A = [list(r) for r in M]
    d = 1
    for col in range(n):
        piv = next((i for i in range(col, n) if A[i][col]), None)
        if piv is None:
            return 0
        if piv != col:
            A[col], A[piv] = A[piv], A[col]
            d = F.neg(d)
        d = F.mul(d, A[col][col])
        inv = F.inv(A[col][col])
        for i in range(col + 1, n):
            if A[i][col]:
                c = F.mul(A[i][col], inv)
                A[i] = [F.sub(a, F.mul(c, b)) for a, b in zip(A[i], A[col])]
    return d
