"""Exact linear algebra over the coefficient rings.

Fields F_{p^f} get vectorized Gaussian elimination on encoded numpy arrays.
The chain ring Z/p^m is handled by base-p digit expansion: an equation over
Z/p^m is equivalent to an F_p-system on digit vectors, so kernels, solves
and length computations reduce to the field case exactly (no rounding, no
heuristics).  Integer Smith normal form (with transforms) is provided for
the small relation matrices of unit-group presentations.
"""

from __future__ import annotations

import numpy as np

from .errors import InputError
from .padic import GF, Zmod


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.int64)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    return A.copy()


def gf_rref(ring: GF, A) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form and pivot columns over F_{p^f}."""
    A = _as_matrix(A)
    rows, cols = A.shape
    r = 0
    pivots = []
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(A[r:, c])[0]
        if len(nz) == 0:
            continue
        i = r + int(nz[0])
        if i != r:
            A[[r, i]] = A[[i, r]]
        inv = ring.inv(int(A[r, c]))
        A[r] = ring.vscale(inv, A[r])
        col = A[:, c].copy()
        col[r] = 0
        mask = np.nonzero(col)[0]
        if len(mask):
            A[mask] = ring.vsub(A[mask], ring.vmul(col[mask][:, None], A[r][None, :]))
        pivots.append(c)
        r += 1
    return A, pivots


def gf_rank(ring: GF, A) -> int:
    return len(gf_rref(ring, A)[1])


def gf_kernel(ring: GF, A) -> np.ndarray:
    """Basis of {x : A x = 0} as rows of the returned matrix."""
    A = _as_matrix(A)
    R, pivots = gf_rref(ring, A)
    cols = A.shape[1]
    free = [c for c in range(cols) if c not in pivots]
    basis = np.zeros((len(free), cols), dtype=np.int64)
    for k, fc in enumerate(free):
        basis[k, fc] = 1
        for i, pc in enumerate(pivots):
            basis[k, pc] = ring.neg(int(R[i, fc]))
    return basis


def gf_solve(ring: GF, A, b):
    """One solution of A x = b (b a vector or matrix of columns), or None."""
    A = _as_matrix(A)
    b = np.asarray(b, dtype=np.int64)
    vec = b.ndim == 1
    B = b.reshape(-1, 1) if vec else b.copy()
    if B.shape[0] != A.shape[0]:
        raise InputError("shape mismatch in solve")
    aug = np.concatenate([A, B], axis=1)
    R, pivots = gf_rref(ring, aug)
    n = A.shape[1]
    if any(c >= n for c in pivots):
        return None
    X = np.zeros((n, B.shape[1]), dtype=np.int64)
    for i, pc in enumerate(pivots):
        X[pc] = R[i, n:]
    return X[:, 0] if vec else X


def gf_row_space(ring: GF, A) -> np.ndarray:
    R, pivots = gf_rref(ring, A)
    return R[: len(pivots)]


def gf_in_span(ring: GF, basis, v) -> bool:
    basis = _as_matrix(basis)
    if basis.shape[0] == 0:
        return not np.any(np.asarray(v))
    return gf_solve(ring, basis.T, np.asarray(v, dtype=np.int64)) is not None


# ---------------------------------------------------------------------------
# Z/p^m: diagonalization over the local ring by minimal-valuation pivoting
# ---------------------------------------------------------------------------


def zmod_diagonalize(ring: Zmod, A):
    """(D, U, V, pivots) with U A V = D = diag(p^{v_1}, ..., p^{v_r}, 0, ...).

    Over Z/p^m every matrix is equivalent to such a diagonal: picking a
    global minimal-valuation pivot makes every elimination quotient exact.
    pivots is the list of p-valuations v_i.
    """
    q, p, m = ring.q, ring.p, ring.m
    D = _as_matrix(A) % q
    n_r, n_c = D.shape
    U = np.eye(n_r, dtype=np.int64)
    V = np.eye(n_c, dtype=np.int64)
    # precompute valuation lookup by table on residues mod p^m
    t = 0
    pivots = []
    while t < min(n_r, n_c):
        block = D[t:, t:]
        nz = block != 0
        if not nz.any():
            break
        vals = np.full(block.shape, m + 1, dtype=np.int64)
        rem = block.copy()
        vcur = 0
        mask = nz.copy()
        while mask.any():
            unit = mask & (rem % p != 0)
            vals[unit] = vcur
            mask = mask & ~unit
            rem = np.where(mask, rem // p, rem)
            vcur += 1
        i, j = np.unravel_index(np.argmin(vals), vals.shape)
        v = int(vals[i, j])
        i, j = t + int(i), t + int(j)
        if i != t:
            D[[t, i]] = D[[i, t]]
            U[[t, i]] = U[[i, t]]
        if j != t:
            D[:, [t, j]] = D[:, [j, t]]
            V[:, [t, j]] = V[:, [j, t]]
        unit_inv = pow(int(D[t, t]) // p**v, -1, q)
        D[t] = (D[t] * unit_inv) % q
        U[t] = (U[t] * unit_inv) % q
        pv = p**v
        col = D[:, t].copy()
        col[t] = 0
        rows = np.nonzero(col)[0]
        if len(rows):
            f = col[rows] // pv  # exact: global minimal valuation
            D[rows] = (D[rows] - f[:, None] * D[t][None, :]) % q
            U[rows] = (U[rows] - f[:, None] * U[t][None, :]) % q
        row = D[t].copy()
        row[t] = 0
        cols = np.nonzero(row)[0]
        if len(cols):
            f = row[cols] // pv
            D[:, cols] = (D[:, cols] - D[:, [t]] * f[None, :]) % q
            V[:, cols] = (V[:, cols] - V[:, [t]] * f[None, :]) % q
        pivots.append(v)
        t += 1
    return D, U, V, pivots


def kernel(ring, A) -> np.ndarray:
    """Generating set of {x : A x = 0} as rows, over GF or Z/p^m."""
    if isinstance(ring, GF):
        return gf_kernel(ring, A)
    q, p, m = ring.q, ring.p, ring.m
    A = _as_matrix(A)
    D, U, V, pivots = zmod_diagonalize(ring, A)
    gens = []
    for i, v in enumerate(pivots):
        if v > 0:
            gens.append((p ** (m - v) * V[:, i]) % q)
    for i in range(len(pivots), A.shape[1]):
        gens.append(V[:, i] % q)
    if not gens:
        return np.zeros((0, A.shape[1]), dtype=np.int64)
    return np.stack(gens)


def solve(ring, A, b):
    """One solution of A x = b over GF or Z/p^m, or None."""
    if isinstance(ring, GF):
        return gf_solve(ring, A, b)
    q, p = ring.q, ring.p
    A = _as_matrix(A)
    D, U, V, pivots = zmod_diagonalize(ring, A)
    c = (U @ (np.asarray(b, dtype=np.int64) % q)) % q
    y = np.zeros(A.shape[1], dtype=np.int64)
    for i, v in enumerate(pivots):
        ci = int(c[i])
        if ci % p**v:
            return None
        y[i] = ci // p**v
    if len(c) > len(pivots) and np.any(c[len(pivots):]):
        return None
    return (V @ y) % q


def image_length(ring, A) -> int:
    """log_p of the size of the column span."""
    if isinstance(ring, GF):
        return gf_rank(ring, A) * ring.f
    _, _, _, pivots = zmod_diagonalize(ring, A)
    return sum(ring.m - v for v in pivots)


def kernel_length(ring, A) -> int:
    A = _as_matrix(A)
    if isinstance(ring, GF):
        return (A.shape[1] - gf_rank(ring, A)) * ring.f
    return A.shape[1] * ring.m - image_length(ring, A)


# ---------------------------------------------------------------------------
# integer Smith normal form (small matrices)
# ---------------------------------------------------------------------------


def smith_normal_form(A):
    """(D, U, V) with U A V = D diagonal, U, V unimodular; exact over Z."""
    A = [[int(x) for x in row] for row in A]
    rows = len(A)
    cols = len(A[0]) if rows else 0
    U = [[1 if i == j else 0 for j in range(rows)] for i in range(rows)]
    V = [[1 if i == j else 0 for j in range(cols)] for i in range(cols)]

    def row_op(i, j, k):  # row_i += k * row_j
        A[i] = [a + k * b for a, b in zip(A[i], A[j])]
        U[i] = [a + k * b for a, b in zip(U[i], U[j])]

    def col_op(i, j, k):  # col_i += k * col_j
        for r in range(rows):
            A[r][i] += k * A[r][j]
        for r in range(cols):
            V[r][i] += k * V[r][j]

    def row_swap(i, j):
        A[i], A[j] = A[j], A[i]
        U[i], U[j] = U[j], U[i]

    def col_swap(i, j):
        for r in range(rows):
            A[r][i], A[r][j] = A[r][j], A[r][i]
        for r in range(cols):
            V[r][i], V[r][j] = V[r][j], V[r][i]

    t = 0
    while t < min(rows, cols):
        # find a nonzero entry in the remaining block
        pos = None
        best = None
        for i in range(t, rows):
            for j in range(t, cols):
                if A[i][j] and (best is None or abs(A[i][j]) < best):
                    best = abs(A[i][j])
                    pos = (i, j)
        if pos is None:
            break
        row_swap(t, pos[0])
        col_swap(t, pos[1])
        clean = False
        while not clean:
            clean = True
            for i in range(t + 1, rows):
                if A[i][t]:
                    q = A[i][t] // A[t][t]
                    row_op(i, t, -q)
                    if A[i][t]:
                        row_swap(t, i)
                        clean = False
            for j in range(t + 1, cols):
                if A[t][j]:
                    q = A[t][j] // A[t][t]
                    col_op(j, t, -q)
                    if A[t][j]:
                        col_swap(t, j)
                        clean = False
        if A[t][t] < 0:
            A[t] = [-a for a in A[t]]
            U[t] = [-a for a in U[t]]
        t += 1
    # enforce divisibility d_i | d_{i+1}
    t = min(rows, cols)
    changed = True
    while changed:
        changed = False
        for i in range(t - 1):
            a, b = A[i][i], A[i + 1][i + 1]
            if a and b and b % a != 0:
                col_op(i, i + 1, 1)
                # re-clean the 2x2 block
                while A[i + 1][i]:
                    q = A[i + 1][i] // A[i][i] if A[i][i] else 0
                    if A[i][i]:
                        row_op(i + 1, i, -q)
                    if A[i + 1][i]:
                        row_swap(i, i + 1)
                while A[i][i + 1]:
                    q = A[i][i + 1] // A[i][i] if A[i][i] else 0
                    if A[i][i]:
                        col_op(i + 1, i, -q)
                    if A[i][i + 1]:
                        col_swap(i, i + 1)
                if A[i][i] < 0:
                    A[i] = [-a for a in A[i]]
                    U[i] = [-a for a in U[i]]
                if A[i + 1][i + 1] < 0:
                    A[i + 1] = [-a for a in A[i + 1]]
                    U[i + 1] = [-a for a in U[i + 1]]
                changed = True
    return A, U, V
