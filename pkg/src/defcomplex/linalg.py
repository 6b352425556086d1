"""Dense exact linear algebra over QQ and F_p.

Matrices are lists of row lists of raw field elements (Fraction or int).
Plain Gaussian elimination; everything is exact, deterministic, and small
enough that no pivoting heuristics are needed.
"""

from __future__ import annotations


def row_echelon(rows, field):
    """Reduced row echelon form.  Returns (new rows, pivot column list)."""
    m = [list(r) for r in rows]
    zero = field.zero()
    pivots = []
    r = 0
    ncols = len(m[0]) if m else 0
    for c in range(ncols):
        pivot_row = None
        for i in range(r, len(m)):
            if m[i][c] != zero:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        m[r], m[pivot_row] = m[pivot_row], m[r]
        inv = field.inv(m[r][c])
        m[r] = [field.mul(inv, v) for v in m[r]]
        for i in range(len(m)):
            if i != r and m[i][c] != zero:
                f = m[i][c]
                m[i] = [field.sub(a, field.mul(f, b)) for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def rank(rows, field) -> int:
    if not rows:
        return 0
    return len(row_echelon(rows, field)[0])


def solve_linear(rows, b, field):
    """One solution of A x = b (A given by rows), or None."""
    if not rows:
        return None
    aug = [list(r) + [v] for r, v in zip(rows, b)]
    ech, pivots = row_echelon(aug, field)
    n = len(rows[0])
    zero = field.zero()
    x = [zero] * n
    for row, c in zip(ech, pivots):
        if c == n:
            return None  # pivot in the augmented column: inconsistent
        x[c] = row[n]
    return x


def nullspace(rows, field):
    """Basis of the right kernel of A, deterministic order."""
    if not rows:
        return []
    n = len(rows[0])
    ech, pivots = row_echelon(rows, field)
    zero, one = field.zero(), field.one()
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = [zero] * n
        v[fc] = one
        for row, pc in zip(ech, pivots):
            v[pc] = field.neg(row[fc])
        basis.append(v)
    return basis


def mat_vec(rows, x, field):
    zero = field.zero()
    return [
        _dot(r, x, field, zero)
        for r in rows
    ]


def _dot(r, x, field, zero):
    acc = zero
    for a, b in zip(r, x):
        if a != zero and b != zero:
            acc = field.add(acc, field.mul(a, b))
    return acc


def in_span(span_rows, v, field) -> bool:
    """Is v in the row span of span_rows?"""
    if all(x == field.zero() for x in v):
        return True
    if not span_rows:
        return False
    base = rank(span_rows, field)
    return rank(list(span_rows) + [list(v)], field) == base
