"""Groebner bases, normal forms, syzygies and module-equation solving.

Everything runs over an ambient polynomial ring P; quotient-ring semantics
are obtained by passing the ideal's Groebner basis alongside (lift, work
over P, reduce).  Free-module elements are tuples of polynomials; module
Groebner bases use term-over-position orders, and syzygies / linear solving
use the block trick: augment each generator v_i with a unit vector e_i in
trailing positions, compute a basis for an order in which the leading block
dominates, and read relations or solution coefficients off the trailing
block.
"""

from __future__ import annotations

from .polyring import Poly, PolyRing, exp_div, exp_divides, exp_lcm, exp_mul

# When True, every reduced_groebner call re-checks the Buchberger criterion
# (all S-polynomials reduce to zero).  Enabled by the test suite.
VERIFY_GROEBNER = False


# ---------------------------------------------------------------------------
# scalar division


def divide(f: Poly, divisors, with_quotients: bool = False):
    """Full multivariate division of f by a list of polynomials.

    Every term of the remainder is irreducible by every divisor's leading
    term; when the divisors form a Groebner basis the remainder is the
    unique normal form.  Returns remainder, or (quotients, remainder).
    """
    ring = f.ring
    order_key = ring.order.key
    field = ring.field
    zero = field.zero()
    leads = [
        (idx, g.lead_exp(), g.lead()[1], g)
        for idx, g in enumerate(divisors)
        if not g.is_zero()
    ]
    quotients = [ring.zero() for _ in divisors] if with_quotients else None
    remainder: dict = {}
    work = dict(f.terms)
    while work:
        e = max(work, key=order_key)
        c = work[e]
        hit = None
        for idx, le, lc, g in leads:
            if exp_divides(le, e):
                hit = (idx, le, lc, g)
                break
        if hit is None:
            del work[e]
            remainder[e] = c
            continue
        idx, le, lc, g = hit
        factor_e = exp_div(e, le)
        factor_c = field.div(c, lc)
        for ge, gc in g.terms.items():
            ee = exp_mul(ge, factor_e)
            s = field.sub(work.get(ee, zero), field.mul(factor_c, gc))
            if s == zero:
                work.pop(ee, None)
            else:
                work[ee] = s
        if with_quotients:
            quotients[idx] = quotients[idx] + ring.monomial(factor_e, factor_c)
    rem = Poly(ring, remainder)
    if with_quotients:
        return quotients, rem
    return rem


def normal_form(f: Poly, basis) -> Poly:
    """Unique remainder of f modulo a Groebner basis."""
    return divide(f, basis)


def spoly(f: Poly, g: Poly) -> Poly:
    fe, fc = f.lead()
    ge, gc = g.lead()
    lcm = exp_lcm(fe, ge)
    field = f.ring.field
    a = f.mul_term(exp_div(lcm, fe), field.inv(fc))
    b = g.mul_term(exp_div(lcm, ge), field.inv(gc))
    return a - b


def reduced_groebner(gens, check: bool | None = None):
    """The unique reduced (monic, auto-reduced) Groebner basis of an ideal.

    Plain Buchberger with the product and chain criteria, then
    minimalization and mutual tail reduction.  Deterministic: output sorted
    by leading monomial ascending.
    """
    ring = None
    basis = []
    for g in gens:
        if g.is_zero():
            continue
        if ring is None:
            ring = g.ring
        elif g.ring != ring:
            raise ValueError("generators from mixed rings")
        basis.append(g.monic())
    if not basis:
        return []
    order_key = ring.order.key
    basis.sort(key=lambda p: order_key(p.lead_exp()))

    pairs = {(i, j) for i in range(len(basis)) for j in range(i + 1, len(basis))}
    while pairs:
        # normal strategy: smallest lcm first
        i, j = min(
            pairs,
            key=lambda ij: (
                order_key(exp_lcm(basis[ij[0]].lead_exp(), basis[ij[1]].lead_exp())),
                ij,
            ),
        )
        pairs.discard((i, j))
        fi, fj = basis[i], basis[j]
        ei, ej = fi.lead_exp(), fj.lead_exp()
        lcm = exp_lcm(ei, ej)
        if all(a + b == c for a, b, c in zip(ei, ej, lcm)):
            continue  # product criterion: coprime leading terms
        if _chain_criterion(basis, pairs, i, j, lcm):
            continue
        r = divide(spoly(fi, fj), basis)
        if not r.is_zero():
            basis.append(r.monic())
            k = len(basis) - 1
            pairs.update((t, k) for t in range(k))

    basis = _autoreduce(basis)
    if check if check is not None else VERIFY_GROEBNER:
        assert is_groebner(basis), "Buchberger criterion failed on output basis"
    return basis


def _chain_criterion(basis, pairs, i, j, lcm) -> bool:
    for k in range(len(basis)):
        if k == i or k == j:
            continue
        if not exp_divides(basis[k].lead_exp(), lcm):
            continue
        a = (min(i, k), max(i, k))
        b = (min(j, k), max(j, k))
        if a not in pairs and b not in pairs:
            return True
    return False


def _autoreduce(basis):
    # minimalize: drop elements whose lead is divisible by another lead
    basis = sorted(basis, key=lambda p: p.ring.order.key(p.lead_exp()))
    minimal = []
    for idx, g in enumerate(basis):
        le = g.lead_exp()
        keep = True
        for jdx, h in enumerate(basis):
            if jdx == idx:
                continue
            he = h.lead_exp()
            if exp_divides(he, le) and (he != le or jdx < idx):
                keep = False
                break
        if keep:
            minimal.append(g)
    # inter-reduce tails
    reduced = []
    for idx, g in enumerate(minimal):
        others = minimal[:idx] + minimal[idx + 1 :]
        r = divide(g, others)
        if not r.is_zero():
            reduced.append(r.monic())
    reduced.sort(key=lambda p: p.ring.order.key(p.lead_exp()))
    return reduced


def is_groebner(basis) -> bool:
    """Buchberger criterion: every S-polynomial reduces to zero."""
    for i in range(len(basis)):
        for j in range(i + 1, len(basis)):
            if not divide(spoly(basis[i], basis[j]), basis).is_zero():
                return False
    return True


def ideal_contains(basis, f: Poly) -> bool:
    return divide(f, basis).is_zero()


# ---------------------------------------------------------------------------
# staircase of an Artinian quotient


def standard_monomials(ring: PolyRing, groebner_basis):
    """Monomials outside the leading-term ideal, or None when infinite.

    The quotient P/J is finite-dimensional over k exactly when every
    variable has a pure power among the leading monomials.
    """
    leads = [g.lead_exp() for g in groebner_basis]
    if any(sum(e) == 0 for e in leads):
        return []  # unit ideal
    n = ring.nvars
    bounds = [None] * n
    for e in leads:
        support = [i for i in range(n) if e[i]]
        if len(support) == 1:
            i = support[0]
            if bounds[i] is None or e[i] < bounds[i]:
                bounds[i] = e[i]
    if any(b is None for b in bounds):
        return None
    out = []
    cur = [0] * n

    def rec(i):
        if i == n:
            e = tuple(cur)
            if not any(exp_divides(le, e) for le in leads):
                out.append(e)
            return
        for a in range(bounds[i]):
            cur[i] = a
            rec(i + 1)
        cur[i] = 0

    rec(0)
    out.sort(key=ring.order.key)
    return out


# ---------------------------------------------------------------------------
# free-module elements: tuples of polynomials


def vec_zero(ring: PolyRing, m: int):
    z = ring.zero()
    return tuple(z for _ in range(m))

def vec_is_zero(v) -> bool:
    return all(p.is_zero() for p in v)


def vec_add(v, w):
    return tuple(a + b for a, b in zip(v, w))


def vec_sub(v, w):
    return tuple(a - b for a, b in zip(v, w))


def vec_neg(v):
    return tuple(-a for a in v)


def vec_scale(v, c):
    return tuple(a.scale(c) for a in v)


def vec_mul_poly(v, p: Poly):
    return tuple(a * p for a in v)


def vec_mul_term(v, exps, coeff):
    return tuple(a.mul_term(exps, coeff) for a in v)


class ModuleOrder:
    """Term-over-position order on a free module, with optional elimination.

    Positions below `split` dominate all others (used so that trailing
    bookkeeping positions never interfere with the leading block).  Within a
    block, monomials compare by the ring order and ties go to the lower
    position.
    """

    def __init__(self, ring: PolyRing, split: int | None = None):
        self.ring = ring
        self.split = split

    def key(self, pos, exps):
        block = 1 if (self.split is None or pos < self.split) else 0
        return (block, self.ring.order.key(exps), -pos)


def vec_lead(v, morder: ModuleOrder):
    """(pos, exps, coeff) of the leading module term, or None for zero."""
    best = None
    best_key = None
    for pos, p in enumerate(v):
        if p.is_zero():
            continue
        e, c = p.lead()
        k = morder.key(pos, e)
        if best_key is None or k > best_key:
            best, best_key = (pos, e, c), k
    return best


def module_divide(v, divisors, morder: ModuleOrder, with_quotients: bool = False):
    """Full division of a module element by a list of module elements.

    divisors entries are (vector, (pos, exps, coeff)) with precomputed
    leads.  The remainder has no term divisible by any divisor lead.
    """
    ring = morder.ring
    field = ring.field
    zero = field.zero()
    work = [dict(p.terms) for p in v]
    rem = [dict() for _ in v]
    quotients = [ring.zero() for _ in divisors] if with_quotients else None

    def largest(dicts):
        best = None
        best_key = None
        for pos, terms in enumerate(dicts):
            for e in terms:
                k = morder.key(pos, e)
                if best_key is None or k > best_key:
                    best, best_key = (pos, e), k
        return best

    while True:
        top = largest(work)
        if top is None:
            break
        pos, e = top
        c = work[pos][e]
        hit = None
        for idx, (w, lead) in enumerate(divisors):
            lp, le, lc = lead
            if lp == pos and exp_divides(le, e):
                hit = (idx, w, le, lc)
                break
        if hit is None:
            del work[pos][e]
            rem[pos][e] = c
            continue
        idx, w, le, lc = hit
        factor_e = exp_div(e, le)
        factor_c = field.div(c, lc)
        for wpos, wp in enumerate(w):
            if wp.is_zero():
                continue
            target = work[wpos]
            for ge, gc in wp.terms.items():
                ee = exp_mul(ge, factor_e)
                cc = field.mul(factor_c, gc)
                s = field.sub(target.get(ee, zero), cc)
                if s == zero:
                    target.pop(ee, None)
                else:
                    target[ee] = s
        if with_quotients:
            quotients[idx] = quotients[idx] + ring.monomial(factor_e, factor_c)
    remainder = tuple(Poly(ring, terms) for terms in rem)
    if with_quotients:
        return quotients, remainder
    return remainder


def module_groebner(vectors, morder: ModuleOrder):
    """Groebner basis of the submodule generated by `vectors`.

    Buchberger adapted to modules: S-pairs only between elements whose
    leading terms sit in the same position; the product criterion is not
    sound for modules, so only the chain criterion prunes.  Output is monic
    and sorted canonically.
    """
    ring = morder.ring
    field = ring.field
    basis = []
    for v in vectors:
        lead = vec_lead(v, morder)
        if lead is None:
            continue
        v = vec_scale(v, field.inv(lead[2]))
        basis.append((v, (lead[0], lead[1], field.one())))
    basis.sort(key=lambda bl: morder.key(bl[1][0], bl[1][1]))

    def pair_key(i, j):
        (pi, ei, _), (pj, ej, _) = basis[i][1], basis[j][1]
        return (morder.key(pi, exp_lcm(ei, ej)), i, j)

    pairs = {
        (i, j)
        for i in range(len(basis))
        for j in range(i + 1, len(basis))
        if basis[i][1][0] == basis[j][1][0]
    }
    while pairs:
        i, j = min(pairs, key=lambda ij: pair_key(*ij))
        pairs.discard((i, j))
        (vi, (p, ei, _)), (vj, (_, ej, _)) = basis[i], basis[j]
        lcm = exp_lcm(ei, ej)
        if _module_chain_criterion(basis, pairs, i, j, p, lcm):
            continue
        s = vec_sub(
            vec_mul_term(vi, exp_div(lcm, ei), field.one()),
            vec_mul_term(vj, exp_div(lcm, ej), field.one()),
        )
        r = module_divide(s, basis, morder)
        lead = vec_lead(r, morder)
        if lead is not None:
            r = vec_scale(r, field.inv(lead[2]))
            basis.append((r, (lead[0], lead[1], field.one())))
            k = len(basis) - 1
            pairs.update(
                (t, k) for t in range(k) if basis[t][1][0] == lead[0]
            )
    return _module_autoreduce(basis, morder)


def _module_chain_criterion(basis, pairs, i, j, pos, lcm) -> bool:
    for k, (_, (pk, ek, _)) in enumerate(basis):
        if k == i or k == j or pk != pos:
            continue
        if not exp_divides(ek, lcm):
            continue
        a = (min(i, k), max(i, k))
        b = (min(j, k), max(j, k))
        if a not in pairs and b not in pairs:
            return True
    return False


def _module_autoreduce(basis, morder: ModuleOrder):
    keyed = sorted(basis, key=lambda bl: morder.key(bl[1][0], bl[1][1]))
    minimal = []
    for idx, (v, (p, e, c)) in enumerate(keyed):
        keep = True
        for jdx, (_, (p2, e2, _)) in enumerate(keyed):
            if jdx == idx or p2 != p:
                continue
            if exp_divides(e2, e) and (e2 != e or jdx < idx):
                keep = False
                break
        if keep:
            minimal.append((v, (p, e, c)))
    reduced = []
    for idx, (v, lead) in enumerate(minimal):
        others = minimal[:idx] + minimal[idx + 1 :]
        r = module_divide(v, others, morder)
        rl = vec_lead(r, morder)
        if rl is not None:
            r = vec_scale(r, morder.ring.field.inv(rl[2]))
            reduced.append((r, (rl[0], rl[1], morder.ring.field.one())))
    reduced.sort(key=lambda bl: morder.key(bl[1][0], bl[1][1]))
    return reduced


# ---------------------------------------------------------------------------
# syzygies and linear solving over P/J


def _augmented_basis(ring, m, columns, ideal_basis):
    """Groebner basis of <(c_i, e_i)> + <(g e_j, 0)> with the m leading
    positions dominating the trailing bookkeeping block."""
    k = len(columns)
    morder = ModuleOrder(ring, split=m)
    gens = []
    zero = ring.zero()
    for i, col in enumerate(columns):
        if len(col) != m:
            raise ValueError("column of wrong length")
        tail = [zero] * k
        tail[i] = ring.one()
        gens.append(tuple(col) + tuple(tail))
    for g in ideal_basis or []:
        for pos in range(m):
            v = [zero] * (m + k)
            v[pos] = g
            gens.append(tuple(v))
    return module_groebner(gens, morder), morder


def syzygies(vectors, ideal_basis=None):
    """Generators of the relation module of `vectors` in R^m.

    Over P (ideal_basis None) these are the honest syzygies; over R = P/J
    they are computed by lifting to P and adjoining the J-multiples of the
    standard basis, then the results are reduced modulo J.
    """
    vectors = [tuple(v) for v in vectors]
    if not vectors:
        return []
    m = len(vectors[0])
    ring = None
    for v in vectors:
        for p in v:
            ring = p.ring
            break
        if ring:
            break
    if ring is None:
        raise ValueError("cannot infer ring from empty vectors")
    if m == 0:
        # relations of the zero module: everything, generated by unit vectors
        return [
            tuple(ring.one() if i == j else ring.zero() for j in range(len(vectors)))
            for i in range(len(vectors))
        ]
    basis, _ = _augmented_basis(ring, m, vectors, ideal_basis)
    out = []
    for v, (pos, _, _) in basis:
        if pos >= m and vec_is_zero(v[:m]):
            rel = v[m:]
            if ideal_basis:
                rel = tuple(divide(p, ideal_basis) for p in rel)
            if not vec_is_zero(rel):
                out.append(rel)
    return out


class LinearSystem:
    """Solver for M x = b over R = P/J with the basis cached across solves.

    Columns live in R^m; the verdict is definite: either a solution vector
    over R or None when b is outside the column span.
    """

    def __init__(self, ring: PolyRing, columns, m: int, ideal_basis=None):
        self.ring = ring
        self.m = m
        self.columns = [tuple(col) for col in columns]
        self.ideal_basis = list(ideal_basis) if ideal_basis else []
        self._basis, self._morder = _augmented_basis(
            ring, m, self.columns, self.ideal_basis
        )

    def solve(self, b):
        b = tuple(b)
        if len(b) != self.m:
            raise ValueError("right-hand side of wrong length")
        k = len(self.columns)
        zero = self.ring.zero()
        target = b + tuple(zero for _ in range(k))
        rem = module_divide(target, self._basis, self._morder)
        if not vec_is_zero(rem[: self.m]):
            return None
        x = [-p for p in rem[self.m :]]
        if self.ideal_basis:
            x = [divide(p, self.ideal_basis) for p in x]
        return x


def solve_module_equation(matrix, b, ideal_basis=None):
    """Solve M x = b over P/J; matrix is a list of rows over the ring.

    Returns the solution as a list of ring elements (normal forms when an
    ideal is given), or None when no solution exists.
    """
    rows = [list(r) for r in matrix]
    if not rows:
        # the zero-row matrix maps everything to the zero module
        return [] if all(p.is_zero() for p in b) or not list(b) else None
    m = len(rows)
    k = len(rows[0])
    ring = None
    for r in rows:
        for p in r:
            ring = p.ring
            break
        if ring:
            break
    if k == 0:
        bb = [divide(p, ideal_basis) if ideal_basis else p for p in b]
        return [] if all(p.is_zero() for p in bb) else None
    columns = [tuple(rows[i][j] for i in range(m)) for j in range(k)]
    system = LinearSystem(ring, columns, m, ideal_basis)
    return system.solve(b)
