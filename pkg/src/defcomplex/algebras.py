"""Embedded affine schemes and their attached algebra.

A scheme X is a polynomial ring P together with chosen generators of an
ideal J; its coordinate ring R = P/J is represented only through the
reduced Groebner basis of J, and ring elements are normal forms.  On top
of that: finitely presented R-modules, square-zero extensions X0 in X,
Kaehler differentials, conormal modules, and tensor squares X x X' with
their diagonal ideals.
"""

from __future__ import annotations

from . import linalg
from .errors import CheckError, UnsupportedBackend, UsageError
from .groebner import (
    LinearSystem,
    divide,
    reduced_groebner,
    standard_monomials,
    syzygies,
)
from .polyring import Poly, PolyRing


class QuotientRing:
    """R = P/J; elements are polynomials in normal form."""

    def __init__(self, ambient: PolyRing, ideal_gens, name: str = ""):
        self.ambient = ambient
        self.ideal_gens = [g for g in ideal_gens if not g.is_zero()]
        for g in self.ideal_gens:
            if g.ring != ambient:
                raise UsageError("ideal generator from a different ring")
        self.groebner = reduced_groebner(self.ideal_gens)
        self.name = name
        self._basis = False  # not yet computed; None means infinite
        self._dense = None

    @property
    def field(self):
        return self.ambient.field

    def nf(self, p: Poly) -> Poly:
        if p.ring != self.ambient:
            raise UsageError("element from a different ambient ring")
        if not self.groebner:
            return p
        return divide(p, self.groebner)

    def zero(self) -> Poly:
        return self.ambient.zero()

    def one(self) -> Poly:
        return self.nf(self.ambient.one())

    def mul(self, a: Poly, b: Poly) -> Poly:
        return self.nf(a * b)

    def is_zero_elt(self, p: Poly) -> bool:
        return self.nf(p).is_zero()

    def elements_equal(self, a: Poly, b: Poly) -> bool:
        return self.nf(a - b).is_zero()

    # Artinian structure

    def basis(self):
        """Standard monomial basis (exponent tuples), or None when infinite."""
        if self._basis is False:
            self._basis = standard_monomials(self.ambient, self.groebner)
        return self._basis

    def is_artinian(self) -> bool:
        return self.basis() is not None

    def require_artinian(self, what: str = "operation"):
        if not self.is_artinian():
            raise UnsupportedBackend(
                f"{what} needs a finite-dimensional quotient ring"
            )

    def k_dim(self) -> int:
        self.require_artinian("k_dim")
        return len(self.basis())

    def to_vec(self, p: Poly):
        """Coefficient vector of nf(p) on the standard monomial basis."""
        self.require_artinian("dense coordinates")
        p = self.nf(p)
        zero = self.field.zero()
        index = self._basis_index()
        v = [zero] * len(index)
        for e, c in p.terms.items():
            v[index[e]] = c
        return v

    def from_vec(self, v) -> Poly:
        self.require_artinian("dense coordinates")
        basis = self.basis()
        zero = self.field.zero()
        return self.ambient.from_terms(
            {e: c for e, c in zip(basis, v) if c != zero}
        )

    def _basis_index(self):
        if self._dense is None:
            self._dense = {e: i for i, e in enumerate(self.basis())}
        return self._dense

    def __eq__(self, other):
        return (
            isinstance(other, QuotientRing)
            and other.ambient == self.ambient
            and other.groebner == self.groebner
        )

    def __hash__(self):
        return hash((self.ambient, tuple(self.groebner)))

    def __repr__(self):
        if not self.groebner:
            return f"{self.ambient!r}"
        ideal = ", ".join(str(g) for g in self.groebner)
        return f"{self.ambient!r}/({ideal})"


# ---------------------------------------------------------------------------
# matrices over a quotient ring (lists of rows of normal-form polynomials)


def mat_nf(q: QuotientRing, m):
    return [[q.nf(a) for a in row] for row in m]


def mat_add(m1, m2):
    return [[a + b for a, b in zip(r1, r2)] for r1, r2 in zip(m1, m2)]


def mat_sub(m1, m2):
    return [[a - b for a, b in zip(r1, r2)] for r1, r2 in zip(m1, m2)]


def mat_neg(m):
    return [[-a for a in row] for row in m]


def mat_mul(q: QuotientRing, m1, m2):
    if not m1 or not m2:
        return []
    inner = len(m2)
    assert all(len(r) == inner for r in m1), "matrix shape mismatch"
    cols = len(m2[0]) if m2 else 0
    out = []
    for row in m1:
        new = []
        for j in range(cols):
            acc = q.zero()
            for t in range(inner):
                if row[t].is_zero() or m2[t][j].is_zero():
                    continue
                acc = acc + row[t] * m2[t][j]
            new.append(q.nf(acc))
        out.append(new)
    return out


def mat_vec(q: QuotientRing, m, v):
    out = []
    for row in m:
        acc = q.zero()
        for a, x in zip(row, v):
            if not a.is_zero() and not x.is_zero():
                acc = acc + a * x
        out.append(q.nf(acc))
    return out


def mat_identity(q: QuotientRing, n):
    one, zero = q.one(), q.zero()
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def mat_zero(q: QuotientRing, rows, cols):
    zero = q.zero()
    return [[zero for _ in range(cols)] for _ in range(rows)]


def mat_is_zero(q: QuotientRing, m) -> bool:
    return all(q.is_zero_elt(a) for row in m for a in row)


def mat_scale(m, p: Poly):
    return [[a * p for a in row] for row in m]


def mat_columns(m):
    if not m:
        return []
    return [tuple(row[j] for row in m) for j in range(len(m[0]))]


# ---------------------------------------------------------------------------
# finitely presented modules


class FpModule:
    """Cokernel presentation: R^gens modulo the span of relation vectors."""

    def __init__(self, qring: QuotientRing, gens: int, relations=()):
        self.qring = qring
        self.gens = gens
        rels = []
        for r in relations:
            r = tuple(qring.nf(p) for p in r)
            if len(r) != gens:
                raise UsageError("relation of wrong length")
            if not all(p.is_zero() for p in r):
                rels.append(r)
        self.relations = rels
        self._membership = None
        self._dense = None

    @classmethod
    def free(cls, qring: QuotientRing, n: int) -> "FpModule":
        return cls(qring, n, [])

    @property
    def is_free_presentation(self) -> bool:
        return not self.relations

    def zero_element(self):
        z = self.qring.zero()
        return tuple(z for _ in range(self.gens))

    def nf_element(self, v):
        return tuple(self.qring.nf(p) for p in v)

    def _membership_system(self):
        if self._membership is None:
            cols = [tuple(r) for r in self.relations]
            self._membership = LinearSystem(
                self.qring.ambient, cols, self.gens, self.qring.groebner
            )
        return self._membership

    def element_is_zero(self, v) -> bool:
        """Does the generator-coefficient vector v represent 0 in the module?"""
        v = self.nf_element(v)
        if all(p.is_zero() for p in v):
            return True
        if not self.relations:
            return False
        return self._membership_system().solve(v) is not None

    def elements_equal(self, v, w) -> bool:
        return self.element_is_zero(tuple(a - b for a, b in zip(v, w)))

    def is_zero_module(self) -> bool:
        one = self.qring.ambient.one()
        zero = self.qring.zero()
        for i in range(self.gens):
            e = tuple(one if j == i else zero for j in range(self.gens))
            if not self.element_is_zero(e):
                return False
        return True

    def dense(self) -> "DenseModule":
        if self._dense is None:
            self._dense = DenseModule(self)
        return self._dense

    def k_dim(self) -> int:
        return self.dense().dim()

    def __repr__(self):
        return f"FpModule(gens={self.gens}, rels={len(self.relations)})"


class DenseModule:
    """k-linear model of an FpModule over an Artinian quotient ring."""

    def __init__(self, module: FpModule):
        q = module.qring
        q.require_artinian("dense module model")
        self.module = module
        self.q = q
        self.ring_basis = q.basis()
        self.block = len(self.ring_basis)
        self.total = module.gens * self.block
        rows = []
        for rel in module.relations:
            for mono in self.ring_basis:
                shifted = tuple(
                    q.nf(p.mul_term(mono, q.field.one())) for p in rel
                )
                rows.append(self.flatten(shifted))
        self.rel_ech, _ = linalg.row_echelon(rows, q.field) if rows else ([], [])

    def flatten(self, v):
        out = []
        for p in v:
            out.extend(self.q.to_vec(p))
        return out

    def unflatten(self, kv):
        out = []
        for i in range(self.module.gens):
            out.append(self.q.from_vec(kv[i * self.block : (i + 1) * self.block]))
        return tuple(out)

    def dim(self) -> int:
        return self.total - len(self.rel_ech)

    def relation_rows(self):
        return self.rel_ech

    def element_is_zero(self, v) -> bool:
        return linalg.in_span(self.rel_ech, self.flatten(v), self.q.field)

    def span_dim(self, vectors) -> int:
        """dim_k of the R-submodule generated by the given elements."""
        rows = [list(r) for r in self.rel_ech]
        base = len(rows)
        one = self.q.field.one()
        for v in vectors:
            for mono in self.ring_basis:
                shifted = tuple(self.q.nf(p.mul_term(mono, one)) for p in v)
                rows.append(self.flatten(shifted))
        return linalg.rank(rows, self.q.field) - base


def dense_map_rows(src: FpModule, dst: FpModule, matrix):
    """k-matrix rows of a generator-level module map, acting on dense columns.

    Returned as a list of columns? No: returns rows usable as linalg input,
    i.e. entry [i][j] = coefficient of dense dst coordinate i in the image
    of dense src coordinate j.
    """
    sd, dd = src.dense(), dst.dense()
    q = src.qring
    one = q.field.one()
    cols = []
    for g in range(src.gens):
        col_g = [matrix[t][g] for t in range(dst.gens)]
        for mono in sd.ring_basis:
            image = tuple(q.nf(p.mul_term(mono, one)) for p in col_g)
            cols.append(dd.flatten(image))
    # transpose columns into rows
    rows = [[c[i] for c in cols] for i in range(dd.total)]
    return rows


def is_module_map(src: FpModule, dst: FpModule, matrix) -> bool:
    """Check the generator-level matrix sends src relations into dst relations."""
    q = src.qring
    for rel in src.relations:
        img = mat_vec(q, matrix, rel)
        if not dst.element_is_zero(img):
            return False
    return True


# ---------------------------------------------------------------------------
# embedded schemes


class EmbeddedScheme:
    """X in affine n-space, given by chosen generators of its ideal J."""

    def __init__(self, ambient: PolyRing, ideal_gens, name: str = "X"):
        self.ambient = ambient
        self.name = name
        self.ideal_gens = [g for g in ideal_gens if not g.is_zero()]
        self.ring = QuotientRing(ambient, self.ideal_gens, name=name)

    @property
    def nvars(self) -> int:
        return self.ambient.nvars

    def is_affine_space(self) -> bool:
        """True when J = 0, i.e. X is the whole affine space."""
        return not self.ring.groebner

    def __repr__(self):
        return f"EmbeddedScheme({self.name}: {self.ring!r})"


def kaehler(scheme: EmbeddedScheme) -> FpModule:
    """Kaehler differentials of R = P/J as coker of the Jacobian.

    Presented on dx_1..dx_n with one relation (dg/dx_1, ..., dg/dx_n) per
    chosen generator g of J.
    """
    n = scheme.nvars
    rels = []
    for g in scheme.ideal_gens:
        rels.append(tuple(g.derivative(i) for i in range(n)))
    return FpModule(scheme.ring, n, rels)


def conormal(scheme: EmbeddedScheme):
    """J/J^2 on the chosen generators of J, with the differential into
    Omega_A|_X.

    Returns (module, d) where d is the n x m matrix sending the class of
    g_i to its gradient.  Well-definedness (relations map to zero in the
    free module) is asserted.
    """
    gens = scheme.ideal_gens
    m = len(gens)
    n = scheme.nvars
    rels = syzygies([(g,) for g in gens]) if m else []
    # syzygies of the 1-element vectors (g_i) in P^1 = relations among the g_i
    rels = [tuple(scheme.ring.nf(p) for p in r) for r in rels]
    module = FpModule(scheme.ring, m, rels)
    d = [[scheme.ring.nf(gens[j].derivative(i)) for j in range(m)] for i in range(n)]
    for rel in module.relations:
        img = mat_vec(scheme.ring, d, rel)
        if not all(p.is_zero() for p in img):
            raise CheckError("conormal differential not well-defined on a syzygy")
    return module, d


def artinian_basis(qring: QuotientRing):
    """Monomial basis of the quotient as polynomials, or None when infinite."""
    b = qring.basis()
    if b is None:
        return None
    return [qring.ambient.monomial(e) for e in b]


# ---------------------------------------------------------------------------
# square-zero extensions


class SquareZeroExtension:
    """X0 in X inside a common ambient, with I = J0/J of square zero."""

    def __init__(self, big: EmbeddedScheme, small: EmbeddedScheme):
        if big.ambient != small.ambient:
            raise UsageError("extension schemes must share the ambient ring")
        self.big = big      # X, ideal J
        self.small = small  # X0, ideal J0 containing J
        self._validate()
        self.ideal_module = IdealModule(self)

    def _validate(self):
        gbJ0 = self.small.ring.groebner
        gbJ = self.big.ring.groebner
        for g in self.big.ideal_gens:
            r = divide(g, gbJ0) if gbJ0 else g
            if not r.is_zero():
                raise UsageError(
                    f"containment failure: generator {g} of the big ideal "
                    "is not in the small one"
                )
        gens0 = self.small.ideal_gens
        for i in range(len(gens0)):
            for j in range(i, len(gens0)):
                prod = gens0[i] * gens0[j]
                r = divide(prod, gbJ) if gbJ else prod
                if not r.is_zero():
                    raise UsageError(
                        "square-zero violation: "
                        f"({gens0[i]})*({gens0[j]}) = {prod} does not lie "
                        "in the big ideal"
                    )

    @property
    def ring(self) -> QuotientRing:
        return self.big.ring

    @property
    def ring0(self) -> QuotientRing:
        return self.small.ring

    def is_trivial(self) -> bool:
        """I = 0, i.e. the two ideals agree."""
        return self.big.ring.groebner == self.small.ring.groebner

    def __repr__(self):
        return f"SquareZeroExtension({self.small.name} in {self.big.name})"


def make_square_zero(ambient: PolyRing, j_gens, j0_gens) -> SquareZeroExtension:
    big = EmbeddedScheme(ambient, j_gens, name="X")
    small = EmbeddedScheme(ambient, j0_gens, name="X0")
    return SquareZeroExtension(big, small)


class IdealModule:
    """I = J0/J as a finitely presented R0-module sitting inside R.

    Generators are the chosen generators of J0 (their images in R); a
    relation is any coefficient vector r with sum r_i g0_i in J.  The
    square-zero hypothesis makes the R-action factor through R0, so the
    coefficients live in R0.
    """

    def __init__(self, ext: SquareZeroExtension):
        self.ext = ext
        R, R0 = ext.ring, ext.ring0
        gens0 = ext.small.ideal_gens
        self.embed = [R.nf(g) for g in gens0]
        rels = syzygies([(g,) for g in gens0], R.groebner) if gens0 else []
        rels = [tuple(R0.nf(p) for p in r) for r in rels]
        self.module = FpModule(R0, len(gens0), rels)
        self._coord_system = None

    @property
    def gens(self) -> int:
        return self.module.gens

    def from_coords(self, vec):
        """R-element represented by an R0 coefficient vector."""
        R = self.ext.ring
        acc = R.zero()
        for c, g in zip(vec, self.embed):
            if not c.is_zero() and not g.is_zero():
                acc = acc + c * g
        return R.nf(acc)

    def to_coords(self, elt: Poly):
        """Write an element of I in terms of the generators; None if outside I."""
        R, R0 = self.ext.ring, self.ext.ring0
        elt = R.nf(elt)
        if elt.is_zero():
            return self.module.zero_element()
        if self._coord_system is None:
            self._coord_system = LinearSystem(
                R.ambient, [(g,) for g in self.embed], 1, R.groebner
            )
        sol = self._coord_system.solve((elt,))
        if sol is None:
            return None
        return tuple(R0.nf(c) for c in sol)

    def k_dim(self) -> int:
        return self.module.k_dim()

    def is_zero(self) -> bool:
        return all(g.is_zero() for g in self.embed)


# ---------------------------------------------------------------------------
# tensor squares and diagonal data


class TensorSquareScheme:
    """X x X' with coordinate ring k[x..,y..]/(J(x)+J'(y)).

    Left-factor variables carry suffix _1, right-factor _2.  When the two
    factors share their ambient ring, the diagonal data (the restricted
    ambient diagonal ideal and the diagonal ideal itself) is available.
    """

    def __init__(self, left: EmbeddedScheme, right: EmbeddedScheme):
        if left.ambient.field != right.ambient.field:
            raise UsageError("tensor square factors over different fields")
        self.left = left
        self.right = right
        names = [f"{nm}_1" for nm in left.ambient.names] + [
            f"{nm}_2" for nm in right.ambient.names
        ]
        self.ambient2 = PolyRing(left.ambient.field, names, left.ambient.order)
        self.nleft = left.ambient.nvars
        gens = [self.embed_left(g) for g in left.ideal_gens] + [
            self.embed_right(g) for g in right.ideal_gens
        ]
        self.ring = QuotientRing(self.ambient2, gens, name=f"{left.name}x{right.name}")
        self.same_ambient = left.ambient == right.ambient
        if self.same_ambient:
            n = left.ambient.nvars
            self.diag_ambient_gens = [
                self.ambient2.var(i) - self.ambient2.var(n + i) for i in range(n)
            ]
            self.diag_ideal_gens = self.diag_ambient_gens + [
                self.embed_left(g) for g in left.ideal_gens
            ]
        else:
            self.diag_ambient_gens = None
            self.diag_ideal_gens = None

    def embed_left(self, p: Poly) -> Poly:
        return p.rename(self.ambient2, list(range(self.left.ambient.nvars)))

    def embed_right(self, p: Poly) -> Poly:
        n = self.nleft
        return p.rename(
            self.ambient2, [n + i for i in range(self.right.ambient.nvars)]
        )

    def collapse_to_left(self, p: Poly) -> Poly:
        """Evaluate on the diagonal: both variable blocks map to the left
        factor's variables (requires matching ambients)."""
        if not self.same_ambient:
            raise UsageError("diagonal collapse needs matching ambient rings")
        n = self.nleft
        var_map = list(range(n)) + list(range(n))
        return p.rename(self.left.ambient, var_map)

    def diagonal_ring(self) -> QuotientRing:
        """Coordinate ring of the product modulo the diagonal ideal."""
        if self.diag_ideal_gens is None:
            raise UsageError("no diagonal for factors in different ambients")
        return QuotientRing(
            self.ambient2,
            self.ring.ideal_gens + self.diag_ideal_gens,
            name="diag",
        )

    def __repr__(self):
        return f"TensorSquareScheme({self.left.name} x {self.right.name})"


def tensor_square(left: EmbeddedScheme, right: EmbeddedScheme) -> TensorSquareScheme:
    return TensorSquareScheme(left, right)


def diagonal_difference(tsq: TensorSquareScheme, g: Poly):
    """Coefficients c_j with g(x) - g(y) = sum_j c_j (x_j - y_j).

    Telescoping one variable at a time; each single-variable difference is
    exactly divisible by its x_j - y_j.  Exactness of the identity is
    asserted.
    """
    if not tsq.same_ambient:
        raise UsageError("diagonal difference needs matching ambient rings")
    n = tsq.nleft
    P2 = tsq.ambient2
    coeffs = []
    for j in range(n):
        # h_j: first j variables on the y side, the rest on the x side
        var_map_hi = [n + i if i < j else i for i in range(n)]
        var_map_lo = [n + i if i <= j else i for i in range(n)]
        hi = g.rename(P2, var_map_hi)
        lo = g.rename(P2, var_map_lo)
        delta = P2.var(j) - P2.var(n + j)
        quot, rem = divide(hi - lo, [delta], with_quotients=True)
        if not rem.is_zero():
            raise CheckError("telescoping difference not divisible")
        coeffs.append(quot[0])
    total = P2.zero()
    for j, c in enumerate(coeffs):
        total = total + c * (P2.var(j) - P2.var(n + j))
    gx = g.rename(P2, list(range(n)))
    gy = g.rename(P2, [n + i for i in range(n)])
    if not (total - (gx - gy)).is_zero():
        raise CheckError("diagonal difference identity failed")
    return coeffs


def pushforward_diagonal(
    tsq: TensorSquareScheme, module: FpModule, embed_side: str = "left"
) -> FpModule:
    """Push an R-module forward along the diagonal into the product ring.

    Same generators; relations are the original ones (coefficients lifted
    through the chosen side) plus (x_j - y_j) times every generator, so the
    two variable blocks act identically.
    """
    if not tsq.same_ambient:
        raise UsageError("diagonal pushforward needs matching ambients")
    T = tsq.ring
    emb = tsq.embed_left if embed_side == "left" else tsq.embed_right
    g = module.gens
    rels = []
    for rel in module.relations:
        rels.append(tuple(emb(p) for p in rel))
    zero = T.zero()
    for delta in tsq.diag_ambient_gens:
        for i in range(g):
            rels.append(tuple(delta if j == i else zero for j in range(g)))
    return FpModule(T, g, rels)
