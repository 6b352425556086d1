"""Bounded complexes of finitely presented modules and their homological
operations: Hom and tensor total complexes, cohomology, Ext with decidable
class equality, quasi-isomorphism tests, free resolutions, and application
of Fourier-Mukai kernel complexes over affine tensor squares.

Sign conventions, fixed once for the whole library:

  shift     (C[k])^n = C^{n+k},  d_{C[k]} = (-1)^k d_C
  Hom       delta(f) = d_F o f - (-1)^{|f|} f o d_E
  tensor    d(e ox m) = d(e) ox m + (-1)^{|e|} e ox d(m)
  cone(f)   C^n = E^{n+1} (+) F^n,  d = [[-d_E, 0], [f, d_F]]

Every constructed complex asserts d^2 = 0 and every chain map asserts
commutation, so a convention error fails fast rather than corrupting a
class computation.
"""

from __future__ import annotations

from . import linalg
from .algebras import (
    FpModule,
    QuotientRing,
    TensorSquareScheme,
    dense_map_rows,
    mat_mul,
    mat_vec,
    mat_zero,
)
from .errors import CheckError, UnsupportedBackend, UsageError
from .groebner import LinearSystem, syzygies
from .polyring import Poly


class Complex:
    """Cochain complex of FpModules; diffs[n] maps term n to term n+1."""

    def __init__(self, qring: QuotientRing, terms: dict, diffs: dict, check: bool = True):
        self.qring = qring
        self.terms = {n: t for n, t in terms.items() if t.gens > 0}
        self.diffs = {}
        for n, m in diffs.items():
            src = self.terms.get(n)
            dst = self.terms.get(n + 1)
            if src is None or dst is None:
                continue
            if len(m) != dst.gens or any(len(row) != src.gens for row in m):
                raise UsageError(f"differential at degree {n} has wrong shape")
            self.diffs[n] = [[qring.nf(a) for a in row] for row in m]
        if check:
            self._check()

    def _check(self):
        for n, m in self.diffs.items():
            src, dst = self.term(n), self.term(n + 1)
            for rel in src.relations:
                if not dst.element_is_zero(mat_vec(self.qring, m, rel)):
                    raise CheckError(f"differential at degree {n} not well-defined")
        for n in list(self.diffs):
            if n + 1 in self.diffs:
                sq = mat_mul(self.qring, self.diffs[n + 1], self.diffs[n])
                tgt = self.term(n + 2)
                for j in range(self.term(n).gens):
                    col = [sq[i][j] for i in range(tgt.gens)]
                    if not tgt.element_is_zero(col):
                        bad = next(str(e) for e in col if not e.is_zero())
                        raise CheckError(
                            f"d^2 != 0 between degrees {n} and {n + 2}: "
                            f"entry {bad} in column {j}"
                        )

    def degrees(self):
        return sorted(self.terms)

    @property
    def min_deg(self):
        return min(self.terms) if self.terms else 0

    @property
    def max_deg(self):
        return max(self.terms) if self.terms else 0

    def term(self, n) -> FpModule:
        t = self.terms.get(n)
        if t is None:
            return FpModule(self.qring, 0, [])
        return t

    def diff(self, n):
        d = self.diffs.get(n)
        if d is None:
            return mat_zero(self.qring, self.term(n + 1).gens, self.term(n).gens)
        return d

    def is_termwise_free(self) -> bool:
        return all(t.is_free_presentation for t in self.terms.values())

    def rank(self, n) -> int:
        return self.term(n).gens

    def shift(self, k: int) -> "Complex":
        sign = 1 if k % 2 == 0 else -1
        terms = {n - k: t for n, t in self.terms.items()}
        diffs = {}
        for n, m in self.diffs.items():
            diffs[n - k] = m if sign == 1 else [[-a for a in row] for row in m]
        return Complex(self.qring, terms, diffs, check=False)

    def __repr__(self):
        parts = ", ".join(f"{n}:{t.gens}" for n, t in sorted(self.terms.items()))
        return f"Complex({parts})"


def _shaped_mul(q, A, B, rows, inner, cols):
    """Matrix product with explicit shapes; empty inner gives the zero map."""
    if rows == 0 or cols == 0 or inner == 0:
        return mat_zero(q, rows, cols)
    return mat_mul(q, A, B)


def free_complex(qring: QuotientRing, ranks: dict, diffs: dict, check: bool = True) -> Complex:
    terms = {n: FpModule.free(qring, r) for n, r in ranks.items() if r > 0}
    return Complex(qring, terms, diffs, check=check)


def module_as_complex(module: FpModule, degree: int = 0) -> Complex:
    return Complex(module.qring, {degree: module}, {}, check=False)


class ChainMap:
    """Map of complexes with an optional degree shift.

    A map of shift k from C to D is stored as components f_n : C^n ->
    D^{n+k} and must satisfy (-1)^k d_D f = f d_C, i.e. it is an honest
    chain map C -> D[k].
    """

    def __init__(self, source: Complex, target: Complex, components: dict,
                 degree_shift: int = 0, check: bool = True):
        self.source = source
        self.target = target
        self.degree_shift = degree_shift
        self.components = {}
        q = source.qring
        for n, m in components.items():
            src = source.term(n)
            dst = target.term(n + degree_shift)
            if src.gens == 0 or dst.gens == 0:
                continue
            if len(m) != dst.gens or any(len(row) != src.gens for row in m):
                raise UsageError(f"chain map component at degree {n} has wrong shape")
            self.components[n] = [[q.nf(a) for a in row] for row in m]
        if check:
            self._check()

    def component(self, n):
        c = self.components.get(n)
        if c is None:
            return mat_zero(
                self.source.qring,
                self.target.term(n + self.degree_shift).gens,
                self.source.term(n).gens,
            )
        return c

    def _check(self):
        q = self.source.qring
        k = self.degree_shift
        sign = 1 if k % 2 == 0 else -1
        for n in self.source.degrees():
            src = self.source.term(n)
            dst = self.target.term(n + k)
            f_n = self.component(n)
            if dst.gens and src.gens:
                for rel in src.relations:
                    if not dst.element_is_zero(mat_vec(q, f_n, rel)):
                        raise CheckError(f"chain map not well-defined at degree {n}")
            # commutation into degree n+1
            tgt = self.target.term(n + 1 + k)
            if tgt.gens == 0 or src.gens == 0:
                continue
            left = _shaped_mul(q, self.target.diff(n + k), f_n, tgt.gens, dst.gens, src.gens)
            if sign == -1:
                left = [[-a for a in row] for row in left]
            mid = self.source.term(n + 1).gens
            right = _shaped_mul(q, self.component(n + 1), self.source.diff(n), tgt.gens, mid, src.gens)
            for j in range(src.gens):
                col = [left[i][j] - right[i][j] for i in range(tgt.gens)]
                if not tgt.element_is_zero(col):
                    raise CheckError(f"chain map does not commute at degree {n}")

    def __repr__(self):
        return f"ChainMap(shift={self.degree_shift}, degrees={sorted(self.components)})"


def identity_chain_map(c: Complex) -> ChainMap:
    from .algebras import mat_identity

    comps = {n: mat_identity(c.qring, c.term(n).gens) for n in c.degrees()}
    return ChainMap(c, c, comps, 0, check=False)


def cone(f: ChainMap) -> Complex:
    """Mapping cone of a shift-0 chain map."""
    if f.degree_shift != 0:
        raise UsageError("cone requires a shift-0 chain map")
    E, F = f.source, f.target
    q = E.qring
    terms = {}
    degrees = sorted(set([n - 1 for n in E.degrees()] + list(F.degrees())))
    for n in degrees:
        e = E.term(n + 1)
        g = F.term(n)
        gens = e.gens + g.gens
        if gens == 0:
            continue
        rels = []
        zero = q.zero()
        for r in e.relations:
            rels.append(tuple(r) + tuple(zero for _ in range(g.gens)))
        for r in g.relations:
            rels.append(tuple(zero for _ in range(e.gens)) + tuple(r))
        terms[n] = FpModule(q, gens, rels)
    diffs = {}
    for n in degrees:
        if n + 1 not in terms or n not in terms:
            continue
        e1, g1 = E.term(n + 1), F.term(n)
        e2, g2 = E.term(n + 2), F.term(n + 1)
        de = E.diff(n + 1)
        df = F.diff(n)
        fn = f.component(n + 1)
        m = mat_zero(q, e2.gens + g2.gens, e1.gens + g1.gens)
        for i in range(e2.gens):
            for j in range(e1.gens):
                m[i][j] = -de[i][j]
        for i in range(g2.gens):
            for j in range(e1.gens):
                m[e2.gens + i][j] = fn[i][j]
            for j in range(g1.gens):
                m[e2.gens + i][e1.gens + j] = df[i][j]
        diffs[n] = m
    return Complex(q, terms, diffs, check=False)


# ---------------------------------------------------------------------------
# kernels and cohomology


def kernel_of_map(src: FpModule, dst: FpModule, matrix):
    """Kernel of a generator-level module map, as (FpModule, generator list).

    The generators are vectors in the free cover of src whose images lie in
    the relation span of dst; the kernel module's relations account for
    src's own presentation.
    """
    q = src.qring
    gb = q.groebner
    if dst.gens == 0:
        one, zero = q.one(), q.zero()
        kernel = [
            tuple(one if i == j else zero for j in range(src.gens))
            for i in range(src.gens)
        ]
    else:
        cols = [
            tuple(matrix[i][j] for i in range(dst.gens)) for j in range(src.gens)
        ] + [tuple(r) for r in dst.relations]
        kernel = []
        for s in syzygies(cols, gb):
            head = tuple(q.nf(p) for p in s[: src.gens])
            if any(not p.is_zero() for p in head):
                kernel.append(head)
    if not kernel:
        return FpModule(q, 0, []), []
    all_cols = [tuple(kv) for kv in kernel] + [tuple(r) for r in src.relations]
    p = len(kernel)
    rels = []
    for s in syzygies(all_cols, gb):
        head = tuple(q.nf(x) for x in s[:p])
        if any(not x.is_zero() for x in head):
            rels.append(head)
    return FpModule(q, p, rels), kernel


def cohomology(c: Complex, n: int):
    """Presentation of H^n = ker(d_n) / im(d_{n-1}).

    Kernel generators come from syzygies of the differential columns
    augmented by the target relations; the quotient relations come from a
    second syzygy computation.  Returns (FpModule, kernel generator list)
    where the generators are vectors in the degree-n free cover.
    """
    q = c.qring
    tn = c.term(n)
    if tn.gens == 0:
        return FpModule(q, 0, []), []
    t_up = c.term(n + 1)
    gb = q.groebner
    if t_up.gens == 0:
        one, zero = q.one(), q.zero()
        kernel = [
            tuple(one if i == j else zero for j in range(tn.gens))
            for i in range(tn.gens)
        ]
    else:
        d = c.diff(n)
        cols = [tuple(d[i][j] for i in range(t_up.gens)) for j in range(tn.gens)]
        cols += [tuple(r) for r in t_up.relations]
        kernel = []
        for s in syzygies(cols, gb):
            head = tuple(q.nf(p) for p in s[: tn.gens])
            if any(not p.is_zero() for p in head):
                kernel.append(head)
    if not kernel:
        return FpModule(q, 0, []), []
    # relations among the kernel generators, modulo boundaries and the
    # degree-n presentation
    t_dn = c.term(n - 1)
    d_prev = c.diff(n - 1)
    boundary_cols = [
        tuple(d_prev[i][j] for i in range(tn.gens)) for j in range(t_dn.gens)
    ]
    all_cols = [tuple(kv) for kv in kernel] + boundary_cols + [
        tuple(r) for r in tn.relations
    ]
    p = len(kernel)
    rels = []
    for s in syzygies(all_cols, gb):
        head = tuple(q.nf(x) for x in s[:p])
        if any(not x.is_zero() for x in head):
            rels.append(head)
    return FpModule(q, p, rels), kernel


def cohomology_dim(c: Complex, n: int) -> int:
    """dim_k H^n over an Artinian quotient, by dense linear algebra."""
    q = c.qring
    q.require_artinian("cohomology dimension")
    field = q.field
    tn = c.term(n)
    if tn.gens == 0:
        return 0
    dn = tn.dense()
    w_n = dn.relation_rows()
    # rank of the induced map out of degree n
    t_up = c.term(n + 1)
    if t_up.gens == 0:
        comp_rank = 0
    else:
        up = t_up.dense()
        rows = dense_map_rows(tn, t_up, c.diff(n))
        cols = [[rows[i][j] for i in range(up.total)] for j in range(dn.total)]
        w_up = up.relation_rows()
        stacked = cols + [list(r) for r in w_up]
        comp_rank = linalg.rank(stacked, field) - len(w_up)
    # span of boundaries-from-below together with the relations
    t_dnm = c.term(n - 1)
    if t_dnm.gens == 0:
        low_rows = [list(r) for r in w_n]
    else:
        rows_prev = dense_map_rows(t_dnm, tn, c.diff(n - 1))
        prev_cols = [
            [rows_prev[i][j] for i in range(dn.total)]
            for j in range(t_dnm.dense().total)
        ]
        low_rows = prev_cols + [list(r) for r in w_n]
    low_rank = linalg.rank(low_rows, field) if low_rows else 0
    return dn.total - comp_rank - low_rank


def is_acyclic(c: Complex) -> bool:
    if c.qring.is_artinian():
        return all(cohomology_dim(c, n) == 0 for n in c.degrees())
    return all(cohomology(c, n)[0].is_zero_module() for n in c.degrees())


def is_quasi_iso(f: ChainMap) -> bool:
    """True when the cone of f is acyclic."""
    return is_acyclic(cone(f))


# ---------------------------------------------------------------------------
# Hom total complex


class HomComplex:
    """Total Hom complex Hom(E, F) for a termwise-free bounded E.

    Degree-n elements are families f_j : E^j -> F^{j+n}, stored flat: the
    slot of (block j, source basis p, target generator q) is
    offset(n, j) + p * gens_F(j+n) + q.
    """

    def __init__(self, E: Complex, F: Complex):
        if not E.is_termwise_free():
            raise UnsupportedBackend(
                "Hom complex needs a termwise-free source; resolve first"
            )
        if E.qring != F.qring:
            raise UsageError("Hom of complexes over different rings")
        self.E = E
        self.F = F
        self.qring = E.qring
        self._blocks = {}
        self._offsets = {}
        self._terms = {}
        self._diffs = {}
        self._cob_systems = {}
        if E.terms and F.terms:
            lo = F.min_deg - E.max_deg
            hi = F.max_deg - E.min_deg
        else:
            lo, hi = 0, -1
        q = self.qring
        for n in range(lo, hi + 1):
            blocks = []
            offset = 0
            offsets = {}
            for j in E.degrees():
                a = E.rank(j)
                b = F.term(j + n).gens
                if a and b:
                    blocks.append(j)
                    offsets[j] = offset
                    offset += a * b
            self._blocks[n] = blocks
            self._offsets[n] = offsets
            total = offset
            if total == 0:
                continue
            rels = []
            zero = q.zero()
            for j in blocks:
                a = E.rank(j)
                tgt = F.term(j + n)
                for rel in tgt.relations:
                    for p in range(a):
                        v = [zero] * total
                        base = offsets[j] + p * tgt.gens
                        for t, val in enumerate(rel):
                            v[base + t] = val
                        rels.append(tuple(v))
            self._terms[n] = FpModule(q, total, rels)
        for n in range(lo, hi):
            if n in self._terms and (n + 1) in self._terms:
                self._diffs[n] = self._build_diff(n)
        self.complex = Complex(q, self._terms, self._diffs, check=True)

    def slot(self, n: int, j: int, p: int, t: int) -> int:
        return self._offsets[n][j] + p * self.F.term(j + n).gens + t

    def term(self, n) -> FpModule:
        return self.complex.term(n)

    def degrees(self):
        return self.complex.degrees()

    def _build_diff(self, n: int):
        """delta(f) = d_F o f - (-1)^n f o d_E, as a generator-level matrix."""
        q = self.qring
        E, F = self.E, self.F
        src_total = self._terms[n].gens
        dst_total = self._terms[n + 1].gens
        m = mat_zero(q, dst_total, src_total)
        sign = -1 if n % 2 else 1  # (-1)^n
        for j in self._blocks[n]:
            a = E.rank(j)
            tgt = F.term(j + n)
            for p in range(a):
                for t in range(tgt.gens):
                    col = self.slot(n, j, p, t)
                    # d_F o f : block j of degree n+1
                    if j in self._blocks[n + 1]:
                        df = F.diff(j + n)
                        up = F.term(j + n + 1)
                        for t2 in range(up.gens):
                            val = df[t2][t]
                            if not val.is_zero():
                                row = self.slot(n + 1, j, p, t2)
                                m[row][col] = m[row][col] + val
                    # -(-1)^n f o d_E : block j-1 of degree n+1
                    if (j - 1) in self._blocks[n + 1]:
                        de = E.diff(j - 1)
                        a_prev = E.rank(j - 1)
                        for p2 in range(a_prev):
                            val = de[p][p2]
                            if not val.is_zero():
                                row = self.slot(n + 1, j - 1, p2, t)
                                contrib = val if sign == -1 else -val
                                m[row][col] = m[row][col] + contrib
        return [[q.nf(a) for a in row] for row in m]

    # packing between per-block matrices and flat vectors

    def pack(self, n: int, comps: dict):
        """comps[j] is a gens_F(j+n) x rank_E(j) matrix; absent blocks are 0."""
        zero = self.qring.zero()
        total = self.term(n).gens
        v = [zero] * total
        for j, mat in comps.items():
            if j not in self._offsets.get(n, {}):
                if any(not a.is_zero() for row in mat for a in row):
                    raise UsageError(f"component in empty Hom block {j}")
                continue
            tgt = self.F.term(j + n)
            for p in range(self.E.rank(j)):
                for t in range(tgt.gens):
                    v[self.slot(n, j, p, t)] = self.qring.nf(mat[t][p])
        return tuple(v)

    def unpack(self, n: int, v):
        out = {}
        for j in self._blocks.get(n, []):
            a = self.E.rank(j)
            tgt = self.F.term(j + n)
            mat = [[v[self.slot(n, j, p, t)] for p in range(a)] for t in range(tgt.gens)]
            out[j] = mat
        return out

    def coboundary_system(self, n: int) -> LinearSystem:
        """Cached solver for `v is a coboundary in degree n`."""
        if n not in self._cob_systems:
            term = self.term(n)
            prev = self.term(n - 1)
            cols = []
            if prev.gens:
                d = self.complex.diff(n - 1)
                cols += [
                    tuple(d[i][j] for i in range(term.gens)) for j in range(prev.gens)
                ]
            cols += [tuple(r) for r in term.relations]
            self._cob_systems[n] = LinearSystem(
                self.qring.ambient, cols, term.gens, self.qring.groebner
            )
        return self._cob_systems[n]


def hom_complex(E: Complex, F: Complex) -> HomComplex:
    return HomComplex(E, F)


class ExtClass:
    """Element of Ext^n(E, F): a closed degree-n element of Hom(E, F).

    Closedness is asserted at construction; equality of classes is a
    coboundary membership test and is decidable.
    """

    def __init__(self, hom: HomComplex, degree: int, cocycle, check: bool = True):
        self.hom = hom
        self.degree = degree
        q = hom.qring
        total = hom.term(degree).gens
        cocycle = tuple(q.nf(p) for p in cocycle)
        if len(cocycle) != total:
            raise UsageError("cocycle vector of wrong length")
        self.cocycle = cocycle
        if check:
            nxt = hom.term(degree + 1)
            if nxt.gens:
                img = mat_vec(q, hom.complex.diff(degree), list(cocycle))
                if not nxt.element_is_zero(img):
                    raise CheckError(
                        "cocycle is not closed under the Hom differential"
                    )

    @classmethod
    def zero(cls, hom: HomComplex, degree: int) -> "ExtClass":
        zero = hom.qring.zero()
        return cls(hom, degree, [zero] * hom.term(degree).gens, check=False)

    def components(self):
        return self.hom.unpack(self.degree, self.cocycle)

    def __add__(self, other):
        self._compat(other)
        return ExtClass(
            self.hom,
            self.degree,
            [a + b for a, b in zip(self.cocycle, other.cocycle)],
            check=False,
        )

    def __sub__(self, other):
        self._compat(other)
        return ExtClass(
            self.hom,
            self.degree,
            [a - b for a, b in zip(self.cocycle, other.cocycle)],
            check=False,
        )

    def __neg__(self):
        return ExtClass(self.hom, self.degree, [-a for a in self.cocycle], check=False)

    def scale(self, c) -> "ExtClass":
        return ExtClass(
            self.hom, self.degree, [p.scale(c) for p in self.cocycle], check=False
        )

    def _compat(self, other):
        if not isinstance(other, ExtClass):
            raise UsageError("expected an Ext class")
        if other.degree != self.degree:
            raise UsageError("Ext classes of different degrees")
        if other.hom is self.hom:
            return
        if (
            other.hom.qring != self.hom.qring
            or other.hom.term(other.degree).gens != self.hom.term(self.degree).gens
        ):
            raise UsageError("Ext classes from incompatible Hom complexes")

    def is_zero_class(self) -> bool:
        if all(p.is_zero() for p in self.cocycle):
            return True
        system = self.hom.coboundary_system(self.degree)
        return system.solve(self.cocycle) is not None


def class_equal(c1: ExtClass, c2: ExtClass) -> bool:
    c1._compat(c2)
    return (c1 - c2).is_zero_class()


def compose_chain_maps(g: ChainMap, f: ChainMap) -> ChainMap:
    """g o f; degree shifts add, and the composite is again a chain map."""
    if f.target is not g.source:
        if f.target.qring != g.source.qring:
            raise UsageError("chain maps not composable")
    k = f.degree_shift
    comps = {}
    q = f.source.qring
    for n in f.source.degrees():
        a = f.component(n)
        b = g.component(n + k)
        if a and b:
            comps[n] = mat_mul(q, b, a)
    return ChainMap(
        f.source, g.target, comps, k + g.degree_shift, check=False
    )


def push_class(cls: ExtClass, g: ChainMap, target_hom: HomComplex | None = None) -> ExtClass:
    """Compose a class in Hom^n(E, F) with a chain map g : F -> G[k].

    The result is a closed degree n+k element of Hom(E, G); closedness is
    re-asserted at construction.
    """
    E = cls.hom.E
    n = cls.degree
    k = g.degree_shift
    q = E.qring
    hom = target_hom if target_hom is not None else HomComplex(E, g.target)
    comps = cls.components()
    out = {}
    for j, mat in comps.items():
        b = g.component(j + n)
        if b and mat:
            out[j] = mat_mul(q, b, mat)
    return ExtClass(hom, n + k, hom.pack(n + k, out), check=True)


def dense_preimage(src: FpModule, dst: FpModule, matrix, target_vec):
    """Solve M v = target inside dst over an Artinian ring (dense).

    v is sought as an element of src (generator coefficients); equality in
    dst holds modulo its relations.  Returns the element or None.
    """
    q = src.qring
    field = q.field
    sd, dd = src.dense(), dst.dense()
    if dd.total == 0:
        return src.zero_element()
    rows = dense_map_rows(src, dst, matrix)
    rel_rows = dd.relation_rows()
    aug = [
        [rows[i][j] for j in range(sd.total)] + [r[i] for r in rel_rows]
        for i in range(dd.total)
    ]
    b = dd.flatten(dst.nf_element(target_vec))
    sol = linalg.solve_linear(aug, b, field)
    if sol is None:
        return None
    return sd.unflatten(sol[: sd.total])


def ext(E: Complex, F: Complex, n: int):
    """(FpModule presentation of Ext^n, dim over k or None, representatives).

    Representatives are deterministic cocycle vectors forming a basis of
    Ext^n over k; they are produced only over Artinian rings.
    """
    hom = HomComplex(E, F)
    return ext_of_hom(hom, n)


def ext_of_hom(hom: HomComplex, n: int):
    pres, _ = cohomology(hom.complex, n)
    if not hom.qring.is_artinian():
        return pres, None, None
    dim = cohomology_dim(hom.complex, n)
    reps = ext_representatives(hom, n)
    if len(reps) != dim:
        raise CheckError("dense and symbolic Ext dimensions disagree")
    return pres, dim, reps


def ext_representatives(hom: HomComplex, n: int):
    """Deterministic k-basis of Ext^n as ExtClass cocycles (Artinian only)."""
    q = hom.qring
    q.require_artinian("Ext representatives")
    field = q.field
    term = hom.term(n)
    if term.gens == 0:
        return []
    dn = term.dense()
    up = hom.term(n + 1)
    if up.gens == 0:
        cocycle_basis = _identity_vectors(dn.total, field)
    else:
        du = up.dense()
        rows = dense_map_rows(term, up, hom.complex.diff(n))
        w_up = du.relation_rows()
        # kill the target relations: reduce the map by the relation span
        reduced = []
        for j in range(dn.total):
            col = [rows[i][j] for i in range(du.total)]
            col = _reduce_by_echelon(col, w_up, field)
            reduced.append(col)
        mat_rows = [[reduced[j][i] for j in range(dn.total)] for i in range(du.total)]
        cocycle_basis = linalg.nullspace(mat_rows, field)
    prev = hom.term(n - 1)
    boundary_rows = [list(r) for r in dn.relation_rows()]
    if prev.gens:
        rows_prev = dense_map_rows(prev, term, hom.complex.diff(n - 1))
        pd = prev.dense()
        for j in range(pd.total):
            boundary_rows.append([rows_prev[i][j] for i in range(dn.total)])
    bound_ech, _ = linalg.row_echelon(boundary_rows, field) if boundary_rows else ([], [])
    reps = []
    current = [list(r) for r in bound_ech]
    base_rank = len(current)
    for v in cocycle_basis:
        trial = current + [list(v)]
        r = linalg.rank(trial, field)
        if r > base_rank:
            base_rank = r
            current = linalg.row_echelon(trial, field)[0]
            reps.append(ExtClass(hom, n, dn.unflatten(v), check=True))
    return reps


def _identity_vectors(n, field):
    zero, one = field.zero(), field.one()
    return [[one if i == j else zero for j in range(n)] for i in range(n)]


def _reduce_by_echelon(v, ech_rows, field):
    v = list(v)
    zero = field.zero()
    for row in ech_rows:
        pivot = next((i for i, a in enumerate(row) if a != zero), None)
        if pivot is None or v[pivot] == zero:
            continue
        f = v[pivot]
        v = [field.sub(a, field.mul(f, b)) for a, b in zip(v, row)]
    return v


# ---------------------------------------------------------------------------
# tensor total complex


class TensorComplex:
    """Total complex of E ox F for termwise-free E.

    Degree n is the direct sum over i+j = n of E^i ox F^j; the slot of
    (block i, source basis p, F generator q) is offset(n,i) + p*gens_F(j)+q.
    """

    def __init__(self, E: Complex, F: Complex):
        if not E.is_termwise_free():
            raise UnsupportedBackend("tensor needs a termwise-free left factor")
        if E.qring != F.qring:
            raise UsageError("tensor of complexes over different rings")
        self.E = E
        self.F = F
        self.qring = E.qring
        q = self.qring
        self._blocks = {}
        self._offsets = {}
        terms = {}
        diffs = {}
        if E.terms and F.terms:
            lo = E.min_deg + F.min_deg
            hi = E.max_deg + F.max_deg
        else:
            lo, hi = 0, -1
        for n in range(lo, hi + 1):
            blocks = []
            offsets = {}
            offset = 0
            for i in E.degrees():
                j = n - i
                a, b = E.rank(i), F.term(j).gens
                if a and b:
                    blocks.append(i)
                    offsets[i] = offset
                    offset += a * b
            self._blocks[n] = blocks
            self._offsets[n] = offsets
            if offset == 0:
                continue
            rels = []
            zero = q.zero()
            for i in blocks:
                j = n - i
                tgt = F.term(j)
                for rel in tgt.relations:
                    for p in range(E.rank(i)):
                        v = [zero] * offset
                        base = offsets[i] + p * tgt.gens
                        for t, val in enumerate(rel):
                            v[base + t] = val
                        rels.append(tuple(v))
            terms[n] = FpModule(q, offset, rels)
        for n in range(lo, hi):
            if n in terms and (n + 1) in terms:
                diffs[n] = self._build_diff(n, terms)
        self.complex = Complex(q, terms, diffs, check=True)

    def slot(self, n: int, i: int, p: int, t: int) -> int:
        return self._offsets[n][i] + p * self.F.term(n - i).gens + t

    def _build_diff(self, n, terms):
        q = self.qring
        E, F = self.E, self.F
        m = mat_zero(q, terms[n + 1].gens, terms[n].gens)
        for i in self._blocks[n]:
            j = n - i
            a = E.rank(i)
            bmod = F.term(j)
            sign = -1 if i % 2 else 1
            for p in range(a):
                for t in range(bmod.gens):
                    col = self.slot(n, i, p, t)
                    # d_E ox 1 : block i+1 in degree n+1
                    if (i + 1) in self._blocks[n + 1]:
                        de = E.diff(i)
                        for p2 in range(E.rank(i + 1)):
                            val = de[p2][p]
                            if not val.is_zero():
                                row = self.slot(n + 1, i + 1, p2, t)
                                m[row][col] = m[row][col] + val
                    # (-1)^i 1 ox d_F : block i in degree n+1
                    if i in self._blocks[n + 1]:
                        df = F.diff(j)
                        up = F.term(j + 1)
                        for t2 in range(up.gens):
                            val = df[t2][t]
                            if not val.is_zero():
                                row = self.slot(n + 1, i, p, t2)
                                m[row][col] = m[row][col] + (val if sign == 1 else -val)
        return [[q.nf(a) for a in row] for row in m]


def tensor_complex(E: Complex, F: Complex) -> TensorComplex:
    return TensorComplex(E, F)


# ---------------------------------------------------------------------------
# free resolutions


def free_resolution(module: FpModule, length: int) -> tuple[Complex, int]:
    """Free resolution F^{-length} -> ... -> F^0 of a module, as a Complex.

    F^0 has the module's generators; the augmentation F^0 -> module is the
    identity on generators.  Returns (complex, actual_length).
    """
    q = module.qring
    ranks = {0: module.gens}
    diffs = {}
    current_rels = [tuple(r) for r in module.relations]
    deg = 0
    while deg > -length:
        if not current_rels:
            break
        deg -= 1
        ranks[deg] = len(current_rels)
        # differential F^deg -> F^{deg+1}: columns are the relation vectors
        up_rank = ranks[deg + 1]
        d = [[current_rels[j][i] for j in range(len(current_rels))] for i in range(up_rank)]
        diffs[deg] = d
        current_rels = [
            tuple(q.nf(p) for p in s) for s in syzygies(current_rels, q.groebner)
        ]
        current_rels = [s for s in current_rels if any(not p.is_zero() for p in s)]
    cx = free_complex(q, ranks, diffs, check=True)
    return cx, -deg


# ---------------------------------------------------------------------------
# scalar restriction and Fourier-Mukai application


class ScalarRestriction:
    """Restriction of modules over a tensor square to its right factor.

    Requires the left factor to be Artinian: a module over T = R ox R'
    becomes an R'-module with one generator copy per standard monomial of
    R.  The slot of (T-generator g, left basis monomial beta) is
    g * len(left basis) + beta_index.
    """

    def __init__(self, tsq: TensorSquareScheme):
        tsq.left.ring.require_artinian("scalar restriction to the right factor")
        self.tsq = tsq
        self.left_basis = tsq.left.ring.basis()
        self.bsize = len(self.left_basis)
        self.right = tsq.right.ring

    def split(self, p: Poly):
        """Normal form of p in T, split as {left exponent: right polynomial}."""
        T = self.tsq.ring
        p = T.nf(p)
        n = self.tsq.nleft
        right_ambient = self.tsq.right.ambient
        out = {}
        for e, c in p.terms.items():
            le, re_ = e[:n], e[n:]
            out.setdefault(le, {})[re_] = c
        return {le: right_ambient.from_terms(terms) for le, terms in out.items()}

    def restrict_module(self, module: FpModule) -> FpModule:
        q = self.right
        gens = module.gens * self.bsize
        rels = []
        one = self.tsq.ring.field.one()
        n2 = self.tsq.ambient2.nvars
        for rel in module.relations:
            for beta in self.left_basis:
                full_beta = beta + (0,) * (n2 - len(beta))
                shifted = [p.mul_term(full_beta, one) for p in rel]
                rels.append(self.flatten_element(module, shifted))
        return FpModule(q, gens, rels)

    def flatten_element(self, module: FpModule, vec):
        """T-module element (generator coefficients) -> restricted coords."""
        zero = self.right.zero()
        out = [zero] * (module.gens * self.bsize)
        index = {e: i for i, e in enumerate(self.left_basis)}
        for g, p in enumerate(vec):
            for le, rp in self.split(p).items():
                out[g * self.bsize + index[le]] = self.right.nf(rp)
        return tuple(out)

    def restrict_matrix(self, src: FpModule, dst: FpModule, matrix):
        """Generator-level T-matrix -> generator-level R'-matrix."""
        q = self.right
        rows = dst.gens * self.bsize
        cols = src.gens * self.bsize
        m = mat_zero(q, rows, cols)
        one = self.tsq.ring.field.one()
        n2 = self.tsq.ambient2.nvars
        for g in range(src.gens):
            col_polys = [matrix[t][g] for t in range(dst.gens)]
            for bi, beta in enumerate(self.left_basis):
                full_beta = beta + (0,) * (n2 - len(beta))
                shifted = [p.mul_term(full_beta, one) for p in col_polys]
                flat = self.flatten_element(dst, shifted)
                col_index = g * self.bsize + bi
                for r in range(rows):
                    m[r][col_index] = flat[r]
        return m

    def restrict_complex(self, c: Complex) -> Complex:
        terms = {n: self.restrict_module(c.term(n)) for n in c.degrees()}
        diffs = {}
        for n in c.degrees():
            if n + 1 in c.terms and n in c.terms:
                diffs[n] = self.restrict_matrix(c.term(n), c.term(n + 1), c.diff(n))
        return Complex(self.right, terms, diffs, check=True)


class FMApplied:
    """Result of applying a kernel complex on X x X' to a complex on X."""

    def __init__(self, kernel: Complex, E: Complex, tsq: TensorSquareScheme):
        if not E.is_termwise_free():
            raise UnsupportedBackend("kernels apply to termwise-free complexes")
        tsq.right.ring.require_artinian("Fourier-Mukai application")
        tsq.left.ring.require_artinian("Fourier-Mukai application")
        self.tsq = tsq
        self.E = E
        T = tsq.ring
        ranks = {n: E.rank(n) for n in E.degrees()}
        diffs = {}
        for n in E.degrees():
            if n + 1 in E.terms:
                diffs[n] = [
                    [tsq.embed_left(a) for a in row] for row in E.diff(n)
                ]
        self.E_T = free_complex(T, ranks, diffs, check=False)
        self.tensor = TensorComplex(self.E_T, kernel)
        self.restriction = ScalarRestriction(tsq)
        self.complex = self.restriction.restrict_complex(self.tensor.complex)

    def slot(self, n: int, i: int, p: int, t: int, beta_index: int) -> int:
        base = self.tensor.slot(n, i, p, t)
        return base * self.restriction.bsize + beta_index


def diagonal_kernel_complex(tsq: TensorSquareScheme) -> Complex:
    """The structure sheaf of the diagonal as a one-term kernel complex."""
    if tsq.diag_ambient_gens is None:
        raise UsageError("diagonal kernel needs matching ambients")
    T = tsq.ring
    rels = [(d,) for d in tsq.diag_ambient_gens]
    return Complex(T, {0: FpModule(T, 1, rels)}, {}, check=False)


def fm_apply(kernel: Complex, E: Complex, tsq: TensorSquareScheme) -> FMApplied:
    """pi_1^* E ox_T kernel, pushed to the right factor of the product."""
    return FMApplied(kernel, E, tsq)


def tensor_with_map(tcA: TensorComplex, tcB: TensorComplex, theta: ChainMap) -> ChainMap:
    """id_E ox theta between two tensor complexes with the same left factor.

    theta : F_A -> F_B[k] induces a map of total complexes with the Koszul
    sign (-1)^{ik} on the block coming from E^i.
    """
    if tcA.E is not tcB.E:
        ranks_a = {n: tcA.E.rank(n) for n in tcA.E.degrees()}
        ranks_b = {n: tcB.E.rank(n) for n in tcB.E.degrees()}
        if ranks_a != ranks_b or tcA.qring != tcB.qring:
            raise UsageError("tensor factors do not match")
    k = theta.degree_shift
    q = tcA.qring
    E = tcA.E
    comps = {}
    for n in tcA.complex.degrees():
        src = tcA.complex.term(n)
        dst = tcB.complex.term(n + k)
        if src.gens == 0 or dst.gens == 0:
            continue
        m = mat_zero(q, dst.gens, src.gens)
        for i in tcA._blocks[n]:
            jA = n - i
            jB = jA + k
            if i not in tcB._blocks.get(n + k, []) or (n + k - i) != jB:
                continue
            th = theta.component(jA)
            sign = -1 if (i * k) % 2 else 1
            for p in range(E.rank(i)):
                for tA in range(tcA.F.term(jA).gens):
                    col = tcA.slot(n, i, p, tA)
                    for tB in range(tcB.F.term(jB).gens):
                        val = th[tB][tA]
                        if not val.is_zero():
                            row = tcB.slot(n + k, i, p, tB)
                            m[row][col] = val if sign == 1 else -val
        comps[n] = m
    return ChainMap(tcA.complex, tcB.complex, comps, k, check=True)


def fm_apply_chain_map(fmA: FMApplied, fmB: FMApplied, theta: ChainMap) -> ChainMap:
    """Induce a map fm(K_A)(E) -> fm(K_B)(E)[k] from a kernel map theta."""
    inner = tensor_with_map(fmA.tensor, fmB.tensor, theta)
    k = theta.degree_shift
    comps = {}
    for n in fmA.complex.degrees():
        src_T = fmA.tensor.complex.term(n)
        dst_T = fmB.tensor.complex.term(n + k)
        if src_T.gens == 0 or dst_T.gens == 0:
            continue
        comps[n] = fmA.restriction.restrict_matrix(
            src_T, dst_T, inner.component(n)
        )
    return ChainMap(fmA.complex, fmB.complex, comps, k, check=True)
