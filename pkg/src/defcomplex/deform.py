"""Deforming a perfect complex across a square-zero extension.

The algorithm: lift the differential entrywise to the big ring, square it
(the failure lands in the ideal), and correct by a homotopy when the
failure is a coboundary.  The obstruction cocycle is minus that square,
and its class gates the construction.  An independent dense solver over
the field re-decides solvability from scratch on Artinian instances.
"""

from __future__ import annotations

from . import linalg
from .algebras import FpModule, SquareZeroExtension, mat_zero
from .classes import TruncatedCotangent, product_class, truncated_cotangent
from .complexes import (
    ChainMap,
    Complex,
    ExtClass,
    HomComplex,
    class_equal,
    ext_of_hom,
    free_complex,
    identity_chain_map,
    is_quasi_iso,
    module_as_complex,
    tensor_complex,
)
from .errors import CheckError, UnsupportedBackend, UsageError


class DeformationProblem:
    """A square-zero extension together with a bounded free complex over
    the small ring; caches the Hom complex into E0 ox I."""

    def __init__(self, ext: SquareZeroExtension, complex0: Complex):
        if complex0.qring != ext.ring0:
            raise UsageError("complex must live over the small ring")
        if not complex0.is_termwise_free():
            raise UsageError("deformation needs a termwise-free complex")
        self.ext = ext
        self.complex0 = complex0
        self._lt0 = None
        self._tens_I = None
        self._hom = None
        self._lift = None

    @property
    def cotangent(self) -> TruncatedCotangent:
        if self._lt0 is None:
            self._lt0 = truncated_cotangent(self.ext.small)
        return self._lt0

    @property
    def tensor_ideal(self):
        """E0 ox I as a total complex."""
        if self._tens_I is None:
            icx = module_as_complex(self.ext.ideal_module.module)
            self._tens_I = tensor_complex(self.complex0, icx)
        return self._tens_I

    @property
    def hom(self) -> HomComplex:
        if self._hom is None:
            self._hom = HomComplex(self.complex0, self.tensor_ideal.complex)
        return self._hom

    def ext_dim(self, n: int):
        """dim_k Ext^n(E0, E0 ox I) when Artinian, else None."""
        _, dim, _ = ext_of_hom(self.hom, n)
        return dim


def lift_differential(prob: DeformationProblem):
    """Entrywise canonical lift of the differential to the big ring.

    Entries are already normal forms modulo the small ideal; reducing the
    same polynomials modulo the big ideal gives the canonical
    representatives, deterministically.
    """
    if prob._lift is None:
        R = prob.ext.ring
        E0 = prob.complex0
        lifted = {}
        for j in E0.degrees():
            if E0.rank(j + 1):
                lifted[j] = [[R.nf(a) for a in row] for row in E0.diff(j)]
        prob._lift = lifted
    return prob._lift


def _lift_square(prob: DeformationProblem):
    """C_j = lifted d_{j+1} o lifted d_j over the big ring, by degree."""
    R = prob.ext.ring
    E0 = prob.complex0
    lifted = lift_differential(prob)
    out = {}
    for j in E0.degrees():
        if j in lifted and (j + 1) in lifted:
            A, B = lifted[j + 1], lifted[j]
            rows, inner, cols = E0.rank(j + 2), E0.rank(j + 1), E0.rank(j)
            C = mat_zero(R, rows, cols)
            for i in range(rows):
                for c in range(cols):
                    acc = R.zero()
                    for t in range(inner):
                        acc = acc + A[i][t] * B[t][c]
                    C[i][c] = R.nf(acc)
            out[j] = C
    return out


def obstruction_cocycle(prob: DeformationProblem) -> ExtClass:
    """[-(lifted differential)^2] as a degree-two class in Hom(E0, E0 ox I)."""
    ideal = prob.ext.ideal_module
    R0 = prob.ext.ring0
    E0 = prob.complex0
    tens = prob.tensor_ideal
    hom = prob.hom
    comps = {}
    for j, C in _lift_square(prob).items():
        target = tens.complex.term(j + 2)
        if target.gens == 0:
            for row in C:
                for entry in row:
                    if not entry.is_zero():
                        raise CheckError(
                            "lifted square lands outside the Hom complex"
                        )
            continue
        mat = mat_zero(R0, target.gens, E0.rank(j))
        for p2 in range(E0.rank(j + 2)):
            for p in range(E0.rank(j)):
                entry = C[p2][p]
                if entry.is_zero():
                    continue
                coords = ideal.to_coords(entry)
                if coords is None:
                    raise CheckError(
                        "lifted differential square escaped the square-zero ideal"
                    )
                for s, val in enumerate(coords):
                    if not val.is_zero():
                        row = tens.slot(j + 2, j + 2, p2, s)
                        mat[row][p] = mat[row][p] - val
        comps[j] = mat
    return ExtClass(hom, 2, hom.pack(2, comps), check=True)


class Deformation:
    """A complex over the big ring restricting to the given one."""

    def __init__(self, problem: DeformationProblem, complex_big: Complex):
        self.problem = problem
        self.complex = complex_big
        self._check_restriction()
        self.restriction_witness = identity_chain_map(problem.complex0)

    def _check_restriction(self):
        R0 = self.problem.ext.ring0
        E0 = self.problem.complex0
        E = self.complex
        if {n: E.rank(n) for n in E.degrees()} != {
            n: E0.rank(n) for n in E0.degrees()
        }:
            raise CheckError("deformation changed the ranks")
        for j in E0.degrees():
            if not E0.rank(j + 1):
                continue
            D = E.diff(j)
            D0 = E0.diff(j)
            for a, b in zip(D, D0):
                for x, y in zip(a, b):
                    if not R0.elements_equal(x, y):
                        raise CheckError("deformation does not restrict correctly")

    def restricts_quasi_isomorphically(self) -> bool:
        return is_quasi_iso(self.restriction_witness)


def _ideal_matrices_to_ring(prob: DeformationProblem, flat):
    """Unpack a degree-1 Hom vector with ideal coordinates into matrices of
    honest big-ring elements, per degree."""
    R = prob.ext.ring
    ideal = prob.ext.ideal_module
    E0 = prob.complex0
    tens = prob.tensor_ideal
    comps = prob.hom.unpack(1, flat)
    out = {}
    for j, mat in comps.items():
        rank_j = E0.rank(j)
        rank_up = E0.rank(j + 1)
        m = ideal.gens
        h = mat_zero(R, rank_up, rank_j)
        for p2 in range(rank_up):
            for p in range(rank_j):
                coords = [
                    mat[tens.slot(j + 1, j + 1, p2, s)][p] for s in range(m)
                ]
                h[p2][p] = ideal.from_coords(coords)
        out[j] = h
    return out


def deform(prob: DeformationProblem):
    """The deformation, or None when the obstruction class is nonzero.

    Solves the homotopy equation for the lifted square via the cached
    coboundary system; the corrected differential squares to zero exactly
    and restricts to the original complex on the nose.
    """
    obstruction = obstruction_cocycle(prob)
    system = prob.hom.coboundary_system(2)
    sol = system.solve(obstruction.cocycle)
    if sol is None:
        return None
    hom1 = prob.hom.term(1).gens
    h_flat = tuple(prob.ext.ring0.nf(p) for p in sol[:hom1])
    h_mats = _ideal_matrices_to_ring(prob, h_flat)
    R = prob.ext.ring
    E0 = prob.complex0
    lifted = lift_differential(prob)
    ranks = {n: E0.rank(n) for n in E0.degrees()}
    diffs = {}
    for j in E0.degrees():
        if not E0.rank(j + 1):
            continue
        base = lifted.get(j, mat_zero(R, E0.rank(j + 1), E0.rank(j)))
        corr = h_mats.get(j, mat_zero(R, E0.rank(j + 1), E0.rank(j)))
        diffs[j] = [
            [R.nf(a + b) for a, b in zip(r1, r2)] for r1, r2 in zip(base, corr)
        ]
    big = free_complex(R, ranks, diffs, check=True)  # asserts d^2 = 0 exactly
    return Deformation(prob, big)


def torsor_act(deformation: Deformation, eps: ExtClass) -> Deformation:
    """New deformation with differential shifted by a degree-one cocycle.

    The representative must be closed (ExtClass construction enforces it);
    acting by a coboundary yields an equivalent deformation.
    """
    prob = deformation.problem
    if eps.degree != 1:
        raise UsageError("torsor action needs a degree-one class")
    if eps.hom is not prob.hom:
        raise UsageError("class does not belong to this problem")
    f_mats = _ideal_matrices_to_ring(prob, eps.cocycle)
    R = prob.ext.ring
    E = deformation.complex
    ranks = {n: E.rank(n) for n in E.degrees()}
    diffs = {}
    for j in E.degrees():
        if not E.rank(j + 1):
            continue
        base = E.diff(j)
        corr = f_mats.get(j, mat_zero(R, E.rank(j + 1), E.rank(j)))
        diffs[j] = [
            [R.nf(a + b) for a, b in zip(r1, r2)] for r1, r2 in zip(base, corr)
        ]
    big = free_complex(R, ranks, diffs, check=True)
    return Deformation(prob, big)


def deformations_equivalent(d1: Deformation, d2: Deformation) -> bool:
    """Difference-cocycle criterion: the two differentials differ by a
    coboundary of the degree-zero Hom term."""
    if d1.problem is not d2.problem:
        if (
            d1.problem.ext.ring != d2.problem.ext.ring
            or {n: d1.complex.rank(n) for n in d1.complex.degrees()}
            != {n: d2.complex.rank(n) for n in d2.complex.degrees()}
        ):
            raise UsageError("deformations of different problems")
    prob = d1.problem
    ideal = prob.ext.ideal_module
    R0 = prob.ext.ring0
    tens = prob.tensor_ideal
    hom = prob.hom
    comps = {}
    for j in prob.complex0.degrees():
        if not prob.complex0.rank(j + 1):
            continue
        diff_mat = [
            [a - b for a, b in zip(r1, r2)]
            for r1, r2 in zip(d1.complex.diff(j), d2.complex.diff(j))
        ]
        target = tens.complex.term(j + 1)
        mat = mat_zero(R0, target.gens, prob.complex0.rank(j))
        for p2 in range(prob.complex0.rank(j + 1)):
            for p in range(prob.complex0.rank(j)):
                entry = prob.ext.ring.nf(diff_mat[p2][p])
                if entry.is_zero():
                    continue
                coords = ideal.to_coords(entry)
                if coords is None:
                    raise CheckError("deformations differ outside the ideal")
                for s, val in enumerate(coords):
                    if not val.is_zero():
                        row = tens.slot(j + 1, j + 1, p2, s)
                        mat[row][p] = mat[row][p] + val
        comps[j] = mat
    cls = ExtClass(hom, 1, hom.pack(1, comps), check=True)
    return cls.is_zero_class()


# ---------------------------------------------------------------------------
# dense backend: counting and the independent oracle


class _DenseDeformationSystem:
    """k-linear model of the equation  d delta + delta d = -(lifted d)^2
    over the big ring, with delta constrained to ideal-valued matrices.

    Built purely from the staircase basis and dense linear algebra; shares
    no solver with the homotopy route.
    """

    def __init__(self, prob: DeformationProblem):
        ext = prob.ext
        R = ext.ring
        R.require_artinian("dense deformation system")
        self.prob = prob
        self.R = R
        self.field = R.field
        ring_basis = R.basis()
        one = self.field.one()
        # k-basis of the ideal inside the big ring
        raw = []
        for g in ext.ideal_module.embed:
            for mono in ring_basis:
                v = R.to_vec(g.mul_term(mono, one))
                raw.append(v)
        ech, _ = linalg.row_echelon(raw, self.field) if raw else ([], [])
        self.ideal_basis = [R.from_vec(v) for v in ech]
        E0 = prob.complex0
        self.degrees = [j for j in E0.degrees() if E0.rank(j + 1)]
        self.slots = []  # (j, p2, p, ideal basis index)
        for j in self.degrees:
            for p2 in range(E0.rank(j + 1)):
                for p in range(E0.rank(j)):
                    for bi in range(len(self.ideal_basis)):
                        self.slots.append((j, p2, p, bi))

    def unknown_count(self) -> int:
        return len(self.slots)

    def _equation_rows(self):
        """Rows of the linear map delta -> d delta + delta d, together with
        the right-hand side -(lifted d)^2, all in dense coordinates."""
        prob = self.prob
        R = self.R
        E0 = prob.complex0
        lifted = lift_differential(prob)
        blocks = []  # (j, rows offset); equations live in degree j -> j+2
        offset = 0
        sizes = {}
        for j in E0.degrees():
            if E0.rank(j + 1) and E0.rank(j + 2):
                size = E0.rank(j + 2) * E0.rank(j) * len(R.basis())
                blocks.append((j, offset))
                sizes[j] = size
                offset += size
        total = offset

        def entry_offset(j, p3, p):
            base = dict(blocks)[j]
            return base + (p3 * E0.rank(j) + p) * len(R.basis())

        zero = self.field.zero()
        columns = []
        for j, p2, p, bi in self.slots:
            col = [zero] * total
            b = self.ideal_basis[bi]
            # d o delta : contributes to equations at source degree p-level j
            if E0.rank(j + 2) and j in sizes:
                up = lifted[j + 1]
                for p3 in range(E0.rank(j + 2)):
                    prod = R.nf(up[p3][p2] * b)
                    if prod.is_zero():
                        continue
                    base = entry_offset(j, p3, p)
                    for i, c in enumerate(R.to_vec(prod)):
                        if c != zero:
                            col[base + i] = self.field.add(col[base + i], c)
            # delta o d : delta at degree j acts in equations at degree j-1
            if (j - 1) in sizes and E0.rank(j - 1):
                low = lifted[j - 1]
                for p0 in range(E0.rank(j - 1)):
                    prod = R.nf(b * low[p][p0])
                    if prod.is_zero():
                        continue
                    base = entry_offset(j - 1, p2, p0)
                    for i, c in enumerate(R.to_vec(prod)):
                        if c != zero:
                            col[base + i] = self.field.add(col[base + i], c)
            columns.append(col)

        rhs = [zero] * total
        squares = _lift_square(prob)
        for j, C in squares.items():
            if j not in sizes:
                continue
            for p3 in range(E0.rank(j + 2)):
                for p in range(E0.rank(j)):
                    entry = C[p3][p]
                    if entry.is_zero():
                        continue
                    base = entry_offset(j, p3, p)
                    for i, c in enumerate(R.to_vec(entry)):
                        if c != zero:
                            rhs[base + i] = self.field.neg(c)
        rows = [
            [columns[c][r] for c in range(len(columns))] for r in range(total)
        ]
        return rows, rhs

    def solvable(self) -> bool:
        rows, rhs = self._equation_rows()
        if not rows:
            return True
        return linalg.solve_linear(rows, rhs, self.field) is not None

    def solution_space_dim(self) -> int:
        rows, _ = self._equation_rows()
        if not rows:
            return self.unknown_count()
        return self.unknown_count() - linalg.rank(rows, self.field)

    def coboundary_space_dim(self) -> int:
        """Rank of u -> d u - u d from ideal-valued degree-0 maps."""
        prob = self.prob
        R = self.R
        E0 = prob.complex0
        lifted = lift_differential(prob)
        u_slots = []
        for j in E0.degrees():
            for p1 in range(E0.rank(j)):
                for p in range(E0.rank(j)):
                    for bi in range(len(self.ideal_basis)):
                        u_slots.append((j, p1, p, bi))
        blocks = {}
        offset = 0
        for j in self.degrees:
            blocks[j] = offset
            offset += E0.rank(j + 1) * E0.rank(j) * len(R.basis())
        total = offset
        zero = self.field.zero()
        vectors = []
        for j, p1, p, bi in u_slots:
            col = [zero] * total
            b = self.ideal_basis[bi]
            if j in blocks and E0.rank(j + 1):
                up = lifted[j]
                for p2 in range(E0.rank(j + 1)):
                    prod = R.nf(up[p2][p1] * b)
                    if prod.is_zero():
                        continue
                    base = blocks[j] + (p2 * E0.rank(j) + p) * len(R.basis())
                    for i, c in enumerate(R.to_vec(prod)):
                        if c != zero:
                            col[base + i] = self.field.add(col[base + i], c)
            if (j - 1) in blocks and E0.rank(j - 1):
                low = lifted[j - 1]
                for p0 in range(E0.rank(j - 1)):
                    prod = R.nf(b * low[p][p0])
                    if prod.is_zero():
                        continue
                    base = blocks[j - 1] + (p1 * E0.rank(j - 1) + p0) * len(
                        R.basis()
                    )
                    for i, c in enumerate(R.to_vec(prod)):
                        if c != zero:
                            col[base + i] = self.field.sub(col[base + i], c)
            vectors.append(col)
        return linalg.rank(vectors, self.field) if vectors else 0


def oracle_deformable(prob: DeformationProblem) -> bool:
    """Dense-linear-algebra re-decision of deformability, from scratch."""
    return _DenseDeformationSystem(prob).solvable()


def count_deformation_classes(prob: DeformationProblem) -> int:
    """Number of deformations up to equivalence over a finite field.

    All ideal-valued perturbations with square-zero corrected differential
    form an affine space; the count is p^(solutions - coboundaries), and
    zero when the system is inconsistent.
    """
    field = prob.ext.ring.field
    p = field.characteristic
    if p == 0:
        raise UnsupportedBackend("counting needs a finite coefficient field")
    prob.ext.ring.require_artinian("counting deformation classes")
    system = _DenseDeformationSystem(prob)
    if not system.solvable():
        return 0
    exponent = system.solution_space_dim() - system.coboundary_space_dim()
    return p**exponent


# ---------------------------------------------------------------------------
# the agreement suite


def main_theorem_report(prob: DeformationProblem) -> dict:
    """Evaluate every route to the obstruction on one instance.

    Returns the four booleans (product class vanishes, obstruction cocycle
    vanishes, a deformation exists, the dense oracle solves), whether they
    agree, and whether the product and obstruction classes coincide.
    """
    obstruction = obstruction_cocycle(prob)
    product = product_class(
        prob.complex0, prob.ext, prob.cotangent, prob.hom
    )
    deformation = deform(prob)
    report = {
        "product_vanishes": product.is_zero_class(),
        "obstruction_vanishes": obstruction.is_zero_class(),
        "deformation_exists": deformation is not None,
        "classes_match": class_equal(product, obstruction),
    }
    if prob.ext.ring.is_artinian():
        report["oracle_deformable"] = oracle_deformable(prob)
    else:
        report["oracle_deformable"] = None
    booleans = [
        report["product_vanishes"],
        report["obstruction_vanishes"],
        report["deformation_exists"],
    ]
    if report["oracle_deformable"] is not None:
        booleans.append(report["oracle_deformable"])
    report["agreement"] = len(set(booleans)) == 1
    report["deformation"] = deformation
    return report
