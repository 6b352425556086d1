"""Deterministic random instances for the agreement harness.

Instances are Artinian monomial-plus-binomial ideals in at most three
variables with small quotient dimension, square-zero extensions built from
them, and bounded free complexes produced by chaining random combinations
of syzygies (so the squared differential vanishes by construction).  The
map seed -> instance is a pure function of the seed string, identical
across runs and platforms.
"""

from __future__ import annotations

import random

from .algebras import EmbeddedScheme, SquareZeroExtension, make_square_zero
from .complexes import Complex, free_complex
from .deform import DeformationProblem
from .groebner import syzygies
from .polyring import PolyRing, PrimeField, QQ

MAX_RING_DIM = 12
VAR_NAMES = ("x", "y", "z")


def _rng(seed, index: int) -> random.Random:
    return random.Random(f"defcomplex:{seed}:{index}")


def _random_field(rng: random.Random):
    return QQ if rng.random() < 0.5 else PrimeField(5)


def _random_artinian_ideal(rng: random.Random, ring: PolyRing):
    """Pure powers per variable plus a few monomials and maybe a binomial."""
    n = ring.nvars
    bounds = [rng.randint(1, 3) for _ in range(n)]
    gens = []
    for i, b in enumerate(bounds):
        gens.append(ring.var(i) ** b)
    for _ in range(rng.randint(0, 2)):
        exps = tuple(rng.randint(0, max(0, b - 1)) for b in bounds)
        if sum(exps) == 0:
            continue
        gens.append(ring.monomial(exps))
    if rng.random() < 0.4 and n >= 2:
        e1 = tuple(rng.randint(0, 1) for _ in range(n))
        e2 = tuple(rng.randint(0, 1) for _ in range(n))
        if e1 != e2 and sum(e1) and sum(e2):
            c = _random_unit(rng, ring)
            gens.append(ring.monomial(e1) - ring.monomial(e2, c))
    return gens


def _random_unit(rng: random.Random, ring: PolyRing):
    field = ring.field
    if field.characteristic == 0:
        return field.of_int(rng.choice([1, 2, 3, -1, -2]))
    return field.of_int(rng.randint(1, field.characteristic - 1))


def _random_element(rng: random.Random, qring, max_terms: int = 2):
    """Random normal form, biased toward low degrees."""
    ring = qring.ambient
    out = ring.zero()
    for _ in range(rng.randint(0, max_terms)):
        exps = tuple(rng.randint(0, 2) for _ in range(ring.nvars))
        out = out + ring.monomial(exps, _random_unit(rng, ring))
    return qring.nf(out)


def random_extension(seed, index: int) -> SquareZeroExtension:
    """Square-zero extension with dim_k R <= MAX_RING_DIM.

    J0 is a random Artinian ideal; J is generated by the pairwise products
    of its generators together with a random subset of the generators, so
    the containments hold by construction.  Draws are retried until the
    quotient is small enough.
    """
    rng = _rng(seed, index)
    for _ in range(64):
        field = _random_field(rng)
        n = rng.randint(1, 3)
        ring = PolyRing(field, VAR_NAMES[:n])
        j0 = _random_artinian_ideal(rng, ring)
        j = []
        for a in range(len(j0)):
            for b in range(a, len(j0)):
                j.append(j0[a] * j0[b])
        for g in j0:
            if rng.random() < 0.35:
                j.append(g)
        ext = make_square_zero(ring, j, j0)
        dim = ext.ring.basis()
        if dim is not None and len(dim) <= MAX_RING_DIM:
            return ext
    raise RuntimeError("failed to draw a small extension")


def _nilpotence_order(qring, var_index: int, cap: int = 6):
    ring = qring.ambient
    t = ring.var(var_index)
    power = t
    for a in range(1, cap + 1):
        if qring.nf(power).is_zero():
            return a
        power = power * t
    return None


def _monomial_chain_complex(rng: random.Random, qring, max_len: int) -> Complex | None:
    """Rank-one chain d = (m, m, ...) with m^2 = 0 in the quotient.

    Squares of the lifted differential then probe the obstruction group
    directly, the way nilpotent one-variable chains do.
    """
    ring = qring.ambient
    candidates = []
    for i in range(ring.nvars):
        a = _nilpotence_order(qring, i)
        if a is not None and a >= 2:
            candidates.append((i, (a + 1) // 2))
    if not candidates:
        return None
    i, e = candidates[rng.randrange(len(candidates))]
    m = qring.nf(ring.var(i) ** e)
    if m.is_zero():
        return None
    length = rng.randint(3, max(3, max_len))
    ranks = {j: 1 for j in range(length)}
    diffs = {j: [[m]] for j in range(length - 1)}
    return free_complex(qring, ranks, diffs, check=True)


def random_complex(rng: random.Random, qring, max_len: int = 4, max_rank: int = 3) -> Complex:
    """Bounded free complex with differentials drawn from syzygy chains."""
    if rng.random() < 0.35:
        chain = _monomial_chain_complex(rng, qring, max_len)
        if chain is not None:
            return chain
    length = rng.randint(1, max_len)
    if length == 1:
        return free_complex(qring, {0: rng.randint(1, max_rank)}, {})
    ranks = {j: rng.randint(1, max_rank if length <= 3 else 2) for j in range(length)}
    diffs = {}
    prev = None  # rows of the previous differential
    for j in range(length - 1):
        rows_out = ranks[j + 1]
        cols = ranks[j]
        if prev is None:
            mat = [
                [_random_element(rng, qring) for _ in range(cols)]
                for _ in range(rows_out)
            ]
        else:
            # rows must pair to zero against the previous differential:
            # draw them from the syzygies of its row vectors
            syz = syzygies(prev, qring.groebner)
            mat = []
            for _ in range(rows_out):
                row = [qring.zero() for _ in range(cols)]
                if syz:
                    for _ in range(rng.randint(0, 2)):
                        s = syz[rng.randrange(len(syz))]
                        c = _random_element(rng, qring, max_terms=1)
                        row = [qring.nf(r + c * v) for r, v in zip(row, s)]
                mat.append(row)
        diffs[j] = [[qring.nf(a) for a in row] for row in mat]
        prev = [tuple(row) for row in diffs[j]]
    return free_complex(qring, ranks, diffs, check=True)


def generate_problem(seed, index: int) -> DeformationProblem:
    """Deterministic instance for the agreement suite."""
    ext = random_extension(seed, index)
    rng = _rng(seed, f"complex:{index}")
    complex0 = random_complex(rng, ext.ring0)
    return DeformationProblem(ext, complex0)


def small_extension(seed, index: int, max_dim0: int = 6) -> SquareZeroExtension:
    """Extension whose small ring has dim <= max_dim0 (so the product of
    the small ring with itself stays within the universal-check budget)."""
    rng = _rng(seed, f"small:{index}")
    for _ in range(128):
        field = _random_field(rng)
        n = rng.randint(1, 2)
        ring = PolyRing(field, VAR_NAMES[:n])
        j0 = _random_artinian_ideal(rng, ring)
        j = []
        for a in range(len(j0)):
            for b in range(a, len(j0)):
                j.append(j0[a] * j0[b])
        for g in j0:
            if rng.random() < 0.5:
                j.append(g)
        ext = make_square_zero(ring, j, j0)
        basis0 = ext.ring0.basis()
        basis = ext.ring.basis()
        if basis is None or basis0 is None:
            continue
        if len(basis0) <= max_dim0 and len(basis) <= MAX_RING_DIM:
            return ext
    raise RuntimeError("failed to draw a small extension")


def worked_extension(field=None) -> SquareZeroExtension:
    """The one-variable cusp-to-fat-point instance used throughout: the
    small ring is k[x]/x^2 inside k[x]/x^3."""
    ring = PolyRing(field if field is not None else QQ, ("x",))
    x = ring.var(0)
    return make_square_zero(ring, [x**3], [x**2])


def worked_obstructed_problem(field=None) -> DeformationProblem:
    """Three-term complex (x, x) over k[x]/x^2: the obstructed witness."""
    ext = worked_extension(field)
    x = ext.ring0.ambient.var(0)
    cx = free_complex(ext.ring0, {0: 1, 1: 1, 2: 1}, {0: [[x]], 1: [[x]]})
    return DeformationProblem(ext, cx)


def worked_unobstructed_problem(field=None) -> DeformationProblem:
    """Two-term complex (x): deformable, with a one-dimensional torsor."""
    ext = worked_extension(field)
    x = ext.ring0.ambient.var(0)
    cx = free_complex(ext.ring0, {0: 1, 1: 1}, {0: [[x]]})
    return DeformationProblem(ext, cx)


def two_ambient_presentations():
    """Schemes presented in two ambients with explicit isomorphisms.

    Each entry is (scheme1, scheme2, images_2_in_1, images_1_in_2): the
    second ambient adds a redundant variable cut out by an extra equation.
    """
    out = []

    def redundant(field, base_gens_of, extra_image_of, label):
        P1 = PolyRing(field, ("x",))
        x1 = P1.var(0)
        s1 = EmbeddedScheme(P1, base_gens_of(x1), name=label)
        P2 = PolyRing(field, ("x", "w"))
        x2, w2 = P2.gens()
        gens2 = [g.rename(P2, [0]) for g in base_gens_of(x2)] + [
            w2 - extra_image_of(x2)
        ]
        s2 = EmbeddedScheme(P2, gens2, name=f"{label}_wide")
        images_2_in_1 = [x1, extra_image_of(x1)]
        images_1_in_2 = [x2]
        return (s1, s2, images_2_in_1, images_1_in_2)

    out.append(redundant(QQ, lambda x: [x**2], lambda x: x.ring.zero(), "fat2"))
    out.append(redundant(QQ, lambda x: [x**3], lambda x: x * x, "fat3"))
    out.append(redundant(QQ, lambda x: [], lambda x: x * x * x, "line"))
    out.append(redundant(PrimeField(5), lambda x: [x**2], lambda x: x + x, "fat2mod5"))

    # a two-variable scheme re-embedded with a diagonal coordinate change
    P1 = PolyRing(QQ, ("x", "y"))
    x, y = P1.gens()
    s1 = EmbeddedScheme(P1, [x**2, y**2], name="box")
    P2 = PolyRing(QQ, ("u", "v"))
    u, v = P2.gens()
    # u = x + y, v = y: ideal transported through the inverse substitution
    g1 = (u - v) ** 2
    g2 = v**2
    s2 = EmbeddedScheme(P2, [g1, g2], name="box_sheared")
    images_2_in_1 = [x + y, y]
    images_1_in_2 = [u - v, v]
    out.append((s1, s2, images_2_in_1, images_1_in_2))
    return out
