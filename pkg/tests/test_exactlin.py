import random
from fractions import Fraction as F

import pytest

from spw.errors import CompositionNonzero, NoSolution
from spw.exactlin import (
    PolySparseMatrix,
    QPoly,
    SparseMatrix,
    homology,
    kernel_basis,
    maybe_solve,
    solve_linear,
)


def test_kernel_of_zero_map():
    m = SparseMatrix.zero(2, 2)
    basis = kernel_basis(m)
    assert len(basis) == 2
    assert basis[0] == (1, 0) and basis[1] == (0, 1)


def test_kernel_of_identity_is_empty():
    assert kernel_basis(SparseMatrix.identity(3)) == []


def test_kernel_rank_one_matrix():
    # [[1,2],[2,4]] has kernel spanned by (2,-1); row-reduced by hand
    m = SparseMatrix.from_rows([[1, 2], [2, 4]])
    basis = kernel_basis(m)
    assert len(basis) == 1
    (v,) = basis
    assert v[0] * (-1) == v[1] * 2  # proportional to (2,-1)
    assert m.mul_vec(v) == (0, 0)


def test_kernel_vectors_always_in_kernel_and_rank_nullity():
    rng = random.Random(7)
    for _ in range(25):
        rows = rng.randrange(0, 5)
        cols = rng.randrange(1, 6)
        ent = [
            (i, j, F(rng.randrange(-4, 5), rng.randrange(1, 4)))
            for i in range(rows)
            for j in range(cols)
            if rng.random() < 0.5
        ]
        dedup = {}
        for i, j, v in ent:
            dedup[i, j] = v
        m = SparseMatrix(rows, cols, dedup)
        ker = kernel_basis(m)
        for v in ker:
            assert m.mul_vec(v) == tuple([0] * rows)
        assert len(ker) + m.rank() == cols
        if ker:
            assert SparseMatrix.from_columns([list(v) for v in ker]).rank() == len(ker)


def test_homology_zero_differentials():
    z = SparseMatrix.zero(3, 3)
    h = homology(z, z)
    assert h.dimension == 3
    assert len(h.representatives) == 3


def test_homology_rejects_nonzero_composition():
    i3 = SparseMatrix.identity(3)
    with pytest.raises(CompositionNonzero):
        homology(i3, i3)


def test_homology_koszul_of_x_truncated():
    # K(Q[x], x) in x-degree <= 3:  Q{X, xX, x^2 X} --d--> Q{1, x, x^2, x^3},
    # d(x^a X) = x^(a+1).  H^0 basis {1}, H^-1 = 0.
    d_in = SparseMatrix(4, 3, [(1, 0, 1), (2, 1, 1), (3, 2, 1)])
    h0 = homology(d_in, SparseMatrix.zero(0, 4))
    assert h0.dimension == 1
    (rep,) = h0.representatives
    assert rep[0] != 0  # the class of 1
    hm1 = homology(SparseMatrix.zero(3, 0), d_in)
    assert hm1.dimension == 0


def test_homology_de_rham_line_poincare():
    # de Rham complex of Q[x] on monomials of degree <= 5:
    # Q{1..x^5} --d--> Q{dx, x dx, .., x^4 dx}, d(x^a) = a x^(a-1) dx.
    d = SparseMatrix(5, 6, [(a - 1, a, a) for a in range(1, 6)])
    h0 = homology(SparseMatrix.zero(6, 0), d)
    assert h0.dimension == 1


def test_homology_representatives_project_to_basis():
    # image = span{(1,0,0)}, kernel = everything (d_out = 0 on Q^3)
    d_in = SparseMatrix(3, 1, [(0, 0, 1)])
    h = homology(d_in, SparseMatrix.zero(0, 3))
    assert h.dimension == 2
    cols = [[1, 0, 0]] + [list(v) for v in h.representatives]
    assert SparseMatrix.from_columns(cols).rank() == 3


def test_solve_identity():
    x, ker = solve_linear(SparseMatrix.identity(3), (1, F(2, 3), -5))
    assert x == (1, F(2, 3), -5)
    assert ker == []


def test_solve_zero_map_no_solution():
    with pytest.raises(NoSolution):
        solve_linear(SparseMatrix.zero(2, 2), (1, 0))
    assert maybe_solve(SparseMatrix.zero(2, 2), (1, 0)) is None


def test_solve_back_substitution():
    m = SparseMatrix.from_rows([[1, 1], [0, 1]])
    x, ker = solve_linear(m, (3, 1))
    assert x == (2, 1)
    assert ker == []


def test_solve_underdetermined_returns_kernel():
    m = SparseMatrix.from_rows([[1, 1, 0]])
    x, ker = solve_linear(m, (5,))
    assert m.mul_vec(x) == (5,)
    assert len(ker) == 2


def test_homology_invariant_under_permutation():
    rng = random.Random(11)
    a, b, c = 3, 4, 3
    while True:
        d_in = SparseMatrix(
            b, a, {(i, j): rng.randrange(-2, 3) for i in range(b) for j in range(a)}
        )
        ker = kernel_basis(d_in.transpose())
        # build d_out with rows annihilating the image: d_out @ d_in = 0
        rows = [list(v) for v in kernel_basis(SparseMatrix.from_columns(
            [list(d_in.mul_vec(tuple(1 if t == s else 0 for t in range(a)))) for s in range(a)]
        ).transpose())]
        del ker
        if rows:
            break
    d_out = SparseMatrix.from_rows(rows[:c], cols=b)
    h = homology(d_in, d_out).dimension
    perm = list(range(b))
    rng.shuffle(perm)
    p = SparseMatrix(b, b, [(perm[i], i, 1) for i in range(b)])
    d_in2 = p @ d_in
    d_out2 = d_out @ p.transpose()
    assert homology(d_in2, d_out2).dimension == h


def test_qpoly_arithmetic_and_specialize():
    h = QPoly.hbar()
    p = (h + 1) * (h - 1)
    assert p == QPoly([-1, 0, 1])
    assert p.evaluate(2) == 3
    m = PolySparseMatrix(2, 2, [(0, 0, h), (1, 1, QPoly.const(1))])
    sq = m @ m
    assert sq.entry(0, 0) == QPoly([0, 0, 1])
    at0 = sq.specialize(0)
    assert at0.entry(0, 0) == 0 and at0.entry(1, 1) == 1
    at1 = m.specialize(1)
    assert at1 == SparseMatrix.identity(2)
