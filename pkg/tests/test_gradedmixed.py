import random

import pytest

from helpers import direct_sum, random_valid_complex
from spw.errors import BidegreeMismatch
from spw.exactlin import SparseMatrix
from spw.gradedmixed import (
    BiGradedModule,
    GradedMixedComplex,
    cell_model,
    dg_hom_complex,
    enriched_hom,
    realization,
    realization_oracle_dims,
    shift,
    tate_realization,
    tensor,
    unit_complex,
    validate_mixed,
)


def test_trivial_eps_with_square_zero_d_is_valid():
    mod = BiGradedModule({(0, 0): ["a"], (0, 1): ["b"]})
    e = GradedMixedComplex(mod, {(0, 0): SparseMatrix(1, 1, [(0, 0, 1)])}, {})
    assert validate_mixed(e).valid


def test_cell_model_is_valid():
    assert validate_mixed(cell_model(3)).valid


def test_cell_model_rescaled_eps_still_valid():
    # eps(x_1) = 2 y_1 keeps all three identities
    e = cell_model(3)
    eps = dict(e.eps)
    eps[1, 0] = eps[1, 0].scale(2)
    assert validate_mixed(GradedMixedComplex(e.module, e.d, eps)).valid


def test_cell_model_weight_breaking_d_is_rejected():
    # d(x_2) = y_0 would land at weight 1 instead of 2: off-bidegree
    e = cell_model(3)
    d_map = {f"x{n}": [(1, f"y{n-1}")] for n in range(1, 4)}
    d_map["x2"] = [(1, "y0")]
    eps_map = {f"x{n}": [(1, f"y{n}")] for n in range(4)}
    with pytest.raises(BidegreeMismatch, match="x2"):
        GradedMixedComplex.from_maps(e.module, d_map, eps_map)


def test_identity_violation_reports_witness():
    mod = BiGradedModule({(0, 0): ["a"], (0, 1): ["b"], (1, 1): ["c"], (1, 2): ["e"]})
    d = {
        (0, 0): SparseMatrix(1, 1, [(0, 0, 1)]),  # d(a) = b
        (1, 1): SparseMatrix(1, 1, [(0, 0, 1)]),  # d(c) = e, wrong sign
    }
    eps = {
        (0, 0): SparseMatrix(1, 1, [(0, 0, 1)]),  # eps(a) = c
        (0, 1): SparseMatrix(1, 1, [(0, 0, 1)]),  # eps(b) = e
    }
    rep = validate_mixed(GradedMixedComplex(mod, d, eps))
    assert not rep.valid
    assert any(name == "d eps + eps d" and wit == "a" for name, _, wit in rep.violations)
    fixed_d = dict(d)
    fixed_d[1, 1] = d[1, 1].scale(-1)
    assert validate_mixed(GradedMixedComplex(mod, fixed_d, eps)).valid


def test_tensor_with_unit_preserves_everything():
    rng = random.Random(3)
    e = random_valid_complex(rng)
    t = tensor(e, unit_complex(0, 0))
    assert {k: len(v) for k, v in t.module.basis.items()} == {
        k: len(v) for k, v in e.module.basis.items()
    }
    for (p, m), mat in e.d.items():
        assert t.d_block(p, m).items() is not None
        assert sorted(v for _, v in t.d_block(p, m).items()) == sorted(
            v for _, v in mat.items()
        )


def test_tensor_cell0_cell0_weight1_degree1_dimension():
    t = tensor(cell_model(0), cell_model(0))
    assert t.module.dim(1, 1) == 2  # x0 (x) y0 and y0 (x) x0


def test_tensor_of_random_valid_pairs_is_valid():
    rng = random.Random(5)
    for _ in range(20):
        e = random_valid_complex(rng, 0, 2, pieces=2)
        f = random_valid_complex(rng, 0, 2, pieces=2)
        assert validate_mixed(tensor(e, f)).valid


def test_tensor_associative_via_structure_constants():
    rng = random.Random(11)
    e = random_valid_complex(rng, 0, 2, pieces=2)
    f = random_valid_complex(rng, 0, 2, pieces=2)
    g = random_valid_complex(rng, 0, 2, pieces=2)
    left = tensor(tensor(e, f), g)
    right = tensor(e, tensor(f, g))

    def flat_left(lab):
        (pp, mm, ab), c = lab
        a, b = ab
        return (a, b, c)

    def flat_right(lab):
        a, (pp, mm, bc) = lab
        b, c = bc
        return (a, b, c)

    for (p, m), labels in left.module.basis.items():
        lmap = {flat_left(lab): i for i, lab in enumerate(labels)}
        rmap = {flat_right(lab): i for i, lab in enumerate(right.module.labels(p, m))}
        assert set(lmap) == set(rmap)
        for which in ("d", "eps"):
            lb = left.d_block(p, m) if which == "d" else left.eps_block(p, m)
            rb = right.d_block(p, m) if which == "d" else right.eps_block(p, m)
            tp = (p, m + 1) if which == "d" else (p + 1, m + 1)
            ltgt = {
                flat_left(lab): i for i, lab in enumerate(left.module.labels(*tp))
            }
            rtgt = {
                flat_right(lab): i for i, lab in enumerate(right.module.labels(*tp))
            }
            for key_src, jl in lmap.items():
                jr = rmap[key_src]
                for key_tgt, il in ltgt.items():
                    ir = rtgt[key_tgt]
                    assert lb.entry(il, jl) == rb.entry(ir, jr)


def test_shift_zero_is_identity():
    rng = random.Random(7)
    e = random_valid_complex(rng)
    s = shift(e, 0, 0)
    assert s.module.basis == e.module.basis
    assert s.d == e.d and s.eps == e.eps


def test_shift_composes_additively():
    rng = random.Random(9)
    e = random_valid_complex(rng)
    a = shift(shift(e, 1, 2), 2, -1)
    b = shift(e, 3, 1)
    assert a.module.basis == b.module.basis
    assert a.d == b.d and a.eps == b.eps


def test_shift_k2_minus1_lands_at_weight2_degree1():
    s = shift(unit_complex(0, 0), -1, -2)
    assert s.module.support() == [(2, 1)]


def test_realization_of_cell_model_windows():
    # With the dangling top cell y_m cut off (window m), the truncated cell
    # model realizes k in degree 0; with y_m kept (window m+1) the top cell
    # cancels the augmentation class and the total complex is acyclic.
    for m in (0, 1, 2, 3):
        dims = realization(cell_model(m), m).homology_dims(range(-1, 3))
        assert dims[0] == 1
        assert all(v == 0 for k, v in dims.items() if k != 0)
        full = realization(cell_model(m), m + 1).homology_dims(range(-1, 3))
        assert all(v == 0 for v in full.values())


def test_realization_of_weight_one_unit():
    cx = realization(unit_complex(1, 0), 2)
    assert cx.homology(0).dimension == 1


def test_realization_shift_discards_low_weights():
    rng = random.Random(13)
    e = random_valid_complex(rng, 0, 3)
    q = 2
    shifted = shift(e, 0, q)  # weights move down by ... p -> p - q
    cx = realization(shifted, 10)
    expected = sum(
        len(labels) for (p, m), labels in e.module.basis.items() if p - q >= 0
    )
    assert sum(cx.dim(m) for m in cx.degrees()) == expected


def test_realization_matches_cell_hom_oracle_on_random_complexes():
    rng = random.Random(17)
    for _ in range(10):
        e = random_valid_complex(rng, 0, 4, pieces=3)
        degrees = range(-4, 6)
        real_dims = {m: realization(e, 4).homology(m).dimension for m in degrees}
        oracle = realization_oracle_dims(e, 4, degrees)
        assert real_dims == oracle


def test_enriched_hom_is_valid_mixed_complex():
    rng = random.Random(19)
    for _ in range(5):
        e = random_valid_complex(rng, 0, 2, pieces=2)
        f = random_valid_complex(rng, 0, 2, pieces=2)
        hom = enriched_hom(e, f, weights=(0, 1, 2))
        assert validate_mixed(hom).valid


def test_dg_hom_complex_of_cell_with_unit():
    # Hom(cell_model(2), k) computes k in degree 0
    cx = dg_hom_complex(cell_model(2), unit_complex(0, 0))
    assert cx.homology(0).dimension == 1


def test_tate_realization_nonnegative_weights_identity_comparison():
    rng = random.Random(23)
    e = random_valid_complex(rng, 0, 3)
    base = realization(e, 4)
    for stage in (0, 1, 2):
        full, cmp = tate_realization(e, stage, 4)
        assert {m: full.dim(m) for m in full.degrees()} == {
            m: base.dim(m) for m in base.degrees()
        }
        for m, mat in cmp.items():
            assert mat == SparseMatrix.identity(base.dim(m))


def test_tate_realization_negative_weight_unit():
    e = unit_complex(-1, 0)
    assert sum(realization(e, 3).dim(m) for m in realization(e, 3).degrees()) == 0
    full, _ = tate_realization(e, 1, 3)
    assert full.homology(0).dimension == 1


def test_tate_homology_stabilizes_for_bounded_negative_weights():
    rng = random.Random(29)
    for _ in range(10):
        e = random_valid_complex(rng, -2, 3, pieces=3)
        dims_prev = None
        stable_at = None
        for stage in range(2, 6):
            full, _ = tate_realization(e, stage, 4)
            dims = {m: full.homology(m).dimension for m in range(-4, 6)}
            if dims == dims_prev:
                stable_at = stage
                break
            dims_prev = dims
        assert stable_at is not None


def test_direct_sum_helper_is_valid():
    rng = random.Random(31)
    e = random_valid_complex(rng)
    f = random_valid_complex(rng)
    assert validate_mixed(direct_sum(e, f)).valid
