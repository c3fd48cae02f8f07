"""Shared random generators for tests: valid complexes, algebras, matrices."""

import random
from fractions import Fraction as F

from spw.exactlin import SparseMatrix
from spw.gradedmixed import BiGradedModule, GradedMixedComplex, cell_model, shift, tensor


def direct_sum(e, f):
    basis = {}
    for (p, m), labels in e.module.basis.items():
        basis.setdefault((p, m), []).extend(("L", lab) for lab in labels)
    for (p, m), labels in f.module.basis.items():
        basis.setdefault((p, m), []).extend(("R", lab) for lab in labels)
    mod = BiGradedModule(basis)

    def _blocks(which):
        out = {}
        for (p, m) in mod.basis:
            tgt = (p, m + 1) if which == "d" else (p + 1, m + 1)
            if mod.dim(*tgt) == 0:
                continue
            tgt_index = {lab: i for i, lab in enumerate(mod.labels(*tgt))}
            ent = {}
            for j, (side, lab) in enumerate(mod.labels(p, m)):
                src = e if side == "L" else f
                blk = src.d_block(p, m) if which == "d" else src.eps_block(p, m)
                col = src.module.labels(p, m).index(lab)
                tp = p if which == "d" else p + 1
                for i in range(blk.rows):
                    v = blk.entry(i, col)
                    if v:
                        key = (side, src.module.labels(tp, m + 1)[i])
                        ent[tgt_index[key], j] = v
            if ent:
                out[p, m] = SparseMatrix(mod.dim(*tgt), mod.dim(p, m), ent)
        return out

    return GradedMixedComplex(mod, _blocks("d"), _blocks("eps"))


def random_unimodular(rng, n):
    """Random integer matrix with inverse, built from elementary operations."""
    s = [[F(1 if i == j else 0) for j in range(n)] for i in range(n)]
    sinv = [[F(1 if i == j else 0) for j in range(n)] for i in range(n)]
    for _ in range(2 * n):
        i, j = rng.randrange(n), rng.randrange(n)
        if i == j:
            continue
        c = F(rng.choice([-2, -1, 1, 2]))
        for k in range(n):
            s[i][k] += c * s[j][k]
        # inverse gets the opposite column operation
        for k in range(n):
            sinv[k][j] -= c * sinv[k][i]
    return SparseMatrix.from_rows(s), SparseMatrix.from_rows(sinv)


def conjugate(e, rng):
    """Bidegree-preserving random change of basis; keeps all identities."""
    mats = {}
    for (p, m) in e.module.basis:
        mats[p, m] = random_unimodular(rng, e.module.dim(p, m))

    def _transform(blocks, which):
        out = {}
        for (p, m), mat in blocks.items():
            tgt = (p, m + 1) if which == "d" else (p + 1, m + 1)
            s_t, _ = mats.get(tgt, (SparseMatrix.identity(mat.rows),) * 2)
            _, s_inv = mats.get((p, m), (None, SparseMatrix.identity(mat.cols)))
            out[p, m] = s_t @ mat @ s_inv
        return out

    return GradedMixedComplex(
        e.module, _transform(e.d, "d"), _transform(e.eps, "eps")
    )


def random_valid_complex(rng, min_weight=0, max_weight=4, pieces=4):
    """Random graded mixed complex: sums of shifted cells, then conjugated."""
    parts = []
    for _ in range(pieces):
        kind = rng.choice(["unit", "cell", "dcell"])
        q = -rng.randint(min_weight, max_weight)
        n = -rng.randint(-2, 2)
        if kind == "unit":
            parts.append(_unit(rng, -q, -n))
        elif kind == "cell":
            m = rng.randint(0, max_weight - (-q) - 1) if max_weight + q > 0 else 0
            parts.append(shift(cell_model(m), n, q))
        else:
            parts.append(_dcell(rng, -q, -n))
    e = parts[0]
    for p in parts[1:]:
        e = direct_sum(e, p)
    # prune anything outside the requested weight band by tensoring with unit shifts
    e = _restrict_weights(e, min_weight, max_weight)
    return conjugate(e, rng)


def _unit(rng, p, m):
    from spw.gradedmixed import unit_complex

    return unit_complex(p, m, label=f"u{rng.randrange(10**6)}")


def _dcell(rng, p, m):
    t = rng.randrange(10**6)
    mod = BiGradedModule({(p, m): [f"a{t}"], (p, m + 1): [f"b{t}"]})
    return GradedMixedComplex(mod, {(p, m): SparseMatrix(1, 1, [(0, 0, 1)])}, {})


def _restrict_weights(e, wmin, wmax):
    basis = {
        (p, m): labels
        for (p, m), labels in e.module.basis.items()
        if wmin <= p <= wmax
    }
    mod = BiGradedModule(basis)
    d = {k: v for k, v in e.d.items() if k in basis}
    eps = {
        (p, m): v
        for (p, m), v in e.eps.items()
        if (p, m) in basis and wmin <= p + 1 <= wmax
    }
    # dropping the high-weight targets of eps is a quotient, so still valid
    fixed_eps = {}
    for (p, m), mat in eps.items():
        want_rows = mod.dim(p + 1, m + 1)
        if mat.rows == want_rows:
            fixed_eps[p, m] = mat
    return GradedMixedComplex(mod, d, fixed_eps)


def random_tensor_pair(rng):
    e = random_valid_complex(rng, 0, 2, pieces=2)
    f = random_valid_complex(rng, 0, 2, pieces=2)
    return e, f, tensor(e, f)


def random_valid_cdga(rng, max_gens=4, degree_span=(-3, 3)):
    """Random free cdga with d^2 = 0 by construction.

    Differentials are combinations of monomials in d-closed generators,
    so squaring to zero is automatic while staying nontrivial.
    """
    from spw.freecdga import FreeCDGA, enumerate_monomials

    n = rng.randint(1, max_gens)
    gens = [(f"g{i+1}", rng.randint(*degree_span)) for i in range(n)]
    alg = FreeCDGA(gens)
    closed = []  # indices of generators with d = 0
    d_vals = {}
    order = list(range(n))
    rng.shuffle(order)
    for i in order:
        g = alg.generators[i]
        want = g.degree + 1
        candidates = []
        if closed and rng.random() < 0.7:
            sub = FreeCDGA([(alg.generators[j].name, alg.generators[j].degree) for j in closed])
            for mono in enumerate_monomials(sub, 3):
                if mono and sum(sub.gen_degree(t) for t in mono) == want:
                    lifted = tuple(sorted(closed[t] for t in mono))
                    if i not in lifted:
                        candidates.append(lifted)
        if candidates and rng.random() < 0.8:
            terms = {}
            for mono in rng.sample(candidates, k=min(len(candidates), rng.randint(1, 2))):
                terms[mono] = F(rng.choice([-2, -1, 1, 2, 3]))
            from spw.freecdga import Elem

            d_vals[g.name] = Elem(alg, terms)
        else:
            closed.append(i)
    alg.set_differential(d_vals)
    return alg
