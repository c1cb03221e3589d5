#!/usr/bin/env python3
"""Exact symbolic derivation of the coherent-state expectation values of the
nested-commutator series for the mode-3 photon number under the three-wave
interaction generator G = i (a1 a2 a3^dag + a1^dag a2^dag a3).

    n3(Gamma) = sum_m Gamma^m / m! * <C_m>,   C_0 = n3,  C_{m+1} = [C_m, G].

Operators are kept in normal-ordered multi-mode monomial form with exact
Gaussian-integer coefficients; coherent-state expectations follow from
<a^dag^p a^q> = conj(alpha)^p alpha^q per mode.  The script prints the
general expectations (alpha_j = sqrt(n_j) e^{i phi_j}) and the two-beam
specialization alpha3 = 0 used by the analytic photon-conversion model.

Self-checks: ladder algebra, known coherent moments, hermiticity (real
expectations), and the U(1)xU(1) phase-signature selection rule.

Run: python3 series_polynomials.py
"""
from math import comb, factorial
from collections import defaultdict

import sympy as sp

# monomial key: (p1, q1, p2, q2, p3, q3)  ->  (re, im) integer coefficient
Op = dict

def op_add(a: Op, b: Op, sb=1) -> Op:
    out = defaultdict(lambda: (0, 0))
    for k, (re, im) in a.items():
        out[k] = (out[k][0] + re, out[k][1] + im)
    for k, (re, im) in b.items():
        out[k] = (out[k][0] + sb * re, out[k][1] + sb * im)
    return {k: v for k, v in out.items() if v != (0, 0)}

def cmul(c1, c2):
    return (c1[0] * c2[0] - c1[1] * c2[1], c1[0] * c2[1] + c1[1] * c2[0])

def mode_product(p, q, r, s):
    """(a^dag^p a^q)(a^dag^r a^s) = sum_k k! C(q,k) C(r,k) a^dag^{p+r-k} a^{q+s-k}."""
    for k in range(min(q, r) + 1):
        yield factorial(k) * comb(q, k) * comb(r, k), p + r - k, q + s - k

def op_mul(a: Op, b: Op) -> Op:
    out = defaultdict(lambda: (0, 0))
    for ka, ca in a.items():
        for kb, cb in b.items():
            coeff = cmul(ca, cb)
            for w1, p1, q1 in mode_product(ka[0], ka[1], kb[0], kb[1]):
                for w2, p2, q2 in mode_product(ka[2], ka[3], kb[2], kb[3]):
                    for w3, p3, q3 in mode_product(ka[4], ka[5], kb[4], kb[5]):
                        w = w1 * w2 * w3
                        key = (p1, q1, p2, q2, p3, q3)
                        cur = out[key]
                        out[key] = (cur[0] + w * coeff[0], cur[1] + w * coeff[1])
    return {k: v for k, v in out.items() if v != (0, 0)}

def commutator(a: Op, b: Op) -> Op:
    return op_add(op_mul(a, b), op_mul(b, a), sb=-1)

def monomial(key, coeff=(1, 0)) -> Op:
    return {key: coeff}

N3 = monomial((0, 0, 0, 0, 1, 1))
A = monomial((0, 1, 0, 1, 1, 0))          # a1 a2 a3^dag
ADAG = monomial((1, 0, 1, 0, 0, 1))       # a1^dag a2^dag a3
G = op_add({k: (-v[1], v[0]) for k, v in A.items()},      # i*A
           {k: (-v[1], v[0]) for k, v in ADAG.items()})   # + i*A^dag

def self_check():
    a = monomial((0, 1, 0, 0, 0, 0))
    adag = monomial((1, 0, 0, 0, 0, 0))
    assert commutator(a, adag) == {(0, 0, 0, 0, 0, 0): (1, 0)}, "[a, a^dag] != 1"
    n1 = monomial((1, 1, 0, 0, 0, 0))
    nn = op_mul(n1, n1)  # a^dag a a^dag a = a^dag^2 a^2 + a^dag a
    assert nn == {(2, 2, 0, 0, 0, 0): (1, 0), (1, 1, 0, 0, 0, 0): (1, 0)}
    # conserved charge: [G, n1 + n2 + 2 n3] = 0
    q = op_add(op_add(monomial((1, 1, 0, 0, 0, 0)), monomial((0, 0, 1, 1, 0, 0))),
               monomial((0, 0, 0, 0, 1, 1), (2, 0)))
    assert commutator(G, q) == {}
    print("self-checks passed")

def expectation(op: Op):
    """Coherent-state expectation as a real sympy expression in n1,n2,n3, Phi.

    Hermiticity is checked exactly on the monomial coefficients: the key with
    daggers and non-daggers swapped must carry the conjugate coefficient.
    """
    n1, n2, n3, Phi = sp.symbols("n1 n2 n3 Phi", real=True, nonnegative=True)
    for (p1, q1, p2, q2, p3, q3), (re, im) in op.items():
        adj = op.get((q1, p1, q2, p2, q3, p3), (0, 0))
        assert adj == (re, -im), "operator not hermitian"
    expr = sp.Integer(0)
    for (p1, q1, p2, q2, p3, q3), (re, im) in op.items():
        d = (q1 - p1, q2 - p2, q3 - p3)
        # selection rule from the conserved charges n1-n2 and n1+n3
        assert d[0] == d[1] == -d[2], f"phase signature {d} violates selection rule"
        if d[0] < 0:
            continue  # folded into its adjoint partner below
        mag = sp.Integer(1)
        for nj, pj, qj in ((n1, p1, q1), (n2, p2, q2), (n3, p3, q3)):
            mag *= nj ** sp.Rational(pj + qj, 2)
        if d[0] == 0:
            assert im == 0
            expr += re * mag
        else:
            expr += 2 * mag * (re * sp.cos(d[0] * Phi) - im * sp.sin(d[0] * Phi))
    return sp.expand(expr)

def two_beam_poly(op: Op):
    """alpha3 = 0 specialization: keep monomials without mode-3 operators."""
    n1, n2 = sp.symbols("n1 n2", real=True, nonnegative=True)
    expr = sp.Integer(0)
    for (p1, q1, p2, q2, p3, q3), (re, im) in op.items():
        if p3 or q3:
            continue
        assert im == 0 and p1 == q1 and p2 == q2
        expr += re * n1**p1 * n2**p2
    return sp.expand(expr)

if __name__ == "__main__":
    self_check()
    C = [N3]
    for m in range(1, 7):
        C.append(commutator(C[-1], G))
    for m, cm in enumerate(C):
        print(f"<C_{m}> =", expectation(cm))
    print()
    print("two-beam (alpha3 = 0) polynomials q_m(n1, n2):")
    for m, cm in enumerate(C):
        q = two_beam_poly(cm)
        print(f"  q_{m} =", q)
    print()
    print("n12(Gamma) = sum_m Gamma^m/m! q_m  (nonzero orders):")
    g = sp.symbols("Gamma", positive=True)
    total = sum(g**m / sp.Integer(factorial(m)) * two_beam_poly(cm) for m, cm in enumerate(C))
    print(" ", sp.expand(total))
