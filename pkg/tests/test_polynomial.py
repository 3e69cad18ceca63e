import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from freeness_lab.haar import RngStream, sample_ginibre
from freeness_lab.polynomial import NCPolynomial, PolynomialSyntaxError, parse_polynomial

x1, x2 = NCPolynomial.letter(1), NCPolynomial.letter(2)


def mats(n=4, seed=0):
    gen = RngStream(seed).generator()
    return sample_ginibre(n, gen), sample_ginibre(n, gen)


def test_parse_and_evaluate():
    X, Y = mats()
    p = parse_polynomial("(+ (* x1 x2) (* x2* x1))")
    assert np.allclose(p(X, Y), X @ Y + Y.conj().T @ X)
    assert p.degree == 2 and p.letter_count == 2


def test_scalars_and_constants():
    X, Y = mats()
    p = parse_polynomial("(+ 2 (* -0.5j x1 x1))")
    assert np.allclose(p(X), 2 * np.eye(4) - 0.5j * X @ X)
    assert parse_polynomial("3").is_constant()


def test_arithmetic_matches_parser():
    p = x1 * x2 + 0.5 * x2.adjoint() * x1 - 1
    q = parse_polynomial("(+ (* x1 x2) (* 0.5 x2* x1) -1)")
    assert p == q


def test_adjoint_evaluates_to_conjugate_transpose():
    X, Y = mats(seed=3)
    p = parse_polynomial("(+ (* 1+2j x1 x2*) x2)")
    assert np.allclose(p.adjoint()(X, Y), p(X, Y).conj().T)


@given(st.integers(0, 2**32))
@settings(max_examples=30, deadline=None)
def test_str_round_trip(seed):
    gen = np.random.default_rng(seed)
    p = NCPolynomial.constant(gen.normal())
    for _ in range(gen.integers(1, 5)):
        mono = NCPolynomial.constant(complex(gen.normal(), gen.normal()))
        for _ in range(gen.integers(1, 4)):
            mono = mono * NCPolynomial.letter(int(gen.integers(1, 4)), bool(gen.integers(2)))
        p = p + mono
    assert parse_polynomial(str(p)) == p


def test_evaluate_arity_error():
    X, _ = mats()
    with pytest.raises(ValueError):
        (x1 * x2)(X)


@pytest.mark.parametrize("text", ["", "(", "(+ )", "(- x1 x2)", "x0", "(* x1", "x1 x2", "foo", ")"])
def test_syntax_errors(text):
    with pytest.raises(PolynomialSyntaxError):
        parse_polynomial(text)


def test_zero_terms_dropped():
    assert (x1 - x1).terms == {}
    assert str(x1 - x1) == "0"
