import numpy as np
import pytest

from deadcore.expr import Expr, ExpressionError


@pytest.mark.parametrize("text,x,want", [
    ("100", [0.3, 0.4], 100.0),
    ("|x|^2", [0.3, 0.4], 0.25),
    ("0.5*|x|^0.3 + 2", [0.6, 0.8], 2.5),
    ("1 + x1^2 - x2", [2.0, 1.0], 4.0),
    ("r**2", [3.0, 4.0], 25.0),
    ("-x1", [1.5, 0.0], -1.5),
])
def test_evaluation(text, x, want):
    assert Expr(text)(np.array(x)) == pytest.approx(want)


def test_vectorized_shape():
    X = np.zeros((4, 5, 2))
    assert Expr("1")(X).shape == (4, 5)
    assert Expr("x1 + x2")(X).shape == (4, 5)


def test_one_dimensional_points():
    assert Expr("x2 + 1")(np.array([[0.5]])) == pytest.approx(1.0)


@pytest.mark.parametrize("bad", ["import os", "x3", "__import__('os')", "x1 < 2", "'a'", "f(x1)", "1 +"])
def test_rejects_outside_grammar(bad):
    with pytest.raises(ExpressionError):
        Expr(bad)


def test_compose_affine():
    e = Expr("x1^2 + |x|")
    c = e.compose_affine(2.0, (0.5, -0.5), 0.25)
    x = np.array([0.4, 0.8])
    y = np.array([0.5, -0.5]) + 0.25 * x
    assert c(x) == pytest.approx(2.0 * (y[0] ** 2 + np.linalg.norm(y)))


def test_constant_detection():
    assert Expr("3*2").is_constant
    assert not Expr("x1").is_constant
