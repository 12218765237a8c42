import numpy as np
import pytest

from qcdsim.detfuncs import DeterministicFn
from qcdsim.errors import UnsupportedFamilyError


def test_parse_round_trip():
    for text in ("const:0.5", "linear:0.02,0.01"):
        fn = DeterministicFn.parse(text)
        assert DeterministicFn.parse(fn.tag()) == fn


def test_bare_number_is_const():
    fn = DeterministicFn.parse("0.2")
    assert fn.family == "const" and fn(3.7) == 0.2


def test_unknown_family_rejected():
    with pytest.raises(UnsupportedFamilyError):
        DeterministicFn.parse("quadratic:1,2,3")
    with pytest.raises(UnsupportedFamilyError):
        DeterministicFn("const", (1.0, 2.0))


def test_linear_integrals_closed_form():
    fn = DeterministicFn.linear(0.3, -0.4)
    t = np.linspace(0.0, 2.0, 9)
    # compare against dense trapezoid
    tt = np.linspace(0.0, 2.0, 200001)
    dense = np.trapezoid(fn(tt), tt)
    assert np.isclose(fn.antiderivative(2.0), dense, rtol=1e-9)
    dense_sq = np.trapezoid(fn(tt) ** 2, tt)
    assert np.isclose(fn.square_antiderivative(2.0), dense_sq, rtol=1e-8)
    assert np.allclose(fn.integral(0.0, t), fn.antiderivative(t))


def test_identity_function_integral():
    fn = DeterministicFn.linear(0.0, 1.0)  # lam(u) = u
    assert fn.antiderivative(1.0) == 0.5


def test_sup_abs_at_endpoints():
    fn = DeterministicFn.linear(1.0, -3.0)
    assert fn.sup_abs(1.0) == 2.0
    assert DeterministicFn.const(-0.7).sup_abs(5.0) == 0.7


def test_minus_and_scaled_stay_in_family():
    b = DeterministicFn.linear(0.02, 0.01)
    r = DeterministicFn.const(0.02)
    lam = b.minus(r).scaled(1.0 / 0.1)
    assert np.isclose(lam(0.5), 0.05)
    assert lam.family == "linear"
