import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bozk.functionals import (FunctionalReport, InadmissibleFieldError, eval_functionals,
                              resample, scale_normalize, weinstein_quotient)
from bozk.spectral import RealField, dx, hilbert_x, inner, make_grid

G = make_grid(1024, 256, 16 * math.pi, 4 * math.pi)
seeds = st.integers(0, 2 ** 31 - 1)


def gaussian(g=G, a=1.0, b=1.0):
    return RealField.from_function(g, lambda x, y: np.exp(-(x / a) ** 2 - (y / b) ** 2))


def bump(seed, g=make_grid(64, 64, 4 * math.pi, 4 * math.pi)):
    """Positive-leaning localized random field."""
    rng = np.random.default_rng(seed)
    X, Y = g.mesh()
    v = np.exp(-X ** 2 / 2 - Y ** 2 / 2) * (1.5 + 0.5 * np.cos(rng.uniform(0.5, 1.5) * X + rng.uniform(0, 6)))
    v += 0.3 * rng.standard_normal() * np.exp(-(X - 1) ** 2 - (Y + 0.5) ** 2)
    return RealField(g, v)


class TestGaussian:
    def test_p2_values(self):
        r = eval_functionals(gaussian(), "2/1")
        assert r.l2sq == pytest.approx(math.pi / 2, rel=1e-12)
        assert r.dysq == pytest.approx(math.pi / 2, rel=1e-10)
        assert r.J == pytest.approx(math.pi / 4, rel=1e-12)
        # periodic |k| sum: O((pi/lx)^2) error, see the spectral Richardson test
        assert r.dxsq == pytest.approx(math.sqrt(math.pi / 2), rel=1e-3)
        rc = eval_functionals(gaussian(), "2/1", box_correction=True)
        assert rc.dxsq == pytest.approx(math.sqrt(math.pi / 2), rel=1e-6)
        want = r.dxsq * math.sqrt(r.dysq) * math.sqrt(r.l2sq) / r.J
        assert r.A == pytest.approx(want, rel=1e-13)
        assert (math.pi / 2) ** 1.5 * 4 / math.pi == pytest.approx(
            math.sqrt(math.pi / 2) ** 3 / (math.pi / 4), rel=1e-15)

    def test_zero_field(self):
        r = eval_functionals(RealField.zeros(G), 1)
        for k in ("l2sq", "dxsq", "dysq", "J", "I", "S", "K", "E"):
            assert getattr(r, k) == 0
        assert r.A is None
        with pytest.raises(InadmissibleFieldError):
            weinstein_quotient(RealField.zeros(G), 1)

    def test_negative_bump_inadmissible(self):
        with pytest.raises(InadmissibleFieldError):
            weinstein_quotient(gaussian() * -1.0, 1)

    def test_report_roundtrip(self):
        r = eval_functionals(gaussian(), "4/3")
        d = r.to_dict()
        assert d["p"] == "4/3"
        assert FunctionalReport.from_dict(d) == r


class TestProperties:
    @settings(max_examples=20, deadline=None)
    @given(seeds, st.floats(0.05, 20.0), st.sampled_from(["1/1", "4/3", "2/1", "4/5"]))
    def test_homogeneity(self, seed, c, p):
        u = bump(seed)
        assert weinstein_quotient(u * c, p) == pytest.approx(weinstein_quotient(u, p), rel=1e-12)

    @settings(max_examples=20, deadline=None)
    @given(seeds, st.sampled_from(["1/1", "4/3", "2/1", "4/5", "3/1"]))
    def test_report_identities(self, seed, p):
        r = eval_functionals(bump(seed), p)
        pf = float(Fraction(p))
        assert r.S == pytest.approx(r.K + 0.5 * r.dxsq, rel=1e-13)
        assert r.E == pytest.approx(r.S - 0.5 * r.l2sq, rel=1e-13, abs=1e-13 * r.I)
        assert r.I == pytest.approx(0.5 * (r.l2sq + r.dxsq + r.dysq), rel=1e-13)
        assert r.S == pytest.approx(r.I - r.J / (pf + 2), rel=1e-13)

    @settings(max_examples=20, deadline=None)
    @given(seeds)
    def test_quadratic_form(self, seed):
        u = bump(seed)
        r = eval_functionals(u, 1)
        assert r.dxsq == pytest.approx(inner(u, hilbert_x(dx(u))), rel=1e-10)

    @settings(max_examples=10, deadline=None)
    @given(st.floats(0.7, 1.4), st.floats(0.6, 1.6), st.sampled_from(["1/1", "2/1"]))
    def test_dilation_invariance(self, a, b, p):
        u = gaussian(G, 1.3, 0.9)
        v = resample(u, 1 / a, 1 / b)
        A0 = weinstein_quotient(u, p, box_correction=True)
        assert weinstein_quotient(v, p, box_correction=True) == pytest.approx(A0, rel=1e-6)


class TestResample:
    def test_identity(self):
        u = gaussian()
        assert np.allclose(resample(u, 1.0, 1.0).values, u.values, atol=1e-13)

    def test_closed_form(self):
        g = make_grid(512, 128, 16 * math.pi, 4 * math.pi)
        u = gaussian(g)
        v = resample(u, 2.0, 0.5)
        X, Y = g.mesh()
        assert np.allclose(v.values, np.exp(-(2 * X) ** 2 - (Y / 2) ** 2), atol=1e-10)


class TestScaleNormalize:
    def test_gaussian_targets(self):
        phi_rep = eval_functionals(gaussian(G, 2.0, 1.0) * 2.5, 1)
        u = gaussian(G, 1.5, 0.8) * 1.7  # xi ~ 3.1, mu ~ 0.46
        tr = scale_normalize(u, 1, phi_rep)
        r = eval_functionals(tr.omega, 1)
        d = phi_rep.dxsq
        assert r.dysq == pytest.approx(d / 2, rel=1e-6)
        assert r.J == pytest.approx(3 * d, rel=1e-6)
        assert r.l2sq == pytest.approx(1.5 * d, rel=1e-6)
        assert abs(r.K) < 1e-6 * r.I

    def test_inadmissible(self):
        phi_rep = eval_functionals(gaussian(), 1)
        with pytest.raises(InadmissibleFieldError):
            scale_normalize(gaussian() * -1.0, 1, phi_rep)
