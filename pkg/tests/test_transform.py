import math

import numpy as np
import pytest

from oracles import d2_free_pt, free_seed, lame_seed, pt_potential
from susy_confluent import ChainParameters, Normalizability, SingularWronskianError, run_transform
from susy_confluent.numerics import SampledFunction, make_grid
from susy_confluent.transform import (added_state, imag_ratio, normalizability_check,
                                      schrodinger_residual, transform)
from susy_confluent.wronskian import compute_bundle


def shape_deviation(f, g):
    """sup |f/|f| - g/|g|| after aligning the sign at the peak."""
    f = f / f[np.argmax(np.abs(f))]
    g = g / g[np.argmax(np.abs(g))]
    return float(np.max(np.abs(f - g)))


class TestFreeParticle:
    @pytest.mark.parametrize("eps", [-1.0, -2.5])
    def test_k2_is_poschl_teller(self, eps):
        kap = math.sqrt(-eps)
        D1 = -0.7
        res = run_transform(free_seed(eps, 2), ChainParameters(eps, 2, (0.0,), (D1,)))
        assert not res.singular
        # W = D1 - e^{2 kappa x}/(2 kappa) vanishes in log-derivative at x = -x0
        x0 = math.log(-2 * kap * D1) / (2 * kap)
        x = res.grid.x
        assert np.max(np.abs(res.Vk.values.real - pt_potential(x, kap, -x0))) < 1e-8
        assert shape_deviation(res.psi_k.values.real, 1 / np.cosh(kap * (x - x0))) < 1e-8

    def test_k3_poschl_teller_and_bound_state(self):
        eps, x2 = -1.0, 1.5
        kap = 1.0
        p = ChainParameters(eps, 3, (0.0, 0.0), (0.0, d2_free_pt(kap, x2)))
        res = run_transform(free_seed(eps, 3), p)
        x = res.grid.x
        assert np.max(np.abs(res.Vk.values.real - pt_potential(x, kap, x2))) < 1e-8
        assert shape_deviation(res.psi_k.values.real, 1 / np.cosh(kap * (x + x2))) < 1e-6
        assert res.diagnostics["normalizability"] == "physical"

    def test_diagnostics_block(self):
        p = ChainParameters(-1.0, 3, (0.2, 5.0), (0.0, -0.1))
        res = run_transform(free_seed(-1.0, 3), p)
        d = res.diagnostics
        assert d["method"] == "determinant"
        assert d["crosscheck"] < 1e-8
        assert len(d["chain_residuals"]) == 3 and max(d["chain_residuals"]) < 1e-7
        assert d["psi_residual"] < 1e-6
        assert d["imag_Vk"] == 0.0
        assert d["spectator"] == {"C_2": 5.0, "effect": "none"}

    def test_asymptotic_return(self):
        s = free_seed(-1.0, 3, -15, 15, 4001)
        res = run_transform(s, ChainParameters(-1.0, 3, (0.0, 0.0), (0.0, d2_free_pt(1.0, 0.0))))
        x = res.grid.x
        outer = np.abs(x) > 0.9 * 15
        assert np.max(np.abs(res.Vk.values[outer] - res.V0.values[outer])) < 1e-4

    def test_k2_positive_d1_is_singular(self):
        res = run_transform(free_seed(-1.0, 2), ChainParameters(-1.0, 2, (0.0,), (0.5,)))
        assert res.singular
        lo, hi = res.singularities[0]
        root = math.log(2 * 0.5) / 2
        assert lo <= root <= hi
        assert "psi_residual" not in res.diagnostics

    def test_added_state_refuses_singular(self):
        s = free_seed(-1.0, 2)
        b = compute_bundle(s, ChainParameters(-1.0, 2, (0.0,), (0.5,)))
        with pytest.raises(SingularWronskianError):
            added_state(b)

    def test_scale_invariance(self):
        # multiplying the whole chain by c leaves V_k unchanged
        s = free_seed(-1.0, 3)
        p = ChainParameters(-1.0, 3, (0.3, 0.0), (0.0, -0.2))
        b = compute_bundle(s, p)
        res = transform(s.potential.sampled(), b)
        import dataclasses
        c = 3.7
        scaled = dataclasses.replace(b, W_k=SampledFunction(s.grid, c * b.W_k.values),
                                     dW=c * b.dW, d2W=c * b.d2W)
        res2 = transform(s.potential.sampled(), scaled)
        assert np.max(np.abs(res2.Vk.values - res.Vk.values)) < 1e-12 * np.max(np.abs(res.Vk.values))
        assert np.allclose(res2.psi_k.values, res.psi_k.values / c, rtol=1e-12, atol=0)

    def test_constant_wronskian_keeps_potential(self):
        s = free_seed(-1.0, 2)
        b = compute_bundle(s, ChainParameters(-1.0, 2))
        import dataclasses
        const = dataclasses.replace(b, W_k=SampledFunction(s.grid, np.full(s.grid.n_points, 2.0)),
                                    dW=np.zeros(s.grid.n_points), d2W=np.zeros(s.grid.n_points))
        res = transform(s.potential.sampled(), const)
        assert np.array_equal(res.Vk.values, res.V0.values)

    def test_seed_order_guard(self):
        with pytest.raises(ValueError):
            run_transform(free_seed(-1.0, 2), ChainParameters(-1.0, 3))


class TestLame:
    @pytest.mark.parametrize("k,D", [(2, (1.0,)), (3, (0.0, 1.0)), (4, (0.0, 0.0, 1.0))])
    def test_lower_gap_physical(self, k, D):
        res = run_transform(lame_seed(-0.5, k), ChainParameters(-0.5, k, (0.0,) * (k - 1), D))
        d = res.diagnostics
        assert not res.singular
        assert d["psi_residual"] < 1e-4
        assert d["imag_Vk"] < 1e-10
        assert max(d["chain_residuals"]) < 1e-4
        assert d["normalizability"] == "physical"

    @pytest.mark.parametrize("k,D", [(2, (1.0,)), (3, (0.0, 1.0)), (4, (0.0, 0.0, 1.0))])
    def test_periodic_asymptotics(self, k, D):
        # far from the deformation V_k repeats itself after one period 2K;
        # the window must hold two periods beyond the deformation on each side
        from susy_confluent.elliptic import elliptic_K
        s = lame_seed(-0.5, k, periods=8.0, n=8001)
        res = run_transform(s, ChainParameters(-0.5, k, (0.0,) * (k - 1), D))
        shift = int(round(2 * elliptic_K(0.5) / s.grid.h))
        V = res.Vk.values.real
        x = s.grid.x
        outer = np.abs(x[:-shift]) > 0.6 * x[-1]
        outer &= np.abs(x[shift:]) > 0.6 * x[-1]
        assert np.max(np.abs(V[:-shift][outer] - V[shift:][outer])) < 1e-3

    def test_negative_d_is_singular(self):
        res = run_transform(lame_seed(-0.5, 2), ChainParameters(-0.5, 2, (0.0,), (-1.0,)))
        assert res.singular


class TestHelpers:
    def test_residual_of_exact_state(self):
        g = make_grid(-10, 10, 4001)
        V = SampledFunction(g, pt_potential(g.x, 1.0, 0.0))
        psi = SampledFunction(g, 1 / np.cosh(g.x))
        assert schrodinger_residual(psi, V, -1.0) < 1e-8
        assert schrodinger_residual(psi, V, -0.9) > 0.05

    def test_normalizability(self):
        g = make_grid(-15, 15, 3001)
        assert normalizability_check(SampledFunction(g, 1 / np.cosh(g.x))) is Normalizability.PHYSICAL
        assert normalizability_check(SampledFunction(g, np.exp(0.5 * g.x))) is Normalizability.MATHEMATICAL
        assert normalizability_check(SampledFunction(g, np.cos(g.x))) is Normalizability.MATHEMATICAL

    def test_imag_ratio(self):
        g = make_grid(0, 1, 11)
        assert imag_ratio(SampledFunction(g, np.full(11, 4.0 + 0.2j))) == pytest.approx(0.2 / abs(4.0 + 0.2j))
        assert imag_ratio(SampledFunction(g, np.full(11, 0.1 + 0.2j))) == pytest.approx(0.2)
