import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings, strategies as st

from hknet import modular as M
from hknet import nosignal as ns
from hknet import net as N
from hknet import opalg
from hknet.cli import dpi_sample, random_subalgebra
from hknet.errors import (DPIViolation, KrausNotInAlgebra, NotFaithful, NotFaithfulOutput,
                          NotInAlgebra)
from hknet.numerics import kron, partial_trace

from conftest import I2, SX, SZ

RHO23 = np.diag([2 / 3, 1 / 3]).astype(complex)
KL = (2 / 3) * math.log(4 / 3) + (1 / 3) * math.log(2 / 3)


def modular_data(A, rho):
    return M.tomita_operator(M.standard_form(A, rho))


def umegaki_full(rho, sigma):
    """Plain tr rho (log rho - log sigma) for faithful states."""
    return float(np.real(np.trace(rho @ (scipy.linalg.logm(rho) - scipy.linalg.logm(sigma)))))


class TestStandardForm:
    def test_tracial_qubit(self):
        f = M.standard_form(opalg.full_algebra(2), np.eye(2) / 2)
        assert f.rep_dim == 4 and f.cyclic and f.separating
        np.testing.assert_allclose(f.omega_vector, np.eye(2).reshape(-1) / np.sqrt(2))

    def test_scalars(self):
        f = M.standard_form(opalg.scalars(3), opalg.random_density(3, 0))
        assert f.rep_dim == 1
        np.testing.assert_allclose(np.abs(f.omega_vector), [1.0])

    def test_not_faithful(self):
        with pytest.raises(NotFaithful):
            M.standard_form(opalg.diagonal_algebra(2), np.diag([0.0, 1.0]))

    def test_faithful_on_subalgebra_only(self):
        # rank-deficient state that is faithful on the centre
        rho = np.diag([0.5, 0.0, 0.5, 0.0])
        A = opalg.algebra_from_span([kron(p, I2) for p in (I2, SZ)], 4)
        assert M.standard_form(A, rho).rep_dim == 2

    def test_left_action_is_representation(self):
        A = random_subalgebra(3)
        f = M.standard_form(A, opalg.random_density(A.ambient_dim, 1))
        a = opalg.random_element(A, 1, "complex")
        b = opalg.random_element(A, 2, "complex")
        np.testing.assert_allclose(f.left_action(a @ b), f.left_action(a) @ f.left_action(b),
                                   atol=1e-9)
        np.testing.assert_allclose(f.left_action(a.conj().T), f.left_action(a).conj().T, atol=1e-9)
        assert abs(np.linalg.norm(f.omega_vector) - 1) < 1e-12


class TestModularData:
    def test_tracial_delta_identity(self):
        for d in (2, 3):
            md = modular_data(opalg.full_algebra(d), np.eye(d) / d)
            np.testing.assert_allclose(md.Delta, np.eye(d * d), atol=1e-12)

    def test_qubit_spectrum(self):
        md = modular_data(opalg.full_algebra(2), RHO23)
        np.testing.assert_allclose(np.linalg.eigvalsh(md.Delta), [0.5, 1, 1, 2], atol=1e-12)

    def test_delta_closed_form(self):
        rho = opalg.random_density(3, 2)
        md = modular_data(opalg.full_algebra(3), rho)
        np.testing.assert_allclose(md.Delta, M.relative_modular(rho, rho), atol=1e-10)

    @given(st.integers(0, 2**32))
    @settings(max_examples=20, deadline=None)
    def test_invariants(self, seed):
        A = random_subalgebra(seed)
        md = modular_data(A, opalg.random_density(A.ambient_dim, seed))
        assert M.polar_residual(md) <= 1e-8
        j, d = M.vacuum_residuals(md)
        assert j <= 1e-8 and d <= 1e-8
        np.testing.assert_allclose(md.J @ md.J.conj(), np.eye(md.J.shape[0]), atol=1e-9)
        assert np.linalg.eigvalsh(md.Delta)[0] > 0

    def test_modular_hamiltonian(self):
        md = modular_data(opalg.full_algebra(2), RHO23)
        np.testing.assert_allclose(scipy.linalg.expm(-md.modular_hamiltonian()), md.Delta, atol=1e-12)


class TestFlow:
    def setup_method(self):
        self.md = modular_data(opalg.full_algebra(2), RHO23)
        self.X = self.md.form.left_action(SX)

    def test_time_zero(self):
        np.testing.assert_allclose(M.modular_flow(self.md, 0.0, self.X), self.X, atol=1e-12)

    def test_tracial_trivial(self):
        md = modular_data(opalg.full_algebra(2), np.eye(2) / 2)
        X = md.form.left_action(SX)
        np.testing.assert_allclose(M.modular_flow(md, 1.7, X), X, atol=1e-12)

    def test_group_law(self):
        a = M.modular_flow(self.md, 0.4, M.modular_flow(self.md, 1.1, self.X))
        np.testing.assert_allclose(a, M.modular_flow(self.md, 1.5, self.X), atol=1e-12)

    def test_qubit_closed_form(self):
        # sigma_t(sigma_x) rotates the off-diagonal entries by (p0/p1)^{it}
        t = 0.7
        ph = np.exp(1j * t * math.log(2))
        expect = np.array([[0, ph], [np.conj(ph), 0]])
        np.testing.assert_allclose(M.modular_flow(self.md, t, self.X),
                                   self.md.form.left_action(expect), atol=1e-12)

    def test_outside_algebra(self):
        right = np.kron(np.eye(2), SX)  # right multiplication lives in the commutant
        with pytest.raises(NotInAlgebra):
            M.modular_flow(self.md, 1.0, right)


class TestTomitaTakesaki:
    @pytest.mark.parametrize("case", ["full2", "full4", "diag3", "sub"])
    def test_residuals(self, case):
        A, rho = {"full2": (opalg.full_algebra(2), RHO23),
                  "full4": (opalg.full_algebra(4), opalg.random_density(4, 1)),
                  "diag3": (opalg.diagonal_algebra(3), opalg.random_density(3, 2)),
                  "sub": (opalg.block_algebra([(2, 2), (1, 1)]), opalg.random_density(5, 3))}[case]
        r = M.tomita_takesaki_check(modular_data(A, rho))
        assert r.max() <= 1e-8

    def test_full_algebra_commutant_is_right_action(self):
        md = modular_data(opalg.full_algebra(2), RHO23)
        r = M.tomita_takesaki_check(md)
        assert r.dim_commutant == 4
        # J x J maps left multiplication by x to right multiplication by x^T-conjugate
        JX = md.conjugate_by_J(md.form.left_action(SX))
        np.testing.assert_allclose(JX, np.kron(np.eye(2), SX.T), atol=1e-12)

    def test_tracial_J_is_adjoint(self):
        md = modular_data(opalg.full_algebra(2), np.eye(2) / 2)
        X = np.array([[1, 2j], [3, 4]], dtype=complex)
        np.testing.assert_allclose(md.apply_J(X.reshape(-1)), X.conj().T.reshape(-1), atol=1e-12)

    def test_time_zero_exact(self):
        md = modular_data(opalg.full_algebra(3), opalg.random_density(3, 4))
        r = M.tomita_takesaki_check(md, times=(0.0,))
        assert r.flow_algebra <= 1e-12 and r.flow_commutant <= 1e-12


class TestKMS:
    def test_tracial(self):
        md = modular_data(opalg.full_algebra(2), np.eye(2) / 2)
        X, Z = (md.form.left_action(p) for p in (SX, SZ))
        assert M.kms_check(md, [(X, Z), (Z, X @ Z)]) <= 1e-14

    def test_identity_pair(self):
        md = modular_data(opalg.full_algebra(2), RHO23)
        one = np.eye(4)
        assert M.kms_check(md, [(one, one)]) <= 1e-14

    def test_qubit_sigma_x(self):
        md = modular_data(opalg.full_algebra(2), RHO23)
        X = md.form.left_action(SX)
        assert M.kms_check(md, [(X, X)]) <= 1e-8
        # the analytic continuation in the other direction does not satisfy it
        Dinv = md.delta_power(-1)
        wrong = md.form.state(X @ Dinv @ X @ md.Delta)
        assert abs(wrong - md.form.state(X @ X)) == pytest.approx(0.5, abs=1e-12)


class TestRelativeModular:
    def test_collapse(self):
        rho = opalg.random_density(2, 1)
        md = modular_data(opalg.full_algebra(2), rho)
        np.testing.assert_allclose(M.relative_modular(rho, rho), md.Delta, atol=1e-10)

    def test_maximally_mixed(self):
        np.testing.assert_allclose(M.relative_modular(np.eye(3) / 3, np.eye(3) / 3), np.eye(9))

    def test_commuting_spectrum(self):
        r, s = np.array([0.5, 0.3, 0.2]), np.array([0.1, 0.6, 0.3])
        spec = np.linalg.eigvalsh(M.relative_modular(np.diag(r), np.diag(s)))
        np.testing.assert_allclose(spec, np.sort(np.outer(r, 1 / s).reshape(-1)), rtol=1e-12)

    def test_not_faithful(self):
        with pytest.raises(NotFaithful):
            M.relative_modular(np.diag([1.0, 0.0]), np.eye(2) / 2)


class TestAraki:
    def test_equal_states(self):
        rho = opalg.random_density(4, 3)
        assert abs(M.araki_entropy(rho, rho, opalg.full_algebra(4))) <= 1e-12

    def test_scalars(self):
        A = opalg.scalars(3)
        assert M.araki_entropy(opalg.random_density(3, 1), opalg.random_density(3, 2), A) == 0.0

    def test_classical_pair(self):
        assert abs(M.araki_entropy(RHO23, np.eye(2) / 2, opalg.full_algebra(2)) - KL) <= 1e-10

    def test_infinite(self):
        assert M.araki_entropy(np.eye(2) / 2, np.diag([1.0, 0.0]), opalg.full_algebra(2)) == math.inf

    def test_infinite_hidden_by_subalgebra(self):
        # the support violation lives in an off-diagonal direction the diagonal algebra ignores
        plus = np.full((2, 2), 0.5)
        assert M.araki_entropy(np.eye(2) / 2, plus, opalg.full_algebra(2)) == math.inf
        assert M.araki_entropy(np.eye(2) / 2, plus, opalg.diagonal_algebra(2)) == 0.0

    def test_non_faithful_rho_is_finite(self):
        rho = np.diag([1.0, 0.0])
        assert M.araki_entropy(rho, np.eye(2) / 2, opalg.full_algebra(2)) == pytest.approx(math.log(2))

    def test_matches_full_umegaki(self):
        rho, sigma = opalg.random_density(4, 5), opalg.random_density(4, 6)
        assert M.araki_entropy(rho, sigma, opalg.full_algebra(4)) == pytest.approx(
            umegaki_full(rho, sigma), abs=1e-10)

    @given(st.integers(0, 2**32))
    @settings(max_examples=40, deadline=None)
    def test_oracle_agreement(self, seed):
        A = random_subalgebra(seed)
        d = A.ambient_dim
        rho, sigma = opalg.random_density(d, seed + 1), opalg.random_density(d, seed + 2)
        Er, Es = (opalg.conditional_expectation(A, x) for x in (rho, sigma))
        s = M.araki_entropy(rho, sigma, A)
        assert s >= 0
        assert abs(s - M.umegaki_blockwise(Er, Es, opalg.decompose(A))) <= 1e-8
        # conditional-expectation images are states; their full-matrix entropy is a third route
        assert abs(s - umegaki_full(Er, Es)) <= 1e-8

    def test_zero_iff_equal_restrictions(self):
        A = opalg.algebra_from_span([kron(p, I2) for p in (I2, SX, SX @ SZ, SZ)], 4)
        rho = kron(RHO23, np.eye(2) / 2)
        sigma = kron(RHO23, opalg.random_density(2, 1))
        assert abs(M.araki_entropy(rho, sigma, A)) <= 1e-12
        assert M.araki_entropy(rho, kron(np.eye(2) / 2, np.eye(2) / 2), A) > 1e-3


class TestUmegakiBlockwise:
    def test_equal(self):
        A = opalg.diagonal_algebra(3)
        r = np.diag([0.2, 0.3, 0.5])
        assert M.umegaki_blockwise(r, r, opalg.decompose(A)) == 0.0

    def test_two_block_abelian_is_kl(self):
        A = opalg.diagonal_algebra(2)
        out = M.umegaki_blockwise(RHO23, np.eye(2) / 2, opalg.decompose(A))
        assert out == pytest.approx(KL, abs=1e-14)

    def test_support_violation(self):
        A = opalg.diagonal_algebra(2)
        assert M.umegaki_blockwise(np.eye(2) / 2, np.diag([1.0, 0.0]), opalg.decompose(A)) == math.inf


class TestDPI:
    def test_identity_channel(self):
        rho, sigma = opalg.random_density(3, 1), opalg.random_density(3, 2)
        A = opalg.full_algebra(3)
        r = M.dpi_check(opalg.Channel((np.eye(3),)), rho, sigma, A, A)
        assert abs(r.slack) <= 1e-12

    def test_depolarising(self):
        d = 2
        # Kraus set of the completely depolarising qubit channel
        kraus = tuple(p / 2 for p in (I2, SX, 1j * SX @ SZ, SZ))
        rho, sigma = opalg.random_density(d, 1), opalg.random_density(d, 2)
        A = opalg.full_algebra(d)
        r = M.dpi_check(opalg.Channel(kraus), rho, sigma, A, A)
        assert abs(r.S_after) <= 1e-12
        assert r.slack == pytest.approx(r.S_before, abs=1e-12)

    def test_partial_trace(self):
        # product vs correlated state; trace out the second qubit
        psi = np.array([1, 0, 0, 1]) / np.sqrt(2)
        rho = 0.9 * np.outer(psi, psi) + 0.1 * np.eye(4) / 4
        sigma = kron(partial_trace(rho, [2, 2], [0]), partial_trace(rho, [2, 2], [1]))
        kraus = tuple(kron(I2, e[None, :]) for e in np.eye(2))
        ch = opalg.Channel(kraus)
        r = M.dpi_check(ch, rho, sigma, opalg.full_algebra(4), opalg.full_algebra(2))
        assert r.S_after == pytest.approx(0.0, abs=1e-12)
        # oracle: the mutual information of rho, from eigenvalues
        lam = np.linalg.eigvalsh(rho)
        S_joint = -np.sum(lam * np.log(lam))
        S_marg = 2 * math.log(2)
        assert r.slack == pytest.approx(S_marg - S_joint, abs=1e-10)

    def test_violation_detected(self):
        # an "after" entropy larger than "before" can only come from a non-channel
        class Amplifier(opalg.Channel):
            def schrodinger(self, rho):
                return np.diag([1.0, 0.0]) if rho[0, 0].real > 0.6 else np.eye(2) / 2
        A = opalg.full_algebra(2)
        with pytest.raises(DPIViolation):
            M.dpi_check(Amplifier((np.eye(2),)), RHO23, np.diag([0.6, 0.4]), A, A)

    @given(st.integers(0, 200), st.integers(0, 2**32))
    @settings(max_examples=30, deadline=None)
    def test_random(self, i, seed):
        ch, rho, sigma = dpi_sample(i, seed)
        r = M.dpi_check(ch, rho, sigma, opalg.full_algebra(ch.dim_in), opalg.full_algebra(ch.dim_out))
        assert r.slack >= -1e-8


class TestPetz:
    def test_unitary_inverse(self):
        u = scipy.linalg.expm(1j * (SX + 0.3 * SZ))
        sigma = opalg.random_density(2, 3)
        R = M.petz_recovery(opalg.Channel((u,)), sigma)
        rho = opalg.random_density(2, 4)
        np.testing.assert_allclose(R.schrodinger(u @ rho @ u.conj().T), rho, atol=1e-10)

    def test_identity(self):
        sigma = opalg.random_density(3, 3)
        R = M.petz_recovery(opalg.Channel((np.eye(3),)), sigma)
        x = opalg.random_density(3, 5)
        np.testing.assert_allclose(R.schrodinger(x), x, atol=1e-10)

    def test_dephasing_diagonal(self):
        ch = opalg.Channel((np.diag([1.0, 0, 0]), np.diag([0, 1.0, 0]), np.diag([0, 0, 1.0])))
        sigma = np.diag([0.5, 0.3, 0.2])
        R = M.petz_recovery(ch, sigma)
        for p in ([0.1, 0.1, 0.8], [0.3, 0.3, 0.4]):
            rho = np.diag(p)
            np.testing.assert_allclose(R.schrodinger(ch.schrodinger(rho)), rho, atol=1e-10)

    def test_not_faithful_output(self):
        ch = opalg.Channel((np.array([[1.0, 0], [0, 0]]), np.array([[0, 1.0], [0, 0]])))
        with pytest.raises(NotFaithfulOutput):
            M.petz_recovery(ch, np.eye(2) / 2)

    @given(st.integers(0, 200), st.integers(0, 2**32))
    @settings(max_examples=30, deadline=None)
    def test_recovers_reference(self, i, seed):
        ch, rho, sigma = dpi_sample(i, seed)
        R = M.petz_recovery(ch, sigma)
        assert R.normalization_residual() <= 1e-8
        assert np.linalg.norm(R.schrodinger(ch.schrodinger(sigma)) - sigma) <= 1e-6
        slack = M.dpi_check(ch, rho, sigma, opalg.full_algebra(ch.dim_in),
                            opalg.full_algebra(ch.dim_out)).slack
        if slack <= 1e-9:
            assert np.linalg.norm(R.schrodinger(ch.schrodinger(rho)) - rho) <= 1e-6


class TestEntropicNoSignalling:
    FULL2 = N.load_net_config("full-net-2q")

    def test_commutant_kraus(self):
        net = self.FULL2
        A0 = net.local_algebra(net.region([0]))
        B = net.local_algebra(net.region([1]))
        ch = opalg.random_channel_in(A0, 2, 1)
        rho, sigma = opalg.random_density(4, 1), opalg.random_density(4, 2)
        rep = M.entropic_nosignalling_check(ch, A0, rho, sigma, B)
        assert rep.commutes and rep.rho_fixed and rep.sigma_fixed
        assert rep.entropy_delta <= 1e-8

    def test_witness_unitary(self):
        net = self.FULL2
        O = net.region([0])
        ext = opalg.join(net.local_algebra(O), opalg.generate_algebra([kron(I2, SX)], 4))
        w = ns.find_signalling_witness(net, O, ext)
        B = net.local_algebra(w.region_B)
        rho = w.state.rho
        after = w.unitary_u @ rho @ w.unitary_u.conj().T
        rep = M.entropic_nosignalling_check(opalg.Channel((w.unitary_u,)), ext, rho, after, B)
        assert not rep.commutes and not rep.rho_fixed
        assert rep.pre_post_entropy > 0
        assert rep.pre_post_entropy == pytest.approx(w.entropy_value, rel=1e-12)

    def test_scalars_always_preserved(self):
        u = scipy.linalg.expm(1j * kron(SX, SZ))
        rho, sigma = opalg.random_density(4, 1), opalg.random_density(4, 2)
        rep = M.entropic_nosignalling_check(opalg.Channel((u,)), opalg.full_algebra(4), rho, sigma,
                                            opalg.scalars(4))
        assert rep.entropy_delta == 0.0 and rep.rho_fixed

    def test_kraus_outside(self):
        with pytest.raises(KrausNotInAlgebra):
            M.entropic_nosignalling_check(opalg.Channel((kron(SX, I2),)), opalg.diagonal_algebra(4),
                                          np.eye(4) / 4, np.eye(4) / 4, opalg.scalars(4))
