"""Three-point witnesses: the inequality that excludes twin side maxima."""

import numpy as np
import pytest

from dissipcert import DomainError, make_builtin, three_point_expression

TANH = make_builtin("tanh")
ARCTAN = make_builtin("arctan")


def reference_expression(tf, qs, beta1, beta2):
    """Independent recomputation straight from the psi ratios."""
    def psi_b(beta, q):
        return q * float(tf.psi_prime(beta * q))

    x = [psi_b(beta2, q) / psi_b(beta1, q) for q in qs]
    y = [float(tf.psi(beta2 * q)) / psi_b(beta2, q) for q in qs]
    z = [float(tf.psi(beta1 * q)) / psi_b(beta1, q) for q in qs]
    return (
        x[2] * (z[0] - z[1])
        + x[2] * x[0] * (y[0] - y[1])
        + x[1] * (z[0] - z[2])
        + x[1] * x[0] * (y[0] - y[2])
        + x[0] * (z[2] - z[1])
        + (y[2] - y[1]) * (x[0] * x[1] + x[2] * x[1] - x[2] * x[0])
    )


class TestCollapse:
    @pytest.mark.parametrize("tf", [TANH, ARCTAN], ids=lambda t: t.name)
    def test_equal_betas_collapse(self, tf):
        # x_j = 1 and y_j = z_j reduce the sum to 4 (z1 - z2) > 0 for q1 > q2
        w = three_point_expression(tf, 3.0, 1.0, 2.0, 0.25, 0.25)
        assert w.x1 == w.x2 == w.x3 == 1.0
        assert w.expression_value == pytest.approx(4.0 * (w.z1 - w.z2), abs=1e-10)
        assert w.expression_value > 0.0


class TestRegimes:
    def test_tanh_q1_max(self):
        w = three_point_expression(TANH, 3.0, 1.0, 2.0, 0.3, 0.2)
        assert w.expression_value > 0.0
        ref = reference_expression(TANH, (3.0, 1.0, 2.0), 0.3, 0.2)
        assert w.expression_value == pytest.approx(ref, rel=1e-12)

    def test_arctan_q3_max(self):
        w = three_point_expression(ARCTAN, 2.0, 1.0, 4.0, 0.2, 0.1)
        assert w.expression_value > 0.0

    @pytest.mark.parametrize("tf", [TANH, ARCTAN], ids=lambda t: t.name)
    def test_random_positivity_both_regimes(self, tf):
        rng = np.random.default_rng(31)
        for regime in ("q1", "q3"):
            for _ in range(200):
                q = np.sort(10.0 ** rng.uniform(-1, 1, 3))
                if regime == "q1":
                    qs = (q[2], q[0], q[1]) if rng.random() < 0.5 else (q[2], q[1], q[0])
                else:
                    qs = (q[1], q[0], q[2])
                beta1 = rng.uniform(0.05, 0.95) * tf.s0 / max(qs)
                beta2 = rng.uniform(0.2, 0.98) * beta1
                w = three_point_expression(tf, *qs, beta1, beta2)
                assert w.expression_value > 0.0

    @pytest.mark.parametrize("tf", [TANH, ARCTAN], ids=lambda t: t.name)
    def test_slope_determinant_orders_betas(self, tf):
        # q1 max and Delta > 0 force beta1 > beta2
        rng = np.random.default_rng(37)
        confirmed = 0
        for _ in range(400):
            q = np.sort(10.0 ** rng.uniform(-1, 1, 3))
            q1, q2 = q[2], q[0]
            top = tf.s0 / q1
            b1, b2 = rng.uniform(0.02, 0.98, 2) * top
            if abs(b1 - b2) < 1e-6 * top:
                continue
            delta = float(
                tf.psi_prime(b1 * q1) * tf.psi_prime(b2 * q2)
                - tf.psi_prime(b2 * q1) * tf.psi_prime(b1 * q2)
            )
            if delta > 0.0:
                assert b1 > b2
                confirmed += 1
        assert confirmed > 50


class TestValidation:
    def test_rejects_bad_betas(self):
        with pytest.raises(ValueError):
            three_point_expression(TANH, 3.0, 1.0, 2.0, 0.1, 0.2)
        with pytest.raises(ValueError):
            three_point_expression(TANH, 3.0, 1.0, 2.0, 0.4, 0.0)

    def test_rejects_out_of_domain(self):
        with pytest.raises(DomainError):
            three_point_expression(TANH, 3.0, 1.0, 2.0, 0.5, 0.1)  # 0.5*3 > 1

    def test_rejects_tied_ratios(self):
        with pytest.raises(ValueError):
            three_point_expression(TANH, 2.0, 2.0, 1.0, 0.2, 0.1)
