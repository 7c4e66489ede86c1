import numpy as np
import pytest
from conftest import make_instance

from wassball import InputError, build_divergence_sequence, certify_growth, contains
from wassball.finiteness import BOUNDED, DIVERGENT, INCONCLUSIVE, classify_trend, escape_mass


def test_certify_growth_examples():
    inst = make_instance("x1", [[0.0]], [1.0], 1.0, p=2, half=10)
    cert = certify_growth(inst, 2.0, radii=np.logspace(0, 3, 13))
    assert cert.verdict == BOUNDED
    # sup x / (1 + x^2) = 0.5 at x = 1, the smallest shell
    assert 0.45 <= cert.c_estimate <= 0.5
    ratios = [r for _, r in cert.shell_data]
    assert all(b < a for a, b in zip(ratios[2:], ratios[3:]))

    quad = make_instance("x1^2", [[0.0]], [1.0], 1.0, p=1, half=10)
    assert certify_growth(quad, 1.0).verdict == DIVERGENT

    zero = make_instance("0", [[0.0]], [1.0], 1.0, p=1, half=10)
    cert = certify_growth(zero, 1.0)
    assert cert.verdict == BOUNDED and cert.c_estimate == 0.0


def test_attainment_probe_below_p():
    inst = make_instance("x1", [[0.0]], [1.0], 1.0, p=2, half=10)
    assert certify_growth(inst, 1.8).verdict == BOUNDED
    # linear growth is exactly at the boundary for p = 1: plateau, not growth
    lin = make_instance("x1", [[0.0]], [1.0], 1.0, p=1, half=10)
    assert certify_growth(lin, 1.0).verdict == BOUNDED
    assert certify_growth(lin, 0.9).verdict == DIVERGENT


def test_certify_growth_validation_and_domain_errors():
    inst = make_instance("x1", [[0.0]], [1.0], 1.0)
    with pytest.raises(InputError):
        certify_growth(inst, 0.0)
    with pytest.raises(InputError):
        certify_growth(inst, 1.0, radii=[1.0, 5.0])
    bad = make_instance("log(-abs(x1) - 1)", [[0.0]], [1.0], 1.0)
    cert = certify_growth(bad, 1.0)
    assert cert.verdict == INCONCLUSIVE and np.isnan(cert.c_estimate)


def test_certify_growth_deterministic():
    inst = make_instance("x1*x2 - abs(x1)", [[0.0, 1.0], [1.0, 0.0]], [0.5, 0.5], 1.0, p=2)
    assert certify_growth(inst, 2.0, seed=4).to_dict() == certify_growth(inst, 2.0, seed=4).to_dict()
    assert certify_growth(inst, 2.0, seed=4).to_dict() != certify_growth(inst, 2.0, seed=5).to_dict()


@pytest.mark.parametrize(
    "values, verdict",
    [
        ([1, 2, 4, 8, 16, 32], DIVERGENT),
        ([1, 1, 1, 1, 1, 1], BOUNDED),
        ([6, 5, 4, 3, 2, 1], BOUNDED),
        ([0, 0, 0, -1, -2, -3], BOUNDED),
        ([1, 1, 1, 1, 1, 5], DIVERGENT),
        ([5, 5, 5, 5, 1, 1.2], INCONCLUSIVE),
        ([1, 1, 1, 1, 1, float("inf")], DIVERGENT),
        ([1, 2, 4, 8, 16, 16], INCONCLUSIVE),
        ([1, 1, 1, -1, 1, 2], INCONCLUSIVE),
    ],
)
def test_classify_trend(values, verdict):
    radii = np.logspace(0, 5, len(values))
    assert classify_trend(list(zip(radii, values))) == verdict


def test_divergence_sequence_quadratic():
    inst = make_instance("x1^2", [[0.0]], [1.0], 1.0, p=1, half=10)
    wit = build_divergence_sequence(inst, [1.0], 20)
    assert [w.k for w in wit] == list(range(1, 21))
    for w in wit:
        d = 2.0**w.k
        assert w.eps_k == min(1.0, 0.5) / (1 + d)
        assert w.y_k.tolist() == [d]
        assert w.measure_k.weights.sum() == pytest.approx(1.0, abs=1e-15)
        assert w.w_check <= 1.0 + 1e-9
        assert contains(inst.reference, inst.radius, w.measure_k, inst.metric, tol=1e-9).inside
        assert w.objective_k == pytest.approx(w.eps_k * d**2, rel=1e-12)
    objs = [w.objective_k for w in wit]
    assert all(b > a for a, b in zip(objs, objs[1:]))
    assert objs[11] > 1e3
    assert all(b < a for a, b in zip([w.eps_k for w in wit], [w.eps_k for w in wit][1:]))


def test_divergence_sequence_linear_stays_bounded():
    inst = make_instance("x1", [[0.0]], [1.0], 1.0, p=1, half=10)
    for w in build_divergence_sequence(inst, [1.0], 15):
        assert w.objective_k <= 0.5


def test_escape_mass_example_and_key_bound():
    assert escape_mass(0.6, 1.0, 1.0, 2.0) == pytest.approx(1 / 6)
    inst = make_instance("x1^2 + x2", [[0.5, 0.0], [1.0, 1.0]], [0.6, 0.4], 0.8, p=2)
    for w in build_divergence_sequence(inst, [3.0, -4.0], 12):
        dp = float(inst.metric.cost(w.y_k, inst.reference.atoms[0]))
        assert dp == pytest.approx(2.0 ** (2 * w.k), rel=1e-12)
        assert w.eps_k * dp <= inst.radius**2 / 4
        assert w.w_check <= inst.radius + 1e-9


def test_divergence_validation():
    inst = make_instance("x1", [[0.0]], [1.0], 1.0)
    with pytest.raises(InputError):
        build_divergence_sequence(inst, [0.0], 3)
    with pytest.raises(InputError):
        build_divergence_sequence(inst, [1.0], 0)


def test_divergence_evidence_implies_growing_witnesses():
    for source in ("x1^2", "exp(x1)", "x1^3 - x1"):
        inst = make_instance(source, [[0.0], [1.0]], [0.5, 0.5], 0.5, p=1, half=10)
        assert certify_growth(inst, 1.0).verdict == DIVERGENT
        objs = [w.objective_k for w in build_divergence_sequence(inst, [1.0], 8)]
        assert objs[-1] > objs[-2] > objs[-3]
