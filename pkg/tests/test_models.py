import numpy as np
import pytest

from etcsim.errors import ConfigurationError, NumericOverflowError
from etcsim.manifold import solve_coupling
from etcsim.models import (PlantModel, PolyField, StatePoint, eval_dynamics,
                           from_w, held_control, to_w, validate_model)


def test_eval_dynamics_equilibrium(ex1):
    dy, dz = eval_dynamics(ex1, StatePoint([0.0], [0.0]), [0.0])
    assert dy == pytest.approx(0.0) and dz == pytest.approx(0.0)


def test_eval_dynamics_example1_point(ex1):
    # dy = -y v, dv = v + u + y^2 - 2 v^2 at (1, 1), u = 0
    dy, dz = eval_dynamics(ex1, StatePoint([1.0], [1.0]), [0.0])
    assert dy[0] == pytest.approx(-1.0)
    assert dz[0] == pytest.approx(0.0)


def test_eval_dynamics_example2_point(ex2):
    # direct substitution: dz1 = z2 + y^2, dz2 = -2 z1 + 3 z2 + u
    dy, dz = eval_dynamics(ex2, StatePoint([1.0], [0.0, 0.0]), [0.0])
    assert dy[0] == pytest.approx(0.0)
    assert np.allclose(dz, [1.0, 0.0])


def test_eval_dynamics_mip_equilibrium(mip):
    dy, dz = eval_dynamics(mip, StatePoint([0.0], np.zeros(5)), [0.0, 0.0])
    assert np.allclose(dy, 0.0) and np.allclose(dz, 0.0)


def test_eval_dynamics_dimension_error(ex2):
    with pytest.raises(ConfigurationError):
        eval_dynamics(ex2, StatePoint([1.0], [0.0]), [0.0])
    with pytest.raises(ConfigurationError):
        eval_dynamics(ex2, StatePoint([1.0], [0.0, 0.0]), [0.0, 0.0])


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_eval_dynamics_overflow_names_component(ex1):
    huge = StatePoint([1e200], [1e200])
    with pytest.raises(NumericOverflowError) as exc:
        eval_dynamics(ex1, huge, [0.0])
    assert "component" in str(exc.value)


def test_held_control_values(ex1, ex2):
    assert held_control(ex1, StatePoint([0.0], [1.0]))[0] == pytest.approx(-2.0)
    assert held_control(ex2, StatePoint([0.0], [1.0, 1.0]))[0] == pytest.approx(-3.0)
    assert held_control(ex2, StatePoint([0.0], [0.0, 0.0]))[0] == 0.0


def test_to_w_on_manifold(ex1, ex1_manifold):
    E = np.zeros((1, 1))
    y, w = to_w(ex1, E, ex1_manifold, StatePoint([0.5], [0.25]))
    assert abs(w[0]) < 1e-15


def test_to_w_identity_transform(ex2):
    E = np.zeros((2, 1))
    y, w = to_w(ex2, E, None, StatePoint([0.3], [0.1, -0.2]))
    assert np.allclose(w, [0.1, -0.2])


def test_to_w_example2_on_series(ex2, ex2_manifold):
    E = np.zeros((2, 1))
    y, w = to_w(ex2, E, ex2_manifold, StatePoint([0.1], [0.01, -0.01]))
    assert np.max(np.abs(w)) < 1e-15


@pytest.mark.parametrize("which", ["ex2", "mip"])
def test_round_trip(which, ex2, ex2_manifold, mip, request):
    if which == "ex2":
        model, h = ex2, ex2_manifold
    else:
        from etcsim.manifold import solve_series
        model, h = mip, solve_series(mip, 3)
    E = solve_coupling(model.A_K, model.A1, model.B2 @ model.K12)
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x = rng.normal(size=model.n)
        x *= rng.uniform() / np.linalg.norm(x)
        s = StatePoint(x[:model.k], x[model.k:])
        y, w = to_w(model, E, h, s)
        s2 = from_w(model, E, h, y, w)
        assert np.max(np.abs(s2.x - s.x)) < 1e-12


def test_validate_builtin_models(ex1, ex2, mip):
    assert validate_model(ex1)
    assert validate_model(ex2)
    assert validate_model(mip)


def _tiny_model(g1_terms, g2_terms, A2=None, K11=None):
    g1 = PolyField.from_terms(1, g1_terms, 1, 1, 1)
    g2 = PolyField.from_terms(1, g2_terms, 1, 1, 1)

    def g_nl(y, z, u):
        x = np.concatenate([np.atleast_1d(y), np.atleast_1d(z),
                            np.atleast_1d(u)], axis=0)
        return g1(x), g2(x)

    return PlantModel(name="tiny", k=1, nz=1, m=1,
                      A1=np.zeros((1, 1)),
                      A2=np.array([[-1.0]]) if A2 is None else A2,
                      B2=np.array([[1.0]]),
                      K11=np.zeros((1, 1)) if K11 is None else K11,
                      K12=np.zeros((1, 1)), p=3.0, g_nl=g_nl, poly=(g1, g2))


def test_validate_rejects_offset():
    bad = _tiny_model([(0, 1.0, [0], [0], [0])], [])
    with pytest.raises(ConfigurationError):
        validate_model(bad)


def test_validate_rejects_linear_term():
    bad = _tiny_model([(0, 1.0, [1], [0], [0])], [])
    with pytest.raises(ConfigurationError):
        validate_model(bad)


def test_validate_rejects_non_hurwitz():
    bad = _tiny_model([], [], A2=np.array([[0.5]]))
    with pytest.raises(ConfigurationError):
        validate_model(bad)


def test_polyfield_bad_exponents():
    with pytest.raises(ConfigurationError):
        PolyField.from_terms(1, [(0, 1.0, [1, 1], [0], [0])], 1, 1, 1)


def test_polyfield_eval_batched(ex2):
    g1, g2 = ex2.poly
    x = np.array([[0.1, 0.2], [0.3, 0.1], [0.0, 0.5], [0.0, 0.0]])
    got = g1(x)
    assert got.shape == (1, 2)
    assert got[0, 0] == pytest.approx(-0.1 * (0.3 - 0.0))
    assert got[0, 1] == pytest.approx(-0.2 * (0.1 - 4 * 0.5))


def test_mip_domain_check(mip):
    assert mip.domain_check([0.5], [0.5, 0, 0, 0, 0])
    assert not mip.domain_check([1.5], [0.0, 0, 0, 0, 0])


def test_k1_matrix_structure(mip):
    # the position-feedback column cancels against the decoupling term
    K1 = mip.K1
    assert K1.shape == (2, 6)
    assert np.max(np.abs(K1[:, 0])) < 1e-12
