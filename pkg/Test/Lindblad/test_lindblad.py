import numpy as np
import pytest
from pytest import approx

import lindket as lk
from lindket.lindblad import LindbladModel

rng = np.random.default_rng(42)


def _random_matrix(d):
    return rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))


def _random_hermitian(d):
    m = _random_matrix(d)
    return 0.5 * (m + m.conj().T)


def _random_density(d):
    m = _random_matrix(d)
    rho = m @ m.conj().T
    return rho / np.trace(rho)


models = {}
models["Two level"] = lk.systems.two_level_model()
models["Heisenberg L=3"] = lk.systems.heisenberg_model(lk.systems.SpinChainSpec(length=3))
models["Random d=4"] = LindbladModel(
    _random_hermitian(4), tuple(0.5 * _random_matrix(4) for _ in range(3))
)
models["Closed hbar=2"] = LindbladModel(_random_hermitian(3), (), hbar=2.0)


def test_trace_and_hermiticity_preserved():
    for name, model in models.items():
        rho = _random_density(model.dim)
        drho = lk.lindblad.apply_lindbladian(model, rho)
        assert abs(np.trace(drho)) < 1e-12, name
        assert np.allclose(drho, drho.conj().T, atol=1e-12), name


def test_effective_form_agrees():
    for name, model in models.items():
        rho = _random_matrix(model.dim)
        standard = lk.lindblad.apply_lindbladian(model, rho, form="standard")
        effective = lk.lindblad.apply_lindbladian(model, rho, form="effective")
        assert np.allclose(standard, effective, atol=1e-12), name


def test_superoperator_agrees_with_direct():
    for name, model in models.items():
        rho = _random_matrix(model.dim)
        superop = lk.lindblad.build_superoperator(model)
        assert superop.shape == (model.dim ** 2,) * 2
        direct = lk.lindblad.apply_lindbladian(model, rho)
        vectorized = lk.lindblad.devectorize(superop @ lk.lindblad.vectorize(rho))
        scale = max(1.0, np.abs(direct).max())
        assert np.abs(direct - vectorized).max() <= 1e-12 * scale, name


@pytest.mark.parametrize("name", [n for n, m in models.items() if m.dim <= 4])
def test_superoperator_on_matrix_units(name):
    model = models[name]
    d = model.dim
    superop = lk.lindblad.build_superoperator(model)
    for i in range(d):
        for j in range(d):
            unit = np.zeros((d, d), dtype=complex)
            unit[i, j] = 1.0
            direct = lk.lindblad.apply_lindbladian(model, unit)
            vectorized = lk.lindblad.devectorize(superop @ lk.lindblad.vectorize(unit))
            scale = max(1.0, np.abs(direct).max())
            assert np.abs(direct - vectorized).max() <= 1e-12 * scale, (i, j)


def test_decay_superoperator_example():
    model = lk.systems.two_level_model(lk.systems.TwoLevelSpec(rabi=0.0, gamma=0.5))
    superop = lk.lindblad.build_superoperator(model)
    excited = lk.lindblad.vectorize(np.diag([0.0, 1.0]))
    result = lk.lindblad.devectorize(superop @ excited)
    assert np.abs(result - np.diag([0.5, -0.5])).max() <= 1e-15


def test_column_stacking_identity():
    d = 3
    a, x, b = _random_matrix(d), _random_matrix(d), _random_matrix(d)
    lhs = lk.lindblad.vectorize(a @ x @ b)
    rhs = lk.linalg.kron(b.T, a) @ lk.lindblad.vectorize(x)
    assert np.abs(lhs - rhs).max() <= 1e-13 * max(1.0, np.abs(lhs).max())


def test_vectorize_roundtrip_and_errors():
    rho = _random_matrix(4)
    assert np.array_equal(lk.lindblad.devectorize(lk.lindblad.vectorize(rho)), rho)
    assert lk.lindblad.vectorize([[1, 2], [3, 4]]) == approx([1, 3, 2, 4])
    with pytest.raises(lk.ContractViolation):
        lk.lindblad.devectorize(np.ones(5))
    with pytest.raises(lk.ContractViolation):
        lk.lindblad.vectorize(np.ones((2, 3)))


def test_superoperator_budget():
    model = models["Two level"]
    assert lk.lindblad.superoperator_bytes(2) == 256
    lk.lindblad.build_superoperator(model, budget=256)
    with pytest.raises(lk.MemoryBudgetError) as info:
        lk.lindblad.build_superoperator(model, budget=255)
    assert info.value.required_bytes == 256
    assert info.value.budget_bytes == 255


def test_default_budget_boundary():
    # 7 sites fit the default 4 GiB exactly, 8 sites do not
    assert lk.lindblad.superoperator_bytes(2 ** 7) == lk.DEFAULT_MEMORY_BUDGET
    assert lk.lindblad.superoperator_bytes(2 ** 8) > lk.DEFAULT_MEMORY_BUDGET
    model = lk.systems.heisenberg_model(lk.systems.SpinChainSpec(length=8))
    with pytest.raises(lk.MemoryBudgetError) as info:
        lk.lindblad.build_superoperator(model)
    assert "OutOfMemoryError" in str(info.value)


def test_sampled_norm_brackets_exact_norm():
    for name, model in models.items():
        exact = lk.lindblad.lindbladian_norm(model, "exact_small")
        sampled = lk.lindblad.lindbladian_norm(model, "random_probe", seed=7)
        assert sampled <= 1.2 * exact * (1 + 1e-12), name
        assert sampled >= 0.25 * exact, name


def test_sampled_norm_is_reproducible():
    model = models["Random d=4"]
    a = lk.lindblad.lindbladian_norm(model, "random_probe", samples=8, seed=3)
    b = lk.lindblad.lindbladian_norm(model, "random_probe", samples=8, seed=3)
    assert a == b


def test_exact_norm_budget_hint():
    model = lk.systems.heisenberg_model(lk.systems.SpinChainSpec(length=3))
    with pytest.raises(lk.MemoryBudgetError) as info:
        lk.lindblad.lindbladian_norm(model, "exact_small", budget=1024)
    assert "random_probe" in str(info.value)
    # the sampled strategy never builds the superoperator
    assert lk.lindblad.lindbladian_norm(model, "random_probe", budget=1024) > 0


def test_norm_strategy_errors():
    model = models["Two level"]
    with pytest.raises(lk.ContractViolation):
        lk.lindblad.lindbladian_norm(model, "guess")
    with pytest.raises(lk.ContractViolation):
        lk.lindblad.lindbladian_norm(model, "random_probe", samples=0)


def test_model_validation():
    with pytest.raises(lk.ContractViolation):
        LindbladModel(np.array([[0, 1], [0, 0]]))
    with pytest.raises(lk.ContractViolation):
        LindbladModel(np.eye(2), (np.eye(3),))
    with pytest.raises(lk.ContractViolation):
        LindbladModel(np.eye(2), hbar=0.0)
    with pytest.raises(lk.ContractViolation):
        LindbladModel(np.ones((2, 3)))


def test_model_is_read_only():
    model = models["Random d=4"]
    with pytest.raises(ValueError):
        model.hamiltonian[0, 0] = 1.0
    with pytest.raises(ValueError):
        model.jump_ops[0][0, 0] = 1.0


def test_h_eff():
    model = models["Two level"]
    gamma = lk.systems.TwoLevelSpec().gamma
    expected = model.hamiltonian - 0.5j * np.diag([0.0, gamma])
    assert np.allclose(model.h_eff, expected)


def test_closed_system_is_commutator():
    model = models["Closed hbar=2"]
    rho = _random_density(model.dim)
    h = model.hamiltonian
    expected = -0.5j * (h @ rho - rho @ h)
    assert np.allclose(lk.lindblad.apply_lindbladian(model, rho), expected, atol=1e-13)


def test_wrong_shape_rho():
    with pytest.raises(lk.ContractViolation):
        lk.lindblad.apply_lindbladian(models["Two level"], np.eye(3))
    with pytest.raises(lk.ContractViolation):
        lk.lindblad.apply_lindbladian(models["Two level"], np.eye(2), form="other")


def test_diagnose():
    rho = np.diag([0.75, 0.25]).astype(complex)
    report = lk.lindblad.diagnose(rho, positivity=True)
    assert report.trace == approx(1.0)
    assert report.trace_error == approx(0.0)
    assert report.hermiticity_error == 0.0
    assert report.purity == approx(0.625)
    assert report.min_eigenvalue == approx(0.25)
    assert lk.lindblad.diagnose(rho).min_eigenvalue is None

    bad = np.array([[1.0, 1.0], [0.0, -0.1]], dtype=complex)
    report = lk.lindblad.diagnose(bad, positivity=True)
    assert report.trace_error == approx(0.1)
    assert report.hermiticity_error > 0
    assert report.min_eigenvalue < 0


def test_exact_norm_falls_back_to_frobenius(monkeypatch, caplog):
    model = models["Two level"]
    superop = lk.lindblad.build_superoperator(model)
    monkeypatch.setattr(
        lk.linalg, "spectral_norm", lambda a, *args, **kwargs: lk.linalg.NormEstimate(0.1, False, 1)
    )
    with caplog.at_level("WARNING", logger="lindket"):
        value = lk.lindblad.lindbladian_norm(model, "exact_small")
    assert value == approx(lk.linalg.frobenius_norm(superop), rel=1e-14)
    assert "did not converge" in caplog.text
