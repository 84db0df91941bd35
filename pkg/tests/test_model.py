import pytest
from hypothesis import given, strategies as st

from trilevel.errors import (
    ForbiddenCoupling,
    InvalidParameters,
    NonFiniteInput,
    NonPositiveAtoms,
    OrderingViolation,
)
from trilevel.model import (
    Configuration,
    ModelParams,
    excitation_weights,
    load_params,
    params_from_mapping,
    params_to_mapping,
    validate,
)
from trilevel.quantum import enumerate_sector


def test_validate_accepts_resonant_xi():
    p = ModelParams(0, 1, 2, mu12=1, mu13=0, mu23=1, config="xi", n_atoms=2)
    assert validate(p) is p


def test_forbidden_coupling():
    with pytest.raises(ForbiddenCoupling):
        validate(ModelParams(0, 1, 2, mu12=1, mu13=0.5, config=Configuration.XI))


@pytest.mark.parametrize("config", list(Configuration))
def test_ordering_violation(config):
    with pytest.raises(OrderingViolation):
        validate(ModelParams(0, 2, 1, config=config))


@pytest.mark.parametrize("n", [0, -3])
def test_non_positive_atoms(n):
    with pytest.raises(NonPositiveAtoms):
        validate(ModelParams(0, 1, 2, n_atoms=n))


def test_non_finite():
    with pytest.raises(NonFiniteInput):
        validate(ModelParams(0, 1, float("inf")))


def test_negative_couplings_and_degenerate_levels_accepted():
    validate(ModelParams(0, 0, 1, mu13=-2.0, mu23=-0.1, config="lambda"))


@pytest.mark.parametrize("config, weights", [
    ("xi", (0, 1, 2)), ("lambda", (0, 0, 1)), ("v", (0, 1, 1))])
def test_excitation_weights(config, weights):
    w = excitation_weights(Configuration.parse(config))
    assert w.field_weight == 1
    assert w.level_weights == weights


@pytest.mark.parametrize("config", list(Configuration))
@pytest.mark.parametrize("n_atoms", [1, 3])
def test_vacuum_sector_contains_ground_reference(config, n_atoms):
    assert excitation_weights(config).level_weights[0] == 0
    basis = enumerate_sector(config, n_atoms, 0)
    assert (n_atoms, 0, 0, 0) in basis.states


@given(
    omegas=st.lists(st.floats(-5, 5), min_size=3, max_size=3).map(sorted),
    couplings=st.lists(st.floats(-3, 3), min_size=2, max_size=2),
    config=st.sampled_from(list(Configuration)),
    n=st.integers(1, 50),
)
def test_validate_idempotent(omegas, couplings, config, n):
    p = ModelParams(*omegas, config=config, n_atoms=n).with_axes(*couplings)
    assert validate(validate(p)) == validate(p)


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "p.cfg"
    path.write_text("# Lambda, figure values\nconfig = lambda\nomega1 = 0\nomega2 = 0.5\n"
                    "omega3 = 1.3\nmu13 = 0.7\nmu23 = 1.1\nn_atoms = 10\n")
    p = load_params(path)
    assert p == ModelParams(0, 0.5, 1.3, mu13=0.7, mu23=1.1, config="lambda", n_atoms=10)
    assert params_from_mapping(params_to_mapping(p)) == p


def test_config_file_rejects_unknown_key():
    with pytest.raises(InvalidParameters):
        params_from_mapping({"omega1": 0, "omega2": 1, "omega3": 2, "mu14": 1})


def test_axes_follow_allowed_couplings():
    for config in Configuration:
        assert config.forbidden_coupling not in config.axes
        assert len(set(config.axes)) == 2
