import pathlib

import pytest

from mec_depend.params import SystemParams, validate

REPO_ROOT = pathlib.Path(__file__).resolve().parent.parent


def table2_params(**overrides) -> SystemParams:
    base = dict(
        lambda_b=0.1, lambda_d=6.4, channels=16,
        rho_dbm=-90.0, sigma2_dbm=-110.0, eta=4.0, theta_db=-10.0,
        lambda_a=0.15, p_a_override=0.25, mu_o=3.0, deg_factor=0.1,
        m_mec=5, m_loc=1, mu_loc=0.1, delta_fail=0.1, gamma_repair=1.0,
    )
    base.update(overrides)
    return validate(SystemParams(**base))


@pytest.fixture
def table2() -> SystemParams:
    return table2_params()


@pytest.fixture
def table2_config_path() -> str:
    return str(REPO_ROOT / "configs" / "table2.json")
