import math
import os

import pytest

from ionlockin import (DriveConfig, ExperimentConfig, OdfConfig,
                       SequenceConfig, TrapConfig, config_from_json)

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")

TWO_PI = 2.0 * math.pi


@pytest.fixture
def default_cfg():
    return ExperimentConfig()


@pytest.fixture
def fig2_cfg():
    return config_from_json(os.path.join(CONFIG_DIR, "fig2.json"))


@pytest.fixture
def fig3_cfg():
    return config_from_json(os.path.join(CONFIG_DIR, "fig3.json"))


@pytest.fixture
def fig4_cfg():
    return config_from_json(os.path.join(CONFIG_DIR, "fig4.json"))


def make_cfg(n_ions=85, u_over_hbar=TWO_PI * 10.4e3, z_c=0.5e-9,
             m_segments=8, t_arm=1.25e-3, t_pi=1.25e-6, xi_decay=1.156e-3,
             dwf=0.86, delta_policy="random", delta_fixed=0.0,
             modulation="phase-advance"):
    return ExperimentConfig(
        trap=TrapConfig(n_ions=n_ions),
        odf=OdfConfig(u_over_hbar=u_over_hbar, dwf=dwf, xi_decay=xi_decay),
        drive=DriveConfig(z_c=z_c, delta_policy=delta_policy,
                          delta_fixed=delta_fixed),
        sequence=SequenceConfig(m_segments=m_segments, t_arm=t_arm,
                                t_pi=t_pi, modulation=modulation),
    )
