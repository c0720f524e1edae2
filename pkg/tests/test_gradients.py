"""Analytic vs central-finite-difference gradients, 64-bit mode."""

import pytest

from gradcheck import CONFIGS, check_config, check_random_config, random_configs

TOLERANCE = 1e-4


@pytest.mark.parametrize("index,config", list(enumerate(CONFIGS)),
                         ids=[c[0] for c in CONFIGS])
def test_catalog_config_gradients(index, config):
    name, modality, layers, num_classes = config
    worst, n_arrays = check_config(name, modality, layers, num_classes, seed=1000 + index)
    assert n_arrays >= 1
    assert worst < TOLERANCE, f"{name}: worst relative error {worst:.3e}"


@pytest.mark.parametrize("index,spec", list(enumerate(random_configs(6, seed=2024))),
                         ids=[c[0] for c in random_configs(6, seed=2024)])
def test_randomly_generated_architecture_gradients(index, spec):
    name, modality, layers, num_classes, bounds = spec
    worst, _ = check_random_config(name, modality, layers, num_classes, bounds,
                                   seed=3000 + index)
    assert worst < TOLERANCE, f"{name}: worst relative error {worst:.3e}"
