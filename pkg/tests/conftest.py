"""Shared fixtures: designs and error models used across the suite."""

from __future__ import annotations

import pytest

from panelpower import (
    DesignSpec,
    ErrorModel,
    EstimatorSpec,
    Family,
    validate_design,
)


@pytest.fixture
def base_est():
    return EstimatorSpec(Family.DID)


@pytest.fixture
def base_design(base_est):
    spec = DesignSpec(P=8, S=(4, 6), M_T_k=(10, 10), M_C_k=(10, 10), N=100)
    return validate_design(spec, base_est)


@pytest.fixture
def base_err():
    return ErrorModel(ICC_theta=0.05, rho=0.4)


def make_design(family=Family.DID, P=8, S=(4, 6), mt=(10, 10), mc=(10, 10), N=100, times=None):
    est = EstimatorSpec(family)
    if family.is_its:
        mc = tuple(0.0 for _ in mt)
    spec = DesignSpec(P=P, S=tuple(S), M_T_k=tuple(mt), M_C_k=tuple(mc), N=N, times=times)
    return validate_design(spec, est)
