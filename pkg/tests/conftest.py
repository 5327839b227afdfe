"""Shared fixtures: one theta cache per session so tables calibrate once."""

import os

import pytest

from posverify.experiment import PRESETS, resolve_theta_table


@pytest.fixture(scope="session", autouse=True)
def theta_cache(tmp_path_factory):
    path = tmp_path_factory.mktemp("theta-cache")
    old = os.environ.get("POSVERIFY_THETA_CACHE")
    os.environ["POSVERIFY_THETA_CACHE"] = str(path)
    yield path
    if old is None:
        os.environ.pop("POSVERIFY_THETA_CACHE", None)
    else:
        os.environ["POSVERIFY_THETA_CACHE"] = old


@pytest.fixture(scope="session")
def neg_table(theta_cache):
    return resolve_theta_table(PRESETS["neg-noise-52"])


@pytest.fixture(scope="session")
def sig_table(theta_cache):
    return resolve_theta_table(PRESETS["sig-noise-62"])
