"""Laplace sampler correctness: transform values, moments, tails."""

import math

import numpy as np
import pytest

from privhh.noise import NoiseSource, ZeroNoiseSource, laplace_from_uniform, sample_laplace


def test_median_uniform_maps_to_zero():
    assert laplace_from_uniform(0.5, 1.0) == 0.0
    assert laplace_from_uniform(0.5, 123.0) == 0.0


def test_upper_quartile_value():
    assert laplace_from_uniform(0.75, 1.0) == pytest.approx(-math.log(0.5), abs=1e-12)


def test_symmetry():
    assert laplace_from_uniform(0.25, 2.0) == pytest.approx(
        -laplace_from_uniform(0.75, 2.0), abs=1e-12
    )


def test_invalid_scale_rejected():
    source = NoiseSource(1)
    for scale in (0.0, -1.0):
        with pytest.raises(ValueError):
            sample_laplace(scale, source)
    with pytest.raises(ValueError):
        ZeroNoiseSource().laplace(0.0)


def test_seed_replays_sequence():
    source = NoiseSource(99)
    a = [sample_laplace(2.0, source) for _ in range(5)]
    b = NoiseSource(99).laplace(2.0, size=5)
    assert a == pytest.approx(list(b), abs=0.0)


def test_zero_noise_hook():
    hook = ZeroNoiseSource()
    assert hook.laplace(5.0) == 0.0
    assert not hook.laplace(5.0, size=(3, 3)).any()


def test_moments():
    draws = NoiseSource(2024).laplace(10.0, size=1_000_000)
    assert abs(draws.mean()) < 0.005 * 10.0
    assert abs(draws.var() - 200.0) / 200.0 < 0.01


def test_tail_matches_closed_form():
    # Pr[Z >= g] = 0.5 * exp(-eps * g) for Z ~ Laplace(1/eps)
    draws = NoiseSource(515).laplace(10.0, size=1_000_000)
    for gamma in (10.0, 30.0, 76.009):
        expected = 0.5 * math.exp(-0.1 * gamma)
        observed = float((draws >= gamma).mean())
        sigma = math.sqrt(expected * (1 - expected) / draws.size)
        assert abs(observed - expected) <= 3 * sigma + 1e-9
