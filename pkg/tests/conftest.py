"""Shared fixtures: synthetic images, planted score maps, stub bundles."""

import numpy as np
import pytest

from docpipe.backends import BackendDescriptor, build_backends
from docpipe.detection import ScoreMaps


@pytest.fixture
def rng():
    return np.random.default_rng(20250810)


def make_planted_maps(shape=(200, 300), rects=((20, 20, 80, 14), (150, 60, 100, 20), (30, 120, 60, 30)),
                      p_inside=0.9, p_outside=0.05):
    """Probability map with high-probability rectangles, no threshold map."""
    prob = np.full(shape, p_outside, dtype=np.float64)
    for x, y, w, h in rects:
        prob[y : y + h, x : x + w] = p_inside
    return ScoreMaps(prob=prob)


@pytest.fixture
def planted_maps():
    return make_planted_maps()


@pytest.fixture
def planted_rects():
    return [(20, 20, 80, 14), (150, 60, 100, 20), (30, 120, 60, 30)]


def stub_bundle(rects=(), entries=(), lexicon=None):
    """Backends bundle with a planted detector and lookup recognizer."""
    descriptors = {
        "detector": BackendDescriptor(kind="detector", options={"rects": list(rects)}),
        "recognizer": BackendDescriptor(kind="recognizer", options={"entries": list(entries)}),
    }
    if lexicon is not None:
        descriptors["nli"] = BackendDescriptor(kind="nli", options={"lexicon": dict(lexicon)})
    return build_backends(descriptors)


@pytest.fixture
def noise_image(rng):
    return rng.integers(150, 250, (60, 90, 3), dtype=np.uint8)
