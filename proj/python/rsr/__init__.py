"""Python access to the rsr kernels. Configs travel as dicts."""

import json

from . import _core
from ._core import (  # noqa: F401
    ArgumentError,
    BinSpec,
    StageError,
    build_cost_volume,
    confidence_attention,
    conv3d,
    masked_ce,
    metrics,
    num_threads,
    regress_disparity,
    regress_elevation,
    set_num_threads,
    shuttle_bins,
    sigmoid,
    softmax,
    spatial_attention,
    uniform_bins,
)


def profile(name="desk"):
    return json.loads(_core.profile_config(name))


def load_config(path):
    return json.loads(_core.load_config(str(path)))


def _text(config):
    return json.dumps(profile() if config is None else config)


def project_voxels(features, depth, scale=4, config=None, reference=False):
    return _core.project_voxels(_text(config), scale, features, depth, reference)


def render_scene(seed, bumps=3, config=None):
    return _core.render_scene(_text(config), seed, bumps)


def evaluate_oracle(seed, bumps=3, config=None):
    return _core.evaluate_oracle(_text(config), seed, bumps)


def bench_view_transform(config=None, reps=50, warmup=5):
    return json.loads(_core.bench_view_transform(_text(config), reps, warmup))
