# Copyright 2026 The MMFDL Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.


"""Multimodal fused regression on SMILES, ECFP and molecular graphs."""

import json

from ._mmfdl import (
    Fingerprint,
    MmfdlError,
    Vocabulary,
    atom_count,
    compute_metrics,
    cosine,
    ecfp,
    fit_fusion,
    hamming,
    load_csv,
    mae,
    make_kfold,
    make_split,
    pearson,
    rmse,
    summarize,
    tanimoto,
    tokenize,
)
from . import _mmfdl

__all__ = [
    "Fingerprint",
    "MmfdlError",
    "Vocabulary",
    "atom_count",
    "cache_key",
    "compute_metrics",
    "cosine",
    "default_config",
    "ecfp",
    "fit_fusion",
    "hamming",
    "load_csv",
    "mae",
    "make_kfold",
    "make_split",
    "normalize_config",
    "pearson",
    "rmse",
    "run",
    "set_option",
    "summarize",
    "tanimoto",
    "tokenize",
]


def _text(config):
    return config if isinstance(config, str) else json.dumps(config)


def default_config():
    """Experiment configuration with every default filled in, as a dict."""
    return json.loads(_mmfdl.default_config())


def normalize_config(config):
    """Validates a partial config (dict or JSON text) and returns it complete."""
    return json.loads(_mmfdl.normalize_config(_text(config)))


def set_option(config, key, value):
    """Returns a copy of config with the dotted key set; value is parsed as JSON."""
    return json.loads(_mmfdl.set_option(_text(config), key, str(value)))


def cache_key(config):
    return _mmfdl.cache_key(_text(config))


def run(command, config):
    """Runs prepare, train, evaluate, noise, repeat or kfold and returns a summary dict."""
    return _mmfdl.run_command(command, _text(config))
