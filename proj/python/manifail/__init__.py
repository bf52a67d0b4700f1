"""Failure-analysis dataset generation, scoring and correction loops."""

import json
import os

from . import _core
from ._core import CatalogError, ConfigError, IntegrityError, NotApplicable

__all__ = [
    "CatalogError",
    "ConfigError",
    "IntegrityError",
    "NotApplicable",
    "task_ids",
    "category_of",
    "build_task",
    "episode",
    "generate",
    "stats",
    "evaluate",
    "loop",
    "render",
    "judge_normalized",
    "score_mc",
    "verify_manifest",
]

task_ids = _core.task_ids
category_of = _core.category_of
judge_normalized = _core.judge_normalized
render = _core.render


def build_task(task, seed):
    return json.loads(_core.build_task(task, seed))


def episode(task, seed, taxonomy="", frame_rate=10.0):
    """Header, frames and footer of one episode as a list of dicts."""
    text = _core.episode(task, seed, taxonomy, frame_rate)
    return [json.loads(line) for line in text.splitlines() if line]


def generate(out, seed, tasks=(), failures_per_task=20, successes_per_task=3, taxonomy="",
             frame_rate=10.0, concurrency=1):
    return json.loads(_core.generate(seed, list(tasks), failures_per_task, successes_per_task,
                                     taxonomy, os.fspath(out), frame_rate, concurrency))


def stats(dataset, out=""):
    return json.loads(_core.stats(os.fspath(dataset), os.fspath(out)))


def evaluate(corpus, out, answers="reference", mock_judge=True, seed=0, concurrency=1):
    return json.loads(_core.evaluate(os.fspath(corpus), os.fspath(answers), mock_judge, seed,
                                     os.fspath(out), concurrency))


def loop(out, tasks=(), episodes=10, critics=("null", "oracle-low"), policy="scripted",
         compliance=1.0, pause_fraction=0.6, seed=0, concurrency=1):
    return json.loads(_core.loop(seed, list(tasks), episodes, list(critics), policy, compliance,
                                 pause_fraction, os.fspath(out), concurrency))


def score_mc(answer, options, correct_index):
    return _core.score_mc(answer, list(options), correct_index)


def verify_manifest(dataset):
    return json.loads(_core.verify_manifest(os.fspath(dataset)))
