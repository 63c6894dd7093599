"""Shared fixtures: a small synthetic corpus in the Kaggle file layout."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TOPICS = {
    "drill": ["drill", "bit", "cordless", "battery", "chuck", "torque"],
    "paint": ["paint", "gallon", "primer", "interior", "satin", "brush"],
    "pipe": ["pipe", "copper", "fitting", "valve", "plumbing", "elbow"],
    "light": ["bulb", "led", "watt", "lamp", "fixture", "dimmable"],
}
FILLER = ["the", "and", "quality", "home", "durable"]


def write_corpus(root: Path, n_products: int = 30, n_train: int = 120, n_test: int = 40, seed: int = 0) -> Path:
    """Four product topics; queries on the product's own topic score high, off-topic queries low."""
    rng = np.random.default_rng(seed)
    names = list(TOPICS)
    root.mkdir(parents=True, exist_ok=True)
    products = []
    for uid in range(100001, 100001 + n_products):
        topic = names[uid % 4]
        words = TOPICS[topic]
        title = " ".join(rng.choice(words, 3)) + f" {rng.integers(1, 20)} in."
        desc = " ".join(rng.choice(words + FILLER, 25))
        products.append((uid, topic, title, desc))
    with open(root / "product_descriptions.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["product_uid", "product_description"])
        for uid, _, _, desc in products:
            w.writerow([uid, desc])
    with open(root / "attributes.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["product_uid", "name", "value"])
        for uid, topic, _, _ in products:
            w.writerow([uid, "MFG Brand Name", topic.title() + "Co"])
            w.writerow([uid, "Material", rng.choice(TOPICS[topic])])
    for fname, n, labelled, first_id in (("train.csv", n_train, True, 1), ("test.csv", n_test, False, 10000)):
        with open(root / fname, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["id", "product_uid", "product_title", "search_term"] + (["relevance"] if labelled else []))
            for i in range(n):
                uid, topic, title, _ = products[rng.integers(len(products))]
                qtopic = topic if rng.random() < 0.6 else names[rng.integers(4)]
                query = " ".join(rng.choice(TOPICS[qtopic], 2))
                rel = (2.6 if qtopic == topic else 1.6) + rng.normal(0, 0.3)
                rel = float(np.clip(round(rel * 3) / 3, 1, 3))
                w.writerow([first_id + i, uid, title, query] + ([f"{rel:.2f}"] if labelled else []))
    return root


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    return write_corpus(tmp_path_factory.mktemp("corpus"))


@pytest.fixture(scope="session")
def loaded(corpus_dir):
    from prodsearch.corpus import load_tables

    return load_tables(corpus_dir / "train.csv", corpus_dir / "product_descriptions.csv", corpus_dir / "attributes.csv")


@pytest.fixture(scope="session")
def prepared(loaded):
    from prodsearch.models import PreparedCorpus

    return PreparedCorpus.build(loaded[1])
