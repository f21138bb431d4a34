#!/usr/bin/env python3
"""Measure parse time against sentence length and fit t = c * n^e.

Trains a quick toy model, parses batches of toy sentences at each target
length, and reports the fitted exponent (the loop is close to linear
because rescoring after each action is confined to a 5-position window).

Usage: python3 scripts/timing_curve.py [--lengths 10,20,40,80] [--reps 5]
"""

import argparse
import random
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from discoparse.engine import EasyFirstParser, label_inventory
from discoparse.features import FeatureConfig
from discoparse.headrules import induce_head_table
from discoparse.learner import WeightStore
from discoparse.synthdata import toy_corpus, toy_sentence_of_length


def trained_parser(n_train=150, epochs=8, dim=2 ** 20):
    corpus = toy_corpus(n_train, random.Random(300))
    trees = [t for t, _ in corpus]
    table = induce_head_table(corpus)
    store = WeightStore(dim)
    store.set_lambda_from_corpus(len(trees))
    parser = EasyFirstParser(store, FeatureConfig(dim=dim), table,
                             label_inventory(trees))
    parser.train(trees, epochs=epochs, seed=42)
    return parser


def time_length(parser, rng, length, reps, per_length=6):
    sents = [toy_sentence_of_length(rng, length)[0] for _ in range(per_length)]
    for t in sents:  # warm the feature caches
        parser.parse_tokens(t.tokens)
    times = []
    for t in sents:
        best = min(timeit_once(parser, t) for _ in range(reps))
        times.append(best)
    return sum(times) / len(times)


def timeit_once(parser, tree):
    t0 = time.perf_counter()
    parser.parse_tokens(tree.tokens)
    return time.perf_counter() - t0


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--lengths", default="10,20,40,80")
    ap.add_argument("--reps", type=int, default=5)
    args = ap.parse_args()
    lengths = [int(x) for x in args.lengths.split(",")]

    print("training the timing model ...")
    parser = trained_parser()
    rng = random.Random(400)
    means = []
    for n in lengths:
        mean = time_length(parser, rng, n, args.reps)
        means.append(mean)
        print(f"  n={n:3d}  mean parse time {mean * 1000:7.2f} ms")

    e, logc = np.polyfit(np.log(lengths), np.log(means), 1)
    print(f"\nfit: t = {np.exp(logc):.3g} * n^{e:.3f}")
    print(f"exponent e = {e:.3f} ({'sub' if e < 1.5 else 'NOT sub'}-quadratic "
          "regime, target e < 1.5)")


if __name__ == "__main__":
    main()
