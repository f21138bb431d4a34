#!/usr/bin/env python3
"""Train on the toy grammar and compare the two L1 presets.

Generates a train/dev split, induces a head table from the aligned
dependencies, trains one model per preset, and prints the per-epoch dev
curve plus a final side-by-side table.

Usage: python3 scripts/toy_experiment.py [--train 200] [--dev 50]
       [--epochs 15] [--seeds 1,2,3] [--dim 20]
"""

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from discoparse.engine import EasyFirstParser, label_inventory
from discoparse.evaluate import evaluate
from discoparse.features import FeatureConfig
from discoparse.headrules import induce_head_table
from discoparse.learner import WeightStore
from discoparse.synthdata import toy_corpus


def run_once(trees, dev_trees, table, dim, epochs, seed, l1_preset, quiet=False):
    store = WeightStore(dim)
    if l1_preset.endswith("/N"):
        store.set_lambda_from_corpus(len(trees), float(l1_preset[:-2]))
    else:
        store.lam = float(l1_preset)
    parser = EasyFirstParser(store, FeatureConfig(dim=dim), table,
                             label_inventory(trees))
    curve = []

    def hook(epoch, stats):
        preds = [parser.parse_tokens(t.tokens) for t in dev_trees]
        rep = evaluate(dev_trees, preds)
        curve.append(rep.f1)
        if not quiet:
            print(f"    epoch {epoch:2d}  updates {stats['updates']:4d}  "
                  f"dev F1 {rep.f1:6.2f}")

    parser.train(trees, epochs=epochs, seed=seed, epoch_hook=hook)
    train_preds = [parser.parse_tokens(t.tokens) for t in trees]
    train_f1 = evaluate(trees, train_preds).f1
    return train_f1, curve


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--train", type=int, default=200)
    ap.add_argument("--dev", type=int, default=50)
    ap.add_argument("--epochs", type=int, default=15)
    ap.add_argument("--dim", type=int, default=20, help="log2 of weight count")
    ap.add_argument("--seeds", default="1,2,3")
    args = ap.parse_args()

    corpus = toy_corpus(args.train, random.Random(100))
    dev_corpus = toy_corpus(args.dev, random.Random(200))
    trees = [t for t, _ in corpus]
    dev_trees = [t for t, _ in dev_corpus]
    table = induce_head_table(corpus)
    print(f"train {len(trees)}  dev {len(dev_trees)}  "
          f"head rules for {sorted(table.rules)}")

    seeds = [int(s) for s in args.seeds.split(",")]
    results = {}
    for preset in ("0.001/N", "0.1/N"):
        finals = []
        for seed in seeds:
            t0 = time.perf_counter()
            print(f"  l1={preset} seed={seed}")
            train_f1, curve = run_once(trees, dev_trees, table, 2 ** args.dim,
                                       args.epochs, seed, preset,
                                       quiet=len(seeds) > 1)
            dt = time.perf_counter() - t0
            finals.append(curve[-1])
            print(f"    final: train F1 {train_f1:6.2f}  dev F1 {curve[-1]:6.2f}"
                  f"  ({dt:.1f}s)")
        results[preset] = finals

    print("\npreset      " + "  ".join(f"seed {s}" for s in seeds) + "   mean")
    for preset, finals in results.items():
        mean = sum(finals) / len(finals)
        print(f"{preset:10s}  " + "  ".join(f"{f:6.2f}" for f in finals)
              + f"  {mean:6.2f}")


if __name__ == "__main__":
    main()
