#!/usr/bin/env python3
"""Degradation study: frame quality vs additive Gaussian noise level.

Sweeps noise sigma (in [0,1] pixel units) over a batch of seeded random
frames with the analytic backend and prints per-level medians, reproducing
the monotonicity check from the acceptance suite at configurable scale.
"""

import argparse

import numpy as np

from favor import SimilarityWeights, analytic_backend, extract_features, frame_quality, preprocess


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=20)
    parser.add_argument("--levels", type=float, nargs="+", default=[0.01, 0.05, 0.1])
    parser.add_argument("--size", type=int, default=64)
    parser.add_argument("--backend-seed", type=int, default=0)
    args = parser.parse_args()

    backend = analytic_backend(args.backend_seed)
    weights = SimilarityWeights.uniform(backend.channel_counts)
    samples = {level: [] for level in args.levels}
    for seed in range(args.seeds):
        rng = np.random.default_rng(1000 + seed)
        frame = rng.integers(0, 256, (args.size, args.size, 3)).astype(np.float64)
        ref = extract_features(backend, preprocess(frame))
        for level in args.levels:
            noisy = np.clip(frame + 255.0 * level * rng.normal(0, 1, frame.shape), 0, 255)
            dist = extract_features(backend, preprocess(noisy))
            samples[level].append(frame_quality(ref, dist, weights))

    print(f"{'sigma':>8} {'median Q':>10} {'min':>10} {'max':>10}")
    for level in args.levels:
        q = np.asarray(samples[level])
        print(f"{level:>8.3f} {np.median(q):>10.6f} {q.min():>10.6f} {q.max():>10.6f}")


if __name__ == "__main__":
    main()
