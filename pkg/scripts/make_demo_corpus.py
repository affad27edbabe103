"""Generate a synthetic raw tweet stream for an end-to-end demo run.

Writes the stream plus a ground-truth sidecar (tweet_id,population) so a
demo annotator can be played back mechanically, and prints a ready-to-use
pipeline config.

Usage: python scripts/make_demo_corpus.py [out_dir] [--seed N] [--rogue N]
       [--regular N] [--noise N]
"""

import argparse
import csv
from pathlib import Path

from rxwatch.synth import make_tweet_stream

CONFIG_TEMPLATE = """\
[input]
raw = {raw}
schema_mode = lenient

[btm]
k = auto
cap = 10
iterations = 200
seed = 7

[isolation]
store = {store}

[classifier]
l2_lambda = 1.0
split_fraction = 0.7
runs = 10
seed = 11

[output]
dir = {out}
"""


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("out_dir", nargs="?", default="demo")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--rogue", type=int, default=200)
    parser.add_argument("--regular", type=int, default=350)
    parser.add_argument("--noise", type=int, default=50)
    args = parser.parse_args()

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stream = make_tweet_stream(
        out / "raw_stream.jsonl",
        n_rogue=args.rogue,
        n_regular=args.regular,
        n_noise=args.noise,
        seed=args.seed,
    )
    with open(out / "ground_truth.csv", "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["tweet_id", "population"])
        for tweet_id in sorted(stream.rogue_ids):
            writer.writerow([tweet_id, "rogue"])
        for tweet_id in sorted(stream.regular_ids):
            writer.writerow([tweet_id, "regular"])
        for tweet_id in sorted(stream.noise_ids):
            writer.writerow([tweet_id, "noise"])

    # absolute paths so the config works from any working directory
    config_path = out / "config.ini"
    config_path.write_text(
        CONFIG_TEMPLATE.format(
            raw=stream.path.resolve(),
            store=(out / "annotations.jsonl").resolve(),
            out=(out / "out").resolve(),
        )
    )
    total = args.rogue + args.regular + args.noise
    print(f"wrote {total} tweets to {stream.path}")
    print(f"ground truth: {out / 'ground_truth.csv'}")
    print(f"config: {config_path}")
    print(f"run: rxwatch --config {config_path} pipeline")


if __name__ == "__main__":
    main()
