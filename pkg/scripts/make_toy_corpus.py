#!/usr/bin/env python3
"""Regenerate the bundled toy corpus of moving textured squares.

The corpus is a pure function of (seed, n_clips, n_frames, size), so the
checked-in PNGs under assets/toy_corpus can always be rebuilt bit-exactly.
"""

import argparse
from pathlib import Path

from vsrgan.toy import write_toy_corpus


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="assets/toy_corpus", help="output corpus root")
    parser.add_argument("--clips", type=int, default=4)
    parser.add_argument("--frames", type=int, default=6)
    parser.add_argument("--size", type=int, nargs=2, default=(48, 48), metavar=("H", "W"))
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    paths = write_toy_corpus(
        Path(args.out),
        n_clips=args.clips,
        n_frames=args.frames,
        size=tuple(args.size),
        seed=args.seed,
    )
    print(f"wrote {len(paths)} clips under {args.out}")
    for p in paths:
        print(f"  {p}")


if __name__ == "__main__":
    main()
