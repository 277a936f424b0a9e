#!/usr/bin/env python3
# Copyright 2026 The SPA Harness Authors.
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
"""Converts the digits bundled in the npm `mnist` package into IDX files.

The package ships 10,000 MNIST digits as src/digits/<k>.json with pixels
scaled to [0, 1] at three decimals. Pixels are mapped back to bytes with
round(255 * v), shuffled with a fixed seed and split into train/t10k files
that `spa --dataset mnist` reads from <out>/mnist/.

    npm pack mnist@1.1.0
    python3 tools/mnist_json_to_idx.py mnist-1.1.0.tgz /root/data --n-test 4000
"""

import argparse
import json
import pathlib
import random
import struct
import tarfile


def load_digits(source):
  source = pathlib.Path(source)
  digits = {}
  if source.is_file():
    with tarfile.open(source) as tar:
      for k in range(10):
        member = tar.extractfile(f"package/src/digits/{k}.json")
        digits[k] = json.load(member)["data"]
  else:
    for k in range(10):
      digits[k] = json.loads((source / f"{k}.json").read_text())["data"]
  samples = []
  for k, flat in digits.items():
    if len(flat) % 784:
      raise ValueError(f"digit {k}: {len(flat)} values is not a multiple of 784")
    for i in range(0, len(flat), 784):
      pixels = bytes(min(255, max(0, round(255 * v))) for v in flat[i:i + 784])
      samples.append((pixels, k))
  return samples


def write_idx(prefix, samples):
  with open(f"{prefix}-images-idx3-ubyte", "wb") as f:
    f.write(struct.pack(">IIII", 0x803, len(samples), 28, 28))
    for pixels, _ in samples:
      f.write(pixels)
  with open(f"{prefix}-labels-idx1-ubyte", "wb") as f:
    f.write(struct.pack(">II", 0x801, len(samples)))
    f.write(bytes(label for _, label in samples))


def main():
  parser = argparse.ArgumentParser(description=__doc__,
                                   formatter_class=argparse.RawDescriptionHelpFormatter)
  parser.add_argument("source", help="mnist-*.tgz from `npm pack mnist` or its src/digits dir")
  parser.add_argument("out", help="data root; files go to <out>/mnist/")
  parser.add_argument("--n-test", type=int, default=4000)
  parser.add_argument("--seed", type=int, default=0)
  args = parser.parse_args()

  samples = load_digits(args.source)
  random.Random(args.seed).shuffle(samples)
  if not 0 < args.n_test < len(samples):
    parser.error(f"--n-test must be in (0, {len(samples)})")
  out = pathlib.Path(args.out) / "mnist"
  out.mkdir(parents=True, exist_ok=True)
  write_idx(out / "train", samples[args.n_test:])
  write_idx(out / "t10k", samples[:args.n_test])
  print(f"wrote {len(samples) - args.n_test} train and {args.n_test} test digits to {out}")


if __name__ == "__main__":
  main()
