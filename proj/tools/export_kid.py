#!/usr/bin/env python3
"""Convert the Keras IMDB dataset into the input layout of `bowtie prepare kid`.

Writes <out>/imdb_word_index.json (token -> rank) and <out>/imdb_sequences.tsv
with one review per line: split<TAB>label<TAB>space-separated values, where
values follow Keras `load_data()` defaults (start symbol 1, rank + 3).

Sources:
  --npz imdb.npz --word-index imdb_word_index.json   local copies of the Keras files
  --keras                                            fetch through tf.keras (needs network)
"""

import argparse
import json
import shutil
import sys
from pathlib import Path

import numpy as np

START = 1
INDEX_FROM = 3


def load_npz(path):
    with np.load(path, allow_pickle=True) as f:
        return (f["x_train"], f["y_train"]), (f["x_test"], f["y_test"])


def load_keras():
    from tensorflow import keras

    npz = keras.utils.get_file(
        "imdb.npz", origin="https://storage.googleapis.com/tensorflow/tf-keras-datasets/imdb.npz"
    )
    index = keras.utils.get_file(
        "imdb_word_index.json",
        origin="https://storage.googleapis.com/tensorflow/tf-keras-datasets/imdb_word_index.json",
    )
    return load_npz(npz), index


def write_split(out, name, xs, ys):
    for seq, label in zip(xs, ys):
        values = [START] + [int(w) + INDEX_FROM for w in seq]
        out.write(f"{name}\t{int(label)}\t{' '.join(map(str, values))}\n")


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--npz", type=Path)
    parser.add_argument("--word-index", type=Path)
    parser.add_argument("--keras", action="store_true")
    parser.add_argument("--out", type=Path, required=True)
    args = parser.parse_args(argv)

    if args.keras:
        (train, test), index = load_keras()
        index = Path(index)
    elif args.npz and args.word_index:
        train, test = load_npz(args.npz)
        index = args.word_index
    else:
        parser.error("give --keras or both --npz and --word-index")

    args.out.mkdir(parents=True, exist_ok=True)
    with open(index, encoding="utf-8") as f:
        json.load(f)  # fail early on a malformed index
    shutil.copyfile(index, args.out / "imdb_word_index.json")
    with open(args.out / "imdb_sequences.tsv", "w", encoding="utf-8") as out:
        write_split(out, "train", *train)
        write_split(out, "test", *test)
    print(f"train={len(train[0])} test={len(test[0])} out={args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
