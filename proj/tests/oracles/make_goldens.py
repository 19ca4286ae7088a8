# Copyright 2026 The wdjudge Authors.
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

"""Regenerates tests/data/goldens.json from wdj_ref.

    python3 tests/oracles/make_goldens.py

The output is checked in; tests never run Python.
"""

import json
import os

import wdj_ref

HERE = os.path.dirname(os.path.abspath(__file__))
DATA = os.path.join(HERE, "..", "data")


def main():
    goldens = {}

    goldens["mt19937_64_seed_5489_first"] = [
        str(x) for x in (lambda e: [e.next() for _ in range(3)])(wdj_ref.MT19937_64(5489))]

    # 100 samples alternating 0/1, ratios 70/15/15, seed 7.
    labels = [i % 2 for i in range(100)]
    goldens["split_seed7"] = {
        "labels": labels,
        "assignment": wdj_ref.stratified_split(labels, 2, [0.7, 0.15, 0.15], 7),
    }

    goldens["embed"] = [
        {"text": t, "dim": d, "vector": wdj_ref.embed(t, d)}
        for t, d in [("abc", 8), ("", 8), ("I got it", 16), ("这道题会了", 16)]
    ]

    with open(os.path.join(DATA, "fixture_sample.jsonl"), encoding="utf-8") as f:
        sample = json.loads(f.readline())
    utts = [(u["speaker"], u["text"], u["start_s"], u["end_s"]) for u in sample["utterances"]]
    x_c, counts = wdj_ref.wide_features(utts)
    goldens["fixture_features"] = {"continuous": x_c, "counts": counts,
                                   "hot": [i for i, v in enumerate(wdj_ref.one_hot(counts)) if v]}
    goldens["fixture_probs"] = wdj_ref.forward(os.path.join(DATA, "fixture_model.wdjm"), utts)

    with open(os.path.join(DATA, "goldens.json"), "w", encoding="utf-8") as f:
        json.dump(goldens, f, indent=1, ensure_ascii=False)
        f.write("\n")


if __name__ == "__main__":
    main()
