#!/usr/bin/env python3
# Copyright 2026 The tokenshap Authors.
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

"""Regenerates the bundled planted-keyword corpus under data/synthetic/.

Three classes, five planted keywords per class, fifty zero-weight fillers and a
few gazetteer entities. The output is deterministic for a given seed.
"""

import argparse
import json
import pathlib
import random

CLASSES = ["AS1", "AS2", "AS3"]

PLANTED = {
    "AS1": ["furious", "annoyed", "outraged", "bitter", "hostile"],
    "AS2": ["delighted", "cheerful", "grateful", "thrilled", "relieved"],
    "AS3": ["anxious", "nervous", "worried", "uneasy", "scared"],
}

FILLERS = [
    "the", "a", "to", "and", "of", "it", "is", "was", "we", "they",
    "then", "with", "about", "after", "before", "this", "that", "some", "very", "just",
    "went", "saw", "told", "said", "came", "back", "home", "today", "yesterday", "again",
    "morning", "evening", "meeting", "lunch", "train", "office", "weather", "report", "phone", "call",
    "friend", "sister", "brother", "team", "school", "window", "coffee", "street", "plan", "week",
]

ENTITIES = [
    ("john", "NAME"), ("maria", "NAME"), ("new york", "LOCATION"), ("paris", "LOCATION"),
    ("google", "RESOURCE"), ("netflix", "ENTERTAINMENT"), ("iphone", "DEVICE"),
]


def planted_weights(rng):
    weights = {c: {} for c in CLASSES}
    for owner, words in PLANTED.items():
        for w in words:
            for c in CLASSES:
                if c == owner:
                    weights[c][w] = round(rng.uniform(1.0, 2.0), 3)
                else:
                    weights[c][w] = -round(rng.uniform(0.1, 0.4), 3)
    return weights


def utterance(rng, gold):
    words = [rng.choice(FILLERS) for _ in range(rng.randint(4, 10))]
    for w in rng.sample(PLANTED[gold], rng.randint(1, 2)):
        words.insert(rng.randint(0, len(words)), w)
    if rng.random() < 0.3:
        other = rng.choice([c for c in CLASSES if c != gold])
        words.insert(rng.randint(0, len(words)), rng.choice(PLANTED[other]))
    if rng.random() < 0.4:
        words.insert(rng.randint(0, len(words)), rng.choice(ENTITIES)[0])
    text = " ".join(words)
    return text[0].upper() + text[1:] + rng.choice([".", "!", "?"])


def score(weights, text):
    tokens = text.lower().rstrip(".!?").split()
    return [sum(weights[c].get(t, 0.0) for t in tokens) for c in CLASSES]


def vectors(rng, dim=16):
    axes = {c: [rng.gauss(0, 1) for _ in range(dim)] for c in CLASSES}
    rows = {}
    for c in CLASSES:
        rows["anchor_" + c.lower()] = axes[c]
        for w in PLANTED[c]:
            rows[w] = [a + rng.gauss(0, 0.3) for a in axes[c]]
    for w in FILLERS:
        rows[w] = [rng.gauss(0, 1) for _ in range(dim)]
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data/synthetic")
    parser.add_argument("--seed", type=int, default=7)
    parser.add_argument("--count", type=int, default=300)
    args = parser.parse_args()
    rng = random.Random(args.seed)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    weights = planted_weights(rng)
    model = {
        "kind": "keyword-score",
        "name": "planted-keywords",
        "dimension": "affective",
        "classes": CLASSES,
        "base": [0.0, 0.0, 0.0],
        "weights": weights,
    }
    (out / "model.json").write_text(json.dumps(model, indent=2) + "\n")

    with open(out / "corpus.jsonl", "w") as f:
        for i in range(args.count):
            gold = CLASSES[i % len(CLASSES)]
            text = utterance(rng, gold)
            s = score(weights, text)
            label = CLASSES[max(range(len(CLASSES)), key=lambda k: s[k])]
            row = {"id": "u%03d" % i, "text": text, "dimension": "affective", "gold_label": label}
            f.write(json.dumps(row) + "\n")

    with open(out / "gazetteer.csv", "w") as f:
        f.write("phrase,category\n")
        for phrase, cat in ENTITIES:
            f.write("%s,%s\n" % (phrase, cat))

    with open(out / "vectors.txt", "w") as f:
        rows = vectors(rng)
        f.write("%d %d\n" % (len(rows), len(next(iter(rows.values())))))
        for w, v in rows.items():
            f.write(w + " " + " ".join("%.6f" % x for x in v) + "\n")

    (out / "task.txt").write_text(
        "Read each message and decide whether the writer sounds angry, happy or "
        "worried. A worried or nervous writer belongs to AS3; an angry or annoyed "
        "writer belongs to AS1; a happy writer belongs to AS2.\n")

    config = {
        "corpus": "corpus.jsonl",
        "gazetteer": "gazetteer.csv",
        "dimensions": [{"name": "affective", "classes": CLASSES}],
        "dimension": "affective",
        "model": "builtin:model.json",
        "method": "partition",
        "seed": 42,
        "out_dir": "out",
        "top_k": 20,
        "anchors": {c: ["anchor_" + c.lower()] for c in CLASSES},
        "embeddings": "vectors.txt",
        "simcheck_threshold": 0.3,
        "task_document": "task.txt",
    }
    (out / "config.json").write_text(json.dumps(config, indent=2) + "\n")

    manifest = {"planted": PLANTED, "fillers": FILLERS}
    (out / "planted.json").write_text(json.dumps(manifest, indent=2) + "\n")


if __name__ == "__main__":
    main()
