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

"""Independent reference rules used to freeze golden test values.

Written from the documented rules, not from the C++ sources: the Mersenne
Twister engine, the seeded stratified split, the hashed n-gram embedder, the
25 wide features and the Wide & Deep forward pass over a WDJM checkpoint.
"""

import json
import math
import struct

import numpy as np

MASK64 = (1 << 64) - 1


class MT19937_64:
    def __init__(self, seed):
        self.mt = [0] * 312
        self.mt[0] = seed & MASK64
        for i in range(1, 312):
            prev = self.mt[i - 1]
            self.mt[i] = (6364136223846793005 * (prev ^ (prev >> 62)) + i) & MASK64
        self.index = 312

    def _twist(self):
        upper, lower = 0xFFFFFFFF80000000, 0x7FFFFFFF
        for i in range(312):
            x = (self.mt[i] & upper) | (self.mt[(i + 1) % 312] & lower)
            xa = x >> 1
            if x & 1:
                xa ^= 0xB5026F5AA96619E9
            self.mt[i] = self.mt[(i + 156) % 312] ^ xa
        self.index = 0

    def next(self):
        if self.index >= 312:
            self._twist()
        y = self.mt[self.index]
        self.index += 1
        y ^= (y >> 29) & 0x5555555555555555
        y ^= (y << 17) & 0x71D67FFFEDA60000
        y ^= (y << 37) & 0xFFF7EEE000000000
        y ^= y >> 43
        return y & MASK64


def below(engine, n):
    if n <= 1:
        return 0
    limit = MASK64 - MASK64 % n
    while True:
        x = engine.next()
        if x < limit:
            return x % n


def shuffle(engine, items):
    for i in range(len(items), 1, -1):
        j = below(engine, i)
        items[i - 1], items[j] = items[j], items[i - 1]


def largest_remainder(total, weights):
    quotas = [w * total for w in weights]
    out = [math.floor(q) for q in quotas]
    order = sorted(range(len(weights)), key=lambda i: -(quotas[i] - math.floor(quotas[i])))
    k = 0
    while sum(out) < total:
        out[order[k % len(order)]] += 1
        k += 1
    return out


def stratified_split(labels, num_classes, ratios, seed):
    """Returns the split index (0 train, 1 val, 2 test) of every sample."""
    engine = MT19937_64(seed)
    members = [[i for i, y in enumerate(labels) if y == c] for c in range(num_classes)]
    for m in members:
        shuffle(engine, m)
    eligible = [c for c in range(num_classes) if len(members[c]) >= 3]
    target = largest_remainder(sum(len(members[c]) for c in eligible), ratios)
    alloc, leftover, cells, filled = {}, {}, [], [0, 0, 0]
    for c in eligible:
        n = len(members[c])
        alloc[c] = [math.floor(r * n) for r in ratios]
        for s in range(3):
            filled[s] += alloc[c][s]
            cells.append((ratios[s] * n - math.floor(ratios[s] * n), c, s))
        leftover[c] = n - sum(alloc[c])
    cells.sort(key=lambda cell: -cell[0])
    for _, c, s in cells:
        if leftover[c] > 0 and filled[s] < target[s]:
            alloc[c][s] += 1
            filled[s] += 1
            leftover[c] -= 1
    out = [0] * len(labels)
    for c in eligible:
        alloc[c][0] += leftover[c]
        pos = 0
        for s in range(3):
            for _ in range(alloc[c][s]):
                out[members[c][pos]] = s
                pos += 1
    return out


# ---------------------------------------------------------------------------
# Text.

def is_cjk(cp):
    return (0x4E00 <= cp <= 0x9FFF or 0x3400 <= cp <= 0x4DBF or 0x20000 <= cp <= 0x2EBEF
            or 0xF900 <= cp <= 0xFAFF or 0x3040 <= cp <= 0x30FF or 0xAC00 <= cp <= 0xD7AF)


def tokenize(text):
    """ASCII letters and digits form words (lowercased), each CJK character is
    a token, and everything else used by the fixtures separates tokens."""
    tokens, cur = [], ""
    for ch in text:
        cp = ord(ch)
        if cp < 0x80 and ch.isalnum():
            cur += ch.lower()
        elif is_cjk(cp):
            if cur:
                tokens.append(cur)
            tokens.append(ch)
            cur = ""
        else:
            if cur:
                tokens.append(cur)
            cur = ""
    if cur:
        tokens.append(cur)
    return tokens


def fnv1a64(salt, data):
    h = 0xCBF29CE484222325
    for b in salt.to_bytes(8, "little") + data:
        h ^= b
        h = (h * 0x100000001B3) & MASK64
    return h


def embed(text, dim, ngrams=(1, 2, 3), salt=0x5EED):
    v = [0.0] * dim
    for n in ngrams:
        for i in range(len(text) - n + 1):
            h = fnv1a64(salt, text[i:i + n].encode("utf-8"))
            v[h % dim] += -1.0 if h >> 63 else 1.0
    norm = math.sqrt(sum(x * x for x in v))
    return [x / norm for x in v] if norm > 0 else v


# ---------------------------------------------------------------------------
# Wide features.

AFFIRMATION = ["yes", "yeah", "ok", "okay", "got it", "i see", "right",
               "会了", "对", "嗯", "懂了", "明白了", "好的"]
PRAISE = ["good", "great", "excellent", "well done", "very good", "perfect",
          "很好", "真棒", "不错", "太棒了", "厉害", "非常好"]
HESITATION = ["um", "uh", "hmm", "er", "呃", "额", "那个", "不知道", "不确定"]
BUCKETS = [0, 1, 2, 3, 5, 9, 17, 33, 65]


def count_phrase(tokens, phrase):
    p = tokenize(phrase)
    return sum(tokens[i:i + len(p)] == p for i in range(len(tokens) - len(p) + 1))


def lexicon_hits(tokens, lexicon):
    return sum(count_phrase(tokens, e) for e in lexicon)


def bucket(count):
    return max(i for i, lb in enumerate(BUCKETS) if count >= lb)


def jaccard(a, b):
    sa, sb = set(a), set(b)
    if not sa and not sb:
        return 0.0
    return len(sa & sb) / len(sa | sb)


def wide_features(utterances, silence_gap=5.0, short_tokens=3):
    """utterances: list of (speaker, text, start, end). Returns (x_c, counts)."""
    u = sorted(utterances, key=lambda r: (r[2], r[3]))
    toks = [tokenize(r[1]) for r in u]
    teacher = [i for i, r in enumerate(u) if r[0] == "teacher"]
    student = [i for i, r in enumerate(u) if r[0] == "student"]
    duration = max(r[3] for r in u) - u[0][2]
    t_tokens = [t for i in teacher for t in toks[i]]
    s_tokens = [t for i in student for t in toks[i]]
    t_time = sum(u[i][3] - u[i][2] for i in teacher)
    s_time = sum(u[i][3] - u[i][2] for i in student)
    is_q = [r[1].rstrip(" \t\r\n　").endswith(("?", "？")) for r in u]

    switches = sum(u[i][0] != u[i - 1][0] for i in range(1, len(u)))
    latencies = [max(0.0, u[i][2] - u[i - 1][3]) for i in range(1, len(u))
                 if u[i - 1][0] == "teacher" and u[i][0] == "student"]
    # Silence is time not covered by any earlier utterance.
    gaps, covered = [], u[0][3]
    for r in u[1:]:
        if r[2] > covered:
            gaps.append(r[2] - covered)
        covered = max(covered, r[3])

    div = lambda a, b: a / b if b > 0 else 0.0
    affirm = sum(lexicon_hits(toks[i], AFFIRMATION) > 0 for i in student)
    x_c = [
        duration,
        jaccard(t_tokens, s_tokens) if student else 0.0,
        min(1.0, div(t_time, duration)),
        min(1.0, div(s_time, duration)),
        div(len(t_tokens), len(teacher)),
        div(len(s_tokens), len(student)),
        (len(s_tokens) + 1) / (len(t_tokens) + 1),
        div(sum(latencies), len(latencies)),
        max(gaps, default=0.0),
        div(switches, duration / 60.0),
        div(len(set(s_tokens)), len(s_tokens)),
        div(sum(is_q[i] for i in teacher), len(teacher)),
        div(affirm, len(student)),
    ]
    counts = [
        len(t_tokens), len(s_tokens), len(teacher), len(student),
        sum(len(toks[i]) < short_tokens for i in student),
        sum(is_q[i] for i in teacher), sum(is_q[i] for i in student),
        switches, affirm,
        sum(lexicon_hits(toks[i], PRAISE) > 0 for i in teacher),
        sum(lexicon_hits(toks[i], HESITATION) for i in student),
        sum(g > silence_gap for g in gaps),
    ]
    return x_c, counts


def one_hot(counts):
    v = [0] * (len(BUCKETS) * len(counts))
    for k, c in enumerate(counts):
        v[k * len(BUCKETS) + bucket(c)] = 1
    return v


# ---------------------------------------------------------------------------
# WDJM checkpoints and the forward pass.

def read_wdjm(path):
    data = open(path, "rb").read()
    assert data[:4] == b"WDJM"
    (version,) = struct.unpack_from("<H", data, 4)
    assert version == 1
    (n,) = struct.unpack_from("<Q", data, 6)
    header = json.loads(data[14:14 + n])
    pos = 14 + n
    (blobs,) = struct.unpack_from("<I", data, pos)
    pos += 4
    arrays = []
    for _ in range(blobs):
        (count,) = struct.unpack_from("<Q", data, pos)
        pos += 8
        arrays.append(np.frombuffer(data, "<f8", count, pos).copy())
        pos += 8 * count
    assert pos == len(data)
    params = {}
    for spec, arr in zip(header["params"], arrays[2:]):
        params[spec["name"]] = arr.reshape(spec["shape"])
    return header, arrays[0], arrays[1], params


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def lstm_scan(seq, wx, wh, b):
    h = np.zeros(wh.shape[0])
    c = np.zeros(wh.shape[0])
    out = []
    for x in seq:
        z = x @ wx + h @ wh + b
        i, f, g, o = np.split(z, 4)
        c = sigmoid(f) * c + sigmoid(i) * np.tanh(g)
        h = sigmoid(o) * np.tanh(c)
        out.append(h)
    return np.array(out)


def forward(path, utterances):
    """Class probabilities of a WDJM model for one sample."""
    header, mean, std, p = read_wdjm(path)
    cfg = header["config"]
    mode = cfg["mode"]
    logits = np.zeros(cfg["num_classes"])
    relu = lambda v: np.maximum(v, 0.0)
    if mode in ("wide", "wd"):
        x_c, counts = wide_features(utterances)
        z = np.array([(x - m) / s if s > 0 else 0.0 for x, m, s in zip(x_c, mean, std)])
        hot = np.array(one_hot(counts), dtype=bool)
        x = np.concatenate([z, p["projection"][hot].sum(axis=0)])
        hidden = relu(x @ p["wide.0.w"] + p["wide.0.b"])
        logits += hidden @ p["wide.1.w"] + p["wide.1.b"]
    if mode in ("deep", "wd"):
        emb = cfg["embedder"]
        u = sorted(utterances, key=lambda r: (r[2], r[3]))
        seq = np.array([embed(r[1], emb["dim"], emb["ngram_sizes"], emb["salt"])
                        + [float(r[0] == "teacher"), float(r[0] == "student")] for r in u])
        fwd = lstm_scan(seq, p["lstm_fwd.wx"], p["lstm_fwd.wh"], p["lstm_fwd.b"])
        bwd = lstm_scan(seq[::-1], p["lstm_bwd.wx"], p["lstm_bwd.wh"], p["lstm_bwd.b"])[::-1]
        hs = np.concatenate([fwd, bwd], axis=1)
        q, k, v = hs @ p["attention.wq"], hs @ p["attention.wk"], hs @ p["attention.wv"]
        s = q @ k.T / math.sqrt(q.shape[1])
        a = np.exp(s - s.max(axis=1, keepdims=True))
        a /= a.sum(axis=1, keepdims=True)
        x = (a @ v).mean(axis=0)
        for i in range(3):
            x = relu(x @ p[f"deep.{i}.w"] + p[f"deep.{i}.b"])
        logits += x @ p["deep.3.w"] + p["deep.3.b"]
    e = np.exp(logits - logits.max())
    return (e / e.sum()).tolist()
