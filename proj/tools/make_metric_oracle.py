#!/usr/bin/env python3
"""Freeze reference metric values for random token-sequence pairs.

BLEU comes from sacrebleu (sentence BLEU, exp smoothing, effective order,
no tokenization); ROUGE-L and token F1 are computed here independently.
"""

import argparse
import json
import random
from collections import Counter

import sacrebleu


def lcs(a, b):
    dp = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(len(a) - 1, -1, -1):
        for j in range(len(b) - 1, -1, -1):
            dp[i][j] = dp[i + 1][j + 1] + 1 if a[i] == b[j] else max(dp[i + 1][j], dp[i][j + 1])
    return dp[0][0]


def f1(overlap, ref_len, hyp_len):
    if overlap == 0:
        return 0.0
    p, r = overlap / hyp_len, overlap / ref_len
    return 2 * p * r / (p + r)


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="tests/fixtures/metric_oracle.json")
    ap.add_argument("--pairs", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=20240917)
    args = ap.parse_args()

    rng = random.Random(args.seed)
    vocab = [f"w{i}" for i in range(50)]
    rows = []
    for _ in range(args.pairs):
        ref = [rng.choice(vocab) for _ in range(rng.randint(1, 40))]
        # Half the hypotheses are edits of the reference so that higher-order matches occur.
        if rng.random() < 0.5:
            hyp = [t if rng.random() < 0.7 else rng.choice(vocab) for t in ref]
            hyp = hyp[: rng.randint(1, len(hyp))] if rng.random() < 0.3 else hyp
        else:
            hyp = [rng.choice(vocab) for _ in range(rng.randint(1, 40))]
        r, h = " ".join(ref), " ".join(hyp)
        bleu = sacrebleu.sentence_bleu(h, [r], smooth_method="exp", tokenize="none",
                                       use_effective_order=True).score
        rows.append({
            "reference": r,
            "hypothesis": h,
            "bleu": bleu,
            "rouge_l": f1(lcs(ref, hyp), len(ref), len(hyp)),
            "token_f1": f1(sum((Counter(ref) & Counter(hyp)).values()), len(ref), len(hyp)),
        })
    with open(args.out, "w") as f:
        json.dump({"source": f"sacrebleu {sacrebleu.__version__}", "pairs": rows}, f, indent=0)
        f.write("\n")


if __name__ == "__main__":
    main()
