#!/usr/bin/env python3
"""Regenerates the v1 golden fixtures.

Expected values are computed here, independently of the Rust code:
similarity scores come from difflib.SequenceMatcher (autojunk disabled),
edit counts from a plain dynamic-programming table with its own backtrace.

Usage: python3 generate_v1.py  (writes into ./v1/)
"""

import json
import os
import unicodedata
from difflib import SequenceMatcher

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "v1")

CONFIG = {"threshold": 0.5, "max_ngram": 3, "normalization": "standard"}

LUNGS_REF = "lungs clear but dim scattered rhonchi nonproductive cough."
LUNGS_ENTITIES = [("lungs clear", "ANATOMY"), ("rhonchi", "MEDICAL_CONDITION"), ("cough", "MEDICAL_CONDITION")]
LUNGS_ROWS = [
    ("lungs-xlsr-53-en", "Xlsr-53-en", "longscler bout deim scattered rong i non-productive hol"),
    ("lungs-whisper-medium", "Whisper-medium", "non-scler, but dim-scattered ronchi, non-productive hub."),
    ("lungs-gcp-medical", "GCP [Medical]", "lungs , clear . budan scattered rhonchi . nonproductive"),
    ("lungs-aws-medical", "AWS [Medical] (Primary Care)", "last clear but deems scattered rhonchi nonproductive."),
    ("lungs-whisper-medium-clinical", "Whisper-medium-clinical", "lungs clear but dim scattered rhonchi nonproductive cough."),
]

DIGOXIN_REF = "unlike quinidine, disopyramide does not increase the plasma concentration of digoxin in patients"
DIGOXIN_HYP = "anlike quinidan, disopiramid dos not incruse the plasma concentration of dikod sin in pesion"
DIGOXIN_ENTITIES = [("quinidine", "MEDICATION"), ("disopyramide", "MEDICATION"), ("digoxin", "MEDICATION")]

KETAMINE_REF = ("except for ketamine, the following agents have no analgesic properties "
               "and do not cause paralysis or muscle relaxation")
KETAMINE_HYP = ("except for ketami, befullin agents have no anagesic propatis "
               "and do not cose paralysis o mozul relaxition")
KETAMINE_ENTITIES = [
    ("ketamine", "MEDICATION"),
    ("analgesic properties", "TEST_TREATMENT_PROCEDURE"),
    ("paralysis", "MEDICAL_CONDITION"),
    ("muscle relaxation", "MEDICAL_CONDITION"),
]

SHORT = {
    "MEDICATION": "MED",
    "MEDICAL_CONDITION": "COND",
    "ANATOMY": "ANA",
    "TEST_TREATMENT_PROCEDURE": "TTP",
    "PROTECTED_HEALTH_INFORMATION": "PHI",
}


def is_punct(c):
    return unicodedata.category(c).startswith("P")


def tokens(text):
    out = []
    for chunk in text.split():
        low = chunk.lower()
        keep = []
        for k, c in enumerate(low):
            if not is_punct(c):
                keep.append(True)
            elif c in "-'." and 0 < k < len(low) - 1 and low[k - 1].isalnum() and low[k + 1].isalnum():
                keep.append(True)
            else:
                keep.append(False)
        cur = ""
        for c, kept in zip(low, keep):
            if kept:
                cur += c
            elif cur:
                out.append(cur)
                cur = ""
        if cur:
            out.append(cur)
    return out


def normalize(text):
    return " ".join(tokens(text))


def matched(a, b):
    return sum(m.size for m in SequenceMatcher(None, a, b, autojunk=False).get_matching_blocks())


def align(entities, hyp):
    toks = tokens(hyp)
    cands = []
    for s in range(len(toks)):
        for n in range(1, CONFIG["max_ngram"] + 1):
            if s + n <= len(toks):
                cands.append((s, n, " ".join(toks[s:s + n])))
    out = []
    for text, _ in entities:
        ent = normalize(text)
        best = None
        for s, n, cand in cands:
            m, t = matched(ent, cand), len(ent) + len(cand)
            if 2 * m < CONFIG["threshold"] * t:
                continue
            key = (-(2 * m) / t, n, s)
            if best is None or key < best[0]:
                best = (key, cand, m, t, s, n)
        if best is None:
            out.append({"entity": text, "candidate": None, "matched": 0, "total": 1, "exact": False})
        else:
            _, cand, m, t, s, n = best
            out.append({
                "entity": text,
                "candidate": cand,
                "start_token": s,
                "length_tokens": n,
                "matched": m,
                "total": t,
                "exact": cand == ent,
            })
    return out


def edit_counts(ref, hyp):
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            d[i][j] = min(d[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]), d[i - 1][j] + 1, d[i][j - 1] + 1)
    s = ins = dele = hits = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and d[i - 1][j - 1] == d[i][j]:
            hits += 1; i -= 1; j -= 1
        elif i > 0 and j > 0 and ref[i - 1] != hyp[j - 1] and d[i - 1][j - 1] + 1 == d[i][j]:
            s += 1; i -= 1; j -= 1
        elif i > 0 and d[i - 1][j] + 1 == d[i][j]:
            dele += 1; i -= 1
        else:
            ins += 1; j -= 1
    assert s + ins + dele == d[n][m]
    return {"substitutions": s, "insertions": ins, "deletions": dele, "hits": hits, "ref_len": n}


def sample(sid, ref, hyp, entities, model, provenance):
    spans = []
    cursor = 0
    for text, label in entities:
        b = ref.index(text, cursor)
        cursor = b + len(text)
        spans.append({"text": text, "category": label, "begin": b, "end": b + len(text)})
    aligned = align(entities, hyp)
    gt = " ".join(normalize(t) for t, _ in entities)
    rec = " ".join(a["candidate"] for a in aligned if a["candidate"])
    recall = {}
    for a, (_, label) in zip(aligned, entities):
        r = recall.setdefault(SHORT[label], {"recalled": 0, "total": 0})
        r["total"] += 1
        r["recalled"] += int(a["exact"])
    metrics = {
        "wer": edit_counts(tokens(ref), tokens(hyp)),
        "mwer": edit_counts(gt.split(), rec.split()),
        "mcer": edit_counts(list(gt), list(rec)),
        "recall": recall,
    }
    manifest = {"id": sid, "reference": ref, "hypothesis": hyp, "domain": "clinical"}
    if model:
        manifest["model"] = model
    return manifest, {"id": sid, "entities": spans}, {
        "id": sid,
        "provenance": provenance,
        "alignments": aligned,
        "metrics": metrics,
    }


def main():
    rows = [
        sample("digoxin-interaction", DIGOXIN_REF, DIGOXIN_HYP, DIGOXIN_ENTITIES, "Wavlm-libri-clean-100h-base",
               {"text": "worked_example", "alignments": "worked_example", "scores": "derived", "metrics": "derived"}),
        sample("ketamine-analgesia", KETAMINE_REF, KETAMINE_HYP, KETAMINE_ENTITIES, "Wavlm-libri-clean-100h-base",
               {"text": "worked_example", "alignments": "worked_example", "categories": "derived",
                "scores": "derived", "metrics": "derived"}),
    ]
    for sid, model, hyp in LUNGS_ROWS:
        rows.append(sample(sid, LUNGS_REF, hyp, LUNGS_ENTITIES, model,
                           {"text": "worked_example", "categories": "derived", "scores": "derived",
                            "metrics": "derived"}))
    rows.append(sample("empty-hypothesis", DIGOXIN_REF, "", DIGOXIN_ENTITIES, None,
                       {"text": "worked_example", "metrics": "trivial"}))

    os.makedirs(OUT, exist_ok=True)
    with open(os.path.join(OUT, "manifest.jsonl"), "w") as f:
        for m, _, _ in rows:
            f.write(json.dumps(m, ensure_ascii=False) + "\n")
    with open(os.path.join(OUT, "annotations.jsonl"), "w") as f:
        for _, a, _ in rows:
            f.write(json.dumps(a, ensure_ascii=False) + "\n")
    with open(os.path.join(OUT, "expected.json"), "w") as f:
        json.dump({"version": 1, "config": CONFIG, "samples": [e for _, _, e in rows]}, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
