#!/usr/bin/env python3
"""Regenerates the fixture files in this directory and their expected values.

The expected values are computed here, independently of the Rust code:
    python3 make_fixtures.py
"""

import json
import math
import random
import re
from collections import Counter
from fractions import Fraction
from pathlib import Path
from urllib.parse import urlparse

HERE = Path(__file__).resolve().parent

CQA = ["answers.wikia.com", "quora.com", "answers.yahoo.com"]
QWORDS = set(
    "what where who whom whose when why which how is are was were can could did do does will would should list".split()
)
SUFFIXES = [" - quora", " - yahoo answers", " - wikianswers"]


def tokenize(text):
    return re.sub(r"([?!.,'\"()])", r" \1 ", text.lower()).split()


def cqa_domain(url):
    try:
        host = (urlparse(url).hostname or "").rstrip(".").lower()
    except ValueError:
        return None
    for d in CQA:
        if host == d or host.endswith("." + d):
            return d
    return None


def question_of(rec):
    q = (rec.get("clicked_question") or "").strip()
    if q:
        return q
    title = (rec.get("clicked_title") or "").strip()
    if not title:
        return None
    for s in SUFFIXES:
        if title.lower().endswith(s):
            title = title[: -len(s)].strip()
            break
    return title or None


def classify(rec):
    url = rec.get("clicked_url")
    if not url or cqa_domain(url) is None:
        return "NOT_CQA_DOMAIN", None
    q = question_of(rec)
    if q is None:
        return "EMPTY_FIELD", None
    qt, st = tokenize(rec["query"]), tokenize(q)
    if not qt or not st:
        return "EMPTY_FIELD", None
    if len(qt) > 9:
        return "QUERY_TOO_LONG", None
    if st[0] not in QWORDS:
        return "NOT_A_QUESTION", None
    if st[-1] != "?":
        st = st + ["?"]
    return "ACCEPT", (qt, st)


def mining_fixture():
    rng = random.Random(20160801)
    good = [
        ("fever symptoms", "What are the symptoms of fever?"),
        ("japan capital", "What is the capital of japan?"),
        ("c# to c++ converter", "How to convert C# to C++?"),
        ("first woman rapper", "Who was the first woman rapper?"),
        ("diabetes treatment", "How do you treat diabetes?"),
        ("kenya population", "What is the population of kenya"),
        ("dog diet", "What does a dog eat?"),
        ("is rice healthy", "Is rice healthy?"),
        ("oslo time zone", "What time zone is Oslo in?"),
        ("grams in a pound", "How many grams are in a pound?"),
        ("telephone inventor", "Who invented the telephone?"),
        ("cat lifespan", "How long does a cat live?"),
        ("best time to visit peru", "When is the best time to visit Peru?"),
        ("nurse salary texas", "What is the salary of a nurse in Texas?"),
        ("can dogs eat grapes", "Can dogs eat grapes?"),
    ]
    hosts = ["https://www.quora.com/", "https://in.answers.yahoo.com/question/", "http://answers.wikia.com/wiki/"]
    lines = []

    def click(query, host, page, question=None, title=None, extra_shown=()):
        url = host + page
        rec = {"query": query, "shown_urls": [*extra_shown, url], "clicked_url": url}
        if question is not None:
            rec["clicked_question"] = question
        if title is not None:
            rec["clicked_title"] = title
        return json.dumps(rec)

    for i in range(100):
        kind = rng.choice(
            ["good"] * 9 + ["title"] * 3 + ["dup"] * 3 + ["other_site", "no_click", "long", "statement",
                                                          "no_question", "malformed", "bad_click"]
        )
        q, s = rng.choice(good)
        host = rng.choice(hosts)
        if kind in ("good", "dup"):
            line = click(q, host, f"p{i}", question=s, extra_shown=["https://example.com/x"])
        elif kind == "title":
            suffix = rng.choice([" - Quora", " - Yahoo Answers", " - WikiAnswers"])
            line = click(q, host, f"t{i}", title=s + suffix)
        elif kind == "other_site":
            line = click(q, "https://www.example.org/", f"o{i}", question=s)
        elif kind == "no_click":
            line = json.dumps({"query": q, "shown_urls": ["https://www.quora.com/a"], "clicked_url": None})
        elif kind == "long":
            line = click("how to get from the airport to the city centre cheaply", host, f"l{i}",
                         question="How do I get from the airport to the city centre cheaply?")
        elif kind == "statement":
            line = click(q, host, f"s{i}", question="The answer to " + q)
        elif kind == "no_question":
            line = click(q, host, f"n{i}")
        elif kind == "malformed":
            line = rng.choice(['{"query": "broken"', "not json", '{"query":"x","shown_urls":[]}extra'])
        else:
            line = json.dumps({"query": q, "shown_urls": [], "clicked_url": host + "zzz"})
        lines.append(line)

    (HERE / "mining_100.jsonl").write_text("\n".join(lines) + "\n")

    report = Counter()
    seen, pairs = set(), []
    for line in lines:
        report["records_read"] += 1
        try:
            rec = json.loads(line)
            if not isinstance(rec, dict) or not rec.get("query", "").strip():
                raise ValueError
            url = rec.get("clicked_url")
            if url and url not in rec.get("shown_urls", []):
                raise ValueError
        except ValueError:
            report["malformed_skipped"] += 1
            continue
        reason, pair = classify(rec)
        if reason != "ACCEPT":
            report[reason] += 1
            continue
        key = (tuple(pair[0]), tuple(pair[1]))
        if key in seen:
            report["duplicates_dropped"] += 1
        else:
            seen.add(key)
            pairs.append(pair)

    n = len(pairs)
    lengths = Counter(len(q) for q, _ in pairs)
    cdf, acc = {}, 0
    for length in sorted(lengths):
        acc += lengths[length]
        cdf[str(length)] = [acc, n]
    types = Counter(s[0] for _, s in pairs)
    expected = {
        "records_read": report["records_read"],
        "malformed_skipped": report["malformed_skipped"],
        "pairs_emitted": n,
        "duplicates_dropped": report["duplicates_dropped"],
        "rejections": {r: report[r] for r in ["NOT_CQA_DOMAIN", "QUERY_TOO_LONG", "NOT_A_QUESTION", "EMPTY_FIELD"]},
        "tsv": [" ".join(q) + "\t" + " ".join(s) for q, s in pairs],
        "stats": {
            "query_length_cdf": cdf,
            "question_type_counts": dict(sorted(types.items())),
            "query_token_total": sum(len(q) for q, _ in pairs),
            "question_token_total": sum(len(s) for _, s in pairs),
        },
    }
    (HERE / "mining_100.expected.json").write_text(json.dumps(expected, indent=1) + "\n")


def judgments_fixture():
    rng = random.Random(86)
    rows = []
    plan = [("NMT", 100, 86), ("SMT", 20, 13)]
    for system, count, yes in plan:
        flags = [True] * yes + [False] * (count - yes)
        rng.shuffle(flags)
        for k, g in enumerate(flags):
            score = rng.choices([1, 2, 3, 4, 5], weights=[1, 2, 3, 4, 5] if system == "NMT" else [3, 3, 2, 1, 1])[0]
            rows.append({
                "pair_id": f"{system.lower()}-{k:03d}",
                "judge_id": f"judge{1 + k % 3}",
                "grammatical": g,
                "intent_score": score,
                "system_label": system,
                "timestamp": f"2026-03-0{1 + k % 9}T10:{k % 60:02d}:00Z",
            })
    rng.shuffle(rows)
    (HERE / "judgments_120.jsonl").write_text("".join(json.dumps(r) + "\n" for r in rows))

    expected = {}
    for system, _, _ in plan:
        mine = [r for r in rows if r["system_label"] == system]
        hist = Counter(r["intent_score"] for r in mine)
        yes = sum(r["grammatical"] for r in mine)
        expected[system] = {
            "judgments": len(mine),
            "grammatical_yes": yes,
            "grammatical_fraction": yes / len(mine),
            "intent_histogram": {str(s): hist[s] for s in range(1, 6)},
            "high_intent_fraction": (hist[4] + hist[5]) / len(mine),
        }
    (HERE / "judgments_120.expected.json").write_text(json.dumps(expected, indent=1) + "\n")


def bleu(hyps, refs):
    logs, c, r = [], 0, 0
    for n in range(1, 5):
        match = total = 0
        for h, ref in zip(hyps, refs):
            hc = Counter(tuple(h[i:i + n]) for i in range(len(h) - n + 1))
            rc = Counter(tuple(ref[i:i + n]) for i in range(len(ref) - n + 1))
            match += sum(min(k, rc[g]) for g, k in hc.items())
            total += sum(hc.values())
        if match == 0:
            return 0.0
        logs.append(math.log(Fraction(match, total)))
    c = sum(map(len, hyps))
    r = sum(map(len, refs))
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return 100 * bp * math.exp(sum(logs) / 4)


if __name__ == "__main__":
    mining_fixture()
    judgments_fixture()
    ref = "what is the capital of japan ?".split()
    print("bleu(missing '?') = %.9f" % bleu([ref[:-1]], [ref]))
    print("bleu(the x7 | the cat is on the mat) = %.9f" % bleu([["the"] * 7], ["the cat is on the mat".split()]))
