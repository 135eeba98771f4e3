#!/usr/bin/env python3
# SPDX-License-Identifier: MIT OR Apache-2.0
"""Convert a RAMS 1.0 jsonlines file to the attnprobe corpus format.

Usage: rams_to_corpus.py INPUT.jsonlines OUTPUT.jsonl
"""
import argparse
import json
import re
import sys

ROLE_PREFIX = re.compile(r"^evt\d+arg\d+")


def role_name(link_role):
    """'evt089arg01victim' -> 'victim'."""
    return ROLE_PREFIX.sub("", link_role)


def convert(doc):
    words, sentences = [], []
    for sent in doc["sentences"]:
        sentences.append([len(words), len(words) + len(sent)])
        words.extend(sent)

    events = {}
    for beg, end, types in doc["evt_triggers"]:
        # RAMS ends are inclusive; the corpus uses exclusive ends
        trigger = beg if beg == end else [beg, end + 1]
        events[(beg, end)] = {"trigger": trigger, "type": types[0][0], "args": []}
    for (tb, te), (ab, ae), role in doc["gold_evt_links"]:
        events[(tb, te)]["args"].append({"role": role_name(role), "span": [ab, ae + 1]})

    return {
        "doc_id": doc["doc_key"],
        "words": words,
        "sentences": sentences,
        "events": [events[k] for k in sorted(events)],
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("input")
    ap.add_argument("output")
    args = ap.parse_args(argv)
    n = 0
    with open(args.input, encoding="utf-8") as src, open(args.output, "w", encoding="utf-8") as dst:
        for line in src:
            if line.strip():
                dst.write(json.dumps(convert(json.loads(line)), ensure_ascii=False) + "\n")
                n += 1
    print(f"{n} documents written to {args.output}", file=sys.stderr)


if __name__ == "__main__":
    main()
