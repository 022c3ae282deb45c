#!/usr/bin/env python3
"""Builds synonyms.tsv from the WordNet 3.0 database files (data.noun,
data.verb, data.adj, data.adv).

Usage: build_lexicon.py <wordnet-dict-dir> > synonyms.tsv

Only single-word, lowercase alphabetic lemmas of length >= 3 are kept. Each
word maps to the other lemmas sharing at least one synset with it, in
first-seen order, capped at MAX_SYNONYMS.
"""
import re
import sys
from collections import OrderedDict

MAX_SYNONYMS = 8
WORD = re.compile(r"^[a-z]{3,}$")


def synsets(path):
    with open(path, encoding="utf-8", errors="replace") as fh:
        for line in fh:
            if line.startswith(" "):
                continue
            parts = line.split()
            count = int(parts[3], 16)
            lemmas = []
            for i in range(count):
                lemma = parts[4 + 2 * i]
                lemma = re.sub(r"\(.*\)$", "", lemma)
                lemmas.append(lemma)
            yield lemmas


def main(root):
    table = OrderedDict()
    for pos in ("noun", "verb", "adj", "adv"):
        for lemmas in synsets(f"{root}/data.{pos}"):
            words = [w for w in lemmas if WORD.match(w)]
            for w in words:
                entry = table.setdefault(w, [])
                for s in words:
                    if s != w and s not in entry:
                        entry.append(s)
    out = sys.stdout
    out.write("# WordNet 3.0 derived synonym lexicon (Princeton WordNet license).\n")
    out.write("# Generated by assets/scripts/build_lexicon.py\n")
    for w in sorted(table):
        syns = table[w][:MAX_SYNONYMS]
        if syns:
            out.write(f"{w}\t{','.join(syns)}\n")


if __name__ == "__main__":
    main(sys.argv[1])
