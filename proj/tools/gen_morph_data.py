#!/usr/bin/env python3
"""Regenerates data/irregular.tsv, data/doubling.txt, data/roots.tsv and
tests/data/lexicon.tsv from lemminflect (inflection oracle) and the wordfreq
English frequency list.

    pip install lemminflect wordfreq
    python3 tools/gen_morph_data.py

The generated files are checked in; the C++ build never runs this script.
"""
import os
import re
import sys

import lemminflect as L

sys.path.insert(0, os.path.dirname(__file__))
from wordfreq_reader import top_words  # noqa: E402

ROOT = os.path.join(os.path.dirname(__file__), '..')
ALPHA = re.compile(r'^[a-z]+$')
CLASS_TAGS = {
    'VERB': [('##ing', 'VBG'), ('##vs', 'VBZ'), ('##ed', 'VBD'), ('##edp', 'VBN')],
    'NOUN': [('##ns', 'NNS')],
    'ADJ': [('##jer', 'JJR'), ('##jest', 'JJS')],
    'ADV': [('##ver', 'RBR'), ('##vest', 'RBS')],
}
CLASS_LETTER = {'VERB': 'v', 'NOUN': 'n', 'ADJ': 'a', 'ADV': 'r'}
SUFFIX = {'##ing': 'ing', '##vs': 's', '##ns': 's', '##ed': 'ed', '##edp': 'ed',
          '##jer': 'er', '##ver': 'er', '##jest': 'est', '##vest': 'est'}

VOCAB_SIZE = 80000      # frequency-ranked words scanned for lemmas
IRREGULAR_RANK = 30000
DOUBLING_RANK = 20000
LEXICON_RANK = 10000
DOUBLE_FINALS = set('bdgmnprt')
VOWELS = set('aeiou')


def is_vowel(w, i):
    c = w[i]
    if c in VOWELS:
        return not (c == 'u' and i > 0 and w[i - 1] == 'q')
    return c == 'y' and i > 0 and w[i - 1] not in VOWELS


def syllables(w):
    n, prev = 0, False
    for i in range(len(w)):
        v = is_vowel(w, i)
        if v and not prev:
            n += 1
        prev = v
    return n


def generic_doubling(w):
    return (len(w) >= 3 and syllables(w) == 1 and w[-1] in DOUBLE_FINALS
            and not is_vowel(w, len(w) - 1) and is_vowel(w, len(w) - 2)
            and not is_vowel(w, len(w) - 3))


def rule_form(w, t, dbl):
    """Python mirror of the C++ orthographic rules (no irregular lookup)."""
    suf = SUFFIX[t]
    cons_y = len(w) >= 2 and w[-1] == 'y' and w[-2] not in VOWELS
    doubles = w in dbl or generic_doubling(w)
    if suf == 's':
        if w.endswith(('s', 'x', 'z', 'ch', 'sh')):
            return w + 'es'
        return w[:-1] + 'ies' if cons_y else w + 's'
    if suf == 'ing':
        if w.endswith('ie'):
            return w[:-2] + 'ying'
        if w.endswith('e') and not w.endswith(('ee', 'ye', 'oe')) and len(w) > 2:
            return w[:-1] + 'ing'
        return w + w[-1] + 'ing' if doubles else w + 'ing'
    if w.endswith('e'):
        return w + suf[1:]
    if cons_y:
        return w[:-1] + 'i' + suf
    return w + w[-1] + suf if doubles else w + suf


def ortho_regular(root, t, form):
    suf = SUFFIX[t]
    cands = {root + suf, root + root[-1] + suf}
    if suf == 's':
        cands |= {root + 'es', root[:-1] + 'ies'}
    elif suf == 'ing':
        cands |= {root[:-1] + 'ing', root[:-2] + 'ying'}
    else:
        cands.add(root[:-1] + 'i' + suf)
        if root.endswith('e'):
            cands.add(root + suf[1:])
    return form in cands


def oracle_forms(lemma, upos):
    inf = L.getAllInflections(lemma, upos=upos)
    out = {}
    for t, tag in CLASS_TAGS[upos]:
        variants = inf.get(tag) or (inf.get('VBD') if tag == 'VBN' else None)
        if not variants:
            continue
        f = variants[0]
        if f == lemma or not ALPHA.match(f):
            continue
        # lemminflect emits "freeer"/"trueer" for e-final adjectives
        if lemma.endswith('e') and f in (lemma + 'er', lemma + 'est'):
            continue
        out[t] = f
    return out


def main():
    words = [w for w in top_words(VOCAB_SIZE) if ALPHA.match(w)]
    roots = {c: {} for c in CLASS_TAGS}
    for rank, w in enumerate(words):
        for upos, lems in L.getAllLemmas(w).items():
            if upos not in roots:
                continue
            for lem in lems:
                if ALPHA.match(lem) and lem not in roots[upos]:
                    roots[upos][lem] = rank

    triples = []
    for upos, table in roots.items():
        for lem, rank in table.items():
            for t, f in oracle_forms(lem, upos).items():
                triples.append((rank, upos, lem, t, f))
    triples.sort()

    doubling = set()
    for rank, upos, lem, t, f in triples:
        if rank >= DOUBLING_RANK or generic_doubling(lem):
            continue
        suf = SUFFIX[t]
        if suf == 's' or f != lem + lem[-1] + suf:
            continue
        doubling.add(lem)

    # forms some other root produces regularly are never irregular entries (taxes/taxis)
    regular_forms = set()
    for rank, upos, lem, t, f in triples:
        regular_forms.add((rule_form(lem, t, doubling), CLASS_LETTER[upos]))

    irregular, seen_infl, seen_key = [], {}, set()
    for rank, upos, lem, t, f in triples:
        if rank >= IRREGULAR_RANK:
            continue
        if ortho_regular(lem, t, f) and rule_form(lem, t, doubling) == f:
            continue
        cls = CLASS_LETTER[upos]
        if (f, cls) in regular_forms:
            continue
        if (lem, t) in seen_key or seen_infl.get((f, cls), lem) != lem:
            continue
        seen_key.add((lem, t))
        seen_infl[(f, cls)] = lem
        irregular.append((f, lem, t))

    irregular_keys = {(lem, t) for _, lem, t in irregular}
    irregular_roots = {lem for _, lem, _ in irregular}
    lexicon = []
    for rank, upos, lem, t, f in triples:
        if rank >= LEXICON_RANK or lem in irregular_roots or (lem, t) in irregular_keys:
            continue
        if not ortho_regular(lem, t, f):
            continue
        lexicon.append((lem, t, f))
    # every third triple keeps the file small while spanning the rank range
    lexicon = lexicon[::3]

    with open(os.path.join(ROOT, 'data', 'irregular.tsv'), 'w') as fh:
        fh.write('# inflected\troot\ttype\n')
        fh.write('# generated by tools/gen_morph_data.py; hand edits below the marker\n')
        for f, lem, t in irregular:
            fh.write(f'{f}\t{lem}\t{t}\n')
    with open(os.path.join(ROOT, 'data', 'doubling.txt'), 'w') as fh:
        fh.write('# roots whose final consonant doubles before -ing/-ed/-er/-est\n')
        for w in sorted(doubling):
            fh.write(w + '\n')
    with open(os.path.join(ROOT, 'data', 'roots.tsv'), 'w') as fh:
        fh.write('# root\tclasses (v=verb n=noun a=adjective r=adverb)\n')
        merged = {}
        for upos, table in roots.items():
            for lem in table:
                merged.setdefault(lem, set()).add(CLASS_LETTER[upos])
        for lem in sorted(merged):
            fh.write(f"{lem}\t{''.join(c for c in 'vnar' if c in merged[lem])}\n")
    with open(os.path.join(ROOT, 'tests', 'data', 'lexicon.tsv'), 'w') as fh:
        fh.write('# root\ttype\tinflected (regular triples, lemminflect oracle)\n')
        for lem, t, f in lexicon:
            fh.write(f'{lem}\t{t}\t{f}\n')
    print(f'irregular={len(irregular)} doubling={len(doubling)} '
          f'roots={len(merged)} lexicon={len(lexicon)}')


if __name__ == '__main__':
    main()
