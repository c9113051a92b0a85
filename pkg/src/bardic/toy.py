"""A small synthetic Modern/Original corpus bundled for offline runs.

The pairs come from templates with archaic substitutions (you -> thou,
are -> art, before -> ere, ...) and slot fillers (character names, nouns,
adjectives) that are copied unchanged, which is the regime the pointer
component is built for.  ``python -m bardic.toy`` regenerates the files.
"""

from __future__ import annotations

from pathlib import Path

from .tensor import make_rng

DATA_DIR = Path(__file__).parent / "data" / "toy"

NAMES = ["Romeo", "Juliet", "Tybalt", "Mercutio", "Benvolio", "Capulet", "Montague", "Paris",
         "Lawrence", "Rosaline", "Balthasar", "Sampson", "Gregory", "Peter", "Abram", "Escalus",
         "Cæsar", "Viola", "Orsino", "Malvolio"]
NOUNS = ["lady", "sword", "heart", "friend", "father", "mother", "house", "letter", "ring",
         "night", "moon", "window", "garden", "horse", "master", "servant", "tomb", "cup",
         "book", "song"]
ADJS = ["good", "fair", "gentle", "sweet", "noble", "brave", "sad", "young", "old", "true",
        "strange", "poor"]

TEMPLATES = [
    ("{name}, you are my {noun}.", "{name}, thou art my {noun}."),
    ("Where is your {noun}?", "Where is thy {noun}?"),
    ("Give my compliments to your {noun}.", "Commend me to thy {noun}."),
    ("You have a {adj} {noun}.", "Thou hast a {adj} {noun}."),
    ("Do you know {name}?", "Dost thou know {name}?"),
    ("It is {adj}, {name}.", "'Tis {adj}, {name}."),
    ("Before the {noun} goes, {name} will come.", "Ere the {noun} goes, {name} will come."),
    ("Often {name} talks of the {noun}.", "Oft {name} speaks of the {noun}."),
    ("Yes, my {adj} {noun}.", "Ay, my {adj} {noun}."),
    ("No, {name}, not the {noun}!", "Nay, {name}, not the {noun}!"),
    ("You will see the {adj} {noun} here.", "Thou wilt see the {adj} {noun} here."),
    ("I am in a rush, {name}.", "I stand on sudden haste, {name}."),
]

LEXICON = [
    "# original<TAB>modern",
    "art\tare",
    "hast\thave",
    "wilt\twill",
    "dost\tdo",
    "ere\tbefore",
    "oft\toften",
    "ay\tyes",
    "nay\tno",
    "commend\tcompliment",
    "speaks\ttalks",
    "haste\trush",
    "'tis\tit is",
]

SPLIT_SIZES = (("train", 160), ("valid", 20), ("test", 20))


def generate(seed: int = 0):
    rng = make_rng(seed, "toy")
    seen = set()
    pairs = []
    while len(pairs) < sum(n for _, n in SPLIT_SIZES):
        mod, orig = TEMPLATES[rng.integers(len(TEMPLATES))]
        slots = dict(name=NAMES[rng.integers(len(NAMES))], noun=NOUNS[rng.integers(len(NOUNS))],
                     adj=ADJS[rng.integers(len(ADJS))])
        m = mod.format(**slots)
        if m in seen:
            continue
        seen.add(m)
        pairs.append((m, orig.format(**slots)))
    out = {}
    lo = 0
    for split, n in SPLIT_SIZES:
        out[split] = pairs[lo:lo + n]
        lo += n
    return out


def write(directory=DATA_DIR, seed: int = 0) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for split, pairs in generate(seed).items():
        with open(directory / f"{split}.modern.txt", "w", encoding="utf-8", newline="\n") as fm, \
                open(directory / f"{split}.original.txt", "w", encoding="utf-8", newline="\n") as fo:
            for m, o in pairs:
                fm.write(m + "\n")
                fo.write(o + "\n")
    (directory / "lexicon.tsv").write_text("\n".join(LEXICON) + "\n", encoding="utf-8")


if __name__ == "__main__":
    write()
