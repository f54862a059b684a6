"""Template-based synthetic biography corpus.

Each sample draws a person table (name, birth date, birthplace,
occupation, nationality, plus distractor records that no template ever
realizes) and renders a one-sentence description from a random
template. Because the generator knows which attributes a template uses,
it also emits gold key-fact labels, giving the tagger and the pipeline
a benchmark with a known answer key. Word pools are disjoint across
slot kinds, so a value token appears in the text if and only if its
attribute was realized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import LinearizedTable, ParallelSample, Record, Table, UnlabeledSample, linearize

FIRST_NAMES = [
    "denise", "margaret", "john", "alice", "robert", "maria", "peter", "clara",
    "henrik", "sofia", "omar", "lena", "viktor", "amara", "diego", "ingrid",
    "tomas", "priya", "marcus", "elena", "hugo", "nadia", "felix", "rosa",
    "stefan", "carmen", "oliver", "hana", "emil", "greta", "louis", "mira",
    "anton", "paula", "bruno", "edith", "caleb", "dalia", "ewan", "freya",
    "gideon", "haruto", "iris", "jonas", "keira", "liam", "noor", "otis",
    "petra", "quinn", "ravi", "saskia", "theo", "uma", "vera", "wesley",
    "xenia", "yusuf", "zora", "abel", "bianca", "casper", "delia", "eamon",
]

LAST_NAMES = [
    "scott", "hansen", "fischer", "moreau", "tanaka", "rossi", "novak", "larsen",
    "weber", "silva", "kumar", "haddad", "berg", "costa", "dubois", "eriksen",
    "fontaine", "gruber", "holm", "ivanov", "jansen", "keller", "lindgren", "mancini",
    "nakamura", "okafor", "petrov", "quispe", "romero", "sato", "thorne", "ueda",
    "varga", "wagner", "xu", "yamada", "zimmer", "adler", "bakker", "carvalho",
    "dressler", "egan", "farkas", "gallo", "herrera", "iqbal", "jensen", "kovacs",
    "lombardi", "meyer", "nilsen", "obrien", "pavlov", "quint", "ribeiro", "schmidt",
    "tellez", "unger", "vidal", "winter", "yilmaz", "zhao", "aldana", "bruhn",
]

CITIES = [
    "melbourne", "toronto", "oslo", "lisbon", "prague", "dublin", "geneva", "porto",
    "seville", "krakow", "bergen", "naples", "valencia", "zagreb", "riga", "tallinn",
    "ghent", "turin", "lyon", "bonn", "graz", "malmo", "cork", "leeds",
    "bilbao", "nantes", "bologna", "aarhus", "uppsala", "brno", "gdansk", "helsinki",
    "vienna", "zurich", "antwerp", "bristol", "cardiff", "dundee", "galway", "havana",
]

OCCUPATIONS = [
    "comedian", "actor", "singer", "writer", "engineer", "chemist", "pilot", "painter",
    "dancer", "architect", "journalist", "historian", "biologist", "composer", "sculptor",
    "novelist", "photographer", "violinist", "economist", "linguist", "geologist",
    "physicist", "surgeon", "botanist",
]

NATIONALITIES = [
    "australian", "canadian", "french", "german", "italian", "spanish", "norwegian",
    "polish", "irish", "dutch", "portuguese", "austrian", "swedish", "danish",
    "finnish", "belgian",
]

MONTHS = [
    "january", "february", "march", "april", "may", "june",
    "july", "august", "september", "october", "november", "december",
]

# Distractor pools: these records exist in tables but no template
# realizes them, so their tokens are never key facts.
PARTNER_FIRST = [
    "miriam", "harold", "celine", "dmitri", "astrid", "kenji", "lucia", "bram",
    "odette", "silas", "tamar", "ulrich", "vivienne", "walter", "yolanda", "zeno",
    "agnes", "boris", "colette", "devin", "esther", "frida", "gordon", "helga",
]

PARTNER_LAST = [
    "lane", "fleming", "arnesen", "dupont", "castell", "munro", "sorensen", "vance",
    "whitaker", "abbott", "bellamy", "crane", "dorsey", "ellington", "fairfax",
    "granger", "hollis", "ibarra", "jarvis", "kendall", "lockwood", "mercer",
    "norwood", "oakes",
]

HOBBIES = [
    "chess", "sailing", "archery", "cycling", "gardening", "calligraphy",
    "birdwatching", "pottery", "astronomy", "fencing", "origami", "juggling",
    "knitting", "bowling", "kayaking", "woodworking",
]

# Templates: (token pattern, attributes the pattern realizes). Slot
# placeholders reference the attribute they draw from.
TEMPLATES = [
    (
        ["{first}", "{last}", "(", "born", "{day}", "{month}", "{year}", ")",
         "is", "a", "{nation}", "{occupation}", "."],
        frozenset({"name", "birth", "nation", "occupation"}),
    ),
    (
        ["{first}", "{last}", "is", "a", "{occupation}", "from", "{city}", "."],
        frozenset({"name", "occupation", "place"}),
    ),
    (
        ["{first}", "{last}", "(", "born", "{day}", "{month}", "{year}", "in",
         "{city}", ")", "is", "a", "{nation}", "{occupation}", "."],
        frozenset({"name", "birth", "place", "nation", "occupation"}),
    ),
    (
        ["born", "in", "{city}", ",", "{first}", "{last}", "works", "as", "a",
         "{occupation}", "."],
        frozenset({"place", "name", "occupation"}),
    ),
    (
        ["{first}", "{last}", "is", "a", "{nation}", "{occupation}", "."],
        frozenset({"name", "nation", "occupation"}),
    ),
    (
        ["{first}", "{last}", "is", "a", "{occupation}", "from", "{city}",
         "born", "in", "{year}", "."],
        frozenset({"name", "occupation", "place", "birth"}),
    ),
]

# Draw weights keep per-attribute realization rates away from 1/2, so a
# table-only model has a clear majority label for every attribute.
TEMPLATE_WEIGHTS = [0.25, 0.10, 0.25, 0.10, 0.10, 0.20]


@dataclass
class SynthSpec:
    n_samples: int = 1000
    unlabeled_fraction: float = 0.0
    n_first: int = 64
    n_last: int = 64
    n_city: int = 40
    n_occupation: int = 24
    n_nation: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not 0.0 <= self.unlabeled_fraction < 1.0:
            raise ValueError("unlabeled_fraction must be in [0, 1)")
        for field_name, pool in (
            ("n_first", FIRST_NAMES), ("n_last", LAST_NAMES), ("n_city", CITIES),
            ("n_occupation", OCCUPATIONS), ("n_nation", NATIONALITIES),
        ):
            size = getattr(self, field_name)
            if not 1 <= size <= len(pool):
                raise ValueError(f"{field_name} must be in [1, {len(pool)}]")


@dataclass
class SynthCorpus:
    parallel: list[ParallelSample]
    unlabeled: list[UnlabeledSample]
    gold_labels: dict[str, list[int]]  # sample id -> per-token labels

    def gold_for(self, sample: ParallelSample) -> list[int]:
        return self.gold_labels[sample.id]


def _draw_sample(rng: np.random.Generator, spec: SynthSpec):
    slots = {
        "first": FIRST_NAMES[rng.integers(spec.n_first)],
        "last": LAST_NAMES[rng.integers(spec.n_last)],
        "day": str(int(rng.integers(1, 29))),
        "month": MONTHS[rng.integers(12)],
        "year": str(int(rng.integers(1900, 2000))),
        "city": CITIES[rng.integers(spec.n_city)],
        "occupation": OCCUPATIONS[rng.integers(spec.n_occupation)],
        "nation": NATIONALITIES[rng.integers(spec.n_nation)],
    }
    records = [
        Record("name", [slots["first"], slots["last"]]),
        Record("birth", [slots["day"], slots["month"], slots["year"]]),
        Record("place", [slots["city"]]),
        Record("occupation", [slots["occupation"]]),
        Record("nation", [slots["nation"]]),
    ]
    if rng.random() < 0.8:
        records.append(
            Record("partner", [
                PARTNER_FIRST[rng.integers(len(PARTNER_FIRST))],
                PARTNER_LAST[rng.integers(len(PARTNER_LAST))],
            ])
        )
    if rng.random() < 0.8:
        records.append(Record("hobby", [HOBBIES[rng.integers(len(HOBBIES))]]))
    pattern, used = TEMPLATES[rng.choice(len(TEMPLATES), p=TEMPLATE_WEIGHTS)]
    text = [tok.format(**slots) if "{" in tok else tok for tok in pattern]
    return Table(records), text, used


def gold_labels_for(table: LinearizedTable, used_attributes: frozenset) -> list[int]:
    return [1 if tok.attribute in used_attributes else 0 for tok in table]


def generate(spec: SynthSpec) -> SynthCorpus:
    """Deterministic corpus: first the parallel block, then unlabeled-only."""
    rng = np.random.default_rng(spec.seed)
    n_unlabeled = int(round(spec.unlabeled_fraction * spec.n_samples))
    n_parallel = spec.n_samples - n_unlabeled
    parallel = []
    unlabeled = []
    gold = {}
    for i in range(spec.n_samples):
        table, text, used = _draw_sample(rng, spec)
        sample_id = f"synth-{i:05d}"
        if i < n_parallel:
            parallel.append(ParallelSample(sample_id, table, text))
            gold[sample_id] = gold_labels_for(linearize(table), used)
        else:
            unlabeled.append(UnlabeledSample(sample_id, text))
    return SynthCorpus(parallel, unlabeled, gold)
