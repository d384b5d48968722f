"""Templated synthetic corpus of analytical texts with gold labels.

Each template writes a short narrative around a list of category/value pairs
and records token tags, the category-to-value mapping and the chart types the
text suits. Pie texts describe percentage compositions that add up to 100;
line texts run over ordered domains (days, months, years).
"""
from __future__ import annotations

import hashlib
import random
from importlib import resources
from pathlib import Path

import numpy as np

from .corpus import Sample, Tag, tokenize

NAMES = [
    ("Tzuyu", "She", "her"), ("Jamal", "He", "his"), ("Rahim", "He", "his"),
    ("Nadia", "She", "her"), ("Karim", "He", "his"), ("Maria", "She", "her"),
    ("Arif", "He", "his"), ("Sophie", "She", "her"), ("Tanvir", "He", "his"),
    ("Laila", "She", "her"), ("David", "He", "his"), ("Emma", "She", "her"),
]

SURVEY_TOPICS = {
    "video games": ["World of Warcraft", "Black Ops", "Overwatch", "Modern Warfare", "PUBG",
                    "Sims", "Assassin ' s Creed", "Minecraft", "FIFA", "Fortnite", "Tetris", "Dota", "Halo"],
    "fruits": ["mango", "apple", "banana", "jackfruit", "orange", "guava", "lychee",
               "pineapple", "grape", "watermelon", "papaya"],
    "sports": ["cricket", "football", "tennis", "badminton", "hockey", "basketball",
               "volleyball", "table tennis", "swimming", "golf"],
    "movies": ["Titanic", "Avatar", "Inception", "Gladiator", "Frozen", "Jaws", "Up",
               "Coco", "The Matrix", "Star Wars", "Toy Story"],
    "colors": ["red", "blue", "green", "yellow", "purple", "black", "white", "orange",
               "pink", "grey"],
    "subjects": ["Mathematics", "Physics", "Chemistry", "Biology", "History", "English",
                 "Economics", "Geography", "Computer Science", "Art"],
}

SURVEY_ROLES = ["gaming expert", "school teacher", "market researcher", "journalist",
                "student", "club organizer", "data analyst", "blogger"]

COST_ITEMS = ["acquisition", "site improvement", "labour", "materials", "finance",
              "administrative", "marketing", "transport", "maintenance", "insurance",
              "legal", "utility", "research", "training"]
COST_SUBJECTS = [
    "Multi - unit residential dwellings typically break down as follows :",
    "The expenses of the new factory are divided as follows :",
    "The annual budget of the hospital is spent in the following way :",
    "The cost of building a small bridge breaks down like this :",
    "Expenses of the school project are distributed as follows :",
]

SHARE_ITEMS = ["Samsung", "Apple", "Xiaomi", "Oppo", "Vivo", "Nokia", "Huawei", "Realme",
               "Google", "Motorola", "Sony", "Lenovo"]
SHARE_MARKETS = ["smartphone", "tablet", "laptop", "smart watch", "television"]

BUDGET_ITEMS = ["salaries", "rent", "food", "education", "healthcare", "savings",
                "transport", "entertainment", "clothing", "electricity", "internet"]

CITIES = ["Dhaka", "Tokyo", "Delhi", "Shanghai", "Cairo", "Mumbai", "Beijing", "Osaka",
          "Karachi", "Lagos", "Istanbul", "London", "Paris", "Chittagong", "Sylhet"]
STUDENTS = ["Alice", "Bob", "Rafi", "Mitu", "Sumon", "Priya", "John", "Sara", "Nabil",
            "Rina", "Omar", "Lisa", "Tom", "Zara"]

MONTHS = ["January", "February", "March", "April", "May", "June", "July", "August",
          "September", "October", "November", "December"]

DAY_INTROS = [
    "Mr . {name} worked in the Meteorological Department for {k} years .",
    "{name} is a weather enthusiast living in a small town .",
    "{name} kept a diary of the weather for a whole month .",
]
DAY_MIDDLES = [
    "He noticed a strange thing in recent times . On certain days of the month , the weather varied strongly . He wrote down the information to make a pattern of the event .",
    "The weather changed a lot during the month . Every few days the readings were noted down .",
    "It was an unusual month with sudden changes . The readings were written in a notebook .",
]
DAY_LEADS = [
    "The information of the paper is as follows : on the",
    "The readings are as follows : on the",
    "According to the notes , on the",
]
DAY_OUTROS = [
    "He finds a weird pattern in these dates and makes a report and sends it to his senior officer .",
    "The notes were later shared with the local weather office .",
    "These readings were published in the town newsletter .",
    "",
]


def _ordinal(n: int) -> str:
    if 10 <= n % 100 <= 20:
        suffix = "th"
    else:
        suffix = {1: "st", 2: "nd", 3: "rd"}.get(n % 10, "th")
    return f"{n}{suffix}"


class _Builder:
    def __init__(self):
        self.tokens: list[str] = []
        self.tags: list[Tag] = []
        self.n_x = 0
        self.n_y = 0
        self.pairs: list[tuple[int, int]] = []

    def _add(self, text: str, tag: Tag) -> None:
        toks = tokenize(text)
        if tag is not Tag.NONE and self.tags and self.tags[-1] is tag:
            raise AssertionError("adjacent entities of the same kind would merge")
        self.tokens.extend(toks)
        self.tags.extend([tag] * len(toks))

    def w(self, text: str) -> "_Builder":
        if text:
            self._add(text, Tag.NONE)
        return self

    def x(self, text: str) -> int:
        self._add(text, Tag.X)
        self.n_x += 1
        return self.n_x - 1

    def y(self, text: str) -> int:
        self._add(text, Tag.Y)
        self.n_y += 1
        return self.n_y - 1

    def link(self, xo: int, yo: int) -> None:
        self.pairs.append((xo, yo))


def _join(b: _Builder, i: int, n: int, sep: str = ",") -> None:
    if i == n - 1:
        b.w("and")
    elif i > 0:
        b.w(sep)


def _percentages(rng: random.Random, n: int) -> list[int]:
    cuts = sorted(rng.sample(range(1, 100), n - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [100])]
    return parts


def _survey(rng: random.Random, b: _Builder) -> set[str]:
    name, she, her = rng.choice(NAMES)
    topic = rng.choice(sorted(SURVEY_TOPICS))
    n = rng.randint(3, min(10, len(SURVEY_TOPICS[topic])))
    items = rng.sample(SURVEY_TOPICS[topic], n)
    votes = [rng.randint(5, 60) for _ in items]
    total = sum(votes) + rng.randint(0, 40)
    b.w(f"{name} is a {rng.choice(SURVEY_ROLES)} . {she} surveyed")
    b.w(f"{total} individuals to judge the popularity of the {topic} among {her} all time favorites .")
    b.w(f"After {her} survey {she.lower()} concluded that")
    style = rng.random()
    for i, (item, v) in enumerate(zip(items, votes)):
        _join(b, i, n)
        if style < 0.6:
            yo = b.y(str(v))
            b.w("people voted for" if i == 0 else rng.choice(["voted for", "for"]))
            xo = b.x(item)
        else:
            xo = b.x(item)
            b.w("got")
            yo = b.y(str(v))
            b.w("votes")
        b.link(xo, yo)
    b.w(".")
    return {"bar"}


def _days(rng: random.Random, b: _Builder) -> set[str]:
    name, _, _ = rng.choice(NAMES)
    n = rng.randint(3, 10)
    days = sorted(rng.sample(range(1, 31), n))
    b.w(rng.choice(DAY_INTROS).format(name=name, k=rng.randint(2, 20)))
    b.w(rng.choice(DAY_MIDDLES))
    b.w(rng.choice(DAY_LEADS))
    quantity, unit = rng.choice([("temperature", "degrees Celsius"), ("rainfall", "mm"),
                                 ("humidity", "percent")])
    for i, d in enumerate(days):
        v = rng.randint(5, 45) if quantity == "temperature" else rng.randint(10, 95)
        if i == 0:
            xo = b.x(f"{_ordinal(d)} day")
            b.w(f"of the month the {quantity} is")
        else:
            _join(b, i, n)
            xo = b.x(f"{_ordinal(d)} day")
            b.w("is")
        yo = b.y(str(v))
        b.w(unit)
        b.link(xo, yo)
    b.w(".")
    b.w(rng.choice(DAY_OUTROS))
    return {"bar", "line"}


def _years(rng: random.Random, b: _Builder) -> set[str]:
    n = rng.randint(3, 10)
    start = rng.randint(1990, 2012)
    years = [start + i for i in range(n)]
    subject, unit = rng.choice([
        ("The company sold", "thousand units"), ("The town produced", "tons of rice"),
        ("The museum welcomed", "thousand visitors"), ("The club earned", "million taka"),
    ])
    b.w(rng.choice(["Here is a short history of a growing business .",
                    "The yearly report shows a clear trend .",
                    "Records were kept over several years ."]))
    style = rng.random()
    for i, yr in enumerate(years):
        v = rng.randint(10, 500)
        if style < 0.5:
            if i == 0:
                b.w(subject)
            else:
                _join(b, i, n)
            yo = b.y(str(v))
            b.w(unit + " in" if i == 0 else "in")
            xo = b.x(str(yr))
        else:
            _join(b, i, n, ";")
            b.w("in")
            xo = b.x(str(yr))
            b.w(", the figure was")
            yo = b.y(str(v))
            b.w(unit if i == 0 else "")
        b.link(xo, yo)
    b.w(".")
    return {"bar", "line"}


def _months(rng: random.Random, b: _Builder) -> set[str]:
    n = rng.randint(3, 10)
    first = rng.randint(0, 12 - n)
    months = MONTHS[first : first + n]
    shop = rng.choice(["A local bakery", "The corner shop", "An online store", "The bookshop"])
    b.w(f"{shop} tracked its monthly sales last year .")
    for i, m in enumerate(months):
        _join(b, i, n)
        b.w("sales in" if i == 0 else "in")
        xo = b.x(m)
        b.w("were" if i == 0 else "")
        yo = b.y(str(rng.randint(20, 900)))
        b.w("units" if i == 0 else "")
        b.link(xo, yo)
    b.w(". The owner expects a better year ahead .")
    return {"bar", "line"}


def _costs(rng: random.Random, b: _Builder) -> set[str]:
    n = rng.randint(3, 8)
    items = rng.sample(COST_ITEMS, n)
    pct = _percentages(rng, n)
    b.w(rng.choice(COST_SUBJECTS))
    for i, (item, p) in enumerate(zip(items, pct)):
        if i > 0:
            b.w(";")
        if i == n - 1:
            b.w("and")
        xo = b.x(item)
        b.w("costs ,")
        yo = b.y(str(p))
        b.w("%")
        b.link(xo, yo)
    return {"bar", "pie"}


def _budget(rng: random.Random, b: _Builder) -> set[str]:
    n = rng.randint(3, 8)
    items = rng.sample(BUDGET_ITEMS, n)
    pct = _percentages(rng, n)
    name, she, her = rng.choice(NAMES)
    b.w(f"{name} divides {her} monthly income in the following way :")
    for i, (item, p) in enumerate(zip(items, pct)):
        _join(b, i, n)
        yo = b.y(str(p))
        b.w("% goes to" if i == 0 else "% to")
        xo = b.x(item)
        b.link(xo, yo)
    b.w(". This plan covers the whole income .")
    return {"bar", "pie"}


def _shares(rng: random.Random, b: _Builder) -> set[str]:
    n = rng.randint(3, 8)
    items = rng.sample(SHARE_ITEMS, n)
    pct = _percentages(rng, n)
    market = rng.choice(SHARE_MARKETS)
    b.w(f"The {market} market is shared among a few brands .")
    for i, (item, p) in enumerate(zip(items, pct)):
        _join(b, i, n)
        xo = b.x(item)
        b.w("holds" if i == 0 else rng.choice(["holds", "has"]))
        yo = b.y(str(p))
        b.w("% of the market" if i == 0 else "%")
        b.link(xo, yo)
    b.w(".")
    return {"bar", "pie"}


def _scores(rng: random.Random, b: _Builder) -> set[str]:
    n = rng.randint(3, 10)
    people = rng.sample(STUDENTS, n)
    exam = rng.choice(["the final exam", "the math test", "the quiz", "the spelling contest"])
    b.w(f"The results of {exam} were announced today .")
    i = 0
    first = True
    while i < n:
        _join(b, i, n)
        if i + 1 < n and rng.random() < 0.25:
            # two categories sharing one value
            b.w("both")
            x1 = b.x(people[i])
            b.w("and")
            x2 = b.x(people[i + 1])
            b.w("scored")
            yo = b.y(str(rng.randint(30, 100)))
            b.link(x1, yo)
            b.link(x2, yo)
            i += 2
        else:
            xo = b.x(people[i])
            b.w("scored")
            yo = b.y(str(rng.randint(30, 100)))
            b.w("marks" if first else "")
            b.link(xo, yo)
            i += 1
        first = False
    b.w(f". The class had {rng.randint(20, 60)} students in total .")
    return {"bar"}


def _cities(rng: random.Random, b: _Builder) -> set[str]:
    n = rng.randint(3, 10)
    cities = rng.sample(CITIES, n)
    b.w(f"A report from {rng.randint(2000, 2020)} compares the size of some big cities .")
    for i, c in enumerate(cities):
        _join(b, i, n)
        xo = b.x(c)
        b.w("has a population of" if i == 0 else rng.choice(["has", "has about"]))
        yo = b.y(str(rng.randint(2, 40)))
        b.w("million")
        b.link(xo, yo)
    b.w(".")
    return {"bar"}


TEMPLATES = [_survey, _days, _years, _months, _costs, _budget, _shares, _scores, _cities]


def generate_sample(rng: random.Random, sample_id: str) -> Sample:
    template = rng.choice(TEMPLATES)
    b = _Builder()
    chart_types = template(rng, b)
    return Sample(
        id=sample_id,
        tokens=b.tokens,
        tags=b.tags,
        mapping=sorted(set(b.pairs)),
        chart_types=chart_types,
    )


def generate_synthetic_corpus(n: int, seed: int) -> list[Sample]:
    """Generate ``n`` labeled samples, deterministic under ``seed``."""
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = random.Random(seed)
    return [generate_sample(rng, f"synth-{seed}-{i:05d}") for i in range(n)]


def _shape_class(token: str) -> int:
    if token.isdigit():
        return 0
    if token[0].isdigit():
        return 1
    if all(c in ",.:;%'\"()-" for c in token):
        return 2
    if token[0].isupper():
        return 3
    return 4


def synthetic_vectors(tokens, dim: int = 48, seed: int = 0) -> str:
    """Stand-in pretrained vectors for a token list, in text ``.vec`` format.

    Each vector is a shared component for the token's surface shape (number,
    ordinal, punctuation, capitalized, lowercase) plus token-specific noise, so
    numbers cluster together as they do in real pretrained tables.
    """
    vocab = sorted(set(tokens))
    centers = np.random.default_rng(seed).normal(0.0, 1.0, size=(5, dim))
    lines = [f"{len(vocab)} {dim}"]
    for tok in vocab:
        h = int(hashlib.sha256(tok.encode("utf-8")).hexdigest()[:16], 16)
        noise = np.random.default_rng([seed, h]).normal(0.0, 1.0, size=dim)
        vec = (0.6 * centers[_shape_class(tok)] + 0.8 * noise) / np.sqrt(dim)
        lines.append(tok + " " + " ".join(f"{v:.6f}" for v in vec))
    return "\n".join(lines) + "\n"


BUNDLED_SIZE = 500
BUNDLED_SEED = 11
BUNDLED_DIM = 48


def bundled_corpus_path():
    """Path of the shipped corpus (``BUNDLED_SIZE`` samples from ``BUNDLED_SEED``)."""
    return resources.files("textchart") / "data" / "synthetic.jsonl"


def bundled_vectors_path():
    """Path of the stand-in vectors covering the shipped corpus vocabulary."""
    return resources.files("textchart") / "data" / "synthetic.vec"


def write_bundled(directory) -> None:
    """Regenerate the shipped corpus and vectors into ``directory``."""
    from .corpus import save_dataset

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    samples = generate_synthetic_corpus(BUNDLED_SIZE, BUNDLED_SEED)
    save_dataset(samples, out / "synthetic.jsonl")
    tokens = [t for s in samples for t in s.tokens]
    (out / "synthetic.vec").write_text(synthetic_vectors(tokens, BUNDLED_DIM), encoding="utf-8")
