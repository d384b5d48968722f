import numpy as np
import pytest

from textchart.chart_type import ChartTypeConfig, train_chart_classifier
from textchart.corpus import Sample, Tag, load_dataset, tokenize
from textchart.embeddings import load_vectors, load_vectors_file
from textchart.mapper import train_mapper
from textchart.pipeline import PipelineModels
from textchart.synth import bundled_corpus_path, bundled_vectors_path, generate_synthetic_corpus, synthetic_vectors
from textchart.tagger import TaggerConfig, train

JAMAL = (
    "Mr . Jamal worked in the Meteorological Department for 8 years . He noticed a strange thing in "
    "recent times . On certain days of the month , the weather varied strongly . He wrote down the "
    "information to make a pattern of the event . The information of the paper is as follows : on the "
    "3rd day of the month the temperature is 36 degrees Celsius , 7th day is 45 degrees Celsius , 9th day "
    "is 18 degrees Celsius , 11th day is 21 degrees Celsius , 17th day is 9 degrees Celsius , 19th day is "
    "45 degrees Celsius , 21st day is 36 degrees Celsius , 27th day is 21 degrees Celsius and 29th day is "
    "45 degrees Celsius . He finds a weird pattern in these dates and makes a report and sends it to his "
    "senior officer ."
)
TZUYU = (
    "Tzuyu is a gaming expert . She surveyed 200 individuals to judge the popularity of the video games "
    "among her all time favorites . After her survey she concluded that 25 people voted for World of "
    "Warcraft , 46 voted for Black Ops , 12 voted for Overwatch , 25 for Modern Warfare , 30 for PUBG , "
    "50 for Sims and 40 for Assassin ' s Creed ."
)


def label(text: str, x_phrases, y_phrases, sample_id="s", mapping=(), chart_types=("bar",)) -> Sample:
    """Tag the given phrases (first unused occurrence, left to right) in ``text``."""
    tokens = tokenize(text)
    tags = [Tag.NONE] * len(tokens)
    cursor = {Tag.X: 0, Tag.Y: 0}
    for kind, phrases in ((Tag.X, x_phrases), (Tag.Y, y_phrases)):
        for phrase in phrases:
            words = phrase.split()
            start = cursor[kind]
            while True:
                if tokens[start:start + len(words)] == words and all(
                    t is Tag.NONE for t in tags[start:start + len(words)]
                ):
                    break
                start += 1
                if start > len(tokens):
                    raise ValueError(f"phrase {phrase!r} not found")
            for j in range(start, start + len(words)):
                tags[j] = kind
            cursor[kind] = start + len(words)
    return Sample(sample_id, tokens, tags, mapping, chart_types)


JAMAL_X = ["3rd day", "7th day", "9th day", "11th day", "17th day", "19th day", "21st day", "27th day", "29th day"]
JAMAL_Y = ["36", "45", "18", "21", "9", "45", "36", "21", "45"]


@pytest.fixture(scope="session")
def jamal_sample() -> Sample:
    return label(JAMAL, JAMAL_X, JAMAL_Y, "jamal", [(i, i) for i in range(9)], ("bar", "line"))


@pytest.fixture(scope="session")
def small_corpus():
    return generate_synthetic_corpus(60, seed=3)


@pytest.fixture(scope="session")
def small_table(small_corpus):
    tokens = [t for s in small_corpus for t in s.tokens] + tokenize(JAMAL) + tokenize(TZUYU)
    return load_vectors(synthetic_vectors(tokens, dim=16, seed=0))


@pytest.fixture(scope="session")
def bundled():
    return load_dataset(bundled_corpus_path()), load_vectors_file(bundled_vectors_path())


@pytest.fixture(scope="session")
def quick_models(bundled, tmp_path_factory):
    """Briefly trained models for the whole pipeline, saved to a directory."""
    samples, table = bundled
    train_set, val_set = samples[:150], samples[400:450]
    tagger = train(TaggerConfig(epochs=4, seed=0), train_set, val_set, table)
    mapper = train_mapper(train_set, "forest", tree_count=9, seed=0)
    pie = train_chart_classifier(ChartTypeConfig(target="pie", epochs=4), train_set, table, val_set)
    line = train_chart_classifier(ChartTypeConfig(target="line", epochs=4), train_set, table, val_set)
    models = PipelineModels(tagger, mapper, pie, line)
    directory = tmp_path_factory.mktemp("models")
    models.save(directory)
    return models, directory


def rel_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> float:
    """Largest entrywise |a-b| / max(|a|+|b|, floor)."""
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), floor)))
