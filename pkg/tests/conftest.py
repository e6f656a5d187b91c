import numpy as np
import pytest

from qdecomp.corpus import Question, QuestionCorpus
from qdecomp.embeddings import make_vector_table


def make_questions(texts, prefix="q"):
    return [Question.from_text(f"{prefix}{i:08d}", t) for i, t in enumerate(texts)]


def make_corpus(texts, prefix="q", label=None):
    return QuestionCorpus(questions=tuple(make_questions(texts, prefix)), label=label)


@pytest.fixture
def tiny_table():
    # orthogonal-ish hand vectors; "?" deliberately tiny so it never dominates
    return make_vector_table({
        "who": [1.0, 0.0, 0.0, 0.0],
        "what": [0.0, 1.0, 0.0, 0.0],
        "wrote": [0.0, 0.0, 1.0, 0.0],
        "directed": [0.0, 0.0, 0.0, 1.0],
        "hamlet": [1.0, 1.0, 0.0, 0.0],
        "vertigo": [0.0, 0.0, 1.0, 1.0],
        "the": [0.1, 0.1, 0.1, 0.1],
        "?": [0.01, 0.01, 0.01, 0.01],
    })


def random_unit_rows(rng, m, dim):
    rows = rng.normal(size=(m, dim))
    rows /= np.linalg.norm(rows, axis=1, keepdims=True)
    return rows


CLASS_A_WORDS = tuple("alpha beta gamma delta epsilon zeta eta theta".split())
CLASS_B_WORDS = tuple("crimson azure viridian amber violet umber coral slate".split())
SHARED_WORDS = tuple("the of a is in on".split())


def synthetic_labeled_split(seed, n_train, n_heldout, flip_fraction=0.0):
    """Two-class corpora: every text carries 2-4 class words plus shared
    filler. flip_fraction relabels that share of examples to the wrong
    class, capping achievable accuracy at 1 - flip_fraction."""
    rng = np.random.default_rng(seed)
    pools = {"a": CLASS_A_WORDS, "b": CLASS_B_WORDS}

    def sample(label):
        toks = list(rng.choice(pools[label], size=rng.integers(2, 5)))
        toks += list(rng.choice(SHARED_WORDS, size=rng.integers(1, 4)))
        rng.shuffle(toks)
        return " ".join(toks) + " ?"

    def batch(n, prefix):
        out = {"a": [], "b": []}
        for i in range(n):
            true = "a" if i % 2 == 0 else "b"
            text = sample(true)
            lab = true
            if flip_fraction and rng.random() < flip_fraction:
                lab = "b" if true == "a" else "a"
            out[lab].append(text)
        return [
            (make_corpus(out["a"], prefix=f"{prefix}a"), "a"),
            (make_corpus(out["b"], prefix=f"{prefix}b"), "b"),
        ]

    return batch(n_train, "tr"), batch(n_heldout, "ho")
