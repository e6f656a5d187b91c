"""Word-vector tables, summed bag-of-words embeddings, cosine, and TF-IDF.

Vector tables are stored in 32-bit floats; accumulation happens in 64-bit.
"""

import json
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np


@dataclass
class VectorTable:
    """word -> float32 vector map with one fixed dimension."""

    dim: int
    entries: dict

    def __contains__(self, word):
        return word in self.entries

    def __len__(self):
        return len(self.entries)


def _is_int(text):
    try:
        int(text)
    except ValueError:
        return False
    return True


def load_vector_table(path):
    """Parse a text vector file: ``word c1 ... cd`` rows, optional count/dim header.

    Raises ValueError naming the line number for dimension mismatches and
    non-numeric or non-finite components.
    """
    entries = {}
    dim = None
    first = True
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if first:
                first = False
                if len(parts) == 2 and _is_int(parts[0]) and _is_int(parts[1]):
                    continue  # header line
            word, comps = parts[0], parts[1:]
            if not comps:
                raise ValueError(f"{path}:{lineno}: row has no vector components")
            if dim is None:
                dim = len(comps)
            elif len(comps) != dim:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim} components, got {len(comps)}")
            try:
                vec = np.array([float(c) for c in comps], dtype=np.float32)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: non-numeric vector component") from exc
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"{path}:{lineno}: non-finite vector component")
            entries[word] = vec
    if dim is None:
        raise ValueError(f"{path}: no vector rows found")
    return VectorTable(dim=dim, entries=entries)


def save_vector_table(table, path, header=True):
    """Write a table in the text format load_vector_table reads."""
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"{len(table.entries)} {table.dim}\n")
        for word in table.entries:
            comps = " ".join(repr(float(c)) for c in table.entries[word])
            fh.write(f"{word} {comps}\n")


def make_vector_table(entries):
    """Build a VectorTable from a {word: sequence} dict (validates dimensions)."""
    if not entries:
        raise ValueError("empty vector table")
    dim = None
    out = {}
    for word, comps in entries.items():
        vec = np.asarray(comps, dtype=np.float32)
        if vec.ndim != 1:
            raise ValueError(f"vector for {word!r} is not one-dimensional")
        if dim is None:
            dim = vec.shape[0]
        elif vec.shape[0] != dim:
            raise ValueError(f"vector for {word!r} has dimension {vec.shape[0]}, expected {dim}")
        out[word] = vec
    return VectorTable(dim=dim, entries=out)


@dataclass(frozen=True)
class TextEmbedding:
    """Sum of in-vocabulary word vectors; is_zero marks an exactly-zero sum."""

    vector: np.ndarray
    is_zero: bool


def embed_text_sum(tokens, table):
    """Sum the vectors of in-vocabulary tokens (float64 accumulation)."""
    acc = np.zeros(table.dim, dtype=np.float64)
    for tok in tokens:
        vec = table.entries.get(tok)
        if vec is not None:
            acc += vec
    return TextEmbedding(vector=acc, is_zero=not acc.any())


def unit_normalize(vector):
    """Scale to unit L2 norm. Zero vectors are an error."""
    v = np.asarray(vector, dtype=np.float64)
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return v / norm


def cosine(v1, v2):
    """Cosine similarity in [-1, 1]; zero vectors are an error."""
    a = np.asarray(v1, dtype=np.float64)
    b = np.asarray(v2, dtype=np.float64)
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine is undefined for zero vectors")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


@dataclass
class TfidfModel:
    """Term index plus smoothed idf weights fitted on one corpus."""

    vocabulary: dict
    idf: np.ndarray
    corpus_size: int


def tfidf_fit(corpus):
    """Fit vocabulary and idf = ln((1 + n) / (1 + df)) + 1 on a corpus."""
    if len(corpus) == 0:
        raise ValueError("cannot fit tf-idf on an empty corpus")
    df = Counter()
    for q in corpus:
        df.update(set(q.tokens))
    terms = sorted(df)
    n = len(corpus)
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in terms],
                   dtype=np.float64)
    return TfidfModel(vocabulary={t: i for i, t in enumerate(terms)},
                      idf=idf, corpus_size=n)


def tfidf_embed(tokens, model):
    """L2-normalized sparse tf-idf vector as {term index: weight}.

    Unseen terms are ignored; a text with no in-vocabulary terms is an error
    (its vector would be zero and cannot be normalized).
    """
    counts = Counter(t for t in tokens if t in model.vocabulary)
    if not counts:
        raise ValueError("no in-vocabulary terms: zero tf-idf vector")
    items = sorted((model.vocabulary[t], c) for t, c in counts.items())
    weights = np.array([c * model.idf[i] for i, c in items], dtype=np.float64)
    norm = float(np.linalg.norm(weights))
    return {i: float(w / norm) for (i, _), w in zip(items, weights)}


def sparse_to_dense(vec, dim):
    """Densify a {index: weight} sparse vector."""
    out = np.zeros(dim, dtype=np.float64)
    for i, w in vec.items():
        out[i] = w
    return out


def save_tfidf(model, path):
    payload = {
        "schema_version": 1,
        "vocabulary": model.vocabulary,
        "idf": [float(x) for x in model.idf],
        "corpus_size": model.corpus_size,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")


def load_tfidf(path):
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    return TfidfModel(vocabulary=payload["vocabulary"],
                      idf=np.array(payload["idf"], dtype=np.float64),
                      corpus_size=payload["corpus_size"])
