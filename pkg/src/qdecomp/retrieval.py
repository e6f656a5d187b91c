"""Embedded candidate index, top-K search, and pseudo-decomposition selection.

Three retrieval objectives over a top-K candidate pool:

* fixed2:   argmax over pairs of  q.s1 + q.s2 - s1.s2   (unit vectors)
* general:  the size-N form, sum of query similarities minus the sum of
            pairwise similarities over unordered candidate pairs
* variable: argmin over subsets of  ||v_q - sum v_s||_2  (un-normalized
            vectors), searched with a width-limited beam over subset sizes

plus a seeded uniform random baseline.
"""

import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .corpus import QuestionCorpus
from .embeddings import (TfidfModel, VectorTable, embed_text_sum,
                         sparse_to_dense, tfidf_embed, unit_normalize)
from .rng import child_seed

SOURCE_VECTORS = "sum-of-word-vectors"
SOURCE_TFIDF = "tfidf"

METHOD_FIXED = "fixed2"
METHOD_GENERAL = "general"
METHOD_VARIABLE = "variable"
METHOD_RANDOM = "random"
METHODS = (METHOD_FIXED, METHOD_GENERAL, METHOD_VARIABLE, METHOD_RANDOM)

# Exhaustive subset search is only attempted when the number of subsets is
# at most this; beyond it (and for N > 3) greedy forward selection is used.
EXHAUSTIVE_SUBSET_CAP = 10_000_000


@dataclass(frozen=True)
class LengthFilter:
    """Token-count bounds for index candidates (bounds are inclusive)."""

    min_tokens: int = 4
    max_tokens: int = 20


@dataclass
class EmbeddedIndex:
    """Id-aligned candidate texts with unit and raw embedding matrices.

    unit_matrix rows are unit-normalized (used for similarity search); the
    raw_matrix keeps the pre-normalization embeddings because the
    variable-length objective is defined on un-normalized sums.
    """

    ids: tuple
    texts: tuple
    unit_matrix: np.ndarray
    raw_matrix: np.ndarray
    source: str
    oov_excluded: int = 0
    filtered_out: int = 0

    def __post_init__(self):
        self._row_map = {qid: i for i, qid in enumerate(self.ids)}

    def __len__(self):
        return len(self.ids)

    def row_of(self, qid):
        return self._row_map[qid]

    def __contains__(self, qid):
        return qid in self._row_map


def embed_query(source, tokens):
    """(raw float64 vector, unit vector) for a token list under either source.

    Raises ValueError when no token is in vocabulary.
    """
    if isinstance(source, VectorTable):
        emb = embed_text_sum(tokens, source)
        if emb.is_zero:
            raise ValueError("text has no in-vocabulary tokens")
        raw = emb.vector
    elif isinstance(source, TfidfModel):
        raw = sparse_to_dense(tfidf_embed(tokens, source), len(source.vocabulary))
    else:
        raise ValueError(f"unsupported embedding source: {type(source).__name__}")
    return raw, unit_normalize(raw)


def build_index(corpus, source, filters=None):
    """Embed every corpus question that passes the length filters.

    Questions whose embedding is zero (all tokens out of vocabulary) are
    excluded and counted. An index that would be empty is an error.
    """
    ids = []
    texts = []
    units = []
    raws = []
    oov = 0
    filtered = 0
    for q in corpus:
        if filters is not None:
            n = len(q.tokens)
            if n < filters.min_tokens or n > filters.max_tokens:
                filtered += 1
                continue
        try:
            raw, unit = embed_query(source, q.tokens)
        except ValueError:
            oov += 1
            continue
        ids.append(q.id)
        texts.append(q.raw_text)
        units.append(unit.astype(np.float32))
        raws.append(raw.astype(np.float32))
    if not ids:
        raise ValueError("index is empty after filtering and vocabulary checks")
    tag = SOURCE_VECTORS if isinstance(source, VectorTable) else SOURCE_TFIDF
    return EmbeddedIndex(ids=tuple(ids), texts=tuple(texts),
                         unit_matrix=np.vstack(units), raw_matrix=np.vstack(raws),
                         source=tag, oov_excluded=oov, filtered_out=filtered)


def save_index(index, dirpath):
    """Write meta.json plus unit.npy / raw.npy into a directory."""
    os.makedirs(dirpath, exist_ok=True)
    meta = {
        "schema_version": 1,
        "source": index.source,
        "dim": int(index.unit_matrix.shape[1]),
        "rows": len(index.ids),
        "oov_excluded": index.oov_excluded,
        "filtered_out": index.filtered_out,
        "ids": list(index.ids),
        "texts": list(index.texts),
    }
    with open(os.path.join(dirpath, "meta.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, ensure_ascii=False, sort_keys=True)
        fh.write("\n")
    np.save(os.path.join(dirpath, "unit.npy"), index.unit_matrix)
    np.save(os.path.join(dirpath, "raw.npy"), index.raw_matrix)


def load_index(dirpath):
    with open(os.path.join(dirpath, "meta.json"), encoding="utf-8") as fh:
        meta = json.load(fh)
    unit = np.load(os.path.join(dirpath, "unit.npy"))
    raw = np.load(os.path.join(dirpath, "raw.npy"))
    return EmbeddedIndex(ids=tuple(meta["ids"]), texts=tuple(meta["texts"]),
                         unit_matrix=unit, raw_matrix=raw, source=meta["source"],
                         oov_excluded=meta["oov_excluded"],
                         filtered_out=meta["filtered_out"])


def _topk_rows(index, q_unit, k):
    """Row indices of the K highest-cosine candidates; ties break by id."""
    if k < 1:
        raise ValueError("K must be at least 1")
    q = np.asarray(q_unit, dtype=np.float64)
    if not q.any():
        raise ValueError("zero query vector")
    scores = index.unit_matrix @ q
    n = scores.shape[0]
    k_eff = min(k, n)
    if k_eff == n:
        cand = range(n)
    else:
        kth = np.partition(scores, n - k_eff)[n - k_eff]
        cand = np.flatnonzero(scores >= kth).tolist()
    order = sorted(cand, key=lambda i: (-scores[i], index.ids[i]))
    return [int(i) for i in order[:k_eff]], scores


def topk_candidates(index, q_unit_vector, k):
    """Ranked (id, cosine) list of the K nearest candidates."""
    rows, scores = _topk_rows(index, q_unit_vector, k)
    return [(index.ids[r], float(scores[r])) for r in rows]


def pair_objective(q_hat, s1_hat, s2_hat):
    """Similarity-plus-diversity score for a candidate pair (unit vectors)."""
    q = np.asarray(q_hat, dtype=np.float64)
    a = np.asarray(s1_hat, dtype=np.float64)
    b = np.asarray(s2_hat, dtype=np.float64)
    return float(np.dot(q, a) + np.dot(q, b) - np.dot(a, b))


@dataclass(frozen=True)
class PseudoDecomposition:
    """A selected set of sub-questions for one question."""

    question_id: str
    sub_question_ids: tuple
    sub_texts: tuple
    objective_score: float
    method: str
    edited: bool = False
    search_mode: str | None = None

    def __post_init__(self):
        if len(self.sub_question_ids) < 1:
            raise ValueError("decomposition needs at least one sub-question")
        if len(set(self.sub_question_ids)) != len(self.sub_question_ids):
            raise ValueError("sub-question ids must be distinct")
        if len(self.sub_question_ids) != len(self.sub_texts):
            raise ValueError("ids and texts must align")
        if self.method == METHOD_FIXED and len(self.sub_question_ids) != 2:
            raise ValueError("fixed2 decompositions have exactly two sub-questions")


def pseudo_decompose_fixed(index, question, source, k=1000):
    """Best pair under the pair objective, searched exhaustively in the top-K.

    Ties break toward the lexicographically smallest (lower id, higher id)
    pair.
    """
    _, unit = embed_query(source, question.tokens)
    rows, _ = _topk_rows(index, unit, k)
    if len(rows) < 2:
        raise ValueError("need at least two candidates to form a pair")
    cand = index.unit_matrix[rows].astype(np.float64)
    sims = cand @ unit
    gram = cand @ cand.T
    iu, ju = np.triu_indices(len(rows), k=1)
    vals = sims[iu] + sims[ju] - gram[iu, ju]
    best = float(vals.max())
    ties = np.flatnonzero(vals == best)

    def pair_key(t):
        a = index.ids[rows[iu[t]]]
        b = index.ids[rows[ju[t]]]
        return (a, b) if a <= b else (b, a)

    chosen = min(ties.tolist(), key=pair_key)
    pair = sorted((rows[iu[chosen]], rows[ju[chosen]]), key=lambda r: index.ids[r])
    return PseudoDecomposition(
        question_id=question.id,
        sub_question_ids=tuple(index.ids[r] for r in pair),
        sub_texts=tuple(index.texts[r] for r in pair),
        objective_score=best,
        method=METHOD_FIXED,
        search_mode="exhaustive",
    )


def _subset_score(sims, gram, positions):
    """Objective value of a candidate subset (unordered pairwise penalty)."""
    pos = list(positions)
    total = float(sims[pos].sum())
    for a, b in combinations(pos, 2):
        total -= float(gram[a, b])
    return total


def pseudo_decompose_general(index, question, source, n, k=1000):
    """Best size-N subset under the generalized objective.

    Exhaustive for N <= 3 while the subset count stays within
    EXHAUSTIVE_SUBSET_CAP; otherwise greedy forward selection (the chosen
    mode is recorded in search_mode). N=2 is exactly the fixed2 search.
    """
    if n < 2:
        raise ValueError("N must be at least 2")
    if n == 2:
        return pseudo_decompose_fixed(index, question, source, k)
    _, unit = embed_query(source, question.tokens)
    rows, _ = _topk_rows(index, unit, k)
    m = len(rows)
    if m < n:
        raise ValueError(f"need at least {n} candidates, have {m}")
    cand = index.unit_matrix[rows].astype(np.float64)
    sims = cand @ unit
    gram = cand @ cand.T

    def ids_of(positions):
        return tuple(sorted(index.ids[rows[p]] for p in positions))

    if n == 3 and math.comb(m, n) <= EXHAUSTIVE_SUBSET_CAP:
        search_mode = "exhaustive"
        pair_part = sims[:, None] + sims[None, :] - gram
        best_val = -np.inf
        tie_sets = []
        for i in range(m - 2):
            gi = gram[i, i + 1:]
            sub = pair_part[i + 1:, i + 1:] + (sims[i] - gi[:, None] - gi[None, :])
            jj, kk = np.triu_indices(m - i - 1, k=1)
            vals = sub[jj, kk]
            if vals.size == 0:
                continue
            vmax = float(vals.max())
            if vmax > best_val:
                best_val = vmax
                tie_sets = []
            if vmax == best_val:
                for t in np.flatnonzero(vals == vmax):
                    tie_sets.append((i, i + 1 + int(jj[t]), i + 1 + int(kk[t])))
        chosen = min(tie_sets, key=ids_of)
        score = best_val
    else:
        search_mode = "greedy"
        selected = []
        remaining = list(range(m))
        for _ in range(n):
            rem = np.array(remaining, dtype=np.intp)
            gains = sims[rem]
            if selected:
                gains = gains - gram[np.ix_(remaining, selected)].sum(axis=1)
            gmax = float(gains.max())
            tie_pos = [remaining[int(t)] for t in np.flatnonzero(gains == gmax)]
            pick = min(tie_pos, key=lambda p: index.ids[rows[p]])
            selected.append(pick)
            remaining.remove(pick)
        chosen = tuple(selected)
        score = _subset_score(sims, gram, chosen)

    members = sorted(((index.ids[rows[p]], index.texts[rows[p]]) for p in chosen))
    return PseudoDecomposition(
        question_id=question.id,
        sub_question_ids=tuple(i for i, _ in members),
        sub_texts=tuple(t for _, t in members),
        objective_score=float(score),
        method=METHOD_GENERAL,
        search_mode=search_mode,
    )


def pseudo_decompose_variable(index, question, source, max_n, k=1000,
                              beam_width=100):
    """Best subset of size 1..max_N minimizing ||v_q - sum v_s||.

    Beam search: states of size m extend by every unused candidate, the
    beam_width lowest-distance states survive per size, and the global best
    across sizes wins. Ties prefer fewer sub-questions, then lexicographic
    ids. Subset vectors are recomputed in canonical row order so identical
    subsets found along different paths are numerically identical.
    """
    if max_n < 1:
        raise ValueError("max_N must be at least 1")
    if beam_width < 1:
        raise ValueError("beam width must be at least 1")
    raw_q, unit = embed_query(source, question.tokens)
    rows, _ = _topk_rows(index, unit, k)
    if not rows:
        raise ValueError("empty candidate pool")
    m = len(rows)
    raws = index.raw_matrix[rows].astype(np.float64)

    def stats(key):
        vec = raws[list(key)].sum(axis=0)
        dist = float(np.linalg.norm(raw_q - vec))
        ids_t = tuple(sorted(index.ids[rows[p]] for p in key))
        return dist, ids_t

    best = None  # (dist, size, ids_tuple, key)
    beam = [()]
    for size in range(1, max_n + 1):
        seen = set()
        states = []
        for prev in beam:
            for c in range(m):
                if c in prev:
                    continue
                key = tuple(sorted(prev + (c,)))
                if key in seen:
                    continue
                seen.add(key)
                dist, ids_t = stats(key)
                states.append((dist, ids_t, key))
        if not states:
            break
        states.sort(key=lambda s: (s[0], s[1]))
        states = states[:beam_width]
        head = states[0]
        cand = (head[0], size, head[1], head[2])
        if best is None or cand[:3] < best[:3]:
            best = cand
        beam = [s[2] for s in states]

    members = sorted(((index.ids[rows[p]], index.texts[rows[p]]) for p in best[3]))
    return PseudoDecomposition(
        question_id=question.id,
        sub_question_ids=tuple(i for i, _ in members),
        sub_texts=tuple(t for _, t in members),
        objective_score=best[0],
        method=METHOD_VARIABLE,
    )


def random_pseudo_decompose(corpus, question, n, seed):
    """Uniform sample of N distinct corpus questions (seeded baseline)."""
    if n < 1:
        raise ValueError("N must be at least 1")
    if len(corpus) < n:
        raise ValueError(f"corpus has {len(corpus)} questions, need {n}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(corpus), size=n, replace=False)
    picked = [corpus.questions[int(i)] for i in idx]
    return PseudoDecomposition(
        question_id=question.id,
        sub_question_ids=tuple(q.id for q in picked),
        sub_texts=tuple(q.raw_text for q in picked),
        objective_score=float("nan"),
        method=METHOD_RANDOM,
    )


def _random_from_index(index, question, n, seed):
    """Random baseline drawn from index rows (the filtered candidate corpus)."""
    if len(index) < n:
        raise ValueError(f"index has {len(index)} rows, need {n}")
    rng = np.random.default_rng(seed)
    idx = rng.choice(len(index), size=n, replace=False)
    return PseudoDecomposition(
        question_id=question.id,
        sub_question_ids=tuple(index.ids[int(i)] for i in idx),
        sub_texts=tuple(index.texts[int(i)] for i in idx),
        objective_score=float("nan"),
        method=METHOD_RANDOM,
    )


@dataclass(frozen=True)
class DecomposeConfig:
    method: str = METHOD_FIXED
    k: int = 1000
    n: int = 2
    max_n: int = 3
    beam_width: int = 100
    seed: int = 0
    workers: int = 1


@dataclass(frozen=True)
class DatasetBuildResult:
    records: tuple   # ((question, decomposition), ...)
    failures: tuple  # ((question id, reason), ...)


def build_pseudo_decomposition_dataset(questions, index, source, config):
    """Decompose every embeddable question; skip and record failures.

    Output order follows input order regardless of the worker count, so the
    emitted dataset is byte-identical for any parallelism level.
    """
    if config.method not in METHODS:
        raise ValueError(f"unknown method {config.method!r}")
    if config.workers < 1:
        raise ValueError("workers must be at least 1")

    def task(item):
        pos, q = item
        try:
            if config.method == METHOD_FIXED:
                d = pseudo_decompose_fixed(index, q, source, config.k)
            elif config.method == METHOD_GENERAL:
                d = pseudo_decompose_general(index, q, source, config.n, config.k)
            elif config.method == METHOD_VARIABLE:
                d = pseudo_decompose_variable(index, q, source, config.max_n,
                                              config.k, config.beam_width)
            else:
                embed_query(source, q.tokens)  # same embeddability gate
                d = _random_from_index(index, q, config.n,
                                       child_seed(config.seed, "decompose-random", pos))
            return pos, d, None
        except ValueError as exc:
            return pos, None, str(exc)

    items = list(enumerate(questions))
    if config.workers == 1:
        results = [task(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            results = list(pool.map(task, items))

    records = []
    failures = []
    for pos, d, err in results:
        if d is None:
            failures.append((questions.questions[pos].id, err))
        else:
            records.append((questions.questions[pos], d))
    return DatasetBuildResult(records=tuple(records), failures=tuple(failures))


def _tsv_field(text):
    return text.replace("\t", " ").replace("\n", " ").replace("\r", " ")


def decomposition_text(decomposition):
    """Sub-questions joined by a single space."""
    return " ".join(decomposition.sub_texts)


DATASET_COLUMNS = ("question_id", "question_text", "decomposition_text",
                   "objective_score", "method")


def write_dataset_tsv(records, path):
    """Write (question, decomposition) pairs as a headerless 5-column TSV."""
    with open(path, "w", encoding="utf-8") as fh:
        for q, d in records:
            fields = (q.id, _tsv_field(q.raw_text),
                      _tsv_field(decomposition_text(d)),
                      repr(float(d.objective_score)), d.method)
            fh.write("\t".join(fields))
            fh.write("\n")


def read_dataset_tsv(path):
    """Rows of the 5-column dataset TSV as lists of strings."""
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if len(fields) != len(DATASET_COLUMNS):
                raise ValueError(
                    f"{path}:{lineno}: expected {len(DATASET_COLUMNS)} columns, "
                    f"got {len(fields)}")
            rows.append(fields)
    return rows
