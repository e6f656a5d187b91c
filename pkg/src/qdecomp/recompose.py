"""Answer recomposition: span probabilities from per-paragraph logits.

Each span s in paragraph p has logit l(s); each paragraph has a no-answer
logit n(p). Span probabilities are one softmax over the pooled adjusted
logits l(s) - n(p), so raising a paragraph's no-answer logit lowers all of
its span probabilities. Ensembling averages logits element-wise across
structurally identical logit sets.
"""

import json
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ParagraphLogits:
    """Span logits and the no-answer logit for one paragraph."""

    paragraph_id: str
    span_entries: tuple  # ((span_id, logit), ...)
    no_answer_logit: float

    def __post_init__(self):
        seen = set()
        for sid, logit in self.span_entries:
            if sid in seen:
                raise ValueError(
                    f"paragraph {self.paragraph_id!r}: duplicate span id {sid!r}")
            seen.add(sid)
            if not np.isfinite(logit):
                raise ValueError(
                    f"paragraph {self.paragraph_id!r}: non-finite logit for {sid!r}")
        if not np.isfinite(self.no_answer_logit):
            raise ValueError(
                f"paragraph {self.paragraph_id!r}: non-finite no-answer logit")


def _adjusted(paragraphs):
    keys = []
    adjusted = []
    for p in paragraphs:
        for sid, logit in p.span_entries:
            keys.append((p.paragraph_id, sid))
            adjusted.append(logit - p.no_answer_logit)
    return keys, np.array(adjusted, dtype=np.float64)


def span_probabilities(paragraphs):
    """(paragraph_id, span_id, probability) for every span, summing to one.

    The softmax subtracts the maximum adjusted logit first, so shared logit
    shifts cancel exactly.
    """
    keys, adjusted = _adjusted(paragraphs)
    if adjusted.size == 0:
        raise ValueError("no spans to score")
    z = adjusted - adjusted.max()
    e = np.exp(z)
    probs = e / e.sum()
    return [(pid, sid, float(pr)) for (pid, sid), pr in zip(keys, probs)]


def ensemble_average(logit_sets):
    """Element-wise mean of several structurally identical logit sets."""
    if not logit_sets:
        raise ValueError("no logit sets to ensemble")
    first = logit_sets[0]
    for other in logit_sets[1:]:
        if len(other) != len(first):
            raise ValueError("logit sets have different paragraph counts")
        for p0, p1 in zip(first, other):
            if p1.paragraph_id != p0.paragraph_id:
                raise ValueError(
                    f"paragraph mismatch: {p1.paragraph_id!r} vs {p0.paragraph_id!r}")
            if len(p1.span_entries) != len(p0.span_entries):
                raise ValueError(
                    f"paragraph {p0.paragraph_id!r}: differing span counts")
            for (s0, _), (s1, _) in zip(p0.span_entries, p1.span_entries):
                if s0 != s1:
                    raise ValueError(
                        f"paragraph {p0.paragraph_id!r}: span mismatch "
                        f"{s1!r} vs {s0!r}")
    out = []
    for pi, p0 in enumerate(first):
        span_logits = np.array(
            [[ls[pi].span_entries[si][1] for ls in logit_sets]
             for si in range(len(p0.span_entries))], dtype=np.float64)
        no_answer = np.array([ls[pi].no_answer_logit for ls in logit_sets],
                             dtype=np.float64)
        entries = tuple((sid, float(row.mean()))
                        for (sid, _), row in zip(p0.span_entries, span_logits))
        out.append(ParagraphLogits(paragraph_id=p0.paragraph_id,
                                   span_entries=entries,
                                   no_answer_logit=float(no_answer.mean())))
    return out


def predict_answer(paragraphs):
    """(paragraph_id, span_id) of the most probable span.

    Probability ties break toward the smallest (paragraph_id, span_id) pair.
    Span ids are only unique within a paragraph, so the full pair is
    returned.
    """
    ranked = span_probabilities(paragraphs)
    best_prob = max(pr for _, _, pr in ranked)
    ties = [(pid, sid) for pid, sid, pr in ranked if pr == best_prob]
    return min(ties)


def read_logits_jsonl(path):
    """Read paragraph logits from JSONL records of
    {"paragraph_id", "no_answer_logit", "spans": [{"span_id", "logit"}]}."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: malformed JSON line: {exc}") from exc
            try:
                entries = tuple((s["span_id"], float(s["logit"]))
                                for s in obj["spans"])
                para = ParagraphLogits(paragraph_id=obj["paragraph_id"],
                                       span_entries=entries,
                                       no_answer_logit=float(obj["no_answer_logit"]))
            except (KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad logits record: {exc}") from exc
            out.append(para)
    if not out:
        raise ValueError(f"{path}: no paragraph records")
    return out


def write_logits_jsonl(paragraphs, path):
    with open(path, "w", encoding="utf-8") as fh:
        for p in paragraphs:
            obj = {
                "paragraph_id": p.paragraph_id,
                "no_answer_logit": p.no_answer_logit,
                "spans": [{"span_id": sid, "logit": logit}
                          for sid, logit in p.span_entries],
            }
            fh.write(json.dumps(obj, ensure_ascii=False, sort_keys=True))
            fh.write("\n")
