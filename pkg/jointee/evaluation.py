"""
Micro-averaged precision / recall / F1 for the five metric families, the
trigger error taxonomy (MISSED / INCORRECT) and confusion tables.

Correctness criteria:
    entity mention     span and type match
    trigger ident.     token offset matches a gold trigger
    trigger class.     offset and event type match
    argument ident.    event type and mention begin match a gold argument
    role class.        ... and the role matches
"""
from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Optional, Protocol, Sequence, Union

from jinja2 import Environment, FileSystemLoader
from pydantic import BaseModel, Field

from jointee.errors import EvaluationError
from jointee.models import Extraction, Sentence

logger = logging.getLogger(__name__)

TEMPLATE_DIR = Path(__file__).parent / "templates"

FAMILY_NAMES = {
    "entity": "Entity Mention Detection",
    "trigger_identification": "Event Trigger Identification",
    "trigger_classification": "Event Trigger Classification",
    "argument_identification": "Event Argument Identification",
    "role_classification": "Argument Role Classification",
}

Annotated = Union[Extraction, Sentence]


class Predictor(Protocol):
    def predict(self, sentence: Sentence) -> Extraction: ...


# ==================================================
# REPORT MODELS
# ==================================================

class PRF(BaseModel):
    precision: float = 0.0
    recall: float = 0.0
    f1: float = 0.0
    correct: int = 0
    predicted: int = 0
    gold: int = 0


class RoleConfusion(BaseModel):
    gold: str
    predicted: str
    count: int


class ArgumentBreakdown(BaseModel):
    """Arguments attached to a gold trigger and mention begin but labelled wrongly."""
    correct_role_wrong_event_type: int = 0
    wrong_role: int = 0
    wrong_role_wrong_entity_type: int = 0


class ErrorReport(BaseModel):
    missed: dict[str, float] = Field(default_factory=dict)      # gold type -> % of MISSED
    incorrect: dict[str, float] = Field(default_factory=dict)   # predicted type -> % of INCORRECT
    missed_total: int = 0
    incorrect_total: int = 0
    role_confusions: list[RoleConfusion] = Field(default_factory=list)
    arguments: ArgumentBreakdown = Field(default_factory=ArgumentBreakdown)


class EvalReport(BaseModel):
    sentences: int
    entity: PRF
    trigger_identification: PRF
    trigger_classification: PRF
    argument_identification: PRF
    role_classification: PRF
    trigger_confusion: dict[str, dict[str, int]] = Field(default_factory=dict)
    role_confusion: dict[str, dict[str, int]] = Field(default_factory=dict)
    errors: ErrorReport = Field(default_factory=ErrorReport)

    def families(self) -> list[tuple[str, PRF]]:
        return [(FAMILY_NAMES[key], getattr(self, key)) for key in FAMILY_NAMES]

    @property
    def selection_score(self) -> float:
        return self.entity.f1 + self.trigger_classification.f1 + self.role_classification.f1


class ComparisonReport(BaseModel):
    joint: EvalReport
    pipelined: EvalReport


# ==================================================
# SCORING
# ==================================================

def prf(correct: int, predicted: int, gold: int) -> PRF:
    p = correct / predicted if predicted else 0.0
    r = correct / gold if gold else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PRF(precision=p, recall=r, f1=f, correct=correct, predicted=predicted, gold=gold)


def _as_extraction(item: Annotated) -> Extraction:
    return Extraction.from_sentence(item) if isinstance(item, Sentence) else item


def _check_pairing(predictions: Sequence[Extraction], gold: Sequence[Extraction]) -> None:
    if len(predictions) != len(gold):
        raise EvaluationError(f"{len(predictions)} predicted sentences for {len(gold)} gold sentences")
    if not gold:
        raise EvaluationError("nothing to evaluate: empty corpus")
    for k, (p, g) in enumerate(zip(predictions, gold)):
        if tuple(p.tokens) != tuple(g.tokens):
            raise EvaluationError(f"sentence {k}: predicted and gold tokens differ")


def _entity_keys(docs: Iterable[Extraction]) -> Counter:
    return Counter((s, m.start, m.end, m.type) for s, d in enumerate(docs) for m in d.mentions)


def _trigger_keys(docs: Iterable[Extraction], typed: bool) -> Counter:
    return Counter(
        (s, ev.trigger, ev.type) if typed else (s, ev.trigger)
        for s, d in enumerate(docs) for ev in d.events
    )


def _argument_keys(docs: Iterable[Extraction], with_role: bool) -> Counter:
    return Counter(
        (s, ev.type, begin, role) if with_role else (s, ev.type, begin)
        for s, d in enumerate(docs) for ev in d.events for begin, role in ev.arguments
    )


def _matched(pred: Counter, gold: Counter) -> PRF:
    return prf(sum((pred & gold).values()), sum(pred.values()), sum(gold.values()))


def trigger_confusion(predictions: Sequence[Extraction], gold: Sequence[Extraction]) -> dict[str, dict[str, int]]:
    """gold type -> predicted type -> count, over triggers at matching offsets."""
    table: dict[str, Counter] = {}
    for p, g in zip(predictions, gold):
        pred_types = {ev.trigger: ev.type for ev in p.events}
        for ev in g.events:
            if ev.trigger in pred_types:
                table.setdefault(ev.type, Counter())[pred_types[ev.trigger]] += 1
    return {gt: dict(sorted(c.items())) for gt, c in sorted(table.items())}


def _identified_role_pairs(predictions: Sequence[Extraction], gold: Sequence[Extraction]) -> Counter:
    """(gold role, predicted role) over arguments identified under the criteria above."""
    pairs: Counter = Counter()
    for p, g in zip(predictions, gold):
        gold_roles: dict[tuple[str, int], list[str]] = {}
        for ev in g.events:
            for begin, role in ev.arguments:
                gold_roles.setdefault((ev.type, begin), []).append(role)
        for ev in p.events:
            for begin, role in ev.arguments:
                candidates = gold_roles.get((ev.type, begin))
                if not candidates:
                    continue
                gold_role = role if role in candidates else candidates[0]
                candidates.remove(gold_role)
                pairs[(gold_role, role)] += 1
    return pairs


def role_confusion(predictions: Sequence[Extraction], gold: Sequence[Extraction]) -> dict[str, dict[str, int]]:
    table: dict[str, Counter] = {}
    for (gr, pr), n in _identified_role_pairs(predictions, gold).items():
        table.setdefault(gr, Counter())[pr] += n
    return {gr: dict(sorted(c.items())) for gr, c in sorted(table.items())}


def score(predictions: Sequence[Annotated], gold: Sequence[Annotated], schema=None) -> EvalReport:
    """
    Micro-averaged scores over the whole corpus. predictions[k] and gold[k]
    must describe the same sentence.
    """
    preds = [_as_extraction(x) for x in predictions]
    golds = [_as_extraction(x) for x in gold]
    _check_pairing(preds, golds)
    if schema is not None:
        for k, g in enumerate(golds):
            unknown = [m.type for m in g.mentions if m.type not in schema.entity_types]
            if unknown:
                raise EvaluationError(f"sentence {k}: entity types outside the schema: {unknown}")
    return EvalReport(
        sentences=len(golds),
        entity=_matched(_entity_keys(preds), _entity_keys(golds)),
        trigger_identification=_matched(_trigger_keys(preds, False), _trigger_keys(golds, False)),
        trigger_classification=_matched(_trigger_keys(preds, True), _trigger_keys(golds, True)),
        argument_identification=_matched(_argument_keys(preds, False), _argument_keys(golds, False)),
        role_classification=_matched(_argument_keys(preds, True), _argument_keys(golds, True)),
        trigger_confusion=trigger_confusion(preds, golds),
        role_confusion=role_confusion(preds, golds),
        errors=error_report(preds, golds),
    )


# ==================================================
# ERROR ANALYSIS
# ==================================================

def _percentages(counts: Counter) -> dict[str, float]:
    total = sum(counts.values())
    if not total:
        return {}
    return {k: 100.0 * v / total for k, v in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))}


def argument_breakdown(predictions: Sequence[Extraction], gold: Sequence[Extraction]) -> ArgumentBreakdown:
    """Classify predicted arguments that sit on a gold (trigger, mention begin) pair but are not fully right."""
    out = ArgumentBreakdown()
    for p, g in zip(predictions, gold):
        gold_args = {
            (ev.trigger, begin): (ev.type, role)
            for ev in g.events for begin, role in ev.arguments
        }
        for ev in p.events:
            for begin, role in ev.arguments:
                hit = gold_args.get((ev.trigger, begin))
                if hit is None:
                    continue
                gold_type, gold_role = hit
                if role == gold_role:
                    if ev.type != gold_type:
                        out.correct_role_wrong_event_type += 1
                    continue
                pm, gm = p.mention_at(begin), g.mention_at(begin)
                if pm is not None and gm is not None and pm.type != gm.type:
                    out.wrong_role_wrong_entity_type += 1
                else:
                    out.wrong_role += 1
    return out


def error_report(predictions: Sequence[Annotated], gold: Sequence[Annotated], top_k: int = 5) -> ErrorReport:
    """
    MISSED: gold triggers whose offset was not predicted, by gold type.
    INCORRECT: predicted triggers not correct for classification, by predicted type.
    """
    preds = [_as_extraction(x) for x in predictions]
    golds = [_as_extraction(x) for x in gold]
    _check_pairing(preds, golds)
    missed: Counter = Counter()
    incorrect: Counter = Counter()
    for p, g in zip(preds, golds):
        pred_offsets = {ev.trigger for ev in p.events}
        gold_typed = {(ev.trigger, ev.type) for ev in g.events}
        for ev in g.events:
            if ev.trigger not in pred_offsets:
                missed[ev.type] += 1
        for ev in p.events:
            if (ev.trigger, ev.type) not in gold_typed:
                incorrect[ev.type] += 1
    confused = [
        RoleConfusion(gold=gr, predicted=pr, count=n)
        for (gr, pr), n in _identified_role_pairs(preds, golds).items() if gr != pr
    ]
    confused.sort(key=lambda c: (-c.count, c.gold, c.predicted))
    return ErrorReport(
        missed=_percentages(missed),
        incorrect=_percentages(incorrect),
        missed_total=sum(missed.values()),
        incorrect_total=sum(incorrect.values()),
        role_confusions=confused[:top_k],
        arguments=argument_breakdown(preds, golds),
    )


# ==================================================
# PREDICTION / RENDERING
# ==================================================

def predict_corpus(model: Predictor, sentences: Sequence[Sentence], workers: int = 1) -> list[Extraction]:
    """Decode every sentence; with workers > 1 in threads. Output keeps input order."""
    if workers <= 1 or len(sentences) <= 1:
        return [model.predict(s) for s in sentences]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(model.predict, sentences))


def _environment() -> Environment:
    env = Environment(loader=FileSystemLoader(str(TEMPLATE_DIR)), trim_blocks=True, lstrip_blocks=True,
                      keep_trailing_newline=True)
    env.filters["pct"] = lambda v: f"{100.0 * v:6.2f}"
    return env


def render_report(report: EvalReport, title: Optional[str] = None, as_json: bool = False) -> str:
    if as_json:
        return report.model_dump_json(indent=2)
    template = _environment().get_template("report.txt.j2")
    return template.render(report=report, families=report.families(), title=title)


def render_comparison(comparison: ComparisonReport, as_json: bool = False) -> str:
    if as_json:
        return comparison.model_dump_json(indent=2)
    return "\n".join([
        render_report(comparison.joint, title="Joint model"),
        render_report(comparison.pipelined, title="Pipelined baseline"),
    ])
