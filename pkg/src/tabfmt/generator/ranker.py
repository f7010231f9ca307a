"""Learned scorer over candidate-rule features.

A small dense network (three hidden layers) maps node features to a logit;
the logit is the score used throughout beam search and ranking. Training
mines positives as prefixes of known-good conditions and samples random
grammar negatives, then minimizes logistic loss with Adam. Everything is
seeded and the model serializes to a versioned JSON file.
"""

from __future__ import annotations

import datetime as dt
import json
import random
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..dates import ANCHOR_TODAY
from ..dsl.evaluate import Evaluator
from ..dsl.nodes import Condition, Literal, print_condition
from ..dsl.normalize import normalize
from ..profiler import extract_properties
from ..table import CellType, Table, TargetColumn
from .features import FEATURE_NAMES, FEATURE_VERSION, featurize
from .predicates import enumerate_predicates

SCHEMA_VERSION = 1
HIDDEN_SIZES = (32, 16, 8)
MIN_CORPUS = 100


@dataclass
class RankerModel:
    feature_version: str
    feature_names: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    layers: list[tuple[np.ndarray, np.ndarray]]

    def score_batch(self, x: np.ndarray) -> np.ndarray:
        """Logits for a (n, d) feature matrix."""
        if x.shape[1] != len(self.feature_names):
            raise ValueError(
                f"feature dimension {x.shape[1]} does not match model "
                f"({len(self.feature_names)})"
            )
        h = (x - self.mean) / self.std
        for i, (w, b) in enumerate(self.layers):
            h = h @ w + b
            if i < len(self.layers) - 1:
                h = np.maximum(h, 0.0)
        return h[:, 0]

    def score(self, x: np.ndarray) -> float:
        return float(self.score_batch(x.reshape(1, -1))[0])

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "feature_version": self.feature_version,
            "feature_names": list(self.feature_names),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
            "layers": [
                {"w": w.tolist(), "b": b.tolist()} for w, b in self.layers
            ],
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        )

    @staticmethod
    def from_json(doc: dict) -> "RankerModel":
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported model schema {doc.get('schema_version')!r}")
        return RankerModel(
            feature_version=doc["feature_version"],
            feature_names=tuple(doc["feature_names"]),
            mean=np.array(doc["mean"], dtype=float),
            std=np.array(doc["std"], dtype=float),
            layers=[
                (np.array(l["w"], dtype=float), np.array(l["b"], dtype=float))
                for l in doc["layers"]
            ],
        )

    @staticmethod
    def load(path: str | Path) -> "RankerModel":
        return RankerModel.from_json(json.loads(Path(path).read_text()))


def score_node(
    cond: Condition,
    table: Table,
    col: TargetColumn,
    ranker: RankerModel,
    today: dt.date | None = None,
    props: dict | None = None,
    evaluator: Evaluator | None = None,
) -> float:
    """Ranker logit for one candidate condition. Deterministic."""
    ev = evaluator or Evaluator(table, target=col.index, today=today)
    if props is None:
        props = extract_properties(table, col, today=ev.today)
    x = featurize(cond, ev.fraction(cond), table.types[col.index], props, table.n_rows)
    return ranker.score(x)


# --- training ---------------------------------------------------------------

def sub_conditions(cond: Condition) -> list[Condition]:
    """Every prefix a beam search would pass through: clause prefixes and
    literal prefixes within the working clause. Partial rules are rules."""
    out: dict[str, Condition] = {}
    for i in range(1, len(cond.clauses) + 1):
        head = cond.clauses[: i - 1]
        last = cond.clauses[i - 1]
        for j in range(1, len(last) + 1):
            sub = Condition(head + (last[:j],))
            out.setdefault(print_condition(normalize(sub)), sub)
    for clause in cond.clauses:
        for j in range(1, len(clause) + 1):
            sub = Condition((clause[:j],))
            out.setdefault(print_condition(normalize(sub)), sub)
    return list(out.values())


def _negatable(pred) -> bool:
    from ..dsl.nodes import GeneralPred, TextPred

    return isinstance(pred, TextPred) or (
        isinstance(pred, GeneralPred) and pred.kind == "Blanks"
    )


def _random_negative(
    rng: random.Random,
    table: Table,
    col: TargetColumn,
    pool: tuple = (),
) -> Condition:
    """A random grammar sample over the table, independent of any mined rule.

    When a pool of enumerated predicates is supplied, most draws come from
    it, so the negatives cover the same shapes the beam search will score."""
    from ..dsl.nodes import (
        Add,
        Between,
        Cmp,
        ColumnRef,
        Const,
        GeneralPred,
        Sub,
        TextPred,
        YearEquals,
    )

    if pool and rng.random() < 0.7:
        def pool_literal() -> Literal:
            pred = pool[rng.randrange(len(pool))]
            neg = _negatable(pred) and rng.random() < 0.25
            return Literal(pred, neg)

        literals = [pool_literal()]
        if rng.random() < 0.5:
            literals.append(pool_literal())
            # Beam search explores three-literal combinations too; give the
            # model samples of that shape so it is not extrapolating there.
            if rng.random() < 0.35:
                literals.append(pool_literal())
        if rng.random() < 0.5 or len(literals) == 1:
            return Condition((tuple(literals),))
        cut = rng.randrange(1, len(literals))
        return Condition((tuple(literals[:cut]), tuple(literals[cut:])))

    header = table.headers[col.index]
    ctype = table.types[col.index]
    cells = table.columns[col.index]
    numeric_cols = [i for i, t in enumerate(table.types) if t is CellType.NUMERIC]

    def arithmetic_pred():
        # Cross-column comparisons are part of the grammar even though the
        # enumerator never emits them; the scorer must see them as negatives
        # too, or it can only judge them by highlight fraction.
        a, b = rng.sample(numeric_cols, 2)
        ra, rb = ColumnRef(table.headers[a]), ColumnRef(table.headers[b])
        op = rng.choice([">", ">=", "<", "<="])
        roll = rng.random()
        if roll < 0.3:
            return Cmp(ra, op, rb)
        vals = [
            x.parsed - y.parsed
            for x, y in zip(table.columns[a], table.columns[b])
            if isinstance(x.parsed, float) and isinstance(y.parsed, float)
        ] or [0.0]
        anchor = rng.choice(vals) * rng.uniform(0.3, 1.7) + rng.uniform(-5, 5)
        expr = Sub(ra, rb) if roll < 0.8 else Add(ra, rb)
        return Cmp(expr, op, Const(round(anchor, 2)))

    def random_pred():
        if len(numeric_cols) >= 2 and rng.random() < 0.15:
            return arithmetic_pred()
        if ctype is CellType.TEXT:
            kind = rng.choice(
                ["TextEquals", "TextStartsWith", "TextEndsWith", "TextContains"]
            )
            if cells and rng.random() < 0.7:
                text = rng.choice(cells).value.strip() or "x"
                if kind != "TextEquals" and len(text) > 1:
                    cut = rng.randrange(1, len(text))
                    text = text[:cut] if kind == "TextStartsWith" else text[-cut:]
            else:
                text = "".join(rng.choice("abcdefgh") for _ in range(rng.randrange(1, 6)))
            return TextPred(kind, text, header)
        if ctype is CellType.NUMERIC:
            values = [c.parsed for c in cells if isinstance(c.parsed, float)]
            base = rng.choice(values) if values and rng.random() < 0.7 else rng.uniform(-100, 100)
            anchor = base * rng.uniform(0.5, 1.5) + rng.uniform(-10, 10)
            if rng.random() < 0.2:
                lo, hi = sorted((anchor, anchor + abs(rng.gauss(0, 10))))
                return Between(round(lo, 2), round(hi, 2), ColumnRef(header))
            op = rng.choice([">", ">=", "<", "<=", "=", "!="])
            return Cmp(ColumnRef(header), op, Const(round(anchor, 2)))
        if ctype is CellType.DATE:
            years = sorted(
                {c.parsed.year for c in cells if hasattr(c.parsed, "year")}
            ) or [2020]
            return YearEquals(rng.choice(years) + rng.choice([-2, -1, 0, 1, 2]), header)
        return GeneralPred("Blanks", header)

    literals = [Literal(random_pred(), rng.random() < 0.15)]
    if rng.random() < 0.3:
        literals.append(Literal(random_pred(), False))
    if rng.random() < 0.5 or len(literals) == 1:
        return Condition((tuple(literals),))
    return Condition(((literals[0],), (literals[1],)))


def train_ranker(
    training_corpus: list[tuple[Table, TargetColumn, Condition]],
    negatives_per_positive: int = 3,
    seed: int = 0,
    epochs: int = 300,
    learning_rate: float = 0.01,
    l2: float = 1e-4,
    today: dt.date | None = None,
) -> RankerModel:
    """Fit the scorer on mined positives and sampled negatives.

    `today` is the reference date for calendar windows during training; it
    must match the date the corpus tables were sampled around, or every
    window predicate degenerates to an empty highlight and the model learns
    the wrong sign for them. Defaults to the shared anchor date.
    """
    if len(training_corpus) < MIN_CORPUS:
        raise ValueError(
            f"training corpus has {len(training_corpus)} examples; "
            f"at least {MIN_CORPUS} are required"
        )
    if negatives_per_positive < 1:
        raise ValueError("negatives_per_positive must be at least 1")

    rng = random.Random(seed)
    rows: list[np.ndarray] = []
    labels: list[float] = []

    for table, col, cond in training_corpus:
        ev = Evaluator(table, target=col.index, today=today or ANCHOR_TODAY)
        props = extract_properties(table, col, today=ev.today)
        pool = tuple(enumerate_predicates(props, table, col))
        ctype = table.types[col.index]
        m = table.n_rows

        positives = sub_conditions(cond)
        positive_keys = {print_condition(normalize(p)) for p in positives}
        positive_vecs = set()
        for sub in positives:
            vec = ev.execute(sub)
            positive_vecs.add(vec)
            rows.append(featurize(sub, vec.popcount / m if m else 0.0, ctype, props, m))
            labels.append(1.0)
        wanted = len(positives) * negatives_per_positive
        made = 0
        attempts = 0
        while made < wanted and attempts < wanted * 20:
            attempts += 1
            neg = _random_negative(rng, table, col, pool)
            if print_condition(normalize(neg)) in positive_keys:
                continue
            try:
                vec = ev.execute(neg)
            except ValueError:
                continue
            # A sample that highlights exactly what some positive highlights
            # is not a negative, whatever its spelling.
            if vec in positive_vecs:
                continue
            rows.append(featurize(neg, vec.popcount / m if m else 0.0, ctype, props, m))
            labels.append(0.0)
            made += 1

    x = np.stack(rows)
    y = np.array(labels)
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std[std == 0] = 1.0
    # Indicator features stay raw: z-scoring a one-hot that fires on 1% of
    # rows turns its presence into a 10-sigma spike and the net's output
    # explodes on exactly the rare candidate kinds it saw least.
    binary = np.all((x == 0.0) | (x == 1.0), axis=0)
    mean[binary] = 0.0
    std[binary] = 1.0
    xn = (x - mean) / std

    np_rng = np.random.default_rng(seed)
    sizes = [x.shape[1], *HIDDEN_SIZES, 1]
    weights = []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        w = np_rng.standard_normal((fan_in, fan_out)) * np.sqrt(2.0 / fan_in)
        weights.append([w, np.zeros(fan_out)])

    # Adam state per parameter tensor.
    ms = [[np.zeros_like(w), np.zeros_like(b)] for w, b in weights]
    vs = [[np.zeros_like(w), np.zeros_like(b)] for w, b in weights]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    for epoch in range(epochs):
        # Cosine decay to a tenth of the base rate, so late epochs settle
        # into a minimum instead of bouncing around it.
        lr = learning_rate * (0.55 + 0.45 * np.cos(np.pi * epoch / epochs))
        # Forward pass, keeping activations for backprop.
        acts = [xn]
        h = xn
        for i, (w, b) in enumerate(weights):
            h = h @ w + b
            if i < len(weights) - 1:
                h = np.maximum(h, 0.0)
            acts.append(h)
        logits = acts[-1][:, 0]
        prob = 1.0 / (1.0 + np.exp(-logits))

        grad_out = ((prob - y) / len(y)).reshape(-1, 1)
        grads = []
        delta = grad_out
        for i in range(len(weights) - 1, -1, -1):
            w, _ = weights[i]
            gw = acts[i].T @ delta + l2 * w
            gb = delta.sum(axis=0)
            grads.append((gw, gb))
            if i > 0:
                delta = (delta @ w.T) * (acts[i] > 0)
        grads.reverse()

        step += 1
        for i, (gw, gb) in enumerate(grads):
            for j, g in enumerate((gw, gb)):
                ms[i][j] = beta1 * ms[i][j] + (1 - beta1) * g
                vs[i][j] = beta2 * vs[i][j] + (1 - beta2) * g * g
                m_hat = ms[i][j] / (1 - beta1**step)
                v_hat = vs[i][j] / (1 - beta2**step)
                weights[i][j] -= lr * m_hat / (np.sqrt(v_hat) + eps)

    return RankerModel(
        feature_version=FEATURE_VERSION,
        feature_names=FEATURE_NAMES,
        mean=mean,
        std=std,
        layers=[(w.copy(), b.copy()) for w, b in weights],
    )


def default_ranker() -> RankerModel:
    """The model shipped with the package."""
    from importlib import resources

    with resources.files("tabfmt.assets").joinpath("default_ranker.json").open() as fh:
        return RankerModel.from_json(json.load(fh))
