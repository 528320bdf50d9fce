"""Batch stages behind the command line: synth, featurize, train, evaluate, report.

Each stage reads only files on disk (inputs or artifacts of earlier stages)
and writes deterministic artifacts into the output directory. Every artifact
records the config hash and seed.
"""

from __future__ import annotations

import copy
import csv
import hashlib
import io
import json
import logging
from dataclasses import dataclass, field
from datetime import timedelta
from importlib.resources import files
from pathlib import Path

from .evaluation import (
    EvalReport,
    EvalScheme,
    ablation_run,
    comparison_table,
    dumps,
    rolling_evaluate,
    table_csv,
)
from .features import (
    CLASS_NAMES,
    FeatureConfig,
    featurize,
    parse_subset,
    read_labels_csv,
    read_matrix_csv,
    subset_label,
    write_labels_csv,
)
from .ingest import (
    IngestError,
    WindowSpec,
    bucket,
    infer_origin,
    parse_downloads,
    parse_microblogs,
    parse_reviews,
    parse_timestamp,
)
from .model import ForestParams, TreeParams, fit_forest
from .synth import Scenario, generate
from .textmine import ComparativeDictionary, ConfigError, SentimentLexicon

log = logging.getLogger(__name__)

DATA = files("appcontest") / "data"
ABLATIONS = (("CF",), ("FF",), ("CF", "FF"), ("AF",), ("MF",), ("AF", "MF"))

DEFAULTS: dict = {
    "inputs": {"reviews": None, "microblogs": None, "downloads": None},
    "lexicon": None,
    "comparatives": None,
    "keywords_A": ["RedBike"],
    "keywords_B": ["BlueBike"],
    "window": {"origin": None, "window_days": 7, "sub_window_days": 1, "window_count": None},
    "sentiment_thresholds": [0.4, 0.6],
    "match_mode": "substring",
    "fine_basis": "daily",
    "contiguous_runs": True,
    "strict_paper": False,
    "subset": ["CF", "FF"],
    "forest": {"n_trees": 100, "mtry": None, "bootstrap": True, "max_depth": 12,
               "min_samples_split": 2},
    "eval": {"train_weeks": 10, "strict_forecast": False, "ablations": True},
    "seed": 0,
    "scenario": "paper_scale",
    "strict": False,
    "out": "out",
}

# fields that locate files or tune execution; they never change results
_IO_FIELDS = ("inputs", "lexicon", "comparatives", "out", "threads")


class MissingFileError(FileNotFoundError):
    pass


def _merge(base: dict, override: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        name = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown config field {name!r}")
        if isinstance(base[key], dict) and key != "scenario":
            if not isinstance(value, dict):
                raise ConfigError(f"config field {name!r} must be an object")
            out[key] = _merge(base[key], value, name + ".")
        else:
            out[key] = value
    return out


@dataclass
class Config:
    raw: dict
    base_dir: Path
    threads: int = 1
    scenario_seed_override: int | None = field(default=None, repr=False)

    @classmethod
    def load(cls, path: str | Path | None = None, overrides: dict | None = None,
             threads: int = 1) -> "Config":
        raw: dict = {}
        base_dir = Path.cwd()
        if path is not None:
            path = Path(path)
            if not path.exists():
                raise MissingFileError(str(path))
            with open(path, encoding="utf-8") as fh:
                try:
                    raw = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
            base_dir = path.resolve().parent
        merged = _merge(DEFAULTS, raw)
        for key, value in (overrides or {}).items():
            target = merged
            *parents, leaf = key.split(".")
            for p in parents:
                target = target[p]
            target[leaf] = value
        if threads < 1:
            raise ConfigError("threads must be >= 1")
        cfg = cls(merged, base_dir, threads)
        cfg.validate()
        return cfg

    def validate(self) -> None:
        r = self.raw
        self.subset
        self.window_spec_template()
        self.forest_params
        self.scheme
        if not isinstance(r["seed"], int) or r["seed"] < 0:
            raise ConfigError("config field 'seed' must be a non-negative integer")
        for key in ("keywords_A", "keywords_B"):
            if not r[key] or not all(isinstance(k, str) and k for k in r[key]):
                raise ConfigError(f"config field {key!r} must be a non-empty list of strings")
        self._fine_basis()

    # resolved pieces -------------------------------------------------------

    @property
    def out_dir(self) -> Path:
        return self.path(self.raw["out"])

    def path(self, value: str) -> Path:
        p = Path(value)
        return p if p.is_absolute() else self.base_dir / p

    def input_path(self, kind: str) -> Path:
        given = self.raw["inputs"][kind]
        return self.path(given) if given else self.out_dir / f"{kind}.jsonl"

    @property
    def subset(self) -> frozenset[str]:
        try:
            return parse_subset(self.raw["subset"])
        except ConfigError as exc:
            raise ConfigError(f"config field 'subset': {exc}") from exc

    @property
    def forest_params(self) -> ForestParams:
        f = self.raw["forest"]
        try:
            return ForestParams(n_trees=f["n_trees"], mtry=f["mtry"], bootstrap=f["bootstrap"],
                                seed=self.raw["seed"],
                                tree=TreeParams(f["max_depth"], f["min_samples_split"]))
        except (ConfigError, TypeError) as exc:
            raise ConfigError(f"config field 'forest': {exc}") from exc

    @property
    def scheme(self) -> EvalScheme:
        e = self.raw["eval"]
        try:
            return EvalScheme(train_weeks=e["train_weeks"],
                              strict_forecast=bool(e["strict_forecast"]))
        except (ConfigError, TypeError) as exc:
            raise ConfigError(f"config field 'eval.train_weeks': {exc}") from exc

    def _fine_basis(self) -> tuple[str, int]:
        basis = self.raw["fine_basis"]
        if basis == "daily":
            return "daily", 4
        if isinstance(basis, str) and basis.startswith("trailing:"):
            try:
                weeks = int(basis.split(":", 1)[1])
            except ValueError:
                weeks = 0
            if weeks >= 1:
                return "trailing", weeks
        raise ConfigError(f"config field 'fine_basis' must be daily or trailing:L, got {basis!r}")

    def window_spec_template(self) -> dict:
        w = self.raw["window"]
        try:
            window = timedelta(days=w["window_days"])
            sub = timedelta(days=w["sub_window_days"])
            origin = parse_timestamp(w["origin"]) if w["origin"] else None
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"config field 'window': {exc}") from exc
        if sub <= timedelta(0) or window <= timedelta(0) or window % sub:
            raise ConfigError("config field 'window': window_days must be a positive "
                              "multiple of sub_window_days")
        return {"origin": origin, "window_length": window, "sub_window_length": sub,
                "window_count": w["window_count"]}

    def feature_config(self) -> FeatureConfig:
        lexicon = self.raw["lexicon"]
        comparatives = self.raw["comparatives"]
        lex_path = self.path(lexicon) if lexicon else DATA / "lexicon.jsonl"
        cmp_path = self.path(comparatives) if comparatives else DATA / "comparatives.jsonl"
        for p in (lex_path, cmp_path):
            if not Path(str(p)).exists():
                raise MissingFileError(str(p))
        basis, weeks = self._fine_basis()
        thresholds = self.raw["sentiment_thresholds"]
        try:
            return FeatureConfig(
                SentimentLexicon.from_jsonl(lex_path), ComparativeDictionary.from_jsonl(cmp_path),
                tuple(self.raw["keywords_A"]), tuple(self.raw["keywords_B"]),
                thresholds=(float(thresholds[0]), float(thresholds[1])),
                match_mode=self.raw["match_mode"], fine_basis=basis, trailing_weeks=weeks,
                contiguous_runs=bool(self.raw["contiguous_runs"]),
                strict_paper=bool(self.raw["strict_paper"]))
        except ConfigError as exc:
            raise ConfigError(f"config field 'sentiment_thresholds'/'match_mode': {exc}") from exc

    def scenario(self) -> Scenario:
        value = self.raw["scenario"]
        if isinstance(value, str):
            bundled = DATA / "scenarios" / f"{value}.json"
            path = Path(str(bundled)) if Path(str(bundled)).exists() else self.path(value)
            if not path.exists():
                raise MissingFileError(str(path))
            with open(path, encoding="utf-8") as fh:
                value = json.load(fh)
        if not isinstance(value, dict):
            raise ConfigError("config field 'scenario' must be a name, path or object")
        value = dict(value)
        if self.scenario_seed_override is not None:
            value["seed"] = self.scenario_seed_override
        try:
            return Scenario.from_dict(value)
        except (ConfigError, TypeError) as exc:
            raise ConfigError(f"config field 'scenario': {exc}") from exc

    @property
    def seed(self) -> int:
        return self.raw["seed"]

    def hash(self) -> str:
        semantic = {k: v for k, v in self.raw.items() if k not in _IO_FIELDS}
        if isinstance(semantic.get("scenario"), str):
            try:
                semantic["scenario"] = self.scenario().to_dict()
            except (MissingFileError, ConfigError):
                pass
        elif self.scenario_seed_override is not None:
            semantic["scenario"] = dict(semantic["scenario"], seed=self.scenario_seed_override)
        payload = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]

    def provenance(self) -> dict:
        return {"config_hash": self.hash(), "seed": self.seed}

    def comment(self) -> str:
        return f"config_hash={self.hash()} seed={self.seed}"


def _require(path: Path) -> Path:
    if not path.exists():
        raise MissingFileError(str(path))
    return path


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


# stages --------------------------------------------------------------------

def run_synth(cfg: Config) -> dict[str, Path]:
    scenario = cfg.scenario()
    output = generate(scenario)
    output.truth.update(cfg.provenance())
    paths = output.write(cfg.out_dir)
    log.info("synth: %d weeks written to %s", scenario.weeks, cfg.out_dir)
    return paths


def load_windowed(cfg: Config):
    issues: list[IngestError] | None = None if cfg.raw["strict"] else []
    streams = {}
    for kind, parser in (("reviews", parse_reviews), ("microblogs", parse_microblogs),
                         ("downloads", parse_downloads)):
        path = _require(cfg.input_path(kind))
        with open(path, encoding="utf-8") as fh:
            found: list[IngestError] | None = None if issues is None else []
            streams[kind] = parser(fh, found)
            if found:
                issues.extend(IngestError(f"{path.name}: {e.reason}", e.line) for e in found)
    template = cfg.window_spec_template()
    if template["origin"] is None:
        stamps = [r.timestamp for recs in streams.values() for r in recs]
        if not stamps:
            raise ConfigError("config field 'window.origin' is required when inputs are empty")
        template["origin"] = infer_origin(stamps)
    spec = WindowSpec(**template)
    windowed = bucket(streams["reviews"], streams["microblogs"], streams["downloads"], spec)
    return windowed, issues or []


def run_featurize(cfg: Config) -> dict[str, Path]:
    windowed, issues = load_windowed(cfg)
    fcfg = cfg.feature_config()
    matrix, coarse = featurize(windowed, fcfg, ("CF", "FF"))
    out = cfg.out_dir
    comment = cfg.comment()
    features = out / "features.csv"
    labels = out / "labels.csv"
    features.parent.mkdir(parents=True, exist_ok=True)
    with open(features, "w", encoding="utf-8", newline="\n") as fh:
        matrix.to_csv(fh, comment)
    with open(labels, "w", encoding="utf-8", newline="\n") as fh:
        write_labels_csv(matrix.labels, fh, comment)
    meta = {
        **cfg.provenance(),
        "windows": windowed.window_count,
        "origin": windowed.spec.origin.strftime("%Y-%m-%dT%H:%M:%SZ"),
        "columns": len(matrix.columns),
        "skipped_out_of_span": dict(sorted(windowed.skipped.items())),
        "invalid_lines": [str(e) for e in issues],
        "imputations": dict(sorted(coarse.flags.items())),
        "degenerate_windows": [int(w) for w in matrix.labels.degenerate.nonzero()[0]],
        "defaults": {"missing_mean_rating": 3.0, "empty_sentiment": "uniform",
                     "zero_denominator_ratio": 0.0, "zero_download_pc": 0.0},
        "inputs_sha256": {k: _sha256(cfg.input_path(k))
                          for k in ("reviews", "microblogs", "downloads")},
    }
    meta_path = _write(out / "featurize.json", dumps(meta))
    return {"features.csv": features, "labels.csv": labels, "featurize.json": meta_path}


def load_matrix(cfg: Config):
    out = cfg.out_dir
    with open(_require(out / "labels.csv"), encoding="utf-8") as fh:
        labels = read_labels_csv(fh)
    with open(_require(out / "features.csv"), encoding="utf-8") as fh:
        return read_matrix_csv(fh, labels)


def run_train(cfg: Config) -> dict[str, Path]:
    """Fit the classifier and regressor on the most recent ``train_weeks`` windows."""
    matrix = load_matrix(cfg).project(cfg.subset)
    k = cfg.scheme.train_weeks
    T = matrix.n_windows
    if T < k:
        raise ValueError(f"training needs at least train_weeks={k} windows, got {T}")
    rows = slice(T - k, T)
    params = cfg.forest_params
    clf = fit_forest(matrix.X[rows], matrix.labels.cr[rows], params.for_task("gini"),
                     threads=cfg.threads)
    reg = fit_forest(matrix.X[rows], matrix.labels.ci[rows], params.for_task("variance"),
                     threads=cfg.threads)
    doc = {**cfg.provenance(), "subset": subset_label(cfg.subset),
           "columns": list(matrix.headers), "train_windows": [T - k, T - 1],
           "classifier": clf.to_dict(), "regressor": reg.to_dict()}
    path = _write(cfg.out_dir / "forest.json",
                  json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n")
    return {"forest.json": path}


EVAL_CSV_FIELDS = ["configuration", "row", "t", "train_start", "train_end", "test", "cr_true",
                   "cr_pred", "cr_prob", "ci_true", "ci_pred", "accuracy", "precision",
                   "recall", "f_measure", "rmse", "error"]


def _eval_csv(reports: list[EvalReport], comment: str) -> str:
    buf = io.StringIO()
    buf.write(f"# {comment}\n")
    writer = csv.DictWriter(buf, EVAL_CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        for f in r.folds:
            writer.writerow({"configuration": r.name, "row": "fold", "t": f.t,
                             "train_start": f.train[0], "train_end": f.train[1], "test": f.test,
                             "cr_true": CLASS_NAMES[f.cr_true], "cr_pred": CLASS_NAMES[f.cr_pred],
                             "cr_prob": repr(f.cr_prob), "ci_true": repr(f.ci_true),
                             "ci_pred": repr(f.ci_pred), "error": f.error or ""})
        writer.writerow({"configuration": r.name, "row": "summary",
                         **{k: repr(r.metrics[k]) for k in
                            ("accuracy", "precision", "recall", "f_measure", "rmse")}})
    return buf.getvalue()


def run_evaluate(cfg: Config) -> tuple[dict[str, Path], bool]:
    """Rolling evaluation of RF, DT and Last, plus CF/FF and AF/MF ablations.

    Returns the written paths and whether every fold succeeded.
    """
    matrix = load_matrix(cfg)
    scheme, params = cfg.scheme, cfg.forest_params
    main = matrix.project(cfg.subset)
    label = subset_label(cfg.subset)
    reports = [
        rolling_evaluate(main, scheme, params, "rf", name=f"RF[{label}]", threads=cfg.threads),
        rolling_evaluate(main, scheme, params, "dt", name=f"DT[{label}]"),
        rolling_evaluate(main, scheme, params, "last", name="Last"),
    ]
    if cfg.raw["eval"]["ablations"]:
        for report in ablation_run(matrix, ABLATIONS, scheme, params, threads=cfg.threads,
                                   include_last=False):
            report.name = f"RF[{report.name}]"
            if report.name not in {r.name for r in reports}:
                reports.append(report)
    doc = {
        **cfg.provenance(),
        "scheme": {"train_weeks": scheme.train_weeks, "step": scheme.step,
                   "horizon": scheme.horizon, "strict_forecast": scheme.strict_forecast},
        "windows": matrix.n_windows,
        "subset": label,
        "main": reports[0].name,
        "reports": [r.to_dict() for r in reports],
    }
    out = cfg.out_dir
    paths = {"eval.json": _write(out / "eval.json", dumps(doc)),
             "eval.csv": _write(out / "eval.csv", _eval_csv(reports, cfg.comment()))}
    ok = not any(r.errors for r in reports)
    return paths, ok


def run_report(cfg: Config) -> dict[str, Path]:
    out = cfg.out_dir
    with open(_require(out / "eval.json"), encoding="utf-8") as fh:
        evaluation = json.load(fh)
    with open(_require(out / "labels.csv"), encoding="utf-8") as fh:
        labels = read_labels_csv(fh)
    reports = [EvalReport.from_dict(r) for r in evaluation["reports"]]
    table = comparison_table(reports)
    doc = {
        "config_hash": evaluation["config_hash"],
        "seed": evaluation["seed"],
        "main": evaluation["main"],
        "table": table,
        "downloads": [{"window": w, "d_A": int(labels.d_A[w]), "d_B": int(labels.d_B[w]),
                       "pc": float(labels.pc[w]), "degenerate": bool(labels.degenerate[w])}
                      for w in range(len(labels))],
    }
    comment = f"config_hash={evaluation['config_hash']} seed={evaluation['seed']}"
    return {"report.csv": _write(out / "report.csv", table_csv(table, comment)),
            "report.json": _write(out / "report.json", dumps(doc))}


def format_table(rows: list[dict]) -> str:
    header = f"{'configuration':<16}{'acc':>7}{'prec':>7}{'rec':>7}{'F':>7}{'RMSE':>8}{'folds':>7}"
    lines = [header]
    for r in rows:
        lines.append(f"{r['configuration']:<16}{r['accuracy']:>7.3f}{r['precision']:>7.3f}"
                     f"{r['recall']:>7.3f}{r['f_measure']:>7.3f}{r['rmse']:>8.4f}{r['folds']:>7d}")
    return "\n".join(lines)
