"""Stage plumbing: describe -> compose -> export -> predict -> evaluate.

Each stage reads the previous stage's JSONL and writes its own.  Every
output file opens with one header line echoing the effective config, so
identical configs and seeds reproduce outputs byte for byte.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

from . import audio_features as af
from .compose import (
    CombinationMethod,
    CombinedInput,
    CompositionConfig,
    ModalityDescriptions,
    combine,
)
from .corpus import (
    CleanReport,
    Corpus,
    SentimentClass,
    UtteranceRecord,
    binarize,
    clean,
    decode_wav,
    load_manifest,
)
from .errors import DataError, ServiceError, UsageError
from .evaluation import aggregate, fold_scores, make_folds, make_split
from .facial_text import appeared, describe_facial, parse_au_csv
from .llm import (
    DEFAULT_CATEGORIES,
    ServiceConfig,
    build_prompt,
    finalize_prediction,
    parse_answer,
    query_service,
)
from .locales import LocaleTable, load_locale
from .pattern_text import (
    ChangePattern,
    DEFAULT_EPS_REL,
    ENERGY_FLOOR_ABS,
    Feature,
    PITCH_FLOOR_ABS,
    classify,
    describe,
)


@dataclass
class PipelineConfig:
    manifest: str = ""
    out_dir: str = "out"
    modalities: str = "AFL"
    method: str = "paragraph"  # paragraph | separator
    locale: str = "en"
    label_view: str = "self"  # self | third
    separator_token: str = "[SEP]"
    categories: tuple[str, ...] = DEFAULT_CATEGORIES
    frame_len_s: float = af.DEFAULT_FRAME_LEN_S
    hop_s: float = af.DEFAULT_HOP_S
    floor_hz: float = af.DEFAULT_FLOOR_HZ
    ceil_hz: float = af.DEFAULT_CEIL_HZ
    eps_rel: float = DEFAULT_EPS_REL
    pitch_floor_abs: float = PITCH_FLOOR_ABS
    energy_floor_abs: float = ENERGY_FLOOR_ABS
    k: int = 5
    fold_seed: int = 0
    run_seeds: tuple[int, ...] = (0, 1, 2)
    workers: int = 1
    service: ServiceConfig = field(default_factory=ServiceConfig)

    def validate(self) -> "PipelineConfig":
        if not self.modalities or any(m not in "AFL" for m in self.modalities) \
                or len(set(self.modalities)) != len(self.modalities):
            raise UsageError(f"modalities must be a non-empty subset of AFL, got {self.modalities!r}")
        if self.method not in ("paragraph", "separator"):
            raise UsageError(f"method must be paragraph or separator, got {self.method!r}")
        if self.label_view not in ("self", "third"):
            raise UsageError(f"label_view must be self or third, got {self.label_view!r}")
        if not self.run_seeds:
            raise UsageError("run_seeds must name at least one run")
        if self.k < 2:
            raise UsageError(f"k must be at least 2, got {self.k}")
        if self.workers < 1:
            raise UsageError(f"workers must be at least 1, got {self.workers}")
        return self

    def combination_method(self) -> CombinationMethod:
        return CombinationMethod(self.method)

    def load_locale_table(self) -> LocaleTable:
        return load_locale(self.locale)


# Flat key=value view of the config, used for files and --set overrides.

def config_echo(cfg: PipelineConfig) -> dict[str, str]:
    echo: dict[str, str] = {}
    for f in fields(PipelineConfig):
        if f.name == "service":
            continue
        value = getattr(cfg, f.name)
        if isinstance(value, tuple):
            echo[f.name] = ",".join(str(v) for v in value)
        else:
            echo[f.name] = str(value)
    for f in fields(ServiceConfig):
        echo[f"service.{f.name}"] = str(getattr(cfg.service, f.name))
    return dict(sorted(echo.items()))


def _parse_value(cfg: PipelineConfig, key: str, raw: str) -> None:
    raw = raw.strip()

    def setattr_typed(obj, name, current):
        try:
            if isinstance(current, bool):
                raise UsageError(f"config key {key!r} is not settable")
            if isinstance(current, int):
                setattr(obj, name, int(raw))
            elif isinstance(current, float):
                setattr(obj, name, float(raw))
            else:
                setattr(obj, name, raw)
        except ValueError:
            raise UsageError(f"bad value {raw!r} for config key {key!r}") from None

    if key.startswith("service."):
        name = key[len("service."):]
        if not hasattr(cfg.service, name):
            raise UsageError(f"unknown config key {key!r}")
        setattr_typed(cfg.service, name, getattr(cfg.service, name))
        return
    if key == "run_seeds":
        try:
            cfg.run_seeds = tuple(int(s) for s in raw.split(",") if s.strip() != "")
        except ValueError:
            raise UsageError(f"bad value {raw!r} for config key 'run_seeds'") from None
        return
    if key == "categories":
        cfg.categories = tuple(s.strip() for s in raw.split(",") if s.strip())
        return
    if not hasattr(cfg, key) or key == "service":
        raise UsageError(f"unknown config key {key!r}")
    setattr_typed(cfg, key, getattr(cfg, key))


def build_config(file_path: str | None = None,
                 overrides: list[str] | None = None) -> PipelineConfig:
    """Config from an optional key=value file plus --set overrides."""
    cfg = PipelineConfig()
    pairs: list[tuple[str, str]] = []
    if file_path:
        try:
            text = Path(file_path).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from exc
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{file_path}:{lineno}: expected key=value, got {line!r}")
            pairs.append((key.strip(), value))
    for item in overrides or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise UsageError(f"--set expects key=value, got {item!r}")
        pairs.append((key.strip(), value))
    for key, value in pairs:
        _parse_value(cfg, key, value)
    return cfg.validate()


@dataclass(frozen=True)
class StagePaths:
    out_dir: Path
    descriptions: Path
    clean_report: Path
    composed: Path
    export: Path
    splits: Path
    report_json: Path
    report_csv: Path

    def predictions(self, run_seed: int) -> Path:
        return self.out_dir / f"predictions_run{run_seed}.jsonl"


def stage_paths(cfg: PipelineConfig) -> StagePaths:
    out = Path(cfg.out_dir)
    return StagePaths(
        out_dir=out,
        descriptions=out / "descriptions.jsonl",
        clean_report=out / "clean_report.jsonl",
        composed=out / "composed.jsonl",
        export=out / "export.jsonl",
        splits=out / "splits.json",
        report_json=out / "report.json",
        report_csv=out / "report.csv",
    )


def _header_line(cfg: PipelineConfig) -> str:
    return json.dumps({"config": config_echo(cfg)}, sort_keys=True)


def _write_jsonl(path: Path, cfg: PipelineConfig, rows) -> int:
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8") as fh:
        fh.write(_header_line(cfg) + "\n")
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
            n += 1
    return n


def read_jsonl(path: Path) -> tuple[dict, list[dict]]:
    """Returns (header config object, data rows)."""
    try:
        lines = path.read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not lines:
        raise DataError(f"{path} is empty, expected a config header line")
    header = json.loads(lines[0])
    if "config" not in header:
        raise DataError(f"{path} does not start with a config header line")
    return header, [json.loads(line) for line in lines[1:] if line.strip()]


def _load_clean_corpus(cfg: PipelineConfig) -> tuple[Corpus, CleanReport]:
    if not cfg.manifest:
        raise UsageError("config key 'manifest' is required")
    corpus = load_manifest(cfg.manifest)
    return clean(corpus, workers=cfg.workers)


def _pattern_block(averages: af.PeriodAverages, feature: Feature,
                   locale: LocaleTable, eps_rel: float, floor_abs: float) -> dict:
    """Classify one feature's period averages; no averages means flat."""
    if averages.defined:
        pattern = classify(averages.p1, averages.p2, averages.p3,
                           eps_rel=eps_rel, floor_abs=floor_abs)
        fallback = False
    else:
        pattern = ChangePattern.E_FLAT
        fallback = True
    return {
        "pattern": pattern.value,
        "averages": list(averages.values()),
        "n_used": list(averages.n_used),
        "fallback_flat": fallback,
        "text": describe(pattern, feature, locale),
    }


def _describe_record(rec: UtteranceRecord, cfg: PipelineConfig,
                     locale: LocaleTable) -> dict:
    samples, rate = decode_wav(rec.audio_path)
    track = af.compute_frame_track(
        af.normalize_pcm16(samples), rate,
        frame_len_s=cfg.frame_len_s, hop_s=cfg.hop_s,
        floor_hz=cfg.floor_hz, ceil_hz=cfg.ceil_hz,
    )
    pitch_block = _pattern_block(af.three_period_averages(track.pitch_hz),
                                 Feature.PITCH, locale,
                                 cfg.eps_rel, cfg.pitch_floor_abs)
    energy_block = _pattern_block(af.three_period_averages(track.energy),
                                  Feature.ENERGY, locale,
                                  cfg.eps_rel, cfg.energy_floor_abs)
    appeared_ids = appeared(parse_au_csv(rec.au_path))
    return {
        "participant_id": rec.participant_id,
        "exchange_id": rec.exchange_id,
        "pitch": pitch_block,
        "energy": energy_block,
        "appeared_aus": sorted(appeared_ids),
        "facial_texts": describe_facial(appeared_ids, locale),
        "transcript": rec.transcript,
        "self_label": rec.self_label_raw,
        "third_label": rec.third_label_raw,
    }


def cmd_describe(cfg: PipelineConfig) -> dict:
    corpus, report = _load_clean_corpus(cfg)
    locale = cfg.load_locale_table()
    paths = stage_paths(cfg)
    if cfg.workers > 1 and corpus.records:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            rows = list(pool.map(
                lambda rec: _describe_record(rec, cfg, locale), corpus.records))
    else:
        rows = [_describe_record(rec, cfg, locale) for rec in corpus.records]
    n = _write_jsonl(paths.descriptions, cfg, rows)
    _write_jsonl(paths.clean_report, cfg, report.dropped)
    return {"described": n, "dropped": len(report.dropped),
            "output": str(paths.descriptions)}


def _descriptions_to_modalities(row: dict, cfg: PipelineConfig) -> ModalityDescriptions:
    return ModalityDescriptions(
        audio=(row["pitch"]["text"], row["energy"]["text"]) if "A" in cfg.modalities else None,
        facial=tuple(row["facial_texts"]) if "F" in cfg.modalities else None,
        lingual=row["transcript"] if "L" in cfg.modalities else None,
    )


def _composed_rows(cfg: PipelineConfig) -> list[dict]:
    paths = stage_paths(cfg)
    _, rows = read_jsonl(paths.descriptions)
    comp_cfg = CompositionConfig(separator_token=cfg.separator_token,
                                 locale=cfg.load_locale_table())
    method = cfg.combination_method()
    out = []
    for row in rows:
        combined = combine(_descriptions_to_modalities(row, cfg), comp_cfg, method)
        out.append({
            "participant_id": row["participant_id"],
            "exchange_id": row["exchange_id"],
            "text": combined.text,
            "method": combined.method.value,
            "modalities": combined.modalities,
            "self_label": row["self_label"],
            "third_label": row["third_label"],
        })
    return out


def cmd_compose(cfg: PipelineConfig) -> dict:
    paths = stage_paths(cfg)
    n = _write_jsonl(paths.composed, cfg, _composed_rows(cfg))
    return {"composed": n, "output": str(paths.composed)}


def _gold_class(row: dict, cfg: PipelineConfig) -> SentimentClass:
    raw = row["self_label"] if cfg.label_view == "self" else row["third_label"]
    return binarize(raw)


def cmd_export(cfg: PipelineConfig) -> dict:
    """Composed text + binarized labels + the split plan (trainer contract)."""
    paths = stage_paths(cfg)
    _, rows = read_jsonl(paths.composed)
    out_rows = []
    for row in rows:
        gold = _gold_class(row, cfg)
        out_rows.append({
            "participant_id": row["participant_id"],
            "exchange_id": row["exchange_id"],
            "text": row["text"],
            "label": int(gold),
            "label_name": gold.label,
            "label_view": cfg.label_view,
        })
    n = _write_jsonl(paths.export, cfg, out_rows)

    corpus, _ = _load_clean_corpus(cfg)
    plan = make_folds(corpus, k=cfg.k, seed=cfg.fold_seed)
    splits = {
        "config": config_echo(cfg),
        "fold_plan": plan.to_json_dict(),
        "splits": [
            {
                "test_fold": f,
                "train_records": [list(k) for k in s.train_records],
                "validation_records": [list(k) for k in s.validation_records],
                "test_records": [list(k) for k in s.test_records],
            }
            for f in range(plan.k)
            for s in [make_split(corpus, plan, f)]
        ],
    }
    paths.splits.write_text(json.dumps(splits, indent=2, sort_keys=True) + "\n",
                            encoding="utf-8")
    return {"exported": n, "output": str(paths.export), "splits": str(paths.splits)}


def _prediction_row(row: dict, answer: str, cfg: PipelineConfig, seed: int) -> dict:
    gold = _gold_class(row, cfg)
    parsed = parse_answer(answer, cfg.categories)
    pred = finalize_prediction(parsed, gold, rng_seed=seed)
    return {
        "participant_id": row["participant_id"],
        "exchange_id": row["exchange_id"],
        "gold": gold.label,
        "predicted": pred.predicted.label,
        "provenance": pred.provenance.value,
        "raw_answer": answer,
    }


def _resume_key(header_line: str) -> dict | None:
    """Config echo minus service.* keys; None when the line is no header."""
    try:
        echo = json.loads(header_line)["config"]
    except (ValueError, TypeError, KeyError):
        return None
    if not isinstance(echo, dict):
        return None
    return {k: v for k, v in echo.items() if not k.startswith("service.")}


def _predict_one_run(rows: list[dict], cfg: PipelineConfig, run_seed: int,
                     paths: StagePaths) -> dict:
    out_path = paths.predictions(run_seed)
    reqs = [
        build_prompt(
            # cmd_compose already validated the method; rebuild the typed input
            _combined_from_row(row),
            cfg.categories,
            key=(row["participant_id"], row["exchange_id"]),
        )
        for row in rows
    ]

    header = _header_line(cfg)
    done = 0
    if out_path.exists():
        existing = out_path.read_text(encoding="utf-8").splitlines()
        # service.* keys (endpoint, retry budget) may change between attempts
        # without invalidating rows already predicted
        if (existing
                and _resume_key(existing[0]) == _resume_key(header)
                and 0 < len(existing) - 1 < len(rows)):
            done = len(existing) - 1  # resume an interrupted run

    mode = "a" if done else "w"
    resumed = done
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open(mode, encoding="utf-8") as fh:
        if not done:
            fh.write(header + "\n")
        pending = list(enumerate(rows))[done:]
        with ThreadPoolExecutor(max_workers=max(1, cfg.service.max_in_flight)) as pool:
            futures = [(i, row, pool.submit(query_service, req, cfg.service))
                       for (i, row), req in zip(pending, reqs[done:])]
            try:
                for i, row, fut in futures:
                    answer = fut.result()
                    seed = run_seed * 1_000_003 + i
                    fh.write(json.dumps(_prediction_row(row, answer, cfg, seed),
                                        sort_keys=True) + "\n")
                    fh.flush()
                    done += 1
            except ServiceError:
                pool.shutdown(wait=False, cancel_futures=True)
                raise
    return {"run_seed": run_seed, "predicted": done, "resumed_at": resumed,
            "output": str(out_path)}


def _combined_from_row(row: dict) -> CombinedInput:
    return CombinedInput(text=row["text"],
                         method=CombinationMethod(row["method"]),
                         modalities=row["modalities"])


def cmd_predict(cfg: PipelineConfig) -> dict:
    paths = stage_paths(cfg)
    _, rows = read_jsonl(paths.composed)
    results = [_predict_one_run(rows, cfg, seed, paths) for seed in cfg.run_seeds]
    return {"runs": results}


def cmd_evaluate(cfg: PipelineConfig) -> dict:
    paths = stage_paths(cfg)
    corpus, _ = _load_clean_corpus(cfg)
    plan = make_folds(corpus, k=cfg.k, seed=cfg.fold_seed)

    matrix: list[list[float]] = []
    for seed in cfg.run_seeds:
        _, rows = read_jsonl(paths.predictions(seed))
        preds = {}
        golds = {}
        for row in rows:
            key = (row["participant_id"], row["exchange_id"])
            preds[key] = SentimentClass.from_label(row["predicted"])
            golds[key] = SentimentClass.from_label(row["gold"])
        matrix.append(fold_scores(corpus, plan, preds, golds))

    report = aggregate(matrix)
    doc = {
        "config": config_echo(cfg),
        "fold_seed": cfg.fold_seed,
        "run_seeds": list(cfg.run_seeds),
        **report.to_json_dict(),
    }
    paths.report_json.parent.mkdir(parents=True, exist_ok=True)
    paths.report_json.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                                 encoding="utf-8")
    csv_lines = ["run,fold,f1"]
    csv_lines += [f"{r},{f},{score!r}" for r, f, score in report.csv_rows()]
    paths.report_csv.write_text("\n".join(csv_lines) + "\n", encoding="utf-8")
    return {
        "report": doc,
        "json": str(paths.report_json),
        "csv": str(paths.report_csv),
    }


def render_report_table(doc: dict) -> str:
    """ASCII summary: one row per run plus the aggregate line."""
    k = len(doc["run_fold_scores"][0])
    header = ["run"] + [f"fold{f}" for f in range(k)] + ["mean"]
    rows = [header]
    for r, row in enumerate(doc["run_fold_scores"]):
        rows.append([f"run{doc['run_seeds'][r]}"] + [f"{v:.4f}" for v in row]
                    + [f"{doc['per_run_mean'][r]:.4f}"])
    widths = [max(len(row[c]) for row in rows) for c in range(len(header))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in rows]
    lines.append(f"final macro-F1: {doc['final_f1']:.6f}")
    return "\n".join(lines)
