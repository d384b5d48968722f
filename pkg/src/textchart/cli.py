"""Command-line interface: ``textchart <verb> [<noun>] [options]``.

Exit codes: 0 success, 1 usage error, 2 data or model error.

Global options (``--seed``, ``--verbose``, ``--config``) are accepted before
or after the subcommand. ``--config`` names a flat JSON object whose keys
mirror long flag names (``"learning-rate": 0.01`` or ``"learning_rate"``);
flags given on the command line take precedence over it.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .corpus import DatasetError, load_dataset, save_dataset, split_dataset
from .embeddings import load_vectors_file

log = logging.getLogger("textchart")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _globals_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS, help="random seed (default 0)")
    g.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS, help="log progress to stderr")
    g.add_argument("--config", default=argparse.SUPPRESS, help="JSON file of default flag values")
    return p


def _ratios(text: str) -> tuple[float, float, float]:
    try:
        parts = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid ratios {text!r}") from None
    if len(parts) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated ratios")
    return parts


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    """The parser plus a map from subcommand path (``"train mapper"``) to its parser."""
    parent = _globals_parent()
    kw = dict(parents=[parent], allow_abbrev=False)
    root = _Parser(prog="textchart", description="Turn analytical text into chart specifications.", **kw)
    root.add_argument("--version", action="version", version=f"textchart {__version__}")
    leaves: dict[str, argparse.ArgumentParser] = {}
    verbs = root.add_subparsers(dest="verb", metavar="COMMAND", parser_class=_Parser)

    def leaf(group, name, help_text, handler):
        p = group.add_parser(name, help=help_text, description=help_text, **kw)
        p.set_defaults(handler=handler)
        return p

    # data
    leaves["data"] = verbs.add_parser("data", help="dataset tooling", **kw)
    data = leaves["data"].add_subparsers(
        dest="noun", metavar="ACTION", parser_class=_Parser)
    p = leaves["data validate"] = leaf(data, "validate", "check a dataset file", cmd_data_validate)
    p.add_argument("file")
    p = leaves["data split"] = leaf(data, "split", "split a dataset into train/validation/test", cmd_data_split)
    p.add_argument("file")
    p.add_argument("--ratios", type=_ratios, default=(0.8, 0.1, 0.1), help="e.g. 0.8,0.1,0.1")
    p.add_argument("--out-dir")
    p = leaves["data synth"] = leaf(data, "synth", "generate a synthetic labeled corpus", cmd_data_synth)
    p.add_argument("--n", type=int, default=500)
    p.add_argument("--out")
    p = leaves["data vectors"] = leaf(data, "vectors", "write stand-in word vectors for a dataset's vocabulary",
                                      cmd_data_vectors)
    p.add_argument("--data")
    p.add_argument("--dim", type=int, default=48)
    p.add_argument("--out")

    # embed
    p = leaves["embed"] = leaf(verbs, "embed", "look up token vectors", cmd_embed)
    p.add_argument("--vectors")
    p.add_argument("--token", action="append")

    # train
    leaves["train"] = verbs.add_parser("train", help="train models", **kw)
    train = leaves["train"].add_subparsers(
        dest="noun", metavar="MODEL", parser_class=_Parser)
    p = leaves["train tagger"] = leaf(train, "tagger", "train an entity tagger", cmd_train_tagger)
    p.add_argument("--mode", choices=["x", "y", "combined"], default="combined")
    _training_args(p)
    p = leaves["train mapper"] = leaf(train, "mapper", "train an x-to-y mapper", cmd_train_mapper)
    p.add_argument("--data")
    p.add_argument("--model", choices=["baseline", "forest"], default="forest")
    p.add_argument("--trees", type=int, default=33)
    p.add_argument("--out")
    p = leaves["train charttype"] = leaf(train, "charttype", "train a pie or line classifier", cmd_train_charttype)
    p.add_argument("--target", choices=["pie", "line"])
    _training_args(p)
    p = leaves["train all"] = leaf(train, "all", "train every pipeline model into one directory", cmd_train_all)
    p.add_argument("--data")
    p.add_argument("--validation")
    p.add_argument("--vectors")
    p.add_argument("--out-dir")
    p.add_argument("--epochs", type=int, help="tagger epochs")
    p.add_argument("--chart-epochs", type=int, help="chart classifier epochs")
    p.add_argument("--trees", type=int, default=33)

    # eval
    leaves["eval"] = verbs.add_parser("eval", help="evaluate models", **kw)
    ev = leaves["eval"].add_subparsers(
        dest="noun", metavar="MODEL", parser_class=_Parser)
    for name, handler in (("tagger", cmd_eval_tagger), ("mapper", cmd_eval_mapper),
                          ("charttype", cmd_eval_charttype)):
        p = leaves[f"eval {name}"] = leaf(ev, name, f"evaluate a {name} model", handler)
        p.add_argument("--model")
        p.add_argument("--data")
        p.add_argument("--report", help="write the JSON report here")
        if name == "charttype":
            p.add_argument("--threshold", type=float, default=0.5)
    p = leaves["eval pipeline"] = leaf(ev, "pipeline", "stage-wise error accounting", cmd_eval_pipeline)
    p.add_argument("--models")
    p.add_argument("--data")
    p.add_argument("--report")
    p.add_argument("--threshold", type=float, default=0.5)
    p.add_argument("--workers", type=int, default=1)

    # predict / render
    p = leaves["predict"] = leaf(verbs, "predict", "text to chart spec", cmd_predict)
    p.add_argument("--text", help="the text, or a path to a file holding it")
    p.add_argument("--models")
    p.add_argument("--threshold", type=float, default=0.5)
    out = p.add_mutually_exclusive_group()
    out.add_argument("--json", action="store_true", help="print the chart spec as JSON")
    out.add_argument("--svg", help="render the chart to this SVG file")
    p.add_argument("--type", choices=["bar", "pie", "line"], help="chart type for --svg")
    p = leaves["render"] = leaf(verbs, "render", "render a chart spec file to SVG", cmd_render)
    p.add_argument("--spec")
    p.add_argument("--type", choices=["bar", "pie", "line"], default="bar")
    p.add_argument("--out")
    p.add_argument("--width", type=int, default=640)
    p.add_argument("--height", type=int, default=400)
    return root, leaves


def _training_args(p) -> None:
    p.add_argument("--data")
    p.add_argument("--validation", help="validation dataset (defaults to the training data)")
    p.add_argument("--vectors")
    p.add_argument("--out")
    p.add_argument("--preset", choices=["desk", "paper"], default="desk")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)


# ---------------------------------------------------------------- config


def _load_config(path: str) -> dict:
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise DatasetError(f"config {path} is not valid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(cfg, dict):
        raise DatasetError(f"config {path} must hold a JSON object")
    return {k.replace("-", "_"): v for k, v in cfg.items()}


def _explicit(action, argv) -> bool:
    return any(a == o or a.startswith(o + "=") for a in argv for o in action.option_strings)


def _apply_config(args, cfg: dict, parser, argv) -> None:
    actions = {a.dest: a for a in parser._actions if a.option_strings and a.dest not in ("help", "config")}
    unknown = sorted(set(cfg) - set(actions))
    if unknown:
        raise UsageError(f"textchart: error: unknown config keys: {', '.join(unknown)}")
    for key, value in cfg.items():
        action = actions[key]
        if _explicit(action, argv):
            continue
        if isinstance(action, argparse._StoreTrueAction):
            if not isinstance(value, bool):
                raise UsageError(f"textchart: error: config key {key!r} takes true or false")
        elif action.type is not None:
            try:
                value = action.type(str(value) if not isinstance(value, list) else ",".join(map(str, value)))
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"textchart: error: config key {key!r}: {exc}") from None
        if action.choices is not None and value not in action.choices:
            raise UsageError(f"textchart: error: config key {key!r} must be one of {sorted(action.choices)}")
        if isinstance(action, argparse._AppendAction) and not isinstance(value, list):
            value = [value]
        setattr(args, key, value)


def _need(args, *names: str) -> None:
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise UsageError(f"textchart: error: missing required option(s): {flags}")


# ---------------------------------------------------------------- helpers


def _write_json(path, payload) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _print_table(rows: list[tuple], header: tuple) -> None:
    widths = [max(len(str(r[i])) for r in [header] + rows) for i in range(len(header))]
    for r in [header] + rows:
        print("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip())


def _fmt(v: float) -> str:
    return f"{v:.4f}"


# ---------------------------------------------------------------- data


def cmd_data_validate(args) -> int:
    samples = load_dataset(args.file)
    n_x = sum(len(s.x_spans) for s in samples)
    n_y = sum(len(s.y_spans) for s in samples)
    print(f"{args.file}: {len(samples)} samples, {n_x} x entities, {n_y} y entities: OK")
    return 0


def cmd_data_split(args) -> int:
    _need(args, "out_dir")
    split = split_dataset(load_dataset(args.file), args.ratios, args.seed)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("train", "validation", "test"):
        part = getattr(split, name)
        save_dataset(part, out / f"{name}.jsonl")
        print(f"{name}: {len(part)} samples -> {out / f'{name}.jsonl'}")
    return 0


def cmd_data_synth(args) -> int:
    from .synth import generate_synthetic_corpus

    _need(args, "out")
    samples = generate_synthetic_corpus(args.n, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_dataset(samples, args.out)
    print(f"wrote {len(samples)} samples to {args.out}")
    return 0


def cmd_data_vectors(args) -> int:
    from .synth import synthetic_vectors

    _need(args, "data", "out")
    tokens = [t for s in load_dataset(args.data) for t in s.tokens]
    Path(args.out).write_text(synthetic_vectors(tokens, args.dim, args.seed), encoding="utf-8")
    print(f"wrote {len(set(tokens))} vectors of dimension {args.dim} to {args.out}")
    return 0


def cmd_embed(args) -> int:
    _need(args, "vectors", "token")
    table = load_vectors_file(args.vectors)
    for tok in args.token:
        vec = table.embed_token(tok)
        print(json.dumps({"token": tok, "in_vocabulary": tok in table,
                          "vector": [round(float(v), 6) for v in vec]}))
    return 0


# ---------------------------------------------------------------- train


def _overrides(args) -> dict:
    out = {"seed": args.seed}
    for name in ("epochs", "batch_size", "learning_rate"):
        if getattr(args, name, None) is not None:
            out[name] = getattr(args, name)
    return out


def cmd_train_tagger(args) -> int:
    from .tagger import TaggerConfig, save_tagger, tag_scores, train

    _need(args, "data", "vectors", "out")
    table = load_vectors_file(args.vectors)
    samples = load_dataset(args.data)
    val = load_dataset(args.validation) if args.validation else None
    mode = {"x": "individual_x", "y": "individual_y"}.get(args.mode, "combined")
    config = TaggerConfig.preset(args.preset, mode=mode, **_overrides(args))
    model = train(config, samples, val, table)
    save_tagger(model, args.out)
    score = tag_scores(model, val or samples, table)["harmonic_f1"]
    print(f"tagger ({mode}) saved to {args.out}; validation harmonic F1 {_fmt(score)}")
    return 0


def cmd_train_mapper(args) -> int:
    from .mapper import save_mapper, train_mapper

    _need(args, "data", "out")
    model = train_mapper(load_dataset(args.data), args.model, args.trees, args.seed)
    save_mapper(model, args.out)
    print(f"{args.model} mapper saved to {args.out}")
    return 0


def cmd_train_charttype(args) -> int:
    from .chart_type import ChartTypeConfig, save_chart_classifier, train_chart_classifier

    _need(args, "target", "data", "vectors", "out")
    table = load_vectors_file(args.vectors)
    samples = load_dataset(args.data)
    val = load_dataset(args.validation) if args.validation else None
    config = ChartTypeConfig.preset(args.preset, args.target, **_overrides(args))
    model = train_chart_classifier(config, samples, table, val)
    save_chart_classifier(model, args.out)
    best = max((h["val_mcc"] for h in model.history), default=float("nan"))
    print(f"{args.target} classifier saved to {args.out}; best validation MCC {_fmt(best)}")
    return 0


def cmd_train_all(args) -> int:
    from .chart_type import ChartTypeConfig, train_chart_classifier
    from .mapper import train_mapper
    from .pipeline import PipelineModels
    from .tagger import TaggerConfig, train

    _need(args, "data", "vectors", "out_dir")
    table = load_vectors_file(args.vectors)
    samples = load_dataset(args.data)
    val = load_dataset(args.validation) if args.validation else None
    tcfg = {"seed": args.seed} | ({"epochs": args.epochs} if args.epochs is not None else {})
    ccfg = {"seed": args.seed} | ({"epochs": args.chart_epochs} if args.chart_epochs is not None else {})
    log.info("training tagger")
    tagger = train(TaggerConfig(**tcfg), samples, val, table)
    log.info("training mapper")
    mapper = train_mapper(samples, "forest", args.trees, args.seed)
    charts = {}
    for target in ("pie", "line"):
        log.info("training %s classifier", target)
        charts[target] = train_chart_classifier(ChartTypeConfig(target=target, **ccfg), samples, table, val)
    PipelineModels(tagger, mapper, charts["pie"], charts["line"]).save(args.out_dir)
    print(f"models saved to {args.out_dir}")
    return 0


# ---------------------------------------------------------------- eval


def cmd_eval_tagger(args) -> int:
    from .tagger import load_tagger, tag_scores

    _need(args, "model", "data")
    model = load_tagger(args.model)
    if model.embeddings is None:
        raise DatasetError("tagger model carries no embedding table")
    report = tag_scores(model, load_dataset(args.data), model.embeddings)
    rows = [(k, _fmt(v["precision"]), _fmt(v["recall"]), _fmt(v["f1"]))
            for k, v in report.items() if isinstance(v, dict)]
    _print_table(rows, ("class", "precision", "recall", "f1"))
    print(f"harmonic F1  {_fmt(report['harmonic_f1'])}")
    if args.report:
        _write_json(args.report, report)
    return 0


def _print_binary(report: dict) -> None:
    rows = [(k, _fmt(v["precision"]), _fmt(v["recall"]), _fmt(v["f1"]))
            for k, v in report.items() if isinstance(v, dict) and "f1" in v]
    _print_table(rows, ("class", "precision", "recall", "f1"))


def cmd_eval_mapper(args) -> int:
    from .mapper import evaluate_mapper, load_mapper

    _need(args, "model", "data")
    report = evaluate_mapper(load_mapper(args.model), load_dataset(args.data))
    _print_binary(report)
    print(f"harmonic F1  {_fmt(report['harmonic_f1'])}")
    print(f"auROC        {_fmt(report['auroc'])}")
    if args.report:
        _write_json(args.report, report)
    return 0


def cmd_eval_charttype(args) -> int:
    from .chart_type import labels_for, load_chart_classifier, scores
    from .metrics import classifier_report

    _need(args, "model", "data")
    model = load_chart_classifier(args.model)
    if model.embeddings is None:
        raise DatasetError("chart-type model carries no embedding table")
    samples = load_dataset(args.data)
    s = scores(model, [model.embeddings.embed_sequence(x.tokens) for x in samples])
    report = classifier_report(labels_for(samples, model.config.target), s, args.threshold)
    report["target"] = model.config.target
    for key in ("specificity", "sensitivity", "mcc", "auroc"):
        print(f"{key:<12} {_fmt(report[key])}")
    if args.report:
        _write_json(args.report, report)
    return 0


def cmd_eval_pipeline(args) -> int:
    from .pipeline import PipelineModels, evaluate_pipeline

    _need(args, "models", "data", "report")
    models = PipelineModels.load(args.models, args.threshold)
    result = evaluate_pipeline(models, load_dataset(args.data), workers=args.workers)
    n = len(result.reports)
    print(f"samples {n}; exact spec match {_fmt(result.exact_match)}; unchartable {result.unchartable}")
    _print_table([(s, result.totals[s], sum(r.counts()[s] > 0 for r in result.reports))
                  for s in result.totals], ("stage", "errors", "samples with errors"))
    print("cumulative frequency (samples with <= k errors)")
    width = max(max(t) for t in result.cumulative.values()) + 1
    rows = [(s,) + tuple(t.get(k, n) for k in range(width)) for s, t in result.cumulative.items()]
    _print_table(rows, ("stage",) + tuple(f"k={k}" for k in range(width)))
    _write_json(args.report, result.as_dict())
    return 0


# ---------------------------------------------------------------- predict / render


def _preferred_type(types) -> str:
    return "line" if "line" in types else "pie" if "pie" in types else "bar"


def cmd_predict(args) -> int:
    from .pipeline import PipelineModels, Unchartable, run_pipeline
    from .render import RenderConfig, coerce_numeric, render_svg

    _need(args, "text", "models")
    text = args.text
    try:
        if Path(text).is_file():
            text = Path(text).read_text(encoding="utf-8")
    except OSError:  # too long or otherwise not a usable path: treat as literal text
        pass
    outcome = run_pipeline(text, PipelineModels.load(args.models, args.threshold))
    if isinstance(outcome, Unchartable):
        t = outcome.trace
        partial = {"unchartable": outcome.reason,
                   "x_entities": [s.surface for s in t.x_spans],
                   "y_entities": [s.surface for s in t.y_spans]}
        if args.svg:
            print(f"textchart: error: cannot render: {outcome.reason}", file=sys.stderr)
            return 2
        print(json.dumps(partial) if args.json else f"unchartable text: {outcome.reason}")
        return 0
    if args.svg:
        kind = args.type or _preferred_type(outcome.chart_types)
        Path(args.svg).write_bytes(render_svg(coerce_numeric(outcome), kind, RenderConfig()))
        print(f"{kind} chart written to {args.svg}")
    elif args.json:
        print(json.dumps(outcome.to_dict()))
    else:
        print("x entities: " + json.dumps(list(outcome.x_labels)))
        print("y entities: " + json.dumps(list(outcome.y_values)))
        print("chart types: " + ", ".join(t for t in ("bar", "pie", "line") if t in outcome.chart_types))
    return 0


def cmd_render(args) -> int:
    from .pipeline import ChartSpec
    from .render import RenderConfig, coerce_numeric, render_svg

    _need(args, "spec", "out")
    try:
        record = json.loads(Path(args.spec).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{args.spec} is not valid JSON: {exc.msg}", exc.lineno) from None
    if not isinstance(record, dict):
        raise DatasetError(f"{args.spec} must hold a JSON object")
    record = dict(record)
    record["y_values"] = [str(v) for v in record.get("y_values", [])]
    record.setdefault("chart_types", ["bar"])
    spec = ChartSpec.from_dict(record)
    svg = render_svg(coerce_numeric(spec), args.type, RenderConfig(args.width, args.height))
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    Path(args.out).write_bytes(svg)
    print(f"{args.type} chart written to {args.out}")
    return 0


# ---------------------------------------------------------------- entry point


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, leaves = build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help / --version
            return int(exc.code or 0)
        handler = getattr(args, "handler", None)
        if handler is None:
            sub = leaves.get(getattr(args, "verb", None), parser)
            raise UsageError(f"textchart: error: a subcommand is required\n{sub.format_help()}")
        key = " ".join(v for v in (args.verb, getattr(args, "noun", None)) if v)
        if getattr(args, "config", None):
            _apply_config(args, _load_config(args.config), leaves[key], argv)
        args.seed = getattr(args, "seed", 0)
        args.verbose = getattr(args, "verbose", False)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return 1
    except DatasetError as exc:
        print(f"textchart: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr, force=True)
    try:
        return handler(args)
    except UsageError as exc:
        print(str(exc).rstrip(), file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as exc:
        # DatasetError, EmbeddingError, ModelFormatError and RenderError are ValueErrors
        msg = exc.strerror + f": {exc.filename}" if isinstance(exc, OSError) and exc.strerror else str(exc)
        print(f"textchart: error: {msg}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
