"""Command-line front door tying the library into reproducible batch runs.

Every command prints a single JSON summary object as the final stdout
line (``render-prompt`` without ``--out`` is the documented exception: it
must reproduce the prompt byte-exactly).  Commands that write an output
artifact drop a ``<artifact>.manifest.json`` next to it recording the
resolved configuration, seed, and tool version; re-running with the same
manifest configuration reproduces the artifact byte for byte.

Exit codes: 0 success, 64 bad arguments or program syntax errors, 65
program runtime errors, 66 I/O failures or a missing ``Answer``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__, charts, evalkit, potgen, potlang, tokmerge

EXIT_OK = 0
EXIT_USAGE = 64
EXIT_RUNTIME = 65
EXIT_IO = 66


class _CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _CliError(EXIT_USAGE, message)


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: int | None
    tool_version: str
    inputs: list[str]
    outputs: list[str]
    duration_s: float


def _write_manifest(out_path: str, command: str, config: dict, seed: int | None,
                    inputs: list[str], outputs: list[str], started: float) -> None:
    manifest = RunManifest(
        command=command,
        config={k: v for k, v in sorted(config.items())},
        seed=seed,
        tool_version=__version__,
        inputs=sorted(inputs),
        outputs=sorted(outputs),
        duration_s=round(time.time() - started, 6),
    )
    with open(out_path + ".manifest.json", "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _summary(obj: dict) -> None:
    print(json.dumps(obj, sort_keys=True))


def _load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        import tomli as tomllib
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot read config file: {exc}")
    except tomllib.TOMLDecodeError as exc:
        raise _CliError(EXIT_USAGE, f"bad config file: {exc}")


def _config_defaults(config: dict, command: str) -> dict:
    # flags > config file > built-in defaults; config keys use flag names
    # with dashes or underscores
    section = config.get(command, {})
    return {k.replace("-", "_"): v for k, v in section.items()}


def _read_table_file(path: str) -> charts.ChartTable:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot read table: {exc}")
    try:
        return charts.parse_table(text)
    except charts.MalformedTable as exc:
        raise _CliError(EXIT_IO, f"{path}: {exc}")


def _parse_schedule(args) -> tuple[int, ...]:
    if args.schedule is not None:
        try:
            schedule = tuple(int(x) for x in args.schedule.split(",") if x.strip() != "")
        except ValueError:
            raise _CliError(EXIT_USAGE, f"bad schedule {args.schedule!r}")
        if len(schedule) != args.layers:
            raise _CliError(EXIT_USAGE, f"schedule has {len(schedule)} entries for {args.layers} layers")
        return schedule
    return tokmerge.uniform_merge_schedule(args.layers, args.merge_r)


# ---------------------------------------------------------------------------
# Commands


def cmd_gen_pot(args) -> int:
    started = time.time()
    if args.templates == "builtin":
        templates = list(potgen.BUILTIN_TEMPLATES)
    else:
        try:
            templates = potgen.load_templates(args.templates)
        except OSError as exc:
            raise _CliError(EXIT_IO, f"cannot read templates: {exc}")
        except potgen.TemplateError as exc:
            raise _CliError(EXIT_USAGE, str(exc))
    try:
        names = sorted(n for n in os.listdir(args.tables) if n.endswith(".txt"))
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot list tables: {exc}")

    records: list[charts.DatasetRecord] = []
    for name in names:
        table = _read_table_file(os.path.join(args.tables, name))
        image_id = os.path.splitext(name)[0]
        try:
            records.extend(potgen.instantiate_templates(
                table, image_id, templates, seed=args.seed, cap_per_template=args.cap
            ))
        except potgen.TemplateError as exc:
            raise _CliError(EXIT_USAGE, str(exc))
    per_template = _per_template_yield(records, templates)

    try:
        charts.write_records(args.out, records)
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot write records: {exc}")
    _write_manifest(args.out, "gen-pot",
                    {"tables": args.tables, "templates": args.templates, "cap": args.cap},
                    args.seed, [args.tables], [args.out], started)
    print(f"images: {len(names)}")
    print(f"records: {len(records)}")
    for template_id, count in sorted(per_template.items()):
        print(f"  {template_id}: {count}")
    _summary({"command": "gen-pot", "images": len(names), "records": len(records),
              "per_template": per_template, "out": args.out})
    return EXIT_OK


def _per_template_yield(records, templates) -> dict[str, int]:
    import re as _re
    counts = {t.id: 0 for t in templates}
    matchers = []
    for t in templates:
        literal = _re.sub(r"<[a-z_]+>", "", t.question_template)
        pattern = _re.sub(r"<[a-z_]+>", ".+?", _re.escape(t.question_template))
        matchers.append((len(literal), t.id, _re.compile("^" + pattern + "$")))
    # most-literal templates first, so generic patterns cannot shadow
    # specific ones (informational counts only)
    matchers.sort(key=lambda m: -m[0])
    for record in records:
        for _, template_id, matcher in matchers:
            if matcher.match(record.question):
                counts[template_id] += 1
                break
    return counts


def cmd_exec_pot(args) -> int:
    if args.inline is not None:
        text = args.inline
    else:
        try:
            with open(args.program, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise _CliError(EXIT_IO, f"cannot read program: {exc}")
    try:
        program = potlang.parse_program(text)
    except potlang.PotParseError as exc:
        raise _CliError(EXIT_USAGE, f"parse error: {exc}")
    try:
        result = potlang.execute(program)
    except potlang.MissingAnswer as exc:
        raise _CliError(EXIT_IO, str(exc))
    except potlang.PotRuntimeError as exc:
        raise _CliError(EXIT_RUNTIME, f"runtime error: {exc}")
    answer = potlang.render_answer(result.answer)
    print(answer)
    _summary({"command": "exec-pot", "answer": answer,
              "statements": len(program.statements)})
    return EXIT_OK


def cmd_validate_pot(args) -> int:
    started = time.time()
    try:
        records = charts.read_records(args.records)
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot read records: {exc}")
    except charts.RecordDecodeError as exc:
        raise _CliError(EXIT_IO, f"bad records file: {exc}")

    accepted: list[charts.DatasetRecord] = []
    rejects: list[dict] = []
    counts = {status: 0 for status in potgen.VERDICT_STATUSES}
    skipped_no_gold = 0
    for record in records:
        if not record.gold_answer:
            skipped_no_gold += 1
            rejects.append({"image_id": record.image_id, "question": record.question,
                            "status": "skipped_no_gold", "detail": ""})
            continue
        verdict = potgen.validate_pot(record.pot_answer, record.gold_answer)
        counts[verdict.status] += 1
        if verdict.accepted:
            accepted.append(record)
        else:
            rejects.append({"image_id": record.image_id, "question": record.question,
                            "status": verdict.status, "detail": verdict.detail})

    try:
        charts.write_records(args.out, accepted)
        log_path = args.log or (args.out + ".rejects.jsonl")
        with open(log_path, "w", encoding="utf-8") as fh:
            for entry in rejects:
                fh.write(json.dumps(entry, ensure_ascii=False) + "\n")
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot write output: {exc}")
    _write_manifest(args.out, "validate-pot", {"records": args.records, "log": log_path},
                    None, [args.records], [args.out, log_path], started)
    for status in potgen.VERDICT_STATUSES:
        print(f"{status}: {counts[status]}")
    if skipped_no_gold:
        print(f"skipped_no_gold: {skipped_no_gold}")
    _summary({"command": "validate-pot", "out": args.out, "log": log_path,
              "skipped_no_gold": skipped_no_gold, **counts})
    return EXIT_OK


def cmd_render_prompt(args) -> int:
    started = time.time()
    table = _read_table_file(args.table)
    prompt = potgen.render_gpt_prompt(table, args.question, args.gold)
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                fh.write(prompt)
        except OSError as exc:
            raise _CliError(EXIT_IO, f"cannot write prompt: {exc}")
        _write_manifest(args.out, "render-prompt",
                        {"table": args.table, "question": args.question, "gold": args.gold},
                        None, [args.table], [args.out], started)
        _summary({"command": "render-prompt", "out": args.out, "chars": len(prompt)})
    else:
        # byte-exact prompt on stdout; no summary line here by design
        sys.stdout.write(prompt)
    return EXIT_OK


def cmd_stats(args) -> int:
    try:
        records = charts.read_records(args.records)
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot read records: {exc}")
    except charts.RecordDecodeError as exc:
        raise _CliError(EXIT_IO, f"bad records file: {exc}")
    stats = potgen.dataset_stats(records, top_k=args.top_k)
    print(f"samples: {stats.num_samples}")
    print(f"images: {stats.num_images}")
    print(f"avg answer chars: {stats.avg_answer_chars:.2f}")
    print(f"avg answer tokens: {stats.avg_answer_tokens:.2f}")
    for bigram, count in stats.top_bigrams:
        print(f"  {bigram}: {count}")
    _summary({"command": "stats", "num_samples": stats.num_samples,
              "num_images": stats.num_images,
              "avg_answer_chars": stats.avg_answer_chars,
              "avg_answer_tokens": stats.avg_answer_tokens,
              "top_bigrams": [[b, c] for b, c in stats.top_bigrams]})
    return EXIT_OK


def _read_qa_items(path: str) -> list[evalkit.QAItem]:
    items = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    obj = json.loads(line)
                    items.append(evalkit.QAItem(
                        question=obj["question"],
                        gold=obj["gold"],
                        direct_answer=obj.get("direct_answer"),
                        pot_program=obj.get("pot_program"),
                    ))
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise _CliError(EXIT_IO, f"{path} line {lineno}: {exc}")
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot read predictions: {exc}")
    return items


def cmd_eval_qa(args) -> int:
    items = _read_qa_items(args.predictions)
    if not items:
        raise _CliError(EXIT_IO, "no predictions to evaluate")
    try:
        report = evalkit.relaxed_accuracy(items, args.setting)
    except evalkit.MissingField as exc:
        raise _CliError(EXIT_IO, str(exc))
    per_setting = {}
    for setting in evalkit.SETTINGS:
        try:
            per_setting[setting] = evalkit.relaxed_accuracy(items, setting).overall
        except evalkit.MissingField:
            per_setting[setting] = None
    print(f"setting: {report.setting}")
    print(f"overall: {report.overall:.4f} ({report.n} questions)")
    if report.calculative is not None:
        print(f"calculative: {report.calculative:.4f} ({report.n_calculative})")
    if report.non_calculative is not None:
        print(f"non-calculative: {report.non_calculative:.4f} ({report.n_non_calculative})")
    for setting, accuracy in per_setting.items():
        if accuracy is not None and setting != report.setting:
            print(f"  [{setting}] {accuracy:.4f}")
    _summary({"command": "eval-qa", "setting": report.setting,
              "overall": report.overall, "n": report.n,
              "calculative": report.calculative, "n_calculative": report.n_calculative,
              "non_calculative": report.non_calculative,
              "n_non_calculative": report.n_non_calculative,
              "per_setting": per_setting})
    return EXIT_OK


def cmd_eval_table(args) -> int:
    pred = evalkit.TableTriples.from_chart_table(_read_table_file(args.pred))
    gold = evalkit.TableTriples.from_chart_table(_read_table_file(args.gold))
    score = evalkit.rms_f1(pred, gold)
    print(f"precision: {score.precision:.4f}")
    print(f"recall: {score.recall:.4f}")
    print(f"f1: {score.f1:.4f}")
    _summary({"command": "eval-table", "precision": score.precision,
              "recall": score.recall, "f1": score.f1})
    return EXIT_OK


def cmd_eval_text(args) -> int:
    try:
        with open(args.candidates, "r", encoding="utf-8") as fh:
            candidates = [line.rstrip("\n") for line in fh]
        with open(args.references, "r", encoding="utf-8") as fh:
            references = [line.rstrip("\n") for line in fh]
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot read inputs: {exc}")
    candidates = [c for c in candidates if c.strip()]
    references = [r for r in references if r.strip()]
    if len(candidates) != len(references) or not candidates:
        raise _CliError(EXIT_IO, f"{len(candidates)} candidates vs {len(references)} references")
    scores = [evalkit.bleu4(c, [r]) for c, r in zip(candidates, references)]
    mean = sum(scores) / len(scores)
    print(f"bleu4: {mean:.4f} ({len(scores)} pairs)")
    _summary({"command": "eval-text", "bleu4": mean, "pairs": len(scores)})
    return EXIT_OK


def cmd_simulate_merge(args) -> int:
    started = time.time()
    schedule = _parse_schedule(args)
    try:
        cfg = tokmerge.EncoderConfig(
            d_model=args.d_model, n_heads=args.heads, n_layers=args.layers,
            merge_schedule=schedule, patch_size=args.patch,
            mlp_ratio=args.mlp_ratio, weight_seed=args.seed,
        )
    except ValueError as exc:
        raise _CliError(EXIT_USAGE, str(exc))
    if args.width < args.patch or args.height < args.patch:
        raise _CliError(EXIT_USAGE, "image smaller than one patch")
    grid_w = args.width // args.patch
    grid_h = args.height // args.patch
    t0 = grid_w * grid_h
    try:
        trace = tokmerge.merge_length_trace(t0, cfg.merge_schedule)
    except tokmerge.ScheduleExhaustsTokens as exc:
        raise _CliError(EXIT_USAGE, str(exc))
    flops = tokmerge.flops_estimate(trace, cfg.d_model, cfg.n_heads, cfg.mlp_ratio)

    outputs = []
    if args.visualize:
        # drive the real encoder on a seeded random image and check that
        # its traced lengths match the analytic trace
        rng = np.random.default_rng(args.seed)
        image = rng.standard_normal((args.height, args.width, 3))
        result = tokmerge.encode_image(image, cfg)
        if result.trace != trace:
            raise _CliError(EXIT_RUNTIME, "forward-pass trace diverged from length arithmetic")
        grid = tokmerge.merge_visualization(result.tokens, grid_w, grid_h, top_k=args.top_k)
        try:
            tokmerge.write_ppm(grid, args.visualize)
            outputs.append(args.visualize)
            if args.grid_csv:
                with open(args.grid_csv, "w", encoding="utf-8") as fh:
                    fh.write(tokmerge.grid_to_csv(grid))
                outputs.append(args.grid_csv)
        except OSError as exc:
            raise _CliError(EXIT_IO, f"cannot write visualization: {exc}")
        _write_manifest(args.visualize, "simulate-merge",
                        {"width": args.width, "height": args.height, "patch": args.patch,
                         "layers": args.layers, "heads": args.heads, "d_model": args.d_model,
                         "schedule": ",".join(str(r) for r in schedule),
                         "mlp_ratio": args.mlp_ratio, "top_k": args.top_k},
                        args.seed, [], outputs, started)

    print(f"initial length: {t0}")
    print("trace: " + " ".join(str(t) for t in trace))
    print(f"final length: {trace[-1]}")
    print(f"flops estimate (MACs): {flops:.6g}")
    _summary({"command": "simulate-merge", "initial_length": t0, "trace": trace,
              "final_length": trace[-1], "flops": flops,
              "visualize": args.visualize})
    return EXIT_OK


def cmd_generate_gpt(args) -> int:
    started = time.time()
    endpoint = os.environ.get("CHARTPOT_LLM_ENDPOINT")
    if endpoint:
        client = potgen.HttpLLMClient(
            endpoint, api_key=os.environ.get("CHARTPOT_LLM_API_KEY"), timeout=args.timeout
        )
    elif args.mock_responses:
        try:
            with open(args.mock_responses, "r", encoding="utf-8") as fh:
                responses = [json.loads(line) for line in fh if line.strip()]
        except (OSError, json.JSONDecodeError) as exc:
            raise _CliError(EXIT_IO, f"cannot read mock responses: {exc}")
        client = potgen.MockLLMClient(responses, timeout=args.timeout)
    else:
        client = potgen.MockLLMClient([], timeout=args.timeout)

    tasks = []
    try:
        with open(args.questions, "r", encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                obj = json.loads(line)
                table = _read_table_file(os.path.join(args.tables, obj["image_id"] + ".txt"))
                tasks.append(potgen.GenerationTask(
                    table=table, image_id=obj["image_id"],
                    question=obj["question"], gold_answer=obj["gold"],
                ))
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot read questions: {exc}")
    except (json.JSONDecodeError, KeyError) as exc:
        raise _CliError(EXIT_IO, f"bad questions file: {exc}")

    report = potgen.generate_gpt_records(client, tasks)
    try:
        charts.write_records(args.out, report.records)
    except OSError as exc:
        raise _CliError(EXIT_IO, f"cannot write records: {exc}")
    _write_manifest(args.out, "generate-gpt",
                    {"tables": args.tables, "questions": args.questions,
                     "endpoint_set": bool(endpoint)},
                    None, [args.tables, args.questions], [args.out], started)
    print(f"accepted: {report.accepted}")
    print(f"rejected: {len(report.rejections)}")
    _summary({"command": "generate-gpt", "accepted": report.accepted,
              "rejected": len(report.rejections), "out": args.out})
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument wiring


def build_parser() -> tuple[_Parser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="chartpot", description=__doc__)
    parser.add_argument("--config", default=None, help="TOML config file; flags override it")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-pot", help="instantiate templates over a directory of tables")
    p.add_argument("--tables", required=True)
    p.add_argument("--templates", default="builtin", help="template pack path, or 'builtin'")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=8, help="max records per template per chart")
    p.set_defaults(func=cmd_gen_pot)

    p = sub.add_parser("exec-pot", help="run one program and print its Answer")
    p.add_argument("program", nargs="?", help="program file")
    p.add_argument("--inline", default=None, help="program text given directly")
    p.set_defaults(func=cmd_exec_pot)

    p = sub.add_parser("validate-pot", help="screen records by executing their programs")
    p.add_argument("--records", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log", default=None, help="rejection log path (default <out>.rejects.jsonl)")
    p.set_defaults(func=cmd_validate_pot)

    p = sub.add_parser("render-prompt", help="render the generation prompt for one question")
    p.add_argument("--table", required=True)
    p.add_argument("--question", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--out", default=None, help="write the prompt to a file instead of stdout")
    p.set_defaults(func=cmd_render_prompt)

    p = sub.add_parser("stats", help="dataset statistics over a record file")
    p.add_argument("--records", required=True)
    p.add_argument("--top-k", type=int, default=10)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval-qa", help="relaxed accuracy over a predictions file")
    p.add_argument("--predictions", required=True)
    p.add_argument("--setting", choices=evalkit.SETTINGS, default="combine")
    p.set_defaults(func=cmd_eval_qa)

    p = sub.add_parser("eval-table", help="table-extraction score between two table files")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.set_defaults(func=cmd_eval_table)

    p = sub.add_parser("eval-text", help="BLEU4 between line-aligned candidate/reference files")
    p.add_argument("--candidates", required=True)
    p.add_argument("--references", required=True)
    p.set_defaults(func=cmd_eval_text)

    p = sub.add_parser("simulate-merge", help="sequence-length and cost accounting for a merge schedule")
    p.add_argument("width", type=int)
    p.add_argument("height", type=int)
    p.add_argument("patch", type=int)
    p.add_argument("--layers", type=int, default=27)
    p.add_argument("--heads", type=int, default=4)
    p.add_argument("--d-model", type=int, default=64)
    p.add_argument("--merge-r", type=int, default=0, help="uniform r for all layers but the last")
    p.add_argument("--schedule", default=None, help="explicit comma-separated per-layer r")
    p.add_argument("--mlp-ratio", type=float, default=4.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--visualize", default=None, help="run the real encoder and write a PPM overlay")
    p.add_argument("--grid-csv", default=None, help="also write the label grid as CSV")
    p.add_argument("--top-k", type=int, default=10)
    p.set_defaults(func=cmd_simulate_merge)

    p = sub.add_parser("generate-gpt", help="prompt a generation client and keep validated programs")
    p.add_argument("--tables", required=True)
    p.add_argument("--questions", required=True, help="JSONL of {image_id, question, gold}")
    p.add_argument("--out", required=True)
    p.add_argument("--mock-responses", default=None, help="JSONL of canned completions (offline mode)")
    p.add_argument("--timeout", type=float, default=30.0)
    p.set_defaults(func=cmd_generate_gpt)

    return parser, dict(sub.choices)


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    try:
        # pre-scan for --config so its values become subcommand defaults
        config_path = None
        for i, token in enumerate(argv):
            if token == "--config" and i + 1 < len(argv):
                config_path = argv[i + 1]
            elif token.startswith("--config="):
                config_path = token.split("=", 1)[1]
        config = _load_config(config_path)
        for name, subparser in subparsers.items():
            defaults = _config_defaults(config, name)
            if defaults:
                subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
        return args.func(args)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except BrokenPipeError:
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
