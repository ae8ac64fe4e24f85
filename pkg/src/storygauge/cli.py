"""Command line driver.

Subcommands: ``import`` (CSV -> normalized backlog JSON), ``train`` (build
and store a bundle), ``score`` (single story or batch CSV), ``serve`` (REST
API), ``eval`` (regression of metric scores on expert ratings). Machine
output goes to stdout, diagnostics to stderr; exit codes are 0 on success,
1 on usage errors, 2 on data errors. A ``storygauge.toml`` in the working
directory (or ``--config``) provides defaults mirroring the project
configuration keys.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import evalstats
from .corpus import ImportMapping, JIRA_MAPPING, import_csv
from .errors import StoryGaugeError
from .metrics import CANONICAL_ORDER
from .pipeline import ProjectConfig, load_bundle, save_bundle, score, train

USAGE_EXIT = 1
DATA_EXIT = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(USAGE_EXIT)


def _load_config_file(path: str | None) -> dict:
    candidate = Path(path) if path else Path("storygauge.toml")
    if not candidate.exists():
        if path:
            raise StoryGaugeError(f"config file not found: {candidate}")
        return {}
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:
        try:
            import tomli as tomllib
        except ModuleNotFoundError as exc:
            raise StoryGaugeError(
                "reading TOML config needs Python >= 3.11 or the tomli package"
            ) from exc
    with open(candidate, "rb") as handle:
        return tomllib.load(handle)


def _mapping_from(args, config: dict) -> ImportMapping:
    if getattr(args, "preset", None) == "jira":
        base = JIRA_MAPPING
    else:
        section = config.get("mapping", {})
        base = ImportMapping(
            id_column=section.get("id_column", "id"),
            title_column=section.get("title_column", "title"),
            body_column=section.get("body_column", "description"),
            ac_markers=tuple(
                section.get("ac_markers", ImportMapping().ac_markers)
            ),
            attachment_markers=tuple(
                section.get("attachment_markers", ImportMapping().attachment_markers)
            ),
        )
    overrides = {}
    if getattr(args, "id_column", None):
        overrides["id_column"] = args.id_column
    if getattr(args, "title_column", None):
        overrides["title_column"] = args.title_column
    if getattr(args, "body_column", None):
        overrides["body_column"] = args.body_column
    if not overrides:
        return base
    return ImportMapping(
        id_column=overrides.get("id_column", base.id_column),
        title_column=overrides.get("title_column", base.title_column),
        body_column=overrides.get("body_column", base.body_column),
        ac_markers=base.ac_markers,
        attachment_markers=base.attachment_markers,
    )


def _project_config(args, config: dict, mapping: ImportMapping) -> ProjectConfig:
    section = config.get("project", {})
    return ProjectConfig(
        seed=args.seed if args.seed is not None else int(section.get("seed", 42)),
        k=args.k if args.k is not None else section.get("k"),
        thr=args.thr if args.thr is not None else float(section.get("thr", 0.2)),
        top_n=args.top_n if args.top_n is not None else int(section.get("top_n", 200)),
        min_len=args.min_len
        if args.min_len is not None
        else int(section.get("min_len", 3)),
        readability_profile=args.readability_profile
        or section.get("readability_profile", "published"),
        easy_words_path=args.easy_words or section.get("easy_words_path"),
        mapping=mapping,
    )


def _add_model_flags(parser):
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--k", type=int, default=None, help="topic count")
    parser.add_argument("--thr", type=float, default=None,
                        help="topic association threshold")
    parser.add_argument("--top-n", type=int, default=None,
                        help="glossary terms per selector")
    parser.add_argument("--min-len", type=int, default=None,
                        help="minimum glossary term length")
    parser.add_argument("--readability-profile",
                        choices=["published", "german"], default=None)
    parser.add_argument("--easy-words", default=None,
                        help="path to a custom easy-word list")


def _add_mapping_flags(parser):
    parser.add_argument("--preset", choices=["jira"], default=None)
    parser.add_argument("--id-column", default=None)
    parser.add_argument("--title-column", default=None)
    parser.add_argument("--body-column", default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="storygauge")
    parser.add_argument("--config", default=None,
                        help="TOML config file (default ./storygauge.toml)")
    commands = parser.add_subparsers(dest="command", required=True)

    p_import = commands.add_parser("import", help="validate a CSV export and "
                                   "write the normalized backlog JSON")
    p_import.add_argument("--csv", required=True)
    p_import.add_argument("--project", default="default")
    p_import.add_argument("--out", default="-", help="output path or - for stdout")
    _add_mapping_flags(p_import)

    p_train = commands.add_parser("train", help="train and store a bundle")
    p_train.add_argument("--project", required=True)
    p_train.add_argument("--csv", required=True)
    p_train.add_argument("--store", default="./storygauge_store")
    _add_mapping_flags(p_train)
    _add_model_flags(p_train)

    p_score = commands.add_parser("score", help="score one story or a CSV batch")
    p_score.add_argument("--project", required=True)
    p_score.add_argument("--store", default="./storygauge_store")
    p_score.add_argument("--in", dest="infile", default=None,
                         help="story text file (default: stdin)")
    p_score.add_argument("--text", default=None, help="story text inline")
    p_score.add_argument("--csv", default=None, help="batch score a CSV export")
    p_score.add_argument("--format", choices=["json", "table"], default="json")
    p_score.add_argument("--report-dir", default=None,
                         help="write figures and the score table here")
    _add_mapping_flags(p_score)

    p_serve = commands.add_parser("serve", help="run the REST API")
    p_serve.add_argument("--host", default=None)
    p_serve.add_argument("--port", type=int, default=None)
    p_serve.add_argument("--store", default=None)
    p_serve.add_argument("--cors-origin", default=None)

    p_eval = commands.add_parser("eval", help="regress metric scores on "
                                 "expert ratings")
    p_eval.add_argument("--ratings", required=True,
                        help="CSV with story_id, expert_id, rating")
    p_eval.add_argument("--scores", required=True,
                        help="CSV as written by 'score --csv'")
    p_eval.add_argument("--kappa-weighting", choices=["linear", "quadratic"],
                        default="quadratic")
    p_eval.add_argument("--iqr-factor", type=float, default=1.5)
    p_eval.add_argument("--pooled-outliers", action="store_true",
                        help="compute IQR fences over all experts at once")
    p_eval.add_argument("--format", choices=["json", "table"], default="json")
    p_eval.add_argument("--report-dir", default=None,
                        help="write figures and the regression table here")
    return parser


def _cmd_import(args, config) -> int:
    mapping = _mapping_from(args, config)
    backlog = import_csv(Path(args.csv).read_bytes(), mapping,
                         project_id=args.project)
    if backlog.skipped_count:
        print(f"skipped {backlog.skipped_count} row(s) without usable id/body",
              file=sys.stderr)
    payload = backlog.to_json()
    if args.out == "-":
        print(payload)
    else:
        Path(args.out).write_text(payload, encoding="utf-8")
        print(f"wrote {len(backlog.stories)} stories to {args.out}",
              file=sys.stderr)
    return 0


def _cmd_train(args, config) -> int:
    mapping = _mapping_from(args, config)
    backlog = import_csv(Path(args.csv).read_bytes(), mapping,
                         project_id=args.project)
    if backlog.skipped_count:
        print(f"skipped {backlog.skipped_count} row(s) without usable id/body",
              file=sys.stderr)
    bundle = train(backlog, _project_config(args, config, mapping))
    saved = save_bundle(bundle, args.store)
    print(saved.bundle_version)
    return 0


def _score_table(report) -> str:
    rows = [f"{'metric':<17} {'percent':>7}  {'band':<9}"]
    for entry in report.entries:
        percent = "-" if entry.percent is None else f"{entry.percent}%"
        band_name = entry.band.value if entry.band else "unavailable"
        rows.append(f"{entry.metric.value:<17} {percent:>7}  {band_name:<9}")
    return "\n".join(rows)


def _cmd_score(args, config) -> int:
    bundle = load_bundle(args.project, args.store)
    if args.csv:
        return _cmd_batch_score(args, config, bundle)
    if args.text is not None:
        text = args.text
    elif args.infile:
        text = Path(args.infile).read_text(encoding="utf-8")
    else:
        text = sys.stdin.read()
    report = score(bundle, text)
    if args.format == "table":
        print(_score_table(report))
    else:
        print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    return 0


def _batch_rows(bundle, backlog):
    header = (
        ["id"]
        + [m.value for m in CANONICAL_ORDER]
        + [f"{m.value}_band" for m in CANONICAL_ORDER]
    )
    rows = [header]
    for story in backlog.stories:
        report = score(bundle, story)
        values = []
        bands = []
        for entry in report.entries:
            values.append("" if entry.value is None else f"{entry.value:.6f}")
            bands.append(entry.band.value if entry.band else "")
        rows.append([story.id] + values + bands)
    return rows


def _cmd_batch_score(args, config, bundle) -> int:
    import csv as csv_mod

    mapping = _mapping_from(args, config)
    backlog = import_csv(Path(args.csv).read_bytes(), mapping,
                         project_id=args.project)
    if backlog.skipped_count:
        print(f"skipped {backlog.skipped_count} row(s) without usable id/body",
              file=sys.stderr)
    rows = _batch_rows(bundle, backlog)
    writer = csv_mod.writer(sys.stdout, lineterminator="\n")
    writer.writerows(rows)
    if args.report_dir:
        from . import figures

        report_dir = Path(args.report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        with open(report_dir / "scores.csv", "w", newline="",
                  encoding="utf-8") as handle:
            csv_mod.writer(handle, lineterminator="\n").writerows(rows)
        by_metric = {
            m.value: [
                float(row[1 + i])
                for row in rows[1:]
                if row[1 + i] != ""
            ]
            for i, m in enumerate(CANONICAL_ORDER)
        }
        figures.save_metric_distributions(
            by_metric, bundle.bands, report_dir / "metric_distributions.png"
        )
        print(f"report written to {report_dir}", file=sys.stderr)
    return 0


def _eval_table(report) -> str:
    reg = report.regression
    lines = [
        f"n stories used      {report.n_stories}",
        f"outlier ratings     {report.n_outlier_ratings} "
        f"({report.n_excluded} stories excluded)",
    ]
    for pair, result in sorted(report.kappa.items()):
        kappa = "undefined" if result.value is None else f"{result.value:.3f}"
        lines.append(f"weighted kappa      {pair}: {kappa} ({result.weighting})")
    lines.append(f"R squared           {reg.r_squared:.4f}")
    lines.append("")
    lines.append(f"{'predictor':<17} {'beta':>8} {'t':>9} {'p':>9} {'VIF':>8}")
    for predictor in reg.predictors:
        stars = ""
        if predictor.p_value < 0.001:
            stars = "***"
        elif predictor.p_value < 0.01:
            stars = "**"
        elif predictor.p_value < 0.05:
            stars = "*"
        vif_text = "-"
        if predictor.vif is not None:
            vif_text = "inf" if predictor.vif == float("inf") else f"{predictor.vif:.2f}"
            if predictor.vif_flagged:
                vif_text += "!"
        lines.append(
            f"{predictor.name:<17} {predictor.beta:>8.3f} {predictor.t_stat:>9.3f} "
            f"{predictor.p_value:>9.4f} {vif_text:>8} {stars}"
        )
    if reg.dropped:
        lines.append(f"dropped (no variance): {', '.join(reg.dropped)}")
    return "\n".join(lines)


def _cmd_eval(args, config) -> int:
    ratings = evalstats.load_ratings_csv(
        Path(args.ratings).read_text(encoding="utf-8")
    )
    metric_names = [m.value for m in CANONICAL_ORDER]
    score_ids, matrix = evalstats.load_scores_csv(
        Path(args.scores).read_text(encoding="utf-8"), metric_names
    )
    dataset = evalstats.build_dataset(ratings, score_ids, metric_names, matrix)
    report = evalstats.evaluate(
        dataset,
        iqr_factor=args.iqr_factor,
        pooled_outliers=args.pooled_outliers,
        kappa_weighting=args.kappa_weighting,
    )
    if args.format == "table":
        print(_eval_table(report))
    else:
        print(json.dumps(report.to_dict(), ensure_ascii=False, indent=2))
    if args.report_dir:
        import csv as csv_mod

        from . import figures

        report_dir = Path(args.report_dir)
        report_dir.mkdir(parents=True, exist_ok=True)
        with open(report_dir / "regression.csv", "w", newline="",
                  encoding="utf-8") as handle:
            writer = csv_mod.writer(handle, lineterminator="\n")
            writer.writerow(["predictor", "beta", "t", "p", "vif", "vif_flagged"])
            for predictor in report.regression.predictors:
                writer.writerow([
                    predictor.name,
                    f"{predictor.beta:.6f}",
                    f"{predictor.t_stat:.6f}",
                    f"{predictor.p_value:.6f}",
                    "" if predictor.vif is None else repr(predictor.vif),
                    predictor.vif_flagged,
                ])
        figures.save_rating_distributions(
            dataset.ratings_by_expert, report.kappa,
            report_dir / "rating_distributions.png",
        )
        figures.save_beta_weights(
            report.regression, report_dir / "beta_weights.png"
        )
        print(f"report written to {report_dir}", file=sys.stderr)
    return 0


def _cmd_serve(args, config) -> int:
    from .server import run_server

    section = config.get("server", {})
    run_server(
        host=args.host or section.get("host"),
        port=args.port or (int(section["port"]) if "port" in section else None),
        store=args.store or section.get("store"),
        cors_origin=args.cors_origin or section.get("cors_origin"),
    )
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE_EXIT
    try:
        config = _load_config_file(args.config)
        handler = {
            "import": _cmd_import,
            "train": _cmd_train,
            "score": _cmd_score,
            "serve": _cmd_serve,
            "eval": _cmd_eval,
        }[args.command]
        return handler(args, config)
    except StoryGaugeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DATA_EXIT


if __name__ == "__main__":
    sys.exit(main())
