"""Command-line pipeline: gen-data, train, explain, report.

Every config field lives in a JSON file (--config) and can be overridden by
a flag of the same name.  All randomness flows from one seed through
counter-based streams, so a full run is reproducible byte for byte,
independent of --workers.
"""

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import core, report
from .dataset import (
    DatasetError,
    SyntheticSpec,
    count_outlier_rows,
    generate_synthetic,
    load_csv,
    split_by_column_threshold,
    write_csv,
)
from .ensemble import GbrModel, ModelError, fit_gbr
from .surrogate import SurrogateError, rank_frequency


class CliError(Exception):
    pass


CONFIG_DEFAULTS = {
    # data
    "data": "dataset.csv",
    "target_column": "target",
    "drop_policy": "drop-row",
    "split_column": "period",
    "split_threshold": 8.0,
    # synthetic generator
    "n_features": 10,
    "n_rows": 5000,
    "outlier_fraction": 0.05,
    "noise_sigma": 1.0,
    # model
    "n_trees": 100,
    "max_depth": 3,
    "learning_rate": 0.1,
    "min_samples_leaf": 1,
    # explanation
    "n": 5,
    "m": 10000,
    "min_stratum": 30,
    "num_samples": 5000,
    "kernel_width": None,
    # run
    "seed": 0,
    "out_dir": None,  # falls back to $MCBRP_OUT_DIR, then "out"
    "workers": 1,
    "r_sample": 300,  # cap on reasonable-prediction instances explained for stats
}

_FLAG_TYPES = {
    "data": str, "target_column": str, "drop_policy": str, "split_column": str,
    "split_threshold": float, "n_features": int, "n_rows": int,
    "outlier_fraction": float, "noise_sigma": float, "n_trees": int,
    "max_depth": int, "learning_rate": float, "min_samples_leaf": int,
    "n": int, "m": int, "min_stratum": int, "num_samples": int,
    "kernel_width": float, "seed": int, "out_dir": str, "workers": int,
    "r_sample": int,
}


def load_config(args: argparse.Namespace) -> dict:
    config = dict(CONFIG_DEFAULTS)
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = set(loaded) - set(CONFIG_DEFAULTS)
        if unknown:
            raise CliError(f"unknown config fields: {sorted(unknown)}")
        config.update(loaded)
    for name in CONFIG_DEFAULTS:
        value = getattr(args, name.replace("-", "_"), None)
        if value is not None:
            config[name] = value
    if config["out_dir"] is None:
        config["out_dir"] = os.environ.get("MCBRP_OUT_DIR", "out")
    return config


def _out_dir(config: dict) -> Path:
    path = Path(config["out_dir"])
    path.mkdir(parents=True, exist_ok=True)
    return path


def _model_params(config: dict) -> dict:
    return {
        "n_trees": config["n_trees"],
        "max_depth": config["max_depth"],
        "learning_rate": config["learning_rate"],
        "min_samples_leaf": config["min_samples_leaf"],
        "seed": config["seed"],
    }


def _load_state(config: dict):
    """Dataset + split + model + taxonomy as produced by a prior train run."""
    ds = load_csv(config["data"], config["target_column"], config["drop_policy"])
    split = split_by_column_threshold(ds, config["split_column"], config["split_threshold"])
    model_path = Path(config["out_dir"]) / "model.json"
    if not model_path.exists():
        raise CliError(f"no model at {model_path}; run `mcbrp train` first")
    model = GbrModel.load(model_path)
    predicted = model.predict_batch(split.test.rows)
    taxonomy = core.classify_errors(split.test.target, predicted, split.test.row_ids)
    return split, model, taxonomy


def cmd_gen_data(config: dict) -> None:
    spec = SyntheticSpec(
        n_features=config["n_features"],
        n_rows=config["n_rows"],
        outlier_fraction=config["outlier_fraction"],
        noise_sigma=config["noise_sigma"],
    )
    ds = generate_synthetic(spec, config["seed"])
    out_path = Path(config["data"])
    if out_path.parent != Path("") and not out_path.parent.exists():
        out_path.parent.mkdir(parents=True, exist_ok=True)
    write_csv(ds, out_path, target_column=config["target_column"])
    print(f"wrote {ds.n_rows} rows ({count_outlier_rows(ds)} outlier rows) to {out_path}")


def cmd_train(config: dict) -> None:
    ds = load_csv(config["data"], config["target_column"], config["drop_policy"])
    split = split_by_column_threshold(ds, config["split_column"], config["split_threshold"])
    model = fit_gbr(split.train, _model_params(config))
    predicted = model.predict_batch(split.test.rows)
    taxonomy = core.classify_errors(split.test.target, predicted, split.test.row_ids)
    summary = report.run_summary(model, split, taxonomy)

    out = _out_dir(config)
    model.save(out / "model.json")
    (out / "summary.json").write_text(summary.to_json(), encoding="utf-8")
    print(
        f"trained on {split.train.n_rows} rows; test R^2 {summary.r_squared:.4f}, "
        f"{summary.n_large}/{summary.test_rows} large errors "
        f"(threshold {summary.epsilon_large:.4f}); wrote {out}/model.json"
    )


def _explain_one(model, split, taxonomy, config, idx):
    test = split.test
    return core.explain(
        model, test.rows[idx], float(test.target[idx]), test, taxonomy,
        n=config["n"], m=config["m"], seed=config["seed"],
        min_stratum=config["min_stratum"], num_samples=config["num_samples"],
        kernel_width=config["kernel_width"], instance_id=test.row_ids[idx],
    )


def _explain_many(model, split, taxonomy, config, indices):
    """Explain test rows by index; returns {index: Explanation or None}."""
    def run(idx):
        try:
            return idx, _explain_one(model, split, taxonomy, config, idx)
        except core.UnexplainableInstanceError:
            return idx, None

    workers = max(1, config["workers"])
    if workers == 1:
        results = [run(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run, indices))
    return dict(results)


def cmd_explain(config: dict, row_id: str | None, all_large: bool, force: bool) -> None:
    split, model, taxonomy = _load_state(config)
    test = split.test
    if all_large:
        indices = list(taxonomy.large_idx)
        if not indices:
            print("no large errors in the test set; nothing to explain")
            return
    else:
        str_ids = [str(r) for r in test.row_ids]
        if row_id not in str_ids:
            raise CliError(f"row id {row_id!r} not in the test split")
        idx = str_ids.index(row_id)
        if not taxonomy.large_mask[idx] and not force:
            raise CliError(
                f"row {row_id} has a reasonable prediction; explanations target "
                "large errors (use --force to override)"
            )
        indices = [idx]

    out = _out_dir(config) / "explanations"
    out.mkdir(parents=True, exist_ok=True)
    results = _explain_many(model, split, taxonomy, config, indices)
    n_written = 0
    for idx in sorted(results):
        expl = results[idx]
        rid = test.row_ids[idx]
        if expl is None:
            (out / f"row_{rid}.json").write_text(
                json.dumps({"instance_id": rid, "unexplainable": True},
                           sort_keys=True, indent=2) + "\n",
                encoding="utf-8",
            )
            continue
        (out / f"row_{rid}.json").write_text(expl.to_json(), encoding="utf-8")
        (out / f"row_{rid}.txt").write_text(expl.to_text_table(), encoding="utf-8")
        n_written += 1
    print(f"explained {n_written}/{len(indices)} instances into {out}")


def cmd_report(config: dict) -> None:
    split, model, taxonomy = _load_state(config)
    out = _out_dir(config)

    large_idx = list(taxonomy.large_idx)
    reasonable_idx = list(taxonomy.reasonable_idx)[: config["r_sample"]]
    if not large_idx:
        (out / "out_of_range_stats.json").write_text(
            json.dumps({"note": "no large errors in test set"}, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
    else:
        results = _explain_many(model, split, taxonomy, config, large_idx + reasonable_idx)
        expl_l = [results[i] for i in large_idx if results[i] is not None]
        expl_r = [results[i] for i in reasonable_idx if results[i] is not None]
        stats = report.out_of_range_stats(expl_l, expl_r)
        (out / "out_of_range_stats.json").write_text(
            json.dumps(stats.to_json_dict(), sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )
        # top-n membership comparison between the two groups
        from .surrogate import local_importance

        def rankings(indices):
            return [
                local_importance(
                    model, split.test.rows[i], split.test, config["n"],
                    num_samples=config["num_samples"], kernel_width=config["kernel_width"],
                    seed=config["seed"], instance_id=split.test.row_ids[i],
                )
                for i in indices
            ]

        freq_l = rank_frequency(rankings(large_idx), split.test.feature_names)
        freq_r = rank_frequency(rankings(reasonable_idx), split.test.feature_names)
        with open(out / "rank_frequency.csv", "w", newline="", encoding="utf-8") as fh:
            import csv as _csv
            writer = _csv.writer(fh)
            writer.writerow(["group", "feature", "fraction_in_top_n"])
            for name, frac in freq_l:
                writer.writerow(["large", name, repr(frac)])
            for name, frac in freq_r:
                writer.writerow(["reasonable", name, repr(frac)])

    report.prediction_scatter_dump(model, split.test, out / "prediction_scatter.csv")
    print(f"wrote out_of_range_stats.json, rank_frequency.csv, prediction_scatter.csv to {out}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcbrp",
        description="Explain large regression errors via Monte Carlo perturbation.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    commands = {
        "gen-data": "generate a synthetic dataset CSV",
        "train": "fit the boosted-tree model and write model/summary JSON",
        "explain": "explain large-error test instances",
        "report": "aggregate statistics over all test instances",
    }
    for name, help_text in commands.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="JSON config file; flags override its fields")
        for field, ftype in _FLAG_TYPES.items():
            p.add_argument(f"--{field.replace('_', '-')}", dest=field, type=ftype,
                           default=None, help=f"override config field {field}")
        if name == "explain":
            p.add_argument("--row-id", help="explain one test row by id")
            p.add_argument("--all-large", action="store_true",
                           help="explain every large-error instance")
            p.add_argument("--force", action="store_true",
                           help="allow explaining a reasonable-prediction row")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
        if args.command == "gen-data":
            cmd_gen_data(config)
        elif args.command == "train":
            cmd_train(config)
        elif args.command == "explain":
            if bool(args.row_id) == bool(args.all_large):
                raise CliError("give exactly one of --row-id or --all-large")
            cmd_explain(config, args.row_id, args.all_large, args.force)
        elif args.command == "report":
            cmd_report(config)
    except (CliError, DatasetError, ModelError, core.CoreError, SurrogateError,
            report.ReportError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
