"""Pipeline orchestration: subcommands over a shared config, artifacts on disk.

Every artifact carries a `config_hash=... seed=...` metadata header and a
manifest entry; reruns with an identical config are byte-identical. Exit
status 2 flags input/config problems, 1 computation failures.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import sys
from datetime import date
from pathlib import Path

import click
import numpy as np

from . import __version__, connectedness, diagnostics, forecast, garch, multiscale, topics
from . import panel as panel_mod
from . import sentiment as sentiment_mod
from . import synthetic
from . import var as var_mod
from .config import EXAMPLE_CONFIG, RunConfig, load_config
from .errors import ComputationError, CryptosentError, InputError

SENTIMENT_DISPLAY = {"twitter_tsi": "Twitter Sent.", "tiktok_tsi": "TikTok Sent."}


def _sha256_file(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


class RunContext:
    """Artifact writer: stamps metadata, tracks files, maintains the manifest."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg
        self.out = Path(cfg.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.created: list[Path] = []
        self.config_hash = cfg.hash()

    @property
    def header(self) -> str:
        return f"config_hash={self.config_hash} seed={self.cfg.seed}"

    def path(self, name: str) -> Path:
        return self.out / name

    def write_text(self, name: str, text: str) -> Path:
        p = self.path(name)
        p.write_text(text, encoding="utf-8")
        self.created.append(p)
        return p

    def write_csv_rows(self, name: str, rows) -> Path:
        buf = io.StringIO()
        buf.write(f"# {self.header}\n")
        writer = csv.writer(buf, lineterminator="\n")
        for row in rows:
            writer.writerow(row)
        return self.write_text(name, buf.getvalue())

    def write_json(self, name: str, doc) -> Path:
        wrapped = {"meta": {"config_hash": self.config_hash, "seed": self.cfg.seed}, "data": doc}
        return self.write_text(name, json.dumps(wrapped, indent=2, sort_keys=True) + "\n")

    def write_panel(self, name: str, pnl) -> Path:
        p = self.path(name)
        panel_mod.write_csv(pnl, p, header_comment=self.header)
        self.created.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.created:
            p.unlink(missing_ok=True)

    def update_manifest(self) -> None:
        manifest_path = self.path("manifest.json")
        doc = {"artifacts": {}, "inputs": {}}
        if manifest_path.exists():
            try:
                doc = json.loads(manifest_path.read_text(encoding="utf-8"))
            except json.JSONDecodeError:
                doc = {"artifacts": {}, "inputs": {}}
        if doc.get("config_hash") not in (None, self.config_hash):
            doc = {"artifacts": {}, "inputs": {}}
        doc["config_hash"] = self.config_hash
        doc["seed"] = self.cfg.seed
        doc["versions"] = {
            "cryptosent": __version__,
            "numpy": np.__version__,
            "python": ".".join(str(v) for v in sys.version_info[:3]),
        }
        inputs = doc.setdefault("inputs", {})
        for p in list(self.cfg.market_files) + sorted(self.cfg.sentiment_files.values()) + sorted(
            self.cfg.text_files.values()
        ):
            inputs[str(p)] = _sha256_file(Path(p))
        artifacts = doc.setdefault("artifacts", {})
        for p in self.created:
            artifacts[str(p.relative_to(self.out))] = _sha256_file(p)
        manifest_path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


# -- pipeline steps ------------------------------------------------------------


def _analysis_columns(cfg: RunConfig, pnl) -> list[str]:
    cols = [f"{coin}PRC" for coin in cfg.coins] + [f"{coin}VOL" for coin in cfg.coins]
    cols += [c for c in ("twitter_tsi", "tiktok_tsi") if c in pnl.variables]
    return [c for c in cols if c in pnl.variables]


def step_ingest(ctx: RunContext) -> None:
    cfg = ctx.cfg
    pnl = panel_mod.load_panel(cfg.market_files)
    for coin in cfg.coins:
        pnl = panel_mod.compute_return(
            pnl, panel_mod.TransformSpec(cfg.return_kind, f"{coin}_price", f"{coin}PRC")
        )
        pnl = panel_mod.volume_change(
            pnl, panel_mod.TransformSpec("pct-volume-change", f"{coin}_volume", f"{coin}VOL")
        )
    ctx.write_panel("panel_market.csv", pnl)


def _load_step_panel(ctx: RunContext, name: str, producer: str):
    p = ctx.path(name)
    if not p.exists():
        raise InputError(f"missing artifact {p}; run the '{producer}' subcommand first")
    return panel_mod.load_panel([p])


def step_sentiment(ctx: RunContext) -> None:
    cfg = ctx.cfg
    pnl = _load_step_panel(ctx, "panel_market.csv", "ingest")
    for platform, path in sorted(cfg.sentiment_files.items()):
        records = sentiment_mod.read_jsonl(path)
        series = sentiment_mod.aggregate_tsi(records, platform)
        rows = [["date", "tsi", "count"]]
        for d, v, n in zip(series.dates, series.tsi, series.counts):
            rows.append([d.isoformat(), repr(float(v)), int(n)])
        ctx.write_csv_rows(f"tsi_{platform}.csv", rows)
        pnl = sentiment_mod.merge_sentiment(pnl, series)
    aligned, report = panel_mod.align_and_complete(pnl, cfg.align_policy, cfg.align_max_gap)
    ctx.write_panel("panel_aligned.csv", aligned)
    ctx.write_json(
        "align_report.json",
        {
            "policy": report.policy,
            "fills_per_variable": report.fills_per_variable,
            "dropped_dates": [d.isoformat() for d in report.dropped_dates],
            "rows_kept": aligned.n_dates,
        },
    )


def step_stationarity(ctx: RunContext) -> None:
    pnl = _load_step_panel(ctx, "panel_aligned.csv", "sentiment")
    cols = _analysis_columns(ctx.cfg, pnl)
    adf_row, jb_row = ["ADF Statistics"], ["Jarque--Bera"]
    detail = {}
    for col in cols:
        series = pnl.column(col)
        adf = diagnostics.adf_test(series, "constant", max_lag=min(12, len(series) // 10), lag_selection="bic")
        jb = diagnostics.jarque_bera(series)
        adf_row.append(f"{adf.statistic:.2f}{adf.stars()}")
        jb_row.append(f"{jb.statistic:.2f}{jb.stars()}")
        detail[col] = {
            "adf_statistic": adf.statistic,
            "adf_lag": adf.lag,
            "adf_critical_values": adf.critical_values,
            "jb_statistic": jb.statistic,
            "jb_p_value": jb.p_value,
        }
    header = ["Test"] + [SENTIMENT_DISPLAY.get(c, c) for c in cols]
    ctx.write_csv_rows("table3.csv", [header, adf_row, jb_row])
    ctx.write_json("stationarity.json", detail)


def step_connectedness(ctx: RunContext) -> None:
    cfg = ctx.cfg
    pnl = _load_step_panel(ctx, "panel_aligned.csv", "sentiment")
    cols = _analysis_columns(cfg, pnl)
    sub = pnl.select(cols)
    order = cfg.var_order or var_mod.select_order(sub, max_p=cfg.var_max_order, criterion="bic")
    model = var_mod.fit_var(sub, order)
    ctx.created.append(ctx.path("var_model.json"))
    var_mod.save_model(model, ctx.path("var_model.json"), meta={"config_hash": ctx.config_hash, "seed": cfg.seed})

    fits = [garch.fit_garch11(model.residuals[:, i]) for i in range(model.n_variables)]
    z = garch.standardized_residuals(fits, model.residuals)
    dcc = garch.fit_dcc(z)
    h_path = garch.conditional_covariances(fits, dcc)
    ctx.write_json(
        "volatility.json",
        {
            "garch": [
                {"variable": name, "omega": f.omega, "alpha": f.alpha, "beta": f.beta, "loglik": f.loglik}
                for name, f in zip(model.names, fits)
            ],
            "dcc": {"a": dcc.a, "b": dcc.b, "loglik": dcc.loglik},
            "h_path": {"T": int(h_path.shape[0]), "N": int(h_path.shape[1]), "flat": h_path.ravel().tolist()},
        },
    )

    static = connectedness.static_connectedness(model, cfg.horizon, corrected=cfg.tci_corrected)
    ctx.write_csv_rows("connectedness_static.csv", connectedness.table_to_csv_rows(static))

    days = pnl.dates[order:]
    tables = connectedness.dynamic_connectedness(
        model, h_path, days, cfg.horizon, corrected=cfg.tci_corrected
    )
    ctx.write_json("tci_net.json", connectedness.tci_series_document(tables))

    ctx.created.extend([ctx.path("network.dot"), ctx.path("network.json")])
    doc = connectedness.export_network(
        static,
        threshold=cfg.network_threshold,
        mode=cfg.network_mode,
        dot_path=ctx.path("network.dot"),
        json_path=ctx.path("network.json"),
        comment=ctx.header,
    )
    click.echo(f"connectedness: TCI={static.tci:.2f}% edges={len(doc['edges'])} order={order}")


def step_rolling(ctx: RunContext) -> None:
    cfg = ctx.cfg
    pnl = _load_step_panel(ctx, "panel_aligned.csv", "sentiment")
    market_cols = [f"{coin}{kind}" for coin in cfg.coins for kind in ("PRC", "VOL")]
    platforms = [c for c in ("twitter_tsi", "tiktok_tsi") if c in pnl.variables]
    peaks_doc: dict = {}
    for col in market_cols:
        if col not in pnl.variables:
            continue
        x = pnl.column(col)
        for ts in platforms:
            y = pnl.column(ts)
            results, skipped = multiscale.sweep(x, y, cfg.windows, dates=pnl.dates)
            pair = f"{col}~{ts}"
            pair_report: dict = {"skipped": skipped}
            for w, series in sorted(results.items()):
                rows = [["date", "correlation"]]
                for d, v in zip(series.dates, series.values):
                    rows.append([d.isoformat(), "" if np.isnan(v) else repr(float(v))])
                ctx.write_csv_rows(f"rolling_{col}_{ts}_w{w}.csv", rows)
                count, peak_dates = multiscale.count_peaks(
                    np.nan_to_num(series.values, nan=0.0),
                    min_prominence=0.25,
                    min_separation=max(1, w // 2),
                    dates=series.dates,
                )
                pair_report[str(w)] = {"count": count, "dates": [d.isoformat() for d in peak_dates]}
            peaks_doc[pair] = pair_report
    ctx.write_json("peaks.json", peaks_doc)


def step_wavelet(ctx: RunContext) -> None:
    cfg = ctx.cfg
    pnl = _load_step_panel(ctx, "panel_aligned.csv", "sentiment")
    levels = min(8, int(np.floor(np.log2(pnl.n_dates))))
    for col in _analysis_columns(cfg, pnl):
        dec = multiscale.modwt(pnl.column(col), "haar", levels)
        header = ["date"] + [f"D{j}" for j in range(1, levels + 1)] + [f"S{levels}"]
        rows = [header]
        for i, d in enumerate(pnl.dates):
            rows.append(
                [d.isoformat()]
                + [repr(float(dec.details[j][i])) for j in range(levels)]
                + [repr(float(dec.smooth[i]))]
            )
        ctx.write_csv_rows(f"wavelet_{col}.csv", rows)


def _read_texts(path: str, limit: int) -> tuple[list[str], list[str]]:
    ids, texts = [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            ids.append(str(obj["id"]))
            texts.append(str(obj["text"]))
            if len(ids) >= limit:
                break
    if not ids:
        raise InputError(f"{path}: no text records")
    return ids, texts


def step_topics(ctx: RunContext) -> None:
    cfg = ctx.cfg
    if not cfg.text_files:
        raise InputError("config: sentiment.texts must map platforms to text JSONL files")
    for platform, path in sorted(cfg.text_files.items()):
        ids, texts = _read_texts(path, cfg.topics_max_docs)
        corpus = topics.preprocess(texts, doc_ids=ids)
        weights = topics.tfidf(corpus)
        if cfg.topics_k is not None:
            k = cfg.topics_k
        else:
            lo, hi = cfg.topics_k_range
            k, _ = topics.select_k(weights, range(lo, min(hi, corpus.n_documents - 1) + 1), seed=cfg.seed)
        clusters = topics.kmeans(weights, k, seed=cfg.seed)
        coords, explained = topics.pca2(weights)
        rows = [["doc_id", "cluster", "pc1", "pc2"]]
        for i, doc_id in enumerate(corpus.doc_ids):
            rows.append(
                [doc_id, int(clusters.assignments[i]), f"{coords[i, 0]:.8f}", f"{coords[i, 1]:.8f}"]
            )
        ctx.write_csv_rows(f"cluster_map_{platform}.csv", rows)
        model = topics.lda_gibbs(corpus, k, iterations=cfg.topics_iterations, seed=cfg.seed)
        ctx.write_json(
            f"topics_{platform}.json",
            {
                "k": k,
                "explained_variance": [float(x) for x in explained],
                "dropped_documents": len(corpus.dropped),
                "top_words": model.top_words(corpus, 20),
            },
        )


def step_forecast(ctx: RunContext) -> None:
    cfg = ctx.cfg
    pnl = _load_step_panel(ctx, "panel_aligned.csv", "sentiment")
    channel_sets: list[tuple[str, ...]] = [("twitter",), ("tiktok",), ("twitter", "tiktok")]
    available = [p for p in ("twitter", "tiktok") if f"{p}_tsi" in pnl.variables]
    channel_sets = [cs for cs in channel_sets if all(c in available for c in cs)]
    targets = [t for t in cfg.targets() if t in pnl.variables]
    if not targets:
        raise InputError("no forecast targets present in the aligned panel")

    scenarios = []
    for target in targets:
        for scale in cfg.forecast_scales:
            for fc in cfg.forecast_forecasters:
                for cs in channel_sets:
                    scenarios.append(forecast.Scenario(target, cs, scale, fc))
    report = forecast.scenario_matrix(pnl, scenarios, lags=cfg.forecast_lags)

    rows = [
        [
            "window",
            "channels",
            "forecaster",
            "target",
            "mse",
            "mae",
            "n_test",
            "best",
            "best_mae",
            "improvement_mse",
            "improvement_mae",
            "error",
        ]
    ]
    for r in forecast.report_rows(report):
        rows.append(
            [
                r["window"],
                r["channels"],
                r["forecaster"],
                r["target"],
                "" if r["mse"] is None else f"{r['mse']:.6g}",
                "" if r["mae"] is None else f"{r['mae']:.6g}",
                r["n_test"],
                r["best"],
                r["best_mae"],
                "" if r["improvement_mse"] is None else f"{r['improvement_mse']:.4f}",
                "" if r["improvement_mae"] is None else f"{r['improvement_mae']:.4f}",
                r["error"],
            ]
        )
    ctx.write_csv_rows("forecast_report.csv", rows)
    ctx.write_json("forecast_report.json", forecast.report_rows(report))
    ctx.write_csv_rows("table4.csv", forecast.wide_table_rows(report, targets))


STEPS = {
    "ingest": step_ingest,
    "sentiment": step_sentiment,
    "stationarity": step_stationarity,
    "connectedness": step_connectedness,
    "rolling": step_rolling,
    "wavelet": step_wavelet,
    "topics": step_topics,
    "forecast": step_forecast,
}

PIPELINE_ORDER = list(STEPS)


def _run_step(cfg: RunConfig, names: list[str]) -> None:
    cfg.validate()
    ctx = RunContext(cfg)
    try:
        for name in names:
            STEPS[name](ctx)
    except BaseException:
        ctx.cleanup()
        raise
    ctx.update_manifest()
    click.echo(f"wrote {len(ctx.created)} artifacts to {ctx.out} (config {ctx.config_hash[:12]})")


# -- click wiring -----------------------------------------------------------------


@click.group(help="Sentiment/crypto co-movement, spillover, and forecasting pipeline.")
def main() -> None:
    pass


def _config_options(fn):
    fn = click.option("--config", "config_path", required=True, type=click.Path(), help="YAML run config")(fn)
    fn = click.option("--seed", type=int, default=None, help="override the config seed")(fn)
    fn = click.option("--out", "out_dir", type=click.Path(), default=None, help="override the output directory")(fn)
    return fn


def _make_command(name: str):
    @main.command(name=name, help=f"Run the {name} pipeline step.")
    @_config_options
    def _cmd(config_path, seed, out_dir, _name=name):
        cfg = load_config(config_path, {"seed": seed, "out_dir": out_dir})
        _run_step(cfg, [_name])

    return _cmd


for _step_name in PIPELINE_ORDER:
    _make_command(_step_name)


@main.command(name="report-all", help="Run the full pipeline in order.")
@_config_options
def report_all(config_path, seed, out_dir):
    cfg = load_config(config_path, {"seed": seed, "out_dir": out_dir})
    _run_step(cfg, PIPELINE_ORDER)


@main.command(help="Generate the bundled synthetic dataset plus a ready config file.")
@click.option("--out", "out_dir", type=click.Path(), default="data", show_default=True)
@click.option("--days", type=int, default=700, show_default=True)
@click.option("--seed", type=int, default=7, show_default=True)
def synth(out_dir, days, seed):
    ds = synthetic.generate(out_dir, n_days=days, seed=seed)
    out = Path(out_dir)
    config_text = EXAMPLE_CONFIG
    for coin in synthetic.DEFAULT_COINS:
        config_text = config_text.replace(f"data/{coin.lower()}.csv", str(out / f"{coin.lower()}.csv"))
    for platform in ("twitter", "tiktok"):
        config_text = config_text.replace(f"data/{platform}.jsonl", str(out / f"{platform}.jsonl"))
        config_text = config_text.replace(
            f"data/{platform}_texts.jsonl", str(out / f"{platform}_texts.jsonl")
        )
    config_text = config_text.replace("seed: 7", f"seed: {seed}")
    (out / "config.yaml").write_text(config_text, encoding="utf-8")
    click.echo(f"synthetic dataset ({ds.n_days} days, seed {ds.seed}) in {out}; config at {out / 'config.yaml'}")


@main.command(name="example-config", help="Print a complete annotated config file.")
def example_config():
    click.echo(EXAMPLE_CONFIG, nl=False)


def entrypoint() -> int:
    try:
        main.main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        click.echo(f"usage-error: {exc.format_message()}", err=True)
        return 2
    except click.Abort:
        return 130
    except InputError as exc:
        click.echo(f"input-error: {exc}", err=True)
        return 2
    except ComputationError as exc:
        click.echo(f"computation-error: {exc}", err=True)
        return 1
    except CryptosentError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(entrypoint())
