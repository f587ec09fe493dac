"""Command-line interface.

Subcommands::

    cashflow-nl summary  --input data.csv           per-company summary statistics
    cashflow-nl tests    --input data.csv           normality, autocorrelation,
                                                    seasonality and stationarity tests
    cashflow-nl label    --input data.csv           cross-validated non-linearity labels
    cashflow-nl synth    --config specs.json        synthetic dataset CSV
    cashflow-nl poincare --input data.csv --lag 1   lagged pairs for plotting

Reports go to ``--out-dir`` (one file per table) or to stdout. Randomness
derives from ``--seed`` and the company id only, so output does not depend
on ``--workers`` or processing order.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .cvtest import CvConfig, SeriesTooShortError, derive_seed, label_series, rolling_cv, transformation_impact
from .dataset import CashFlowSeries, DatasetError, poincare_pairs, read_dataset, summarize, write_dataset
from .models import ForestParams, ols_seasonal_fit
from .report import EXTENSIONS, FORMATS, Table, render
from .stattests import (
    default_ljung_box_lags,
    lilliefors,
    ljung_box,
    shapiro_wilk,
    stationarity_fluctuation,
    stationarity_monthly_normality,
)
from .synth import SynthSpec, generate
from .transform import boxcox_apply, boxcox_fit_lambda, trim_sigma

log = logging.getLogger("cashflow_nl")

# purpose tags for sub-seeds
SEED_CV = 1
SEED_LILLIEFORS = 2
SEED_SYNTH = 3


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    input: Path | None = None
    out_dir: Path | None = None
    format: str = "markdown"
    train_fraction: float = 0.8
    horizon: int = 20
    alpha: float = 0.05
    test_alpha: float = 0.05
    sigma_levels: tuple[float, ...] = (5.0, 4.0, 3.0)
    treat_outliers: bool = False
    boxcox: bool = False
    lags: int | None = None
    lilliefors_sims: int = 10_000
    trees: int = 100
    min_leaf: int = 5
    seed: int = 0
    companies: frozenset[int] | None = None
    workers: int = 1
    weekdays_only: bool = False
    lag: int = 1
    synth: tuple[dict, ...] = field(default=())

    def __post_init__(self):
        for name in ("alpha", "test_alpha"):
            if not 0.0 < getattr(self, name) < 1.0:
                raise ConfigError(f"{name} must lie in (0, 1)")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.input is not None and self.out_dir is not None:
            if Path(self.input).resolve() == Path(self.out_dir).resolve():
                raise ConfigError("input and output paths must differ")
        if any(not k > 0 for k in self.sigma_levels):
            raise ConfigError("sigma levels must be positive")
        CvConfig(self.train_fraction, self.horizon, self.alpha, self.seed)

    def cv_config(self, company_id: int) -> CvConfig:
        seed = derive_seed(self.seed, company_id, SEED_CV)
        return CvConfig(self.train_fraction, self.horizon, self.alpha, seed,
                        ForestParams(self.trees, self.min_leaf, True, seed))


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def _parse_companies(text: str) -> frozenset[int]:
    """``"1,4,10-12"`` -> {1, 4, 10, 11, 12}."""
    out = set()
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.update(range(int(lo), int(hi) + 1))
        else:
            out.add(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty company filter")
    return frozenset(out)


def _parse_levels(text) -> tuple[float, ...]:
    if isinstance(text, (list, tuple)):
        return tuple(float(v) for v in text)
    return tuple(float(v) for v in str(text).split(",") if v.strip())


def _load_config_file(path: str) -> dict:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith((".yml", ".yaml")):
        try:
            import yaml
        except ImportError:  # pragma: no cover
            raise ConfigError("YAML configs need PyYAML (pip install cashflow-nl[yaml])") from None
        data = yaml.safe_load(text)
    else:
        data = json.loads(text)
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a mapping")
    return data


def _load_series(cfg: RunConfig) -> list[CashFlowSeries]:
    if cfg.input is None:
        raise ConfigError("--input is required")
    series = read_dataset(cfg.input)
    if cfg.companies is not None:
        series = [s for s in series if s.company_id in cfg.companies]
    if cfg.weekdays_only:
        kept = []
        for s in series:
            obs = tuple(o for o in s.observations if o.day_of_week <= 5)
            if obs:
                kept.append(CashFlowSeries(s.company_id, obs))
        series = kept
    return series


def _per_company(cfg: RunConfig, series: Sequence[CashFlowSeries], fn: Callable):
    """Apply ``fn`` to every series; results keep the input (company id) order."""
    if cfg.workers > 1 and len(series) > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            return list(pool.map(fn, series))
    return [fn(s) for s in series]


def _emit(cfg: RunConfig, tables: list[Table], out=None) -> None:
    rendered = render(tables, cfg.format)
    if cfg.out_dir is None:
        out = out or sys.stdout
        out.write("\n".join(rendered.values()))
        return
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    for stem, text in rendered.items():
        with open(cfg.out_dir / f"{stem}.{EXTENSIONS[cfg.format]}", "w", encoding="utf-8",
                  newline="") as fh:
            fh.write(text)


def _warn_all(warnings: Sequence[tuple[int, str]]) -> None:
    for cid, msg in warnings:
        log.warning("company %d: %s", cid, msg)


def _error_text(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

SUMMARY_COLUMNS = ["company", "length", "null_pct", "mean", "std", "kurtosis", "skewness",
                   "min", "max"]


def cmd_summary(cfg: RunConfig, out=None) -> int:
    series = _load_series(cfg)
    table = Table("summary", SUMMARY_COLUMNS, title="Summary statistics")
    warnings = []
    for s in series:
        st = summarize(s)
        if st.excess_kurtosis is None:
            warnings.append((s.company_id, "moment statistics undefined"))
        table.add({
            "company": s.company_id, "length": st.length, "null_pct": 100.0 * st.null_share,
            "mean": st.mean, "std": st.std, "kurtosis": st.excess_kurtosis,
            "skewness": st.skewness, "min": st.min, "max": st.max,
        })
    _warn_all(warnings)
    _emit(cfg, [table], out)
    return 0


_TEST_NAMES = ["sw_raw", "lf_raw", "sw_trim", "lf_trim", "sw_boxcox", "lf_boxcox", "ljung_box"]
TESTS_COLUMNS = (
    ["company", "length"]
    + [f"{t}_{k}" for t in _TEST_NAMES for k in ("stat", "p", "rejected")]
    + ["ljung_box_lags", "boxcox_lambda1", "boxcox_lambda2",
       "reg_f", "reg_p", "reg_r2",
       "fluct_stationary_raw", "fluct_stationary_diff",
       "monthly_rejected_raw", "monthly_rejected_diff", "errors"]
)


def _differenced(s: CashFlowSeries) -> CashFlowSeries:
    return CashFlowSeries.from_arrays(s.company_id, s.dates[1:], np.diff(s.values))


def _tests_row(cfg: RunConfig, s: CashFlowSeries):
    y = s.values
    row: dict = {"company": s.company_id, "length": len(s)}
    errors: list[str] = []
    seed = derive_seed(cfg.seed, s.company_id, SEED_LILLIEFORS)
    a = cfg.test_alpha

    def attempt(name: str, fn: Callable):
        try:
            return fn()
        except (ValueError, ArithmeticError) as exc:
            errors.append(f"{name}: {exc}")
            return None

    def hyp(name, fn):
        res = attempt(name, fn)
        if res is not None:
            row.update({f"{name}_stat": res.statistic, f"{name}_p": res.p_value,
                        f"{name}_rejected": res.rejected})

    lf = lambda v: lilliefors(v, a, n_sim=cfg.lilliefors_sims, seed=seed)  # noqa: E731
    hyp("sw_raw", lambda: shapiro_wilk(y, a))
    hyp("lf_raw", lambda: lf(y))
    trimmed = attempt("trim", lambda: trim_sigma(y, 3.0))
    if trimmed is not None:
        hyp("sw_trim", lambda: shapiro_wilk(trimmed, a))
        hyp("lf_trim", lambda: lf(trimmed))
    params = attempt("boxcox", lambda: boxcox_fit_lambda(s))
    if params is not None:
        row["boxcox_lambda1"], row["boxcox_lambda2"] = params.lambda1, params.lambda2
        z = boxcox_apply(y, params)
        hyp("sw_boxcox", lambda: shapiro_wilk(z, a))
        hyp("lf_boxcox", lambda: lf(z))
    lags = cfg.lags if cfg.lags is not None else default_ljung_box_lags(len(s))
    row["ljung_box_lags"] = lags
    hyp("ljung_box", lambda: ljung_box(y, lags, a))
    fit = attempt("regression", lambda: ols_seasonal_fit(s.calendar, y)[1])
    if fit is not None:
        row.update({"reg_f": fit.f_statistic, "reg_p": fit.p_value, "reg_r2": fit.r_squared})
    diff = attempt("difference", lambda: _differenced(s)) if len(s) >= 2 else None
    if diff is None and len(s) < 2:
        errors.append("difference: need at least 2 observations")
    for tag, ser in (("raw", s), ("diff", diff)):
        if ser is None:
            continue
        rep = attempt(f"fluct_{tag}", lambda: stationarity_fluctuation(ser))
        if rep is not None:
            row[f"fluct_stationary_{tag}"] = rep.stationary
        res = attempt(f"monthly_{tag}", lambda: stationarity_monthly_normality(
            ser, a, n_sim=cfg.lilliefors_sims, seed=seed))
        if res is not None:
            row[f"monthly_rejected_{tag}"] = res.rejected
    row["errors"] = "; ".join(errors) if errors else None
    return row, [(s.company_id, e) for e in errors]


def cmd_tests(cfg: RunConfig, out=None) -> int:
    series = _load_series(cfg)
    results = _per_company(cfg, series, lambda s: _tests_row(cfg, s))
    table = Table("tests", TESTS_COLUMNS, title="Statistical tests")
    warnings = []
    for row, warn in results:
        table.add(row)
        warnings += warn
    _warn_all(warnings)
    _emit(cfg, [table], out)
    return 0


LABEL_COLUMNS = ["company", "length", "reg_nse", "rf_nse", "wilcoxon_statistic", "wilcoxon_p",
                 "triviality", "linearity", "error"]
IMPACT_COLUMNS = ["company", "stage", "label_before", "label_after", "noise_reduction",
                  "n_replaced", "lambda1", "lambda2", "reg_nse", "rf_nse", "error"]
COUNT_COLUMNS = ["stage", "trivial", "non_trivial", "linear", "non_linear", "total", "skipped"]


def _label_company(cfg: RunConfig, s: CashFlowSeries):
    config = cfg.cv_config(s.company_id)
    base = {"company": s.company_id, "length": len(s)}
    try:
        if cfg.treat_outliers or cfg.boxcox:
            levels = cfg.sigma_levels
            raw, outlier_reports, bc = transformation_impact(s, config, levels, boxcox=cfg.boxcox)
        else:
            raw = label_series(rolling_cv(s, config=config), config.alpha)
            outlier_reports, bc = [], None
    except (ValueError, ArithmeticError) as exc:
        if isinstance(exc, SeriesTooShortError):
            msg = f"skipped: {exc}"
        else:
            msg = _error_text(exc)
        return {**base, "error": msg}, [], (s.company_id, msg), None

    row = {**base, "reg_nse": raw.reg_nse, "rf_nse": raw.rf_nse,
           "wilcoxon_statistic": raw.wilcoxon_statistic, "wilcoxon_p": raw.wilcoxon_p,
           "triviality": raw.label.triviality, "linearity": raw.label.linearity}
    impact = []
    if cfg.treat_outliers:
        for r in outlier_reports:
            impact.append(_impact_row(s.company_id, r))
    if bc is not None:
        impact.append(_impact_row(s.company_id, bc))
    return row, impact, None, raw.label.value


def _impact_row(cid: int, r) -> dict:
    d = {"company": cid, **r.as_dict()}
    d["label_before"] = r.label_before.value
    d["label_after"] = r.label_after.value
    if r.report_after is not None:
        d["reg_nse"], d["rf_nse"] = r.report_after.reg_nse, r.report_after.rf_nse
    return d


def _count_rows(raw_labels: list[str | None], impact_rows: list[dict]) -> list[dict]:
    stages: dict[str, dict] = {}

    def bump(stage, label):
        c = stages.setdefault(stage, {k: 0 for k in COUNT_COLUMNS[1:]})
        c["total"] += 1
        if label is None:
            c["skipped"] += 1
        elif label == "Trivial":
            c["trivial"] += 1
        else:
            c["non_trivial"] += 1
            c["linear" if label == "Linear" else "non_linear"] += 1

    for label in raw_labels:
        bump("raw", label)
    for r in impact_rows:
        bump(r["stage"], r["label_after"])
    return [{"stage": k, **v} for k, v in stages.items()]


def cmd_label(cfg: RunConfig, out=None) -> int:
    series = _load_series(cfg)
    results = _per_company(cfg, series, lambda s: _label_company(cfg, s))
    labels = Table("label", LABEL_COLUMNS, title="Non-linearity test")
    impact = Table("label_impact", IMPACT_COLUMNS, title="Transformation impact")
    warnings = []
    raw_labels = []
    for row, imp, warn, label in results:
        labels.add(row)
        raw_labels.append(label)
        for r in imp:
            impact.add(r)
        if warn:
            warnings.append(warn)
    counts = Table("label_counts", COUNT_COLUMNS, _count_rows(raw_labels, impact.rows),
                   title="Label counts")
    _warn_all(warnings)
    tables = [labels] + ([impact] if (cfg.treat_outliers or cfg.boxcox) else []) + [counts]
    _emit(cfg, tables, out)
    return 0


def _synth_specs(cfg: RunConfig) -> list[SynthSpec]:
    if not cfg.synth:
        raise ConfigError("no synthetic specs: pass --config with a 'synth' list")
    specs = []
    used = set()
    for i, raw in enumerate(cfg.synth, start=1):
        if not isinstance(raw, dict):
            raise ConfigError(f"synth entry {i} must be a mapping")
        d = dict(raw)
        d.setdefault("company_id", i)
        d.setdefault("seed", derive_seed(cfg.seed, int(d["company_id"]), SEED_SYNTH))
        try:
            spec = SynthSpec.from_dict(d)
        except (TypeError, ValueError, KeyError) as exc:
            raise ConfigError(f"invalid synth entry {i}: {exc}") from None
        if spec.company_id in used:
            raise ConfigError(f"duplicate company_id {spec.company_id} in synth specs")
        used.add(spec.company_id)
        specs.append(spec)
    return specs


def cmd_synth(cfg: RunConfig, out=None) -> int:
    specs = _synth_specs(cfg)
    series = sorted((generate(s) for s in specs), key=lambda s: s.company_id)
    if cfg.out_dir is None:
        write_dataset(series, out or sys.stdout)
        return 0
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    with open(cfg.out_dir / "synth.csv", "w", encoding="utf-8", newline="") as fh:
        write_dataset(series, fh)
    return 0


def cmd_poincare(cfg: RunConfig, out=None) -> int:
    series = _load_series(cfg)
    columns = ["company", "date", "y_t", "y_t_lag"]
    tables = []
    for s in series:
        pairs = poincare_pairs(s, cfg.lag)
        t = Table(f"poincare_{s.company_id}", columns,
                  title=f"Company {s.company_id}, lag {cfg.lag}")
        for d, (a, b) in zip(s.dates, pairs.pairs):
            t.add({"company": s.company_id, "date": d.isoformat(), "y_t": a, "y_t_lag": b})
        tables.append(t)
    if not tables:
        log.warning("no series selected")
        return 0
    if cfg.format == "json" and cfg.out_dir is not None:
        for t in tables:
            _emit(cfg, [t], out)
    else:
        _emit(cfg, tables, out)
    return 0


COMMANDS = {
    "summary": cmd_summary,
    "tests": cmd_tests,
    "label": cmd_label,
    "synth": cmd_synth,
    "poincare": cmd_poincare,
}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON or YAML file with option defaults and synth specs")
    common.add_argument("--input", type=Path, help="dataset CSV")
    common.add_argument("--out-dir", type=Path, help="write report files here instead of stdout")
    common.add_argument("--format", choices=FORMATS, default="markdown")
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--companies", type=_parse_companies, help="e.g. 1,4,10-12")
    common.add_argument("--workers", type=int, default=1, help="companies processed in parallel")
    common.add_argument("--weekdays-only", action="store_true", help="drop Saturday/Sunday rows")
    common.add_argument("-v", "--verbose", action="store_true")

    cv = argparse.ArgumentParser(add_help=False)
    cv.add_argument("--train-fraction", type=float, default=0.8)
    cv.add_argument("--horizon", type=int, default=20)
    cv.add_argument("--alpha", type=float, default=0.05, help="level of the Wilcoxon comparisons")
    cv.add_argument("--sigma-levels", type=_parse_levels, default=(5.0, 4.0, 3.0),
                    help="comma-separated outlier thresholds, applied in order")
    cv.add_argument("--treat-outliers", action="store_true")
    cv.add_argument("--boxcox", action="store_true")
    cv.add_argument("--trees", type=int, default=100)
    cv.add_argument("--min-leaf", type=int, default=5)

    tests = argparse.ArgumentParser(add_help=False)
    tests.add_argument("--test-alpha", type=float, default=0.05)
    tests.add_argument("--lags", type=int, help="Ljung-Box lags (default min(20, n // 4))")
    tests.add_argument("--lilliefors-sims", type=int, default=10_000)

    parser = argparse.ArgumentParser(prog="cashflow-nl", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("summary", parents=[common], help="summary statistics per company")
    sub.add_parser("tests", parents=[common, tests], help="statistical test battery")
    sub.add_parser("label", parents=[common, cv], help="cross-validated non-linearity test")
    sub.add_parser("synth", parents=[common], help="write a synthetic dataset")
    p = sub.add_parser("poincare", parents=[common], help="lagged pairs per company")
    p.add_argument("--lag", type=int, default=1)
    return parser


def _apply_config_file(parser: argparse.ArgumentParser, argv: Sequence[str]) -> dict:
    """Load ``--config`` (if any) and install its keys as subparser defaults."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return {}
    data = _load_config_file(known.config)
    extras = {"synth": tuple(data.pop("synth", ()) or ())}
    data = {k.replace("-", "_"): v for k, v in data.items()}
    for sp in parser._subparsers._group_actions[0].choices.values():  # noqa: SLF001
        dests = {a.dest for a in sp._actions}  # noqa: SLF001
        sp.set_defaults(**{k: v for k, v in data.items() if k in dests})
    all_dests = {a.dest for sp in parser._subparsers._group_actions[0].choices.values()  # noqa: SLF001
                 for a in sp._actions}  # noqa: SLF001
    unknown = sorted(set(data) - all_dests)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    return extras


def _run_config(args: argparse.Namespace, extras: dict) -> RunConfig:
    kw = {k: getattr(args, k) for k in RunConfig.__dataclass_fields__ if hasattr(args, k)}
    for key in ("input", "out_dir"):
        if kw.get(key) is not None:
            kw[key] = Path(kw[key])
    if "companies" in kw and kw["companies"] is not None and not isinstance(kw["companies"], frozenset):
        c = kw["companies"]
        kw["companies"] = _parse_companies(c if isinstance(c, str) else ",".join(map(str, c)))
    if "sigma_levels" in kw:
        kw["sigma_levels"] = _parse_levels(kw["sigma_levels"])
    kw.update(extras)
    try:
        return RunConfig(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def main(argv: Sequence[str] | None = None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        extras = _apply_config_file(parser, argv)
    except (OSError, ValueError) as exc:
        print(f"cashflow-nl: error: {exc}", file=sys.stderr)
        return 1
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _run_config(args, extras)
        return COMMANDS[args.command](cfg, out)
    except DatasetError as exc:
        print(f"cashflow-nl: invalid dataset: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, OSError) as exc:
        print(f"cashflow-nl: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
