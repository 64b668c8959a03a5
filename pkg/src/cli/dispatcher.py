"""命令行分发

Subcommands: select, test, metrics, oos, bootstrap, simulate, factor-eval.
Every run writes its artifacts plus ``manifest.json`` into ``--out``; a
failure writes ``error.json`` and prints the same record on stderr. Exit
codes: 0 success, 2 usage/config, 3 data, 4 numerical.
"""
import argparse
import hashlib
import json
import secrets
import sys
import time
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from .. import __version__
from ..core.errors import FactorStepError, UsageError
from ..core.models import (
    Criterion,
    HdaConfig,
    ReturnPanel,
    RunConfig,
    RunManifest,
    SelectionConfig,
    SelectionMode,
    SimConfig,
    StopRule,
)
from ..core.pricing_tests import model_table
from ..data.calibration import resolve_calibration
from ..data.config_manager import ConfigManager
from ..data.model_spec import load_models_file, parse_model_spec, parse_names, validate_models
from ..data.panel_loader import load_cost_schedule, load_panel, load_period_list
from ..data.panel_ops import adjust_costs, select_rows, split_folds, subset
from ..services.bootstrap_service import bootstrap_sr
from ..services.evaluation_service import OosConfig, investment_metrics, oos_evaluate, pricing_metrics
from ..services.factor_eval_service import factor_eval_batch
from ..services.simulation_service import method_configs, run_sim_study
from ..services.stepwise_service import stepwise_select
from ..utils import json_serializer as js
from ..utils import report_writer as rw
from ..utils.error_handler import ErrorQueue, build_error_record, format_exception_for_display
from ..utils.log_manager import get_logger
from ..utils.parallel_worker import resolve_threads

logger = get_logger()

PROG = "factorstep"
COMMANDS = ("select", "test", "metrics", "oos", "bootstrap", "simulate", "factor-eval")
MANIFEST = "manifest.json"
ERROR_FILE = "error.json"
DIGEST_FIELDS = ("data", "assets", "costs", "periods_file", "models_file", "calibration")


class _Parser(argparse.ArgumentParser):
    """用法错误抛出 UsageError 而不是直接退出"""

    def error(self, message: str):
        raise UsageError(message)


# ==================== 参数 ====================

def _common(parser: argparse.ArgumentParser, needs_data: bool = True) -> None:
    g = parser.add_argument_group("run")
    g.add_argument("--config", help="key = value config file")
    g.add_argument("--out", help="artifact directory (default: results)")
    g.add_argument("--threads", type=int, help="worker threads, 0 = all cores")
    g.add_argument("--seed", type=int, help="unsigned 64-bit seed")
    g.add_argument("--log-level", dest="log_level")
    g.add_argument("--no-log-file", dest="log_file", action="store_false", default=None)
    g.add_argument("--alpha-level", dest="alpha_level", type=float, help="significance level")
    g.add_argument("--screen-level", dest="screen_level", type=float,
                   help="correlation screen level, 0 = 2/(N1(N1-1))")
    g.add_argument("--annualization", type=int)
    if needs_data:
        d = parser.add_argument_group("data")
        d.add_argument("--data", help="factor return CSV")
        d.add_argument("--assets", help="extra test asset CSV")
        d.add_argument("--costs", help="two-column name,bps CSV")
        d.add_argument("--periods-file", dest="periods_file", help="periods to keep, one per line")
        d.add_argument("--from", dest="period_from")
        d.add_argument("--to", dest="period_to")
        d.add_argument("--market", help="market factor for CAPM benchmarks (default MKT)")
        d.add_argument("--target-vol", dest="target_vol", type=float)


def _selection_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--stop", choices=("hda", "grs"))
    parser.add_argument("--criterion", choices=("model-sr2", "single-sr2"))
    parser.add_argument("--max-steps", dest="max_steps", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description="Stepwise factor model selection and evaluation")
    parser.add_argument("--version", action="version", version=f"{PROG} {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("select", help="FSE then BSE from a baseline model")
    _common(p)
    p.add_argument("--baseline")
    _selection_flags(p)
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--fse-only", dest="mode", action="store_const", const="fse-only")
    mode.add_argument("--bse-only", dest="mode", action="store_const", const="bse-only")

    p = sub.add_parser("test", help="GRS and HDA tests of one or more models")
    _common(p)
    p.add_argument("--model", action="append", help="model spec, repeatable")
    p.add_argument("--baseline")

    p = sub.add_parser("metrics", help="pricing and investment metrics")
    _common(p)
    p.add_argument("--model", action="append")
    p.add_argument("--targets", help="'unselected' or a file/list of target names")
    p.add_argument("--benchmarks", help="e.g. CAPM=MKT;FF5=MKT,SMB,HML,RMW,CMA")
    p.add_argument("--cs-intercept", dest="cs_intercept", action="store_true", default=None)

    p = sub.add_parser("oos", help="k-fold in-sample / out-of-sample evaluation")
    _common(p)
    p.add_argument("--model", action="append")
    p.add_argument("--baseline")
    p.add_argument("--folds", type=int)
    p.add_argument("--reselect", action="store_true", default=None)
    p.add_argument("--cs-intercept", dest="cs_intercept", action="store_true", default=None)
    _selection_flags(p)

    p = sub.add_parser("bootstrap", help="paired-month bootstrap Sharpe comparison")
    _common(p)
    p.add_argument("--models", dest="models_file", help="models file or inline spec")
    p.add_argument("--runs", type=int)

    p = sub.add_parser("simulate", help="Monte Carlo selection study")
    _common(p, needs_data=False)
    p.add_argument("--calibration", help="calibration JSON (default: bundled)")
    p.add_argument("--reps", type=int)
    p.add_argument("--methods", help="comma list of hda, grs, sr")
    p.add_argument("--case", type=int, choices=(1, 2))
    p.add_argument("--k2", type=int)
    p.add_argument("--t-obs", dest="t_obs", type=int)

    p = sub.add_parser("factor-eval", help="enter/exit evaluation of every non-core factor")
    _common(p)
    p.add_argument("--baseline", help="core model")
    p.add_argument("--reference", help="reference model for the Same column")
    _selection_flags(p)
    return parser


# ==================== 运行上下文 ====================

class RunContext:
    """一次命令运行: 配置、种子、问题队列、产物清单"""

    def __init__(self, command: str, argv: Sequence[str], config: RunConfig):
        self.command = command
        self.argv = list(argv)
        self.config = config
        self.out = Path(config.out)
        self.outputs: List[str] = []
        self.issues = ErrorQueue()
        self.started = time.time()
        self.started_at = datetime.now().isoformat(timespec="seconds")
        self.threads = resolve_threads(config.threads)
        if config.seed is None:
            config.seed = secrets.randbits(63)
            logger.info(f"No --seed given, drew seed {config.seed}")

    def csv(self, name: str, frame) -> None:
        rw.write_csv(frame, self.out / name)
        self.outputs.append(name)

    def json(self, name: str, data: Any) -> None:
        rw.write_json(data, self.out / name)
        self.outputs.append(name)

    def selection(self, mode: str = "full") -> SelectionConfig:
        c = self.config
        return SelectionConfig(
            significance=c.alpha_level,
            stop_rule=StopRule(c.stop),
            criterion=Criterion(c.criterion),
            max_steps=c.max_steps or None,
            mode=SelectionMode(mode),
            screen_level=c.screen_level or None,
            annualization=c.annualization,
            threads=self.threads,
        )

    def hda(self) -> HdaConfig:
        return HdaConfig(self.config.alpha_level, self.config.screen_level or None)

    def manifest(self) -> RunManifest:
        return RunManifest(
            version=__version__,
            command=self.command,
            argv=self.argv,
            config=js.serialize_run_config(self.config),
            input_digests=input_digests(self.config),
            seed=self.config.seed,
            started_at=self.started_at,
            wall_clock_seconds=round(time.time() - self.started, 3),
            outputs=sorted(self.outputs),
            issues=self.issues.messages(),
        )


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def input_digests(config: RunConfig) -> Dict[str, str]:
    """输入文件的 sha256"""
    digests = {}
    for name in DIGEST_FIELDS:
        path = getattr(config, name)
        if path and Path(path).is_file():
            digests[name] = file_digest(path)
    return digests


def _require(value: Any, flag: str) -> Any:
    if not value:
        raise UsageError(f"{flag} is required")
    return value


def load_inputs(config: RunConfig) -> Tuple[ReturnPanel, Optional[ReturnPanel]]:
    """读取因子面板与可选测试资产，应用成本与期间筛选"""
    panel = load_panel(_require(config.data, "--data"))
    extra = load_panel(config.assets) if config.assets else None
    if config.costs:
        panel = adjust_costs(panel, load_cost_schedule(config.costs))

    def rows(p: ReturnPanel) -> ReturnPanel:
        if config.periods_file:
            p = select_rows(p, load_period_list(config.periods_file))
        if config.period_from or config.period_to:
            p = subset(p, None, (config.period_from or None, config.period_to or None))
        return p

    panel = rows(panel)
    extra = rows(extra) if extra is not None else None
    logger.info(f"Panel: T={panel.t_obs} N={panel.n_assets}"
                + (f", {extra.n_assets} extra test assets" if extra is not None else ""))
    return panel, extra


def _models(specs: Sequence[str]) -> Dict[str, Tuple[str, ...]]:
    models: Dict[str, Tuple[str, ...]] = {}
    for spec in specs:
        models.update(parse_model_spec(spec))
    return models


def _baseline(config: RunConfig, panel: ReturnPanel) -> Tuple[str, ...]:
    names = parse_names(_require(config.baseline, "--baseline"))
    validate_models({"baseline": names}, panel.names)
    return names


# ==================== 命令 ====================

def cmd_select(ctx: RunContext) -> None:
    panel, extra = load_inputs(ctx.config)
    baseline = _baseline(ctx.config, panel)
    path = stepwise_select(panel, baseline, extra, ctx.selection(ctx.config.mode), ctx.issues)
    logger.info(f"Selected model ({len(path.model)}): {','.join(path.model)}")
    ctx.csv("path.csv", rw.path_frame(path))
    ctx.json("model.json", js.serialize_path(path))


def cmd_test(ctx: RunContext) -> None:
    panel, extra = load_inputs(ctx.config)
    specs = ctx.config.model or ([ctx.config.baseline] if ctx.config.baseline else [])
    models = _models(_require(specs, "--model"))
    validate_models(models, panel.names)
    rows = model_table(panel, models, extra, ctx.hda())
    ctx.csv("tests.csv", rw.tests_frame(rows))
    ctx.json("tests.json", [
        {
            "model": r.name,
            "factors": list(r.model),
            "sr2": js.json_number(r.sr2),
            "grs": js.serialize_test_result(r.grs),
            "hda": js.serialize_test_result(r.hda),
        }
        for r in rows
    ])


def _targets(config: RunConfig, panel: ReturnPanel, model: Sequence[str]) -> Tuple[str, ...]:
    spec = config.targets or "unselected"
    if spec == "unselected":
        return tuple(n for n in panel.names if n not in model)
    names = load_period_list(spec) if Path(spec).is_file() else list(parse_names(spec))
    validate_models({"targets": names}, panel.names)
    return tuple(names)


def cmd_metrics(ctx: RunContext) -> None:
    c = ctx.config
    panel, extra = load_inputs(c)
    models = _models(_require(c.model, "--model"))
    benchmarks = parse_model_spec(c.benchmarks) if c.benchmarks else {"CAPM": (c.market,)}
    validate_models(models, panel.names)
    validate_models(benchmarks, panel.names)
    data = panel.join(extra) if extra is not None else panel

    rows, records = [], []
    for name, model in models.items():
        invest = investment_metrics(panel, model, benchmarks, c.target_vol, c.annualization)
        groups = [("unselected" if not c.targets or c.targets == "unselected" else "targets",
                   _targets(c, panel, model))]
        if extra is not None:
            groups.append(("assets", tuple(extra.names)))
        record = {"model": name, "factors": list(model), "invest": js.serialize_invest(invest)}
        for label, targets in groups:
            m = pricing_metrics(data, model, targets, c.market, c.cs_intercept)
            rows.append((name, label, m, invest if label != "assets" else None))
            record[label] = js.serialize_pricing(m)
        records.append(record)
    ctx.csv("metrics.csv", rw.metrics_frame(rows))
    ctx.json("metrics.json", records)


def cmd_oos(ctx: RunContext) -> None:
    c = ctx.config
    panel, _ = load_inputs(c)
    folds = split_folds(panel, c.folds)
    oos_cfg = OosConfig(c.market, c.cs_intercept, c.target_vol, c.annualization, ctx.selection())
    if c.reselect:
        reports = oos_evaluate(panel, folds, baseline=_baseline(c, panel), cfg=oos_cfg)
    else:
        specs = c.model or ([c.baseline] if c.baseline else [])
        models = _models(_require(specs, "--model"))
        if len(models) > 1:
            raise UsageError(f"oos evaluates one model at a time, got {len(models)}: {', '.join(models)}")
        validate_models(models, panel.names)
        (model,) = models.values()
        reports = oos_evaluate(panel, folds, model=model, cfg=oos_cfg)
    ctx.csv("oos.csv", rw.oos_frame(reports))
    ctx.json("oos.json", [js.serialize_oos_fold(r) for r in reports])


def cmd_bootstrap(ctx: RunContext) -> None:
    c = ctx.config
    panel, _ = load_inputs(c)
    spec = _require(c.models_file, "--models")
    models = load_models_file(spec) if Path(spec).is_file() else parse_model_spec(spec)
    validate_models(models, panel.names)
    report = bootstrap_sr(panel, models, c.runs, c.seed, ctx.threads, issues=ctx.issues)
    ctx.json("bootstrap.json", js.serialize_bootstrap(report))
    ctx.csv("bootstrap_ins.csv", rw.bootstrap_frame(report, "ins"))
    ctx.csv("bootstrap_oos.csv", rw.bootstrap_frame(report, "oos"))


def cmd_simulate(ctx: RunContext) -> None:
    c = ctx.config
    cal = resolve_calibration(c.calibration or None)
    sim = SimConfig.from_calibration(cal, c.k2, c.t_obs, c.case, c.seed)
    methods = method_configs(c.methods.split(","), c.alpha_level, c.screen_level or None)
    report = run_sim_study(sim, methods, c.reps, ctx.threads, ctx.issues)
    ctx.csv("simulation.csv", rw.simulation_frame(report))
    ctx.csv("selection_rates.csv", rw.selection_rates_frame(report))
    ctx.json("simulation.json", js.serialize_sim_report(report))


def cmd_factor_eval(ctx: RunContext) -> None:
    c = ctx.config
    panel, extra = load_inputs(c)
    core = _baseline(c, panel)
    reference = parse_names(c.reference) if c.reference else None
    if reference:
        validate_models({"reference": reference}, panel.names)
    table = factor_eval_batch(panel, core, ctx.selection(), extra, reference, ctx.issues)
    ctx.csv("factor_eval.csv", rw.factor_eval_frame(table))
    ctx.json("factor_eval.json", {
        "core": list(table.core),
        "runs": table.runs,
        "failed": list(table.failed),
        "factors": js.serialize_verdicts(table.verdicts, table.rates),
        "rates": {k: js.json_number(v) for k, v in table.rates.items()},
    })


HANDLERS: Dict[str, Callable[[RunContext], None]] = {
    "select": cmd_select,
    "test": cmd_test,
    "metrics": cmd_metrics,
    "oos": cmd_oos,
    "bootstrap": cmd_bootstrap,
    "simulate": cmd_simulate,
    "factor-eval": cmd_factor_eval,
}


# ==================== 入口 ====================

def _cli_values(args: argparse.Namespace) -> Dict[str, Any]:
    skip = {"command", "config"}
    return {k: v for k, v in vars(args).items() if k not in skip and v is not None}


def _report_failure(error: BaseException, out_dir: Optional[Path]) -> int:
    record = build_error_record(error)
    text = json.dumps(record, ensure_ascii=False)
    print(text, file=sys.stderr)
    if isinstance(error, FactorStepError):
        logger.log_error(record["type"], format_exception_for_display(error), record["details"])
    else:
        logger.exception(f"Unexpected failure: {format_exception_for_display(error)}")
    if out_dir is not None:
        try:
            rw.write_json(record, out_dir / ERROR_FILE)
        except OSError as e:
            logger.warning(f"Could not write {ERROR_FILE}: {e}")
    return record["exit_code"]


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """解析参数、运行子命令、写出产物与清单，返回退出码"""
    argv = list(sys.argv[1:] if argv is None else argv)
    out_dir: Optional[Path] = None
    try:
        try:
            args = build_parser().parse_args(argv)
        except SystemExit as e:
            return int(e.code or 0)
        if not args.command:
            raise UsageError(f"a subcommand is required: {', '.join(COMMANDS)}")

        out_dir = Path(args.out) if args.out else None
        config = ConfigManager(args.config).resolve(_cli_values(args))
        out_dir = Path(config.out)
        logger.configure(config.log_level, None, config.log_file)
        logger.log_command(args.command, " ".join(argv))

        ctx = RunContext(args.command, argv, config)
        HANDLERS[args.command](ctx)
        ctx.out.mkdir(parents=True, exist_ok=True)
        (ctx.out / MANIFEST).write_text(js.serialize_manifest(ctx.manifest()) + "\n", encoding="utf-8")
        for issue in ctx.issues.messages():
            logger.warning(issue)
        logger.info(f"Wrote {len(ctx.outputs)} artifacts to {ctx.out}")
        return 0
    except Exception as e:
        return _report_failure(e, out_dir)
