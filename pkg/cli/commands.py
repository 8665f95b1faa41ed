"""
Benchmark subcommands.

Every command takes the RunConfig of the invocation, writes its outputs below
``<output_dir>/<command>/`` (corpora go to the corpus directory) and raises
BenchError subclasses on failure; main.py turns those into exit codes.
"""

import logging
import os
from typing import Callable, Dict, List

from cli.renderer import render_window
from cli.run_config import STATIC_MODELS, RunConfig
from forecasters.checkpoint import KIND_CONFORMER, load_checkpoint, save_checkpoint
from forecasters.motion_conformer import build_model
from forecasters.ridge_forecaster import RidgeForecaster, ridge_fit
from metrics.evaluation import evaluate, predict_windows
from metrics.report import (MetricReport, compare_reports, format_table, load_report, save_report,
                            write_table_csv)
from metrics.throughput import measure_latency
from motion_data.joint_layout import DEFAULT_LAYOUT, mapping_by_names
from motion_data.sequence import MotionSequence
from motion_data.smf_format import load_sequences, save_sequences
from motion_data.synthetic import synth_corpus
from motion_data.transforms import (convert_units, downsample, fill_invalid_frames, scale_correct_legacy,
                                    select_best_person, select_joints, split_persons)
from motion_data.windows import center_window
from noise_lab.dual_eval import evaluate_dual
from noise_lab.finetune import finetune_config, finetune_unsupervised
from noise_lab.paired_corpus import build_noisy_benchmark, load_paired, save_paired
from noise_lab.study import run_noise_study
from training.ablation import run_ablation
from training.trainer import TrainingHistory, train
from utils.error_handler import ConfigurationError, DataError, TrainingDivergedError
from utils.file_manager import FileManager
from utils.logger import log_run_complete, log_run_start

logger = logging.getLogger(__name__)


def _write_text(path: str, text: str):
    FileManager.write_bytes_atomic(path, (text + "\n").encode('utf-8'))


def _emit_table(run: RunConfig, reports: List[MetricReport], stem: str = "table"):
    table = format_table(reports)
    print(table)
    _write_text(run.output_path(f"{stem}.txt"), table)
    write_table_csv(reports, run.output_path(f"{stem}.csv"))


def _finalize(run: RunConfig, report: MetricReport) -> MetricReport:
    return report.without_timing() if run.deterministic else report


def cmd_synth(run: RunConfig):
    """Generate a seeded synthetic corpus into the corpus directory."""
    cm = run.cm
    log_run_start("synth", run.corpus_dir)
    seqs = synth_corpus(
        seed=run.seed,
        count=int(cm.require_setting('synth.count')),
        fps=float(cm.require_setting('synth.fps')),
        frames=int(cm.require_setting('synth.frames')),
        persons=int(cm.get_setting('synth.persons', 1)),
        motion_params=run.motion_params(),
    )
    written = save_sequences(seqs, run.corpus_dir)
    log_run_complete("synth", run.corpus_dir, len(written))


def _import_one(seq: MotionSequence, settings: Dict, scale: float) -> List[MotionSequence]:
    if settings.get('best_person') and seq.persons > 1:
        seq = select_best_person(seq)
    parts = split_persons(seq) if settings.get('split_persons') else [seq]

    converted = []
    for part in parts:
        if part.validity is not None:
            part = fill_invalid_frames(part, float(settings.get('score_threshold', 0.1)))
        part = convert_units(part, scale)
        part = downsample(part, int(settings.get('downsample', 1)))
        mapping = mapping_by_names(part.layout, DEFAULT_LAYOUT, settings.get('joint_substitutions'))
        converted.append(select_joints(part, DEFAULT_LAYOUT, mapping))
    return converted


def cmd_import(run: RunConfig):
    """
    Convert an external SMF corpus to the benchmark layout and units.

    With ``import.pair_with`` set, the converted sequences are treated as
    estimator output and paired with that clean corpus instead.
    """
    cm = run.cm
    settings = cm.require_setting('import')
    source_dir = cm.require_setting('import.source_dir')
    scale = scale_correct_legacy(1000.0) if settings.get('legacy_units') else float(settings.get('unit_scale', 1.0))
    log_run_start("import", source_dir)

    imported = []
    for seq in load_sequences(source_dir):
        imported.extend(_import_one(seq, settings, scale))
    if not imported:
        raise DataError("No sequences to import", path=source_dir)

    pair_with = settings.get('pair_with')
    if pair_with:
        clean = run.load_corpus(pair_with)
        corpus = build_noisy_benchmark(clean, imported)
        save_paired(corpus, cm.get_output_directory("paired"))
    else:
        save_sequences(imported, run.corpus_dir)
    log_run_complete("import", source_dir, len(imported))


def _train_ridge(run: RunConfig, train_windows, val_windows):
    model = ridge_fit([center_window(w) for w in train_windows], float(run.cm.get_setting('ridge.lambda', 100.0)))
    forecaster = RidgeForecaster(model)
    horizons = run.horizons(val_windows[0].fps)
    report = evaluate(forecaster, val_windows, horizons, measure_speed=False)
    logger.info(f"Ridge validation MPJPE@{horizons.horizons_ms[-1]:g}: {report.mpjpe_mm[-1]:.1f} mm")
    save_checkpoint(forecaster, run.output_path("ridge.ckpt"), meta={'seed': run.seed})


def cmd_train(run: RunConfig):
    """Fit ridge or train (or resume) the MotionConformer on the train split."""
    name = run.model_name
    if name in STATIC_MODELS:
        raise ConfigurationError(f"Model '{name}' has nothing to train")
    log_run_start("train", name)

    train_seqs, val_seqs, _ = run.split(run.load_corpus())
    train_windows = run.windows(train_seqs)
    val_windows = run.windows(val_seqs)
    joints = train_windows[0].joints

    if name == "ridge":
        _train_ridge(run, train_windows, val_windows)
        log_run_complete("train", name, 1)
        return

    train_cfg = run.train_config()
    resume = run.cm.get_setting('checkpoint')
    if resume:
        checkpoint = load_checkpoint(resume, joints=joints)
        if checkpoint.kind != KIND_CONFORMER:
            raise ConfigurationError(f"Cannot resume a '{checkpoint.kind}' checkpoint", path=resume)
        model, start_epoch = checkpoint.model, checkpoint.epoch
        history = TrainingHistory.from_list(checkpoint.history)
        logger.info(f"Resuming from epoch {start_epoch}")
    else:
        model, start_epoch, history = build_model(run.model_config(joints), seed=run.seed), 0, None

    path = run.output_path("motion_conformer.ckpt")
    try:
        result = train(model, train_windows, val_windows, train_cfg, start_epoch, history)
    except TrainingDivergedError as e:
        save_checkpoint(model, path, epoch=e.last_finite_epoch, meta={'seed': run.seed, 'diverged': True})
        raise

    save_checkpoint(result.forecaster, path, epoch=result.history.last_epoch,
                    history=result.history.to_list(), meta={'seed': run.seed, 'steps': result.steps})
    result.history.to_csv(run.output_path("history.csv"))
    log_run_complete("train", name, 2)


def _noisy_corpus(run: RunConfig):
    paired_dir = run.cm.get_setting('eval.paired_dir')
    if paired_dir:
        return load_paired(paired_dir)
    train_seqs, _, _ = run.split(run.load_corpus())
    if not train_seqs:
        raise DataError("The train split is empty")
    return build_noisy_benchmark(train_seqs, run.noise_source())


def cmd_finetune(run: RunConfig):
    """Finetune a pretrained MotionConformer on noisy sequences without clean labels."""
    cm = run.cm
    base = cm.get_setting('finetune.base_checkpoint') or cm.get_setting('checkpoint')
    if not base:
        raise ConfigurationError("finetune needs a base checkpoint (finetune.base_checkpoint or --checkpoint)")
    if not os.path.isfile(base):
        raise ConfigurationError("Base checkpoint does not exist", path=base)
    log_run_start("finetune", base)

    corpus = _noisy_corpus(run)
    checkpoint = load_checkpoint(base, joints=corpus.noisy[0].joints)
    if checkpoint.kind != KIND_CONFORMER:
        raise ConfigurationError(f"Only MotionConformer checkpoints can be finetuned, got '{checkpoint.kind}'",
                                 path=base)

    cfg = finetune_config(run.train_config(), float(cm.get_setting('finetune.lr_fraction', 0.1)))
    result = finetune_unsupervised(checkpoint.forecaster, corpus, cfg, run.window_spec(),
                                   val_fraction=float(cm.get_setting('finetune.val_fraction', 0.1)))

    save_checkpoint(result.forecaster, run.output_path("finetuned.ckpt"), epoch=result.history.last_epoch,
                    history=result.history.to_list(),
                    meta={'seed': run.seed, 'base': os.path.basename(base), 'provenance': corpus.provenance})
    result.history.to_csv(run.output_path("history.csv"))
    log_run_complete("finetune", base, 2)


def cmd_eval(run: RunConfig):
    """Evaluate the selected model; in dual mode on a paired corpus (measurable and real)."""
    cm = run.cm
    measure_speed = not run.deterministic
    timing = dict(warmup=int(cm.get_setting('eval.warmup', 10)), iters=int(cm.get_setting('eval.iters', 100)),
                  batch_size=int(cm.get_setting('eval.batch_size', 256)))

    if cm.get_setting('eval.dual'):
        paired_dir = cm.require_setting('eval.paired_dir')
        log_run_start("eval", paired_dir)
        corpus = load_paired(paired_dir)
        spec = run.window_spec()
        model = run.load_forecaster(spec.t_out, corpus.noisy[0].joints)
        reports = evaluate_dual(model, corpus, run.horizons(corpus.noisy[0].fps), spec,
                                measure_speed=measure_speed, dataset=f"paired-{corpus.provenance}", **timing)
        reports = [_finalize(run, r) for r in reports]
        for report in reports:
            save_report(report, run.output_path(f"report_{model.name}_{report.label}.json"))
    else:
        split = cm.get_setting('eval.split', 'test')
        log_run_start("eval", f"{run.corpus_dir} ({split})")
        windows = run.windows(run.split_named(run.load_corpus(), split))
        model = run.load_forecaster(windows[0].t_out, windows[0].joints)
        report = evaluate(model, windows, run.horizons(windows[0].fps), measure_speed=measure_speed,
                          dataset=f"{os.path.basename(os.path.normpath(run.corpus_dir))}/{split}", **timing)
        reports = [_finalize(run, report)]
        save_report(reports[0], run.output_path(f"report_{model.name}.json"))

    _emit_table(run, reports)
    log_run_complete("eval", model.name, len(reports))


def cmd_bench(run: RunConfig):
    """Latency and throughput of the selected model at batch size 1."""
    cm = run.cm
    windows = run.windows(run.split_named(run.load_corpus(), cm.get_setting('eval.split', 'test')))
    model = run.load_forecaster(windows[0].t_out, windows[0].joints)
    log_run_start("bench", model.name)
    stats = measure_latency(model, windows[0], warmup=int(cm.get_setting('eval.warmup', 10)),
                            iters=int(cm.get_setting('eval.iters', 100)),
                            repeats=int(cm.get_setting('eval.repeats', 5)))
    FileManager.write_json(run.output_path(f"bench_{model.name}.json"),
                           {'model_name': model.name, 'param_count': model.param_count, **stats.to_dict()})
    print(f"{model.name}: {stats.fps:.1f} FPS, p50 {stats.p50_ms:.3f} ms, p95 {stats.p95_ms:.3f} ms, "
          f"repeat CV {stats.repeat_cv:.3f}")
    log_run_complete("bench", model.name, 1)


def cmd_compare(run: RunConfig):
    """Merge report files into one table, worst to best by FADE."""
    paths = run.cm.get_setting('compare.reports') or []
    if not paths:
        raise ConfigurationError("compare needs at least one report file (compare.reports)")
    log_run_start("compare", f"{len(paths)} reports")
    reports = compare_reports([load_report(path) for path in paths])
    _emit_table(run, reports, stem="comparison")
    log_run_complete("compare", f"{len(paths)} reports", len(reports))


def cmd_render(run: RunConfig):
    """Draw one test window with the selected model's forecast."""
    cm = run.cm
    windows = run.windows(run.split_named(run.load_corpus(), cm.get_setting('eval.split', 'test')))
    index = int(cm.get_setting('render.window_index', 0))
    if not 0 <= index < len(windows):
        raise ConfigurationError(f"render.window_index {index} outside the {len(windows)} windows")
    window = windows[index]
    model = run.load_forecaster(window.t_out, window.joints)
    log_run_start("render", f"{window.source}@{window.start}")

    prediction = predict_windows(model, [window])[0]
    written = render_window(window, prediction, run.output_path(cm.get_setting('render.output', "render.png")),
                            azimuth_deg=float(cm.get_setting('render.azimuth_deg', 30.0)),
                            image_size=int(cm.get_setting('render.image_size', 256)),
                            frames=int(cm.get_setting('render.frames', 0)))
    log_run_complete("render", f"{window.source}@{window.start}", len(written))


def cmd_ablate(run: RunConfig):
    """Train the arms of one ablation switch and report the MPJPE@1000 delta."""
    switch = run.cm.get_setting('ablation.switch', 'spec_aug')
    log_run_start("ablate", switch)
    train_seqs, val_seqs, _ = run.split(run.load_corpus())
    train_windows = run.windows(train_seqs)
    val_windows = run.windows(val_seqs)

    result = run_ablation(run.model_config(train_windows[0].joints), run.train_config(),
                          train_windows, val_windows, switch)
    FileManager.write_json(run.output_path("ablation.json"), result.to_dict())
    for arm in result.arms:
        print(f"{arm.name}: val MPJPE@1000 {arm.final_val_mpjpe_1000:.1f} mm "
              f"(converged: {'yes' if arm.converged else 'no'})")
    print(f"delta: {result.delta_mpjpe_1000:+.1f} mm")
    log_run_complete("ablate", switch, 1)


def cmd_noise_study(run: RunConfig):
    """Zero-shot, Gaussian-pretrained, finetuned and scratch models on one noisy test corpus."""
    cm = run.cm
    train_seqs, val_seqs, test_seqs = run.split(run.load_corpus())
    if not (train_seqs and val_seqs and test_seqs):
        raise DataError("noise-study needs non-empty train, validation and test splits")
    log_run_start("noise-study", cm.get_setting('noise.kind', 'gaussian'))

    spec = run.window_spec()
    train_cfg = run.train_config()
    result = run_noise_study(train_seqs, val_seqs, test_seqs, run.model_config(train_seqs[0].joints), train_cfg,
                             run.noise_source(), spec, run.horizons(train_seqs[0].fps),
                             gaussian=train_cfg.input_noise,
                             lr_fraction=float(cm.get_setting('finetune.lr_fraction', 0.1)))

    FileManager.write_json(run.output_path("noise_study.json"), result.to_dict())
    _emit_table(run, result.all_reports(), stem="noise_study")
    if "finetuned" in result.reports:
        print(f"ordering zero_shot > gaussian_pretrained > finetuned: "
              f"{'holds' if result.ordering_holds() else 'violated'}")
    log_run_complete("noise-study", cm.get_setting('noise.kind', 'gaussian'), len(result.reports))


COMMANDS: Dict[str, Callable[[RunConfig], None]] = {
    "synth": cmd_synth,
    "import": cmd_import,
    "train": cmd_train,
    "finetune": cmd_finetune,
    "eval": cmd_eval,
    "bench": cmd_bench,
    "compare": cmd_compare,
    "render": cmd_render,
    "ablate": cmd_ablate,
    "noise-study": cmd_noise_study,
}
