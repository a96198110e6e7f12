"""
Command-line entry point

    mart synth       --out scenes.jsonl [--scenario NAME] [--num-scenes 500 ...]
    mart window      --tsv biwi_eth.txt --out scenes.jsonl [--stride 1]
    mart train       --data scenes.jsonl --out model.ckpt [--preset mid] [--config run.cfg] [--lr 1e-3 ...]
    mart eval        --data scenes.jsonl (--checkpoint model.ckpt | --baseline) [--k 20] [--mode joint]
    mart predict     --checkpoint model.ckpt --data scenes.jsonl --out preds.jsonl [--attention]
    mart groups      --checkpoint model.ckpt --data scenes.jsonl --out groups.jsonl
    mart gradcheck   [--seed 0] [--eps 1e-5] [--tol 1e-4]
    mart count-params [--preset eth_ucy]
    mart count-macs  [--preset eth_ucy] [--agents 10]

Any TrainConfig field can be given as ``--key value`` after the named
options. Logs are JSON lines on standard output; errors go to standard
error with exit code 2.
"""
import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .data.scene_io import load_scenes, save_scenes
from .data.synthetic import SynthConfig, generate_synthetic
from .data.windowing import window_tsv
from .evaluation.baselines import constant_velocity_report
from .evaluation.evaluator import evaluate
from .model.age import group_recovery
from .training.checkpoint import load_checkpoint
from .training.counting import count_macs, count_params, mac_breakdown, param_breakdown
from .training.gradcheck import gradcheck
from .training.trainer import Trainer
from .utils.config import apply_overrides, build_config, load_scenarios
from .utils.errors import ConfigError, MartError
from .utils.log import configure_logging, log_fields

logger = logging.getLogger(__name__)


def parse_overrides(tokens):
    """Turn ``['--lr', '1e-3', '--batch-size', '8']`` into {'lr': '1e-3', 'batch_size': '8'}"""
    overrides = {}
    i = 0
    while i < len(tokens):
        token = tokens[i]
        if not token.startswith("--") or len(token) <= 2:
            raise ConfigError(f"Unexpected argument: {token}")
        key = token[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(tokens):
                raise ConfigError(f"Missing value for --{key}")
            value = tokens[i + 1]
            i += 2
        overrides[key.replace("-", "_")] = value
    return overrides


def emit(payload, out=None):
    """Write one JSON document to standard output (or a file)"""
    text = json.dumps(payload)
    if out is None:
        print(text, flush=True)
    else:
        Path(out).write_text(text + "\n", encoding="utf-8")


def _config_from(args, overrides):
    return build_config(preset=args.preset, config_file=args.config, overrides=overrides)


def _model_from_checkpoint(args, overrides):
    """
    Model from a checkpoint; explicit config sources must agree with its dimensions
    """
    checkpoint = load_checkpoint(args.checkpoint)
    if args.preset is not None or args.config is not None:
        cfg = _config_from(args, overrides)
    else:
        cfg = apply_overrides(checkpoint.config, overrides)
    return checkpoint.build_model(cfg)


def _write_jsonl(path, records):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record))
            handle.write("\n")
    return path


# commands --------------------------------------------------------------------

def cmd_synth(args, overrides):
    values = {}
    if args.scenario:
        scenarios = load_scenarios(args.scenarios_file)
        if args.scenario not in scenarios:
            raise ConfigError(f"Unknown scenario {args.scenario!r}. Available: {sorted(scenarios)}")
        values.update(scenarios[args.scenario].get("data", {}))
    values.update(overrides)
    synth = SynthConfig.from_dict(values)
    scenes = generate_synthetic(synth, progress=args.progress)
    save_scenes(scenes, args.out)
    log_fields(logger, "wrote scenes", path=str(args.out), scenes=len(scenes))
    return 0


def cmd_window(args, overrides):
    if overrides:
        raise ConfigError(f"window takes no configuration overrides: {sorted(overrides)}")
    scenes = window_tsv(args.tsv, t_p=args.t_p, t_f=args.t_f, stride=args.stride)
    save_scenes(scenes, args.out)
    log_fields(logger, "wrote scenes", path=str(args.out), scenes=len(scenes))
    return 0


def cmd_train(args, overrides):
    scenes = load_scenes(args.data)
    if args.resume:
        checkpoint = load_checkpoint(args.resume)
        cfg = apply_overrides(checkpoint.config, overrides)
        if args.preset is not None or args.config is not None:
            cfg = _config_from(args, overrides)
        trainer = Trainer.from_checkpoint(checkpoint, scenes, cfg=cfg, progress=args.progress)
    else:
        cfg = _config_from(args, overrides)
        trainer = Trainer(cfg, scenes, progress=args.progress)
    trainer.train(checkpoint_path=args.out, checkpoint_every=args.checkpoint_every)
    return 0


def cmd_eval(args, overrides):
    scenes = load_scenes(args.data)
    if args.baseline:
        cfg = _config_from(args, overrides) if (args.preset or args.config or overrides) else None
        mode = args.mode or (cfg.metric_mode if cfg else "marginal")
        t_f = scenes[0].t_f if scenes else 0
        report = constant_velocity_report(scenes, t_f, mode=mode)
        payload = {"predictor": "constant_velocity", **report.to_dict(), "scenes": len(scenes)}
    else:
        if args.checkpoint is None:
            raise ConfigError("eval needs --checkpoint or --baseline")
        model = _model_from_checkpoint(args, overrides)
        report = evaluate(model, scenes, k=args.k, mode=args.mode)
        payload = {"predictor": "mart", **report.to_dict(), "scenes": len(scenes)}
    emit(payload)
    return 0


def cmd_predict(args, overrides):
    model = _model_from_checkpoint(args, overrides)
    records = []
    for scene in load_scenes(args.data):
        preds, enc = model.forward(scene)
        record = {"scene_id": scene.scene_id, "agent_ids": list(scene.agent_ids),
                  "predictions": preds.numpy().tolist()}
        if args.attention:
            record["pair_attention"] = [w.data.mean(axis=0).tolist() for w in enc.pair_attention]
            record["group_attention"] = [w.data.mean(axis=0).tolist() for w in enc.group_attention]
        records.append(record)
    _write_jsonl(args.out, records)
    log_fields(logger, "wrote predictions", path=str(args.out), scenes=len(records))
    return 0


def cmd_groups(args, overrides):
    model = _model_from_checkpoint(args, overrides)
    records, scores = [], []
    for scene in load_scenes(args.data):
        G = model.groups(scene)
        record = {"scene_id": scene.scene_id, "agent_ids": list(scene.agent_ids), "groups": G.tolist()}
        if scene.group_truth is not None:
            record["recovery"] = group_recovery(G, scene.group_truth)
            scores.append(record["recovery"])
        records.append(record)
    _write_jsonl(args.out, records)
    summary = {"scenes": len(records)}
    if scores:
        summary["precision"] = float(np.mean([s["precision"] for s in scores]))
        summary["recall"] = float(np.mean([s["recall"] for s in scores]))
    log_fields(logger, "wrote groups", path=str(args.out), **summary)
    return 0


def cmd_gradcheck(args, overrides):
    cfg = build_config(preset=args.preset or "tiny", config_file=args.config, overrides=overrides)
    report = gradcheck(cfg, seed=args.seed, eps=args.eps, tol=args.tol, n_agents=args.agents)
    emit(report.to_dict())
    if not report.passed:
        print(f"gradcheck failed: worst parameter {report.worst_param} "
              f"(relative error {report.worst_error:.3e})", file=sys.stderr)
        return 1
    return 0


def cmd_count_params(args, overrides):
    cfg = _config_from(args, overrides)
    emit({"params": count_params(cfg), "breakdown": param_breakdown(cfg)})
    return 0


def cmd_count_macs(args, overrides):
    cfg = _config_from(args, overrides)
    emit({"macs": count_macs(cfg, args.agents), "agents": args.agents,
          "breakdown": mac_breakdown(cfg, args.agents)})
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "window": cmd_window,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
    "groups": cmd_groups,
    "gradcheck": cmd_gradcheck,
    "count-params": cmd_count_params,
    "count-macs": cmd_count_macs,
}


def build_parser():
    parser = argparse.ArgumentParser(prog="mart", description="Multiscale relational transformer tools")
    parser.add_argument("--log-level", default="INFO", help="package log level (default INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--preset", default=None, help="named model preset (eth_ucy, sdd, nba, tiny, mid)")
        p.add_argument("--config", default=None, help="flat key=value configuration file")
        return p

    p = sub.add_parser("synth", allow_abbrev=False, help="generate synthetic group scenes")
    p.add_argument("--out", required=True)
    p.add_argument("--scenario", default=None, help="named scenario from the scenarios file")
    p.add_argument("--scenarios-file", default=None)
    p.add_argument("--progress", action="store_true")

    p = sub.add_parser("window", allow_abbrev=False, help="cut a frame/agent/x/y table into scenes")
    p.add_argument("--tsv", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--t-p", type=int, default=8)
    p.add_argument("--t-f", type=int, default=12)
    p.add_argument("--stride", type=int, default=1)

    p = with_config(sub.add_parser("train", allow_abbrev=False, help="train a model"))
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--resume", default=None, help="checkpoint to continue from")
    p.add_argument("--checkpoint-every", type=int, default=0)
    p.add_argument("--progress", action="store_true")

    p = with_config(sub.add_parser("eval", allow_abbrev=False, help="minADE/minFDE over labeled scenes"))
    p.add_argument("--data", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--baseline", action="store_true", help="evaluate constant-velocity extrapolation")
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--mode", choices=["marginal", "joint"], default=None)

    p = with_config(sub.add_parser("predict", allow_abbrev=False, help="dump K candidate futures per scene"))
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--attention", action="store_true", help="also dump head-averaged attention")

    p = with_config(sub.add_parser("groups", allow_abbrev=False, help="dump estimated group incidence per scene"))
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)

    p = with_config(sub.add_parser("gradcheck", allow_abbrev=False, help="finite-difference gradient check"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--tol", type=float, default=1e-4)
    p.add_argument("--agents", type=int, default=4)

    with_config(sub.add_parser("count-params", allow_abbrev=False, help="exact parameter count"))
    p = with_config(sub.add_parser("count-macs", allow_abbrev=False, help="multiply-accumulates of one forward pass"))
    p.add_argument("--agents", type=int, default=10)
    return parser


def main(argv=None):
    parser = build_parser()
    args, extra = parser.parse_known_args(argv)
    configure_logging(args.log_level.upper())
    try:
        overrides = parse_overrides(extra)
        return COMMANDS[args.command](args, overrides)
    except MartError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
