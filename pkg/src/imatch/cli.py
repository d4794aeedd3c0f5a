"""Command-line entry point: ``imatch {align,train,gridsearch,eval}``."""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .aligncore import AlignConfig, ChunkedSentence, align, group_sims
from .classify import class_distribution, label_solution, train_score_model, train_type_model
from .config import ConfigError, RunConfig
from .forest import ForestError, ForestModel
from .io_eval import (METRIC_TAG, WaDocument, WaEntry, WaFormatError, evaluate, parse_wa,
                      read_chunk_file, write_wa)
from .lexres import ResourceError, Resources

log = logging.getLogger("imatch")

# Worker-process state for parallel alignment.
_W: dict = {}


def _init_worker(res, align_cfg, type_model, score_model):
    _W.update(res=res, cfg=align_cfg, tm=type_model, sm=score_model)


def _align_entry(item: tuple[str, ChunkedSentence, ChunkedSentence]) -> WaEntry:
    sid, src, tgt = item
    sol = align(src, tgt, _W["res"], _W["cfg"])
    pairs = label_solution(sol, src, tgt, _W["tm"], _W["sm"], _W["res"])
    return WaEntry(sid, src, tgt, tuple(pairs))


def align_corpus(items, res: Resources, align_cfg: AlignConfig, type_model=None,
                 score_model=None, jobs: int = 1) -> list[WaEntry]:
    """Align and label every (id, source, target); output order follows input."""
    args = (res, align_cfg, type_model, score_model)
    if jobs <= 1 or len(items) < 2:
        _init_worker(*args)
        return [_align_entry(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker, initargs=args) as pool:
        return list(pool.map(_align_entry, items, chunksize=max(1, len(items) // (4 * jobs))))


def grid_search(dev: WaDocument, res: Resources, cfg: RunConfig, grid: list[float]):
    """alignF1 on ``dev`` for each gamma; best is the argmax, ties to the smaller gamma."""
    if not grid:
        raise ValueError("empty gamma grid")
    sims = [group_sims(e.source, e.target, res, cfg.max_group_size) for e in dev.entries]
    report = []
    for gamma in sorted(grid):
        acfg = AlignConfig(gamma=gamma, prune_threshold=cfg.prune_threshold,
                           max_group_size=cfg.max_group_size)
        entries = []
        for e, gs in zip(dev.entries, sims):
            sol = align(e.source, e.target, res, acfg, sims=gs)
            pairs = label_solution(sol, e.source, e.target, None, None, res)
            entries.append(WaEntry(e.id, e.source, e.target, tuple(pairs)))
        f1 = evaluate(dev, WaDocument(tuple(entries)), cfg.exclude_punct).align_f1
        report.append((gamma, f1))
    best = max(report, key=lambda gf: (gf[1], -gf[0]))[0]
    return best, report


def _load_config(args) -> RunConfig:
    cfg = RunConfig.from_file(args.config) if args.config else RunConfig()
    if args.gamma is not None:
        cfg.gamma = args.gamma
    if args.seed is not None:
        cfg.seed = args.seed
    if args.jobs is not None:
        cfg.jobs = args.jobs
    return cfg.validate()


def cmd_align(args) -> int:
    cfg = _load_config(args)
    res = cfg.load_resources()
    src = read_chunk_file(args.source, res.norm_map)
    tgt = read_chunk_file(args.target, res.norm_map)
    if len(src) != len(tgt):
        raise ValueError(f"{args.source} has {len(src)} sentences but {args.target} has {len(tgt)}")
    tm = ForestModel.load(args.type_model) if args.type_model else None
    sm = ForestModel.load(args.score_model) if args.score_model else None
    if tm is None or sm is None:
        log.warning("no %s model given: aligned pairs default to SIMI / 3",
                    "type" if tm is None else "score")
    items = [(str(k), s, t) for k, (s, t) in enumerate(zip(src, tgt), 1)]
    entries = align_corpus(items, res, cfg.align_config(), tm, sm, cfg.workers)
    write_wa(WaDocument(tuple(entries)), args.out)
    log.info("wrote %d sentence pairs to %s", len(entries), args.out)
    return 0


def cmd_train(args) -> int:
    cfg = _load_config(args)
    res = cfg.load_resources()
    gold = [e for path in args.gold for e in parse_wa(path, res.norm_map).entries]
    types, scores = class_distribution(gold)
    print("type\t" + " ".join(f"{k}={v}" for k, v in sorted(types.items())))
    print("score\t" + " ".join(f"{k}={v}" for k, v in sorted(scores.items())))
    params = cfg.forest_params()
    out = Path(args.out) if args.out else None
    type_path = args.type_model or (out / "type.model" if out else None)
    score_path = args.score_model or (out / "score.model" if out else None)
    if type_path is None or score_path is None:
        raise ValueError("give --out DIR or both --type-model and --score-model")
    if out:
        out.mkdir(parents=True, exist_ok=True)
    jobs = cfg.workers
    train_type_model(gold, res, params, cfg.hash_dim, jobs).save(type_path)
    train_score_model(gold, res, params, cfg.hash_dim, jobs).save(score_path)
    log.info("wrote %s and %s", type_path, score_path)
    return 0


def cmd_gridsearch(args) -> int:
    cfg = _load_config(args)
    res = cfg.load_resources()
    dev = parse_wa(args.dev, res.norm_map)
    grid = [float(x) for x in args.grid.split(",") if x.strip()]
    best, report = grid_search(dev, res, cfg, grid)
    for gamma, f1 in report:
        print(f"gamma={gamma:g}\talign_f1={f1:.4f}")
    print(f"best_gamma={best:g}")
    return 0


def cmd_eval(args) -> int:
    gold = parse_wa(args.gold)
    system = parse_wa(args.system)
    rep = evaluate(gold, system, args.exclude_punct)
    print(f"# metric={METRIC_TAG} Align Type Score T+S")
    print(rep.line())
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument("--gamma", type=float, help="merge weight base (alpha = gamma^(|S1|+|S2|-2))")
    common.add_argument("--seed", type=int)
    common.add_argument("--jobs", type=int, help="worker processes (0 = all processors)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="imatch", description="ILP chunk alignment for interpretable STS")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("align", parents=[common], help="align two chunked sentence files")
    a.add_argument("source", help="source sentences, one bracket-chunked line each")
    a.add_argument("target", help="target sentences, line-parallel to source")
    a.add_argument("--type-model")
    a.add_argument("--score-model")
    a.add_argument("--out", required=True, help="output wa file")
    a.set_defaults(func=cmd_align)

    t = sub.add_parser("train", parents=[common], help="train type and score models from gold wa files")
    t.add_argument("gold", nargs="+")
    t.add_argument("--type-model")
    t.add_argument("--score-model")
    t.add_argument("--out", help="directory for type.model and score.model")
    t.set_defaults(func=cmd_train)

    g = sub.add_parser("gridsearch", parents=[common], help="pick gamma by alignment F1 on a dev set")
    g.add_argument("dev")
    g.add_argument("--grid", default="0.9,1.0,1.1,1.2,1.3,1.5")
    g.set_defaults(func=cmd_gridsearch)

    e = sub.add_parser("eval", parents=[common], help="score a system wa file against gold")
    e.add_argument("gold")
    e.add_argument("system")
    e.add_argument("--exclude-punct", action="store_true")
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, ResourceError, WaFormatError, ForestError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
