"""maaig command line: corpus synthesis, dataset assembly, training, the
six-setting matrix, single-clip generation, metric reports, and the
annotation service."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import dataset, plots, skeleton, synth
from .metrics import evaluate_corpus
from .model import greedy_decode, load_checkpoint
from .skeleton import Coord
from .tokens import Vocabulary, decode, train_vocab
from .training import (
    FINETUNE_LR_SCALE,
    TrainConfig,
    localize_examples,
    run_matrix,
    train,
)


def _cmd_synth(args: argparse.Namespace) -> int:
    examples = synth.gen_corpus(args.kind, args.n, args.seed, fps=args.fps)
    out = Path(args.out)
    manifest = dataset.DatasetManifest(examples=tuple(examples), seed=args.seed)
    dataset.save_dataset(manifest, out)
    print(f"wrote {len(examples)} {args.kind} examples to {out}")
    return 0


def _cmd_build_dataset(args: argparse.Namespace) -> int:
    clips = [skeleton.load_clip(p) for p in sorted(Path(args.clips).glob("*.json"))]
    annotations = dataset.load_annotations(args.annotations)
    manifest = dataset.build_dataset(clips, annotations, args.seed)
    path = dataset.save_dataset(manifest, args.out)
    n_train = sum(1 for e in manifest.examples if e.split is dataset.Split.TRAIN)
    print(
        f"built {len(manifest.examples)} examples "
        f"({n_train} train / {len(manifest.examples) - n_train} test) -> {path}"
    )
    return 0


def _load_corpus(data_dir: str) -> list[dataset.PairedExample]:
    return list(dataset.load_dataset(data_dir).examples)


def _vocab_for(args: argparse.Namespace, examples) -> Vocabulary:
    if args.vocab:
        return Vocabulary.load(args.vocab)
    texts = [ex.instruction for ex in examples if ex.split is dataset.Split.TRAIN]
    return train_vocab(texts)


def _cmd_train(args: argparse.Namespace) -> int:
    examples = _load_corpus(args.data)
    vocab = _vocab_for(args, examples)
    train_split = [ex for ex in examples if ex.split is dataset.Split.TRAIN]
    if args.coord == "local":
        train_split = localize_examples(train_split)
    lr = args.lr if args.lr is not None else (
        1e-3 * FINETUNE_LR_SCALE if args.stage == "finetune" else 1e-3
    )
    config = TrainConfig(
        stage=args.stage,
        arch=args.arch,
        coord=args.coord,
        steps=args.steps,
        batch_size=args.batch_size,
        lr=lr,
        seed=args.seed,
        init_from=args.init,
    )
    out = Path(args.out)
    report = train(config, train_split, vocab, out)
    vocab.save(out / "vocab.json")
    print(
        f"trained {args.stage}/{args.arch} for {args.steps} steps; "
        f"final loss {report.loss_curve[-1][1]:.4f}; checkpoint {report.checkpoint_path}"
    )
    return 0


def _cmd_matrix(args: argparse.Namespace) -> int:
    pretrain = _load_corpus(args.pretrain)
    finetune = _load_corpus(args.finetune)
    texts = [
        ex.instruction
        for ex in [*pretrain, *finetune]
        if ex.split is dataset.Split.TRAIN
    ]
    vocab = train_vocab(texts)
    base = TrainConfig(
        stage="scratch",
        arch="t5",
        coord="local",
        steps=args.steps,
        batch_size=args.batch_size,
        lr=args.lr,
        seed=args.seed,
    )
    out = Path(args.out)
    run_matrix(base, pretrain, finetune, vocab, out, pretrain_steps=args.pretrain_steps)
    vocab.save(out / "vocab.json")
    print((out / "matrix.txt").read_text(), end="")
    return 0


def _cmd_generate(args: argparse.Namespace) -> int:
    model, meta = load_checkpoint(args.ckpt)
    vocab = Vocabulary(words=tuple(meta["vocab_words"]))
    clip = skeleton.load_clip(args.clip)
    if args.start is not None or args.end is not None:
        start = args.start if args.start is not None else 0.0
        end = args.end if args.end is not None else clip.duration_s
        clip = skeleton.clip_by_time(clip, start, end)
    if clip.coord is Coord.WORLD:
        clip = skeleton.world_to_local(clip)
    print(decode(vocab, greedy_decode(model, clip)))
    return 0


def _read_lines(path: str) -> list[str]:
    return Path(path).read_text().splitlines()


def _cmd_evaluate(args: argparse.Namespace) -> int:
    preds = _read_lines(args.pred)
    refs = _read_lines(args.ref)
    tokenize = None
    if args.vocab:
        vocab = Vocabulary.load(args.vocab)
        from .tokens import encode

        def tokenize(text: str) -> list[str]:
            # Score in the model's vocabulary view: OOV words become <unk>.
            return [vocab.word_of(i) for i in encode(vocab, text)]

    report = (
        evaluate_corpus(preds, refs, tokenize=tokenize)
        if tokenize
        else evaluate_corpus(preds, refs)
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(json.dumps(report.to_dict(), indent=2))
    headers = ["Bleu_1", "Bleu_2", "Bleu_3", "Bleu_4", "METEOR", "ROUGE_L"]
    text = plots.render_table(headers, [[f"{v:.6f}" for v in report.values()]])
    (out / "report.txt").write_text(text)
    plots.save_report_figure(report, out / "report.png")
    print(text, end="")
    return 0


def _cmd_serve(args: argparse.Namespace) -> int:
    from .service import serve

    serve(args.clips, args.annotations, args.ckpt, port=args.port, ui_dir=args.ui)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="maaig", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--kind", choices=["pretrain", "finetune"], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--fps", type=float, default=synth.DEFAULT_FPS)
    p.set_defaults(fn=_cmd_synth)

    p = sub.add_parser("build-dataset", help="pair clips with annotations and split")
    p.add_argument("--clips", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_build_dataset)

    p = sub.add_parser("train", help="run one training stage")
    p.add_argument("--stage", choices=["scratch", "pretrain", "finetune"], required=True)
    p.add_argument("--arch", choices=["transformer", "t5"], required=True)
    p.add_argument("--coord", choices=["world", "local"], required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--init", default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--vocab", default=None)
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("matrix", help="run the six-setting comparison")
    p.add_argument("--pretrain", required=True)
    p.add_argument("--finetune", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--pretrain-steps", type=int, default=None)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--lr", type=float, default=1e-3)
    p.set_defaults(fn=_cmd_matrix)

    p = sub.add_parser("generate", help="generate an instruction for a clip file")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--clip", required=True)
    p.add_argument("--start", type=float, default=None)
    p.add_argument("--end", type=float, default=None)
    p.set_defaults(fn=_cmd_generate)

    p = sub.add_parser("evaluate", help="score predictions against references")
    p.add_argument("--pred", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--vocab", default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_evaluate)

    p = sub.add_parser("serve", help="run the annotation service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--clips", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--ckpt", default=None)
    p.add_argument("--ui", default=None, help="directory with the built annotation UI")
    p.set_defaults(fn=_cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ValueError, OSError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
