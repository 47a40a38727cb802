"""Command-line interface for training, evaluating, converting and drawing embeddings.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric or domain
failure. Log level comes from ``LORENTZ_EMBED_LOG`` (default WARNING).
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import __version__, geometry
from .data import (AnnotationTable, InteractionLog, aggregate_interactions, closure_dataset,
                   cognate_similarity, load_edges, load_similarity, taxonomy_stats,
                   transitive_closure)
from .embio import atomic_open, read_embeddings, write_embeddings, write_metadata
from .errors import BoundaryError, DataError, NumericError
from .evaluation import evaluate
from .optimizer import EmbeddingTable, OptimizerConfig
from .render import render_svg
from .training import train

logger = logging.getLogger("lorentz_embed")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
MODES = ("taxonomy", "similarity", "annotations", "interactions")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    mode: str = "taxonomy"
    dim: int = 10
    lr: float = 0.3
    epochs: int = 100
    burnin: int = 20
    burnin_factor: float = 0.1
    negatives: int = 50
    seed: int = 0
    threads: int = 1
    eval_every: int = 0
    renormalize_every: int = 1
    input: str = ""
    output: str = ""

    def validate(self):
        if self.mode not in MODES:
            raise UsageError(f"--mode must be one of {', '.join(MODES)}")
        if self.dim < 2:
            raise UsageError("--dim must be >= 2")
        for name in ("epochs", "negatives", "threads", "renormalize_every"):
            if getattr(self, name) < 1:
                raise UsageError(f"--{name.replace('_', '-')} must be >= 1")
        for name in ("burnin", "eval_every", "seed"):
            if getattr(self, name) < 0:
                raise UsageError(f"--{name.replace('_', '-')} must be >= 0")
        if not self.input:
            raise UsageError("--input is required")
        if not self.output:
            raise UsageError("--output is required")

    def optimizer_config(self):
        try:
            return OptimizerConfig(learning_rate=self.lr, epochs=self.epochs,
                                   burnin_epochs=self.burnin, burnin_factor=self.burnin_factor,
                                   seed=self.seed, renormalize_every=self.renormalize_every)
        except ValueError as exc:
            raise UsageError(str(exc)) from None


def resolve_config(args):
    """Defaults, overridden by the ``--config`` JSON file, overridden by explicit flags."""
    values = asdict(RunConfig())
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except FileNotFoundError:
            raise DataError("no such config file", path=args.config) from None
        except json.JSONDecodeError as exc:
            raise DataError(f"invalid JSON ({exc.msg})", path=args.config,
                            line=exc.lineno) from None
        if not isinstance(loaded, dict):
            raise DataError("config must be a JSON object", path=args.config)
        unknown = sorted(set(loaded) - set(values))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        values.update(loaded)
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    cfg = RunConfig(**values)
    cfg.validate()
    return cfg


def load_dataset(mode, path):
    """Returns ``(SimilarityDataset, TaxonomyDag or None)``."""
    if mode == "taxonomy":
        dag = load_edges(path)
        return closure_dataset(dag), dag
    if mode == "similarity":
        return load_similarity(path), None
    if mode == "annotations":
        return cognate_similarity(AnnotationTable.load(path)), None
    return aggregate_interactions(InteractionLog.load(path)), None


def cmd_train(args):
    cfg = resolve_config(args)
    dataset, dag = load_dataset(cfg.mode, cfg.input)
    logger.info("loaded %d concepts, %d scored pairs", len(dataset), dataset.num_pairs)
    opt = cfg.optimizer_config()
    if cfg.eval_every and dag is None:
        logger.warning("--eval-every needs --mode taxonomy; periodic evaluation disabled")

    def progress(epoch, table, loss):
        logger.info("epoch %d/%d mean loss %.6f", epoch + 1, cfg.epochs, loss)
        if cfg.eval_every and dag is not None and (epoch + 1) % cfg.eval_every == 0:
            logger.info("epoch %d: %s", epoch + 1, evaluate(table, dag).summary())

    table, history = train(dataset, cfg.dim, opt, negatives=cfg.negatives,
                           threads=cfg.threads, callback=progress)
    if not table.is_valid():
        raise NumericError("trained points left the hyperboloid")
    write_embeddings(cfg.output, table.ids, table.points, model="lorentz")
    meta = {
        "model": "lorentz",
        "dim": cfg.dim,
        "epoch": len(history),
        "seed": cfg.seed,
        "config_hash": opt.digest(),
        "config": asdict(cfg),
        "final_loss": history[-1],
        "version": __version__,
    }
    write_metadata(cfg.output, meta)
    print(f"wrote {len(table)} embeddings (dim {cfg.dim}) to {cfg.output}; "
          f"final mean loss {history[-1]:.6f}")
    return EXIT_OK


def _load_table(path):
    """Read any embedding file as an :class:`EmbeddingTable` on the hyperboloid."""
    model, ids, coords = read_embeddings(path)
    if model == "poincare":
        points = geometry.from_poincare(coords)
    else:
        points = coords
        if not geometry.is_on_hyperboloid(points):
            raise BoundaryError(f"{path}: points are off the hyperboloid")
    return EmbeddingTable(ids, points)


def cmd_eval(args):
    table = _load_table(args.embedding)
    dag = load_edges(args.taxonomy)
    missing = [n for n in dag.nodes if n not in table]
    if missing:
        raise DataError(f"{len(missing)} taxonomy nodes missing from the embedding; "
                        f"first {min(10, len(missing))}: {', '.join(missing[:10])}")
    report = evaluate(table, dag)
    sys.stdout.write(report.to_tsv())
    print(report.summary())
    return EXIT_OK


def cmd_convert(args):
    model, ids, coords = read_embeddings(args.input)
    target = args.to or ("poincare" if model == "lorentz" else "lorentz")
    if target == model:
        out = coords
    elif target == "poincare":
        if not geometry.is_on_hyperboloid(coords):
            raise BoundaryError(f"{args.input}: points are off the hyperboloid")
        out = geometry.to_poincare(coords)
    else:
        out = geometry.from_poincare(coords)
    write_embeddings(args.output, ids, out, model=target)
    print(f"converted {len(ids)} points from {model} to {target}")
    return EXIT_OK


def cmd_closure(args):
    dag = load_edges(args.input)
    closure = transitive_closure(dag)
    with atomic_open(args.output) as fh:
        for u, v in closure:
            fh.write(f"{u}\t{v}\n")
    print(f"nodes\t{len(dag)}\nedges\t{len(closure)}")
    return EXIT_OK


def cmd_render(args):
    model, ids, coords = read_embeddings(args.input)
    if model == "lorentz":
        if not geometry.is_on_hyperboloid(coords):
            raise BoundaryError(f"{args.input}: points are off the hyperboloid")
        coords = geometry.to_poincare(coords)
    if coords.shape[1] != 2:
        raise UsageError(f"render needs a 2-d embedding, got dim {coords.shape[1]}")
    edges = load_edges(args.edges).edges if args.edges else ()
    svg = render_svg(ids, coords, size=args.size, radius=args.radius, edges=edges,
                     labels=args.labels)
    with atomic_open(args.output) as fh:
        fh.write(svg)
    print(f"rendered {len(ids)} points to {args.output}")
    return EXIT_OK


def cmd_stats(args):
    stats = taxonomy_stats(load_edges(args.input))
    for k in ("nodes", "edges", "closure_edges", "depth"):
        print(f"{k}\t{stats[k]}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser():
    p = _Parser(prog="lorentz-embed", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    t = sub.add_parser("train", help="learn embeddings from a dataset")
    t.add_argument("--config", help="JSON file with defaults for any of the flags below")
    t.add_argument("--mode", choices=MODES, default=None)
    t.add_argument("--dim", type=int, default=None)
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--epochs", type=int, default=None)
    t.add_argument("--burnin", type=int, default=None, help="burn-in epochs")
    t.add_argument("--burnin-factor", type=float, default=None)
    t.add_argument("--negatives", type=int, default=None)
    t.add_argument("--seed", type=int, default=None)
    t.add_argument("--threads", type=int, default=None,
                   help=">1 shares the table across threads (not reproducible)")
    t.add_argument("--eval-every", type=int, default=None)
    t.add_argument("--renormalize-every", type=int, default=None)
    t.add_argument("--input", default=None)
    t.add_argument("--output", default=None)
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="reconstruction and generality metrics")
    e.add_argument("embedding")
    e.add_argument("taxonomy")
    e.set_defaults(func=cmd_eval)

    c = sub.add_parser("convert", help="map between Lorentz and Poincare coordinates")
    c.add_argument("--input", required=True)
    c.add_argument("--output", required=True)
    c.add_argument("--to", choices=("lorentz", "poincare"), default=None)
    c.set_defaults(func=cmd_convert)

    cl = sub.add_parser("closure", help="write the transitive closure of a taxonomy")
    cl.add_argument("--input", required=True)
    cl.add_argument("--output", required=True)
    cl.set_defaults(func=cmd_closure)

    r = sub.add_parser("render", help="draw a 2-d embedding as SVG")
    r.add_argument("--input", required=True)
    r.add_argument("--output", required=True)
    r.add_argument("--size", type=int, default=512)
    r.add_argument("--radius", type=float, default=3.0)
    r.add_argument("--edges", help="taxonomy TSV whose edges are drawn")
    r.add_argument("--labels", action="store_true")
    r.set_defaults(func=cmd_render)

    s = sub.add_parser("stats", help="node, edge and depth counts of a taxonomy")
    s.add_argument("--input", required=True)
    s.set_defaults(func=cmd_stats)
    return p


def _setup_logging():
    level = os.environ.get("LORENTZ_EMBED_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv=None):
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, BoundaryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except np.linalg.LinAlgError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
