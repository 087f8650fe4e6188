"""Command-line entry point: ``docsource {gen,train,eval,predict,inspect}``.

Configuration is a flat JSON object whose keys are NetworkConfig and PageSpec
field names plus a few harness keys (see ``DEFAULTS``); command-line flags win
over the file. The resolved configuration is echoed to stderr on every run and
stored next to every artifact. stdout only ever carries JSON.
"""
import argparse
import json
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from .classify import predict_page
from .estimators import PageSourceClassifier
from .evalharness import extract_page_patches, load_manifest, run_experiment, write_report
from .exceptions import BadConfig, DocSourceError
from .imagecore import load_image
from .nnengine import NetworkConfig, load_checkpoint, save_checkpoint
from .segmentation import debug_dump
from .synthdata import (
    STYLES,
    MessagingProfile,
    PageSpec,
    generate_dataset,
    load_bank,
    same_model_bank,
    save_bank,
    separable_bank,
)

log = logging.getLogger("docsource")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

_NET_KEYS = {f.name for f in fields(NetworkConfig)} - {"n_classes"}
_PAGE_KEYS = {f.name for f in fields(PageSpec)} - {"seed"}

# harness keys; messaging keys are prefixed because PageSpec owns width/height
DEFAULTS = {
    "bank": "separable",        # separable | same_model | rescaled
    "bank_file": None,          # JSON signature list; overrides bank/n_devices
    "n_devices": 5,
    "pages_per_font": 5,
    "fonts": ["serif"],
    "msg_width": 780,
    "msg_height": 1040,
    "msg_quality": 75,
    "k_train": 2,
    "max_train_patches_per_page": None,
    "train_pages": None,        # page indices used by `train`; None = all
}
KNOWN_KEYS = _NET_KEYS | _PAGE_KEYS | set(DEFAULTS)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _str_list(text):
    return [v.strip() for v in text.split(",") if v.strip()]


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat JSON config file")
    common.add_argument("--seed", type=int)
    common.add_argument("-v", "--verbose", action="count", default=0)

    net = argparse.ArgumentParser(add_help=False)
    net.add_argument("--patch-size", type=_int_list, help="patch side; several (comma-separated) sweep in eval")
    net.add_argument("--batch-size", type=int)
    net.add_argument("--epochs", type=int)

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--manifest", type=Path, required=True)
    data.add_argument("--font")
    data.add_argument("--devices", type=_str_list, help="comma-separated device ids (default: all)")

    parser = _Parser(prog="docsource", description="Document image source attribution.")
    parser.add_argument("--version", action="version", version=f"docsource {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic dataset")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--font", help="comma-separated style names (serif, sans, mono)")
    p.add_argument("--devices", type=int, help="number of synthetic devices")

    p = sub.add_parser("train", parents=[common, net, data], help="train a model, write model.ckpt")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("eval", parents=[common, net, data], help="run the split protocol")
    p.add_argument("--out", type=Path, required=True)

    p = sub.add_parser("predict", parents=[common], help="attribute one page image")
    p.add_argument("--model", type=Path, required=True)
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--patch-size", type=int)

    p = sub.add_parser("inspect", parents=[common], help="segmentation debug dump")
    p.add_argument("--image", type=Path, required=True)
    p.add_argument("--out", type=Path, help="write the dump here instead of stdout")
    return parser


def resolve_config(args):
    cfg = dict(DEFAULTS)
    cfg.update({f.name: f.default for f in fields(PageSpec) if f.name in _PAGE_KEYS})
    cfg.update(NetworkConfig().to_dict())
    cfg.pop("n_classes")
    if args.config is not None:
        try:
            user = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(user, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(user) - KNOWN_KEYS)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        cfg.update(user)
    if args.seed is not None:
        cfg["seed"] = args.seed
    for flag in ("batch_size", "epochs"):
        if getattr(args, flag, None) is not None:
            cfg[flag] = getattr(args, flag)
    sizes = getattr(args, "patch_size", None)
    if isinstance(sizes, list):
        if not sizes:
            raise UsageError("--patch-size needs at least one value")
        cfg["patch_size"] = sizes[0]
    elif sizes is not None:
        cfg["patch_size"] = sizes
    return cfg


def network_config(cfg, n_classes=2):
    return NetworkConfig(n_classes=n_classes, **{k: cfg[k] for k in _NET_KEYS})


def _echo(cfg):
    print(f"docsource: seed={cfg['seed']} config={json.dumps(cfg, sort_keys=True)}", file=sys.stderr)


def _write_json(path, obj):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _pick_font(manifest, font):
    return font or manifest.fonts[0]


# ------------------------------------------------------------- subcommands

def cmd_gen(args, cfg):
    if args.font:
        cfg["fonts"] = _str_list(args.font)
    if args.devices is not None:
        cfg["n_devices"] = args.devices
    bad = [f for f in cfg["fonts"] if f not in STYLES]
    if bad:
        raise UsageError(f"unknown font styles {bad}; choose from {list(STYLES)}")
    _echo(cfg)
    if cfg["bank_file"]:
        bank = load_bank(cfg["bank_file"])
    elif cfg["bank"] == "same_model":
        bank = same_model_bank(cfg["n_devices"], seed=cfg["seed"])
    elif cfg["bank"] in ("separable", "rescaled"):
        bank = separable_bank(cfg["n_devices"], seed=cfg["seed"], rescaled=cfg["bank"] == "rescaled")
    else:
        raise UsageError(f"unknown bank {cfg['bank']!r}")
    spec = PageSpec(seed=cfg["seed"], **{k: cfg[k] for k in _PAGE_KEYS})
    profile = MessagingProfile(cfg["msg_width"], cfg["msg_height"], cfg["msg_quality"])
    styles = [STYLES.index(f) for f in cfg["fonts"]]
    manifest = generate_dataset(bank, spec, cfg["pages_per_font"], args.out, styles=styles,
                                messaging=profile)
    save_bank(bank, args.out / "bank.json")
    _write_json(args.out / "config.json", cfg)
    print(json.dumps({"manifest": str(args.out / "manifest.json"),
                      "n_images": sum(len(p) for d in manifest["devices"] for p in d["pages"].values())}))
    return EXIT_OK


def cmd_train(args, cfg):
    manifest = load_manifest(args.manifest)
    font = _pick_font(manifest, args.font)
    devices = args.devices or manifest.devices
    _echo(cfg)
    patches = extract_page_patches(manifest, devices, font, cfg["patch_size"])
    pages = cfg["train_pages"]
    train_pages, labels = [], []
    for d, per_page in enumerate(patches):
        for k in (range(len(per_page)) if pages is None else pages):
            train_pages.append(per_page[k])
            labels.append(d)
    clf = PageSourceClassifier(
        patch_size=cfg["patch_size"], max_patches_per_page=cfg["max_train_patches_per_page"],
        epochs=cfg["epochs"], batch_size=cfg["batch_size"], lr=cfg["lr"], decay=cfg["decay"],
        seed=cfg["seed"], val_fraction=cfg["val_fraction"], bn_momentum=cfg["bn_momentum"])
    clf.fit_patches(train_pages, np.asarray(labels), class_names=list(devices))
    ckpt = clf.cnn_.checkpoint_
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    save_checkpoint(ckpt, out / "model.ckpt")
    _write_json(out / "config.json", {**cfg, "font": font, "devices": list(devices)})
    print(json.dumps({"model": str(out / "model.ckpt"), "best_epoch": ckpt.epoch,
                      "val_loss": ckpt.val_loss, "classes": list(devices)}))
    return EXIT_OK


def cmd_eval(args, cfg):
    manifest = load_manifest(args.manifest)
    font = _pick_font(manifest, args.font)
    sizes = args.patch_size or [cfg["patch_size"]]
    _echo(cfg)
    results = []
    for p in sizes:
        cfg_p = {**cfg, "patch_size": p}
        report = run_experiment(manifest, args.devices, font, network_config(cfg_p),
                                k_train=cfg["k_train"],
                                max_train_patches_per_page=cfg["max_train_patches_per_page"])
        paths = write_report(report, args.out, stem=f"report_{font}_p{p}")
        results.append({"patch_size": p, "mean_accuracy": report.mean_accuracy,
                        "report": str(paths["json"])})
        log.info("p=%d mean accuracy %.2f%%", p, report.mean_accuracy)
    _write_json(args.out / "config.json", {**cfg, "font": font, "patch_sizes": sizes})
    print(json.dumps({"font": font, "results": results}))
    return EXIT_OK


def cmd_predict(args, cfg):
    ckpt = load_checkpoint(args.model)
    _echo({**cfg, "patch_size": ckpt.config.patch_size, "seed": ckpt.config.seed})
    verdict = predict_page(ckpt, load_image(args.image), args.patch_size)
    print(json.dumps(verdict.to_dict(), sort_keys=True))
    return EXIT_OK


def cmd_inspect(args, cfg):
    _echo(cfg)
    dump = debug_dump(load_image(args.image))
    if args.out is not None:
        _write_json(args.out, dump)
        print(json.dumps({"dump": str(args.out), "n_kept": dump["n_kept"]}))
    else:
        print(json.dumps(dump, sort_keys=True))
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval,
            "predict": cmd_predict, "inspect": cmd_inspect}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = resolve_config(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, BadConfig) as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (DocSourceError, OSError) as exc:
        print(f"docsource: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:
        # --help / --version
        return exc.code if isinstance(exc.code, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
