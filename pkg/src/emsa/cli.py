"""Command-line interface.

Subcommands cover the full pipeline on directory trees:

    synth      generate a synthetic split
    encode-gt  dense instance/orientation targets from ground truth
    forward    run a weight archive over a split
    decode     instance centers + grouping from center/offset tensors
    merge      panoptic fusion of semantics and instances
    eval       metric report (mIoU, PQ, MAAE, scene accuracy)
    loss-eval  per-task loss breakdown of predictions against ground truth
    report     render a metric report to a summary and bar charts

Exit codes: 0 on success, 2 for invalid configuration or unusable inputs,
1 for unexpected runtime failures.  Option precedence: built-in defaults,
then the --config JSON file, then explicit flags.
"""

import argparse
import json
import sys

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import codec, datasets, graph as graphmod, losses, merge as mergemod, metrics
from .container import load_tensor, save_tensor
from .orientation import instance_orientation, orientation_field
from .spectrum import default_scene_spectrum, load_spectrum

_CONFIG_DOC = {
    "spectrum": "class spectrum: bundled name or JSON path",
    "sigma": "center heatmap Gaussian spread in pixels",
    "tau": "center decoding score threshold in (0, 1)",
    "pool_size": "odd NMS window extent in pixels",
    "top_k": "maximum decoded centers per image",
    "delta": "unknown-pixel distance as a fraction of the image diagonal",
    "min_area": "minimum instance area fraction kept by the codec",
    "kappa": "von Mises concentration of the orientation loss",
    "epsilon": "scene label smoothing factor",
    "task_weights": "semantic:scene:instance:orientation loss weights",
    "seed": "RNG seed",
    "threads": "worker threads for per-sample work",
}


@dataclass
class RunConfig:
    """Resolved configuration shared by all subcommands."""

    spectrum: str = "nyuv2_40"
    sigma: float = 8.0
    tau: float = 0.1
    pool_size: int = 17
    top_k: int = 64
    delta: float = 0.05
    min_area: float = 0.0025
    kappa: float = 1.0
    epsilon: float = 0.1
    task_weights: str = "1:0.25:3:1"
    seed: int = 0
    threads: int = 1

    def codec_config(self) -> codec.CodecConfig:
        return codec.CodecConfig(
            sigma=self.sigma, center_threshold=self.tau,
            nms_pool_size=self.pool_size, top_k=self.top_k,
            unknown_distance=self.delta, min_area_fraction=self.min_area)

    def weights(self) -> losses.TaskWeights:
        return losses.TaskWeights.parse(self.task_weights)


def _resolve_config(args) -> RunConfig:
    values = {}
    if args.config is not None:
        path = Path(args.config)
        if not path.is_file():
            raise FileNotFoundError(f"config file {path} does not exist")
        try:
            loaded = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ValueError(f"{path}: invalid JSON ({e})") from e
        known = {f.name for f in fields(RunConfig)}
        unknown = set(loaded) - known
        if unknown:
            raise ValueError(
                f"{path}: unknown config keys {sorted(unknown)}; valid keys "
                f"are {sorted(known)}")
        values.update(loaded)
    for f in fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    cfg = RunConfig(**values)
    if cfg.threads < 1:
        raise ValueError(f"--threads must be >= 1, got {cfg.threads}")
    cfg.codec_config()  # validate codec knobs eagerly
    cfg.weights()
    if not 0 <= cfg.epsilon < 1:
        raise ValueError(f"--epsilon must be in [0, 1), got {cfg.epsilon}")
    if cfg.kappa <= 0:
        raise ValueError(f"--kappa must be positive, got {cfg.kappa}")
    return cfg


def _add_common(p: argparse.ArgumentParser):
    g = p.add_argument_group("shared configuration")
    g.add_argument("--config", metavar="JSON",
                   help="JSON config file; flags override its values")
    g.add_argument("--spectrum", help=_CONFIG_DOC["spectrum"] + " (default nyuv2_40)")
    g.add_argument("--seed", type=int, help=_CONFIG_DOC["seed"] + " (default 0)")
    g.add_argument("--threads", type=int,
                   help=_CONFIG_DOC["threads"] + " (default 1)")
    g.add_argument("--tau", type=float, help=_CONFIG_DOC["tau"] + " (default 0.1)")
    g.add_argument("--pool-size", dest="pool_size", type=int,
                   help=_CONFIG_DOC["pool_size"] + " (default 17)")
    g.add_argument("--top-k", dest="top_k", type=int,
                   help=_CONFIG_DOC["top_k"] + " (default 64)")
    g.add_argument("--sigma", type=float, help=_CONFIG_DOC["sigma"] + " (default 8)")
    g.add_argument("--delta", type=float, help=_CONFIG_DOC["delta"] + " (default 0.05)")
    g.add_argument("--min-area", dest="min_area", type=float,
                   help=_CONFIG_DOC["min_area"] + " (default 0.0025)")
    g.add_argument("--kappa", type=float, help=_CONFIG_DOC["kappa"] + " (default 1)")
    g.add_argument("--epsilon", type=float,
                   help=_CONFIG_DOC["epsilon"] + " (default 0.1)")
    g.add_argument("--task-weights", dest="task_weights", metavar="A:B:C:D",
                   help=_CONFIG_DOC["task_weights"] + " (default 1:0.25:3:1)")


def _map_samples(sample_ids, fn, threads):
    """Apply fn to every sample id, optionally on worker threads.

    Results come back as {id: value}; callers must reduce in sorted id order
    so thread scheduling can never change any output.
    """
    ids = list(sample_ids)
    if threads <= 1:
        return {sid: fn(sid) for sid in ids}
    with ThreadPoolExecutor(max_workers=threads) as ex:
        futures = {sid: ex.submit(fn, sid) for sid in ids}
        return {sid: fut.result() for sid, fut in futures.items()}


def _split_ids(tree_dir) -> list[str]:
    """Sample ids listed by a directory's split.json manifest."""
    manifest = Path(tree_dir) / "split.json"
    if not manifest.is_file():
        raise FileNotFoundError(f"{manifest} does not exist")
    try:
        ids = json.loads(manifest.read_text())["samples"]
    except (json.JSONDecodeError, KeyError) as e:
        raise ValueError(f"{manifest}: not a split manifest ({e})") from e
    return list(ids)


def _write_manifest(out_dir, ids):
    Path(out_dir).mkdir(parents=True, exist_ok=True)
    (Path(out_dir) / "split.json").write_text(
        json.dumps({"samples": sorted(ids)}, indent=2) + "\n")


# --------------------------------------------------------------------------
# subcommands


def cmd_synth(args) -> int:
    cfg = _resolve_config(args)
    spectrum = load_spectrum(cfg.spectrum)
    if args.num_scenes < 1:
        raise ValueError(f"--num-scenes must be >= 1, got {args.num_scenes}")
    out = Path(args.output)
    samples = {}
    for i in range(args.num_scenes):
        sid = f"{i:06d}"
        samples[sid] = datasets.synth_scene(
            seed=cfg.seed + i, height=args.height, width=args.width,
            num_instances=args.num_instances, spectrum=spectrum,
            min_area_fraction=cfg.min_area)
    datasets.save_split(out, samples)
    print(f"wrote {len(samples)} scenes to {out}")
    return 0


def cmd_encode_gt(args) -> int:
    cfg = _resolve_config(args)
    spectrum = load_spectrum(cfg.spectrum)
    ccfg = cfg.codec_config()
    records = {r.sample_id: r for r in datasets.load_split(args.input)}
    out = Path(args.output)

    def work(sid):
        sample = datasets.load_sample(records[sid], spectrum)
        thing = mergemod.foreground_mask(sample.semantic, spectrum)
        targets = codec.encode_targets(sample.instance, ccfg, thing_mask=thing)
        field, _ = orientation_field(sample.instance, sample.orientations)
        d = out / sid
        d.mkdir(parents=True, exist_ok=True)
        save_tensor(d / "center.emt", targets.heatmap)
        save_tensor(d / "offset.emt", targets.offsets)
        save_tensor(d / "orientation.emt", field)
        from PIL import Image
        Image.fromarray(sample.semantic.astype(np.uint16)).save(d / "semantic.png")
        (d / "scene.txt").write_text(f"{sample.scene}\n")
        return None

    _map_samples(records, work, cfg.threads)
    _write_manifest(out, records)
    print(f"encoded {len(records)} samples to {out}")
    return 0


def cmd_forward(args) -> int:
    cfg = _resolve_config(args)
    spectrum = load_spectrum(cfg.spectrum)
    archive = Path(args.archive)
    records = {r.sample_id: r for r in datasets.load_split(args.input)}
    if not records:
        raise ValueError(f"split {args.input} lists no samples")

    if (archive / "manifest.json").is_file():
        g = graphmod.load_archive(archive)
    elif args.init_random:
        first = datasets.load_sample(records[sorted(records)[0]], spectrum)
        h, w = first.shape
        plan = {}
        if args.encoder_channels:
            plan["encoder_channels"] = [int(v) for v in args.encoder_channels.split(",")]
        if args.decoder_channels:
            plan["decoder_channels"] = [int(v) for v in args.decoder_channels.split(",")]
        gcfg = graphmod.GraphConfig(
            height=h, width=w,
            num_semantic_classes=spectrum.num_prediction_classes,
            num_scene_classes=default_scene_spectrum().num_prediction_classes,
            **plan)
        g = graphmod.build_graph(gcfg, seed=cfg.seed)
        graphmod.save_archive(g, archive)
        print(f"initialized random weights at {archive}")
    else:
        raise FileNotFoundError(
            f"weight archive {archive} does not exist (use --init-random to "
            f"create one)")

    out = Path(args.output)

    def work(sid):
        sample = datasets.load_sample(records[sid], spectrum)
        outputs = graphmod.forward(g, sample.rgb,
                                   sample.depth if g.cfg.use_depth else None)
        d = out / sid
        d.mkdir(parents=True, exist_ok=True)
        save_tensor(d / "semantic.emt", outputs.semantic_logits)
        for i, side in enumerate(outputs.semantic_side):
            save_tensor(d / f"semantic_side_{i}.emt", side)
        save_tensor(d / "center.emt", outputs.center)
        save_tensor(d / "offset.emt", outputs.offset)
        save_tensor(d / "orientation.emt", outputs.orientation)
        save_tensor(d / "scene.emt", outputs.scene_logits)
        return None

    _map_samples(records, work, cfg.threads)
    _write_manifest(out, records)
    print(f"ran forward over {len(records)} samples into {out}")
    return 0


def _load_semantic_labels(sample_dir) -> np.ndarray:
    """Prediction dirs hold semantic.emt logits; target dirs a semantic.png."""
    d = Path(sample_dir)
    if (d / "semantic.emt").is_file():
        return mergemod.logits_to_labels(load_tensor(d / "semantic.emt"))
    if (d / "semantic.png").is_file():
        from PIL import Image
        return np.asarray(Image.open(d / "semantic.png")).astype(np.int32)
    raise FileNotFoundError(f"{d}: neither semantic.emt nor semantic.png found")


def cmd_decode(args) -> int:
    cfg = _resolve_config(args)
    spectrum = load_spectrum(cfg.spectrum)
    ccfg = cfg.codec_config()
    src = Path(args.input)
    out = Path(args.output) if args.output else src
    ids = _split_ids(src)

    def work(sid):
        d = src / sid
        heatmap = load_tensor(d / "center.emt")
        offsets = load_tensor(d / "offset.emt")
        labels = _load_semantic_labels(d)
        fg = mergemod.foreground_mask(labels, spectrum)
        centers = codec.decode_centers(heatmap, ccfg)
        instances = codec.group_pixels(centers, offsets, fg, ccfg)
        od = out / sid
        od.mkdir(parents=True, exist_ok=True)
        labelmap = codec.instances_to_labelmap(instances, fg.shape)
        from PIL import Image
        Image.fromarray(labelmap.astype(np.uint16)).save(od / "instance.png")
        payload = {
            "sample": sid,
            "num_centers": len(centers),
            "instances": [
                {"id": inst.id, "center": list(inst.center),
                 "score": inst.score, "area": inst.area}
                for inst in instances
            ],
        }
        (od / "instances.json").write_text(json.dumps(payload, indent=2) + "\n")
        return len(instances)

    counts = _map_samples(ids, work, cfg.threads)
    _write_manifest(out, ids)
    total = sum(counts[sid] for sid in sorted(counts))
    print(f"decoded {total} instances over {len(ids)} samples into {out}")
    return 0


def cmd_merge(args) -> int:
    cfg = _resolve_config(args)
    spectrum = load_spectrum(cfg.spectrum)
    src = Path(args.input)
    out = Path(args.output) if args.output else src
    ids = _split_ids(src)

    def work(sid):
        d = src / sid
        labels = _load_semantic_labels(d)
        from PIL import Image
        labelmap = np.asarray(Image.open(d / "instance.png")).astype(np.int32)
        meta = json.loads((d / "instances.json").read_text())
        instances = []
        for entry in meta["instances"]:
            rows, cols = np.nonzero(labelmap == entry["id"])
            instances.append(codec.DetectedInstance(
                id=entry["id"], center=tuple(entry["center"]),
                score=entry["score"], pixels=(rows, cols)))
        pmap = mergemod.merge(labels, instances, spectrum)

        field = None
        if (d / "orientation.emt").is_file():
            field = load_tensor(d / "orientation.emt")
        for inst, entry in zip(instances, meta["instances"]):
            entry["semantic_class"] = inst.semantic_class
            if field is not None and inst.semantic_class is not None:
                entry["orientation_deg"] = instance_orientation(field, inst.pixels)
            else:
                entry["orientation_deg"] = None

        od = out / sid
        od.mkdir(parents=True, exist_ok=True)
        mergemod.encode_panoptic_png(pmap, od / "panoptic.png")
        (od / "instances.json").write_text(json.dumps(meta, indent=2) + "\n")
        if (d / "scene.emt").is_file():
            scene_id = int(np.argmax(load_tensor(d / "scene.emt"))) + 1
        elif (d / "scene.txt").is_file():
            scene_id = int((d / "scene.txt").read_text().strip())
        else:
            scene_id = None
        if scene_id is not None:
            (od / "scene_pred.txt").write_text(f"{scene_id}\n")
        return None

    _map_samples(ids, work, cfg.threads)
    _write_manifest(out, ids)
    print(f"merged {len(ids)} samples into {out}")
    return 0


def _resize_pmap(pmap, hw):
    if pmap.shape == tuple(hw):
        return pmap
    return mergemod.PanopticMap(
        semantic=metrics.resize_nearest(pmap.semantic, hw),
        instance=metrics.resize_nearest(pmap.instance, hw))


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    spectrum = load_spectrum(cfg.spectrum)
    excluded = []
    if args.exclude_classes:
        excluded = [int(v) for v in args.exclude_classes.split(",")]
    gt_records = {r.sample_id: r for r in datasets.load_split(args.gt)}
    pred_dir = Path(args.input)

    def work(sid):
        gt = datasets.load_sample(gt_records[sid], spectrum)
        d = pred_dir / sid
        if not (d / "panoptic.png").is_file():
            raise FileNotFoundError(f"{d}: panoptic.png missing (run merge first)")
        pred = _resize_pmap(mergemod.decode_panoptic_png(d / "panoptic.png"),
                            gt.shape)
        gt_pmap = mergemod.PanopticMap(semantic=gt.semantic, instance=gt.instance)

        pq = metrics.PanopticQuality(spectrum, excluded)
        matches = pq.add(pred, gt_pmap)

        n = spectrum.num_classes
        valid = gt.semantic != 0
        conf = np.bincount(
            gt.semantic[valid].astype(np.int64) * n + pred.semantic[valid],
            minlength=n * n).reshape(n, n)

        gt_errs, match_errs = [], []
        if gt.orientations and (d / "orientation.emt").is_file():
            field = load_tensor(d / "orientation.emt")
            if field.shape[1:] != gt.shape:
                field = np.stack([metrics.resize_nearest(field[0], gt.shape),
                                  metrics.resize_nearest(field[1], gt.shape)])
            for inst_id, gt_deg in sorted(gt.orientations.items()):
                pixels = np.nonzero(gt.instance == inst_id)
                pred_deg = instance_orientation(field, pixels)
                gt_errs.append(metrics.angular_error(gt_deg, pred_deg))
        if gt.orientations and (d / "instances.json").is_file():
            meta = json.loads((d / "instances.json").read_text())
            pred_orients = {e["id"]: e.get("orientation_deg")
                            for e in meta["instances"]}
            for m in matches:
                deg = pred_orients.get(m.pred_instance)
                if m.gt_instance in gt.orientations and deg is not None:
                    match_errs.append(metrics.angular_error(
                        gt.orientations[m.gt_instance], deg))

        scene_pair = None
        if (d / "scene_pred.txt").is_file():
            scene_pair = (gt.scene, int((d / "scene_pred.txt").read_text().strip()))
        return pq, conf, gt_errs, match_errs, scene_pair

    results = _map_samples(gt_records, work, cfg.threads)

    total_pq = metrics.PanopticQuality(spectrum, excluded)
    n = spectrum.num_classes
    conf = np.zeros((n, n), dtype=np.int64)
    gt_errs, match_errs, scene_pairs = [], [], []
    for sid in sorted(results):
        pq_i, conf_i, ge, me, sp = results[sid]
        total_pq.update(pq_i)
        conf += conf_i
        gt_errs.extend(ge)
        match_errs.extend(me)
        if sp is not None:
            scene_pairs.append(sp)

    iou = metrics.miou_from_confusion(conf)
    bacc = None
    if scene_pairs:
        gt_ids = [g for g, _ in scene_pairs]
        if any(g != 0 for g in gt_ids):
            bacc = metrics.balanced_accuracy([p for _, p in scene_pairs], gt_ids)
    report = metrics.MetricReport(
        miou=iou.miou,
        per_class_iou=iou.per_class,
        panoptic=total_pq.result(),
        maae_gt=float(np.mean(gt_errs)) if gt_errs else None,
        maae_matched=float(np.mean(match_errs)) if match_errs else None,
        scene_balanced_accuracy=bacc,
        num_images=len(results),
    )
    text = report.to_json()
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text + "\n")
        print(f"wrote metrics to {args.output}")
    else:
        print(text)
    return 0


def cmd_loss_eval(args) -> int:
    cfg = _resolve_config(args)
    spectrum = load_spectrum(cfg.spectrum)
    ccfg = cfg.codec_config()
    weights = cfg.weights()
    gt_records = {r.sample_id: r for r in datasets.load_split(args.gt)}
    pred_dir = Path(args.input)

    def work(sid):
        gt = datasets.load_sample(gt_records[sid], spectrum)
        d = pred_dir / sid
        logits = [load_tensor(d / "semantic.emt")]
        for i in (0, 1):
            side = d / f"semantic_side_{i}.emt"
            if side.is_file():
                logits.append(load_tensor(side))
        if logits[0].shape[1:] != gt.shape:
            raise ValueError(
                f"{sid}: prediction extent {logits[0].shape[1:]} does not "
                f"match ground truth {gt.shape}")
        targets = codec.encode_targets(
            gt.instance, ccfg,
            thing_mask=mergemod.foreground_mask(gt.semantic, spectrum))
        gt_field, gt_mask = orientation_field(gt.instance, gt.orientations)

        sem = losses.semantic_loss(logits, gt.semantic)
        center = losses.center_loss(load_tensor(d / "center.emt"),
                                    targets.heatmap, targets.center_mask)
        offset = losses.offset_loss(load_tensor(d / "offset.emt"),
                                    targets.offsets, targets.center_mask)
        orient = losses.orientation_loss(load_tensor(d / "orientation.emt"),
                                         gt_field, gt_mask, kappa=cfg.kappa)
        scene = None
        if gt.scene != 0:
            scene = losses.scene_loss(load_tensor(d / "scene.emt"),
                                      gt.scene - 1, epsilon=cfg.epsilon)
        return sem, scene, center, offset, orient

    results = _map_samples(gt_records, work, cfg.threads)
    ordered = [results[sid] for sid in sorted(results)]
    sem = float(np.mean([r[0] for r in ordered]))
    scenes = [r[1] for r in ordered if r[1] is not None]
    scene = float(np.mean(scenes)) if scenes else 0.0
    center = float(np.mean([r[2] for r in ordered]))
    offset = float(np.mean([r[3] for r in ordered]))
    orient = float(np.mean([r[4] for r in ordered]))
    breakdown = {
        "num_samples": len(ordered),
        "semantic": sem,
        "scene": scene,
        "center": center,
        "offset": offset,
        "orientation": orient,
        "task_weights": {"semantic": weights.semantic, "scene": weights.scene,
                         "instance": weights.instance,
                         "orientation": weights.orientation},
        "total": losses.total_loss(sem, scene, center, offset, orient, weights),
    }
    text = json.dumps(breakdown, indent=2)
    if args.output:
        Path(args.output).parent.mkdir(parents=True, exist_ok=True)
        Path(args.output).write_text(text + "\n")
        print(f"wrote losses to {args.output}")
    else:
        print(text)
    return 0


def cmd_report(args) -> int:
    _resolve_config(args)
    metrics_path = Path(args.metrics)
    if not metrics_path.is_file():
        raise FileNotFoundError(f"metrics file {metrics_path} does not exist")
    data = json.loads(metrics_path.read_text())
    out = Path(args.output)
    out.mkdir(parents=True, exist_ok=True)

    summary = {
        "miou": data.get("miou"),
        "pq": data.get("panoptic", {}).get("pq"),
        "sq": data.get("panoptic", {}).get("sq"),
        "rq": data.get("panoptic", {}).get("rq"),
        "maae_gt": data.get("maae_gt"),
        "maae_matched": data.get("maae_matched"),
        "scene_balanced_accuracy": data.get("scene_balanced_accuracy"),
        "num_images": data.get("num_images"),
    }
    (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n")

    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    per_class_pq = data.get("panoptic", {}).get("per_class", {})
    per_class_iou = data.get("per_class_iou", {})
    fig, axes = plt.subplots(1, 2, figsize=(12, max(3, 0.3 * max(
        len(per_class_pq), len(per_class_iou), 1))))
    for ax, table, title in ((axes[0], {k: v["pq"] for k, v in per_class_pq.items()},
                              "per-class PQ"),
                             (axes[1], per_class_iou, "per-class IoU")):
        if table:
            keys = sorted(table, key=int)
            ax.barh(range(len(keys)), [table[k] for k in keys])
            ax.set_yticks(range(len(keys)), keys)
            ax.set_xlim(0, 1)
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(out / "per_class.png", dpi=110)
    plt.close(fig)
    print(f"wrote report to {out}")
    return 0


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="emsa",
        description="Multi-task RGB-D scene analysis pipeline.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic split")
    p.add_argument("--output", required=True, metavar="DIR")
    p.add_argument("--num-scenes", type=int, default=4)
    p.add_argument("--num-instances", type=int, default=4)
    p.add_argument("--height", type=int, default=96)
    p.add_argument("--width", type=int, default=128)
    _add_common(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode-gt", help="encode dense targets from a split")
    p.add_argument("--input", required=True, metavar="SPLIT")
    p.add_argument("--output", required=True, metavar="DIR")
    _add_common(p)
    p.set_defaults(func=cmd_encode_gt)

    p = sub.add_parser("forward", help="run a weight archive over a split")
    p.add_argument("--input", required=True, metavar="SPLIT")
    p.add_argument("--output", required=True, metavar="DIR")
    p.add_argument("--archive", required=True, metavar="DIR",
                   help="weight archive directory")
    p.add_argument("--init-random", action="store_true",
                   help="create the archive with random weights if absent")
    p.add_argument("--encoder-channels", metavar="C0,..,C4",
                   help="channel plan override used with --init-random")
    p.add_argument("--decoder-channels", metavar="D0,D1,D2",
                   help="channel plan override used with --init-random")
    _add_common(p)
    p.set_defaults(func=cmd_forward)

    p = sub.add_parser("decode", help="decode centers and group instances")
    p.add_argument("--input", required=True, metavar="DIR",
                   help="directory with center.emt/offset.emt per sample")
    p.add_argument("--output", metavar="DIR",
                   help="output directory (default: --input)")
    _add_common(p)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("merge", help="panoptic fusion of semantics + instances")
    p.add_argument("--input", required=True, metavar="DIR")
    p.add_argument("--output", metavar="DIR",
                   help="output directory (default: --input)")
    _add_common(p)
    p.set_defaults(func=cmd_merge)

    p = sub.add_parser("eval", help="evaluate predictions against a split")
    p.add_argument("--input", required=True, metavar="DIR",
                   help="prediction directory (after merge)")
    p.add_argument("--gt", required=True, metavar="SPLIT")
    p.add_argument("--output", metavar="FILE", help="metrics JSON (default stdout)")
    p.add_argument("--exclude-classes", metavar="ID,ID",
                   help="class ids excluded from PQ aggregation")
    _add_common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("loss-eval", help="per-task losses of predictions")
    p.add_argument("--input", required=True, metavar="DIR",
                   help="prediction directory (after forward)")
    p.add_argument("--gt", required=True, metavar="SPLIT")
    p.add_argument("--output", metavar="FILE", help="loss JSON (default stdout)")
    _add_common(p)
    p.set_defaults(func=cmd_loss_eval)

    p = sub.add_parser("report", help="render a metrics file to charts")
    p.add_argument("--metrics", required=True, metavar="FILE")
    p.add_argument("--output", required=True, metavar="DIR")
    _add_common(p)
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except Exception as e:  # noqa: BLE001 - CLI boundary
        print(f"runtime error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
