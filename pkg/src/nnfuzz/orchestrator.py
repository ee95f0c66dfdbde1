"""Campaign orchestration: the coverage-guided fuzzing loop.

Each iteration selects a parent from the pool, produces a batch of mutation
candidates, gates them by deep-feature similarity, and evaluates the
survivors in rank order: classify (misclassifications become Findings),
profile activations, and admit coverage-improving candidates into the pool
stamped with the current iteration.  The logical clock advances once per
iteration.

Outputs: the final pool persisted as a corpus directory, findings mirrored
under ``findings/``, a JSON summary report, and a JSON-lines file with one
record per iteration.  Neither the corpus nor the lines file contains wall
time, so identical configurations produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import asdict, dataclass

import numpy as np

from .coverage import (
    FEEDBACK_MODES,
    SCALING_MODES,
    CoverageTracker,
    activation_profile,
    is_new_coverage,
)
from .errors import (
    CampaignAborted,
    ConfigError,
    EmptyPool,
    EngineError,
    IoError,
    NotAClassifier,
)
from .feature_gate import extract_features, gate_and_rank
from .inference import ClipCounter, forward
from .model_format import Model, load_model, neuron_count
from .mutation import GeneratorPair, MutatorConfig, batch_generate
from .seed_pool import SeedPool
from .tensorfile import read_tensor, write_tensor


@dataclass
class CampaignConfig:
    """Everything a campaign run depends on.

    Model paths point at the manifest file; the weight blob is expected
    alongside it with a .bin suffix.
    """

    classifier: str
    extractor: str
    dataset: str
    corpus: str
    report: str
    gen_forward: str | None = None
    gen_backward: str | None = None
    iterations: int = 100
    per_parent: int = 10
    top_k: int = 5
    sim_threshold: float = 0.9
    act_threshold: float = 0.25
    scaling: str = "raw"
    feedback: str = "parent_relative"
    seed: int = 0
    mutator: str = "aeg"
    noise_scale: float = 0.02


@dataclass
class Finding:
    """A gated candidate the classifier got wrong."""

    id: str
    image: np.ndarray
    parent_id: str
    truth: int
    predicted: int
    confidence: float
    iteration: int
    content_sha256: str
    also_pooled: bool = False


def weights_path(manifest_path: str) -> str:
    base, ext = os.path.splitext(manifest_path)
    return base + ".bin" if ext == ".json" else manifest_path + ".bin"


def content_hash(image: np.ndarray) -> str:
    return hashlib.sha256(
        np.ascontiguousarray(image, dtype="<f4").tobytes()
    ).hexdigest()


def _validate_config(config: CampaignConfig) -> None:
    problems = []
    if config.iterations < 0:
        problems.append(f"iterations must be >= 0, got {config.iterations}")
    if config.per_parent < 1:
        problems.append(f"per_parent must be >= 1, got {config.per_parent}")
    if config.top_k < 1:
        problems.append(f"top_k must be >= 1, got {config.top_k}")
    if not -1.0 <= config.sim_threshold <= 1.0:
        problems.append(
            f"sim_threshold must be in [-1, 1], got {config.sim_threshold}"
        )
    if config.scaling not in SCALING_MODES:
        problems.append(f"scaling must be one of {SCALING_MODES}, got {config.scaling!r}")
    if config.feedback not in FEEDBACK_MODES:
        problems.append(
            f"feedback must be one of {FEEDBACK_MODES}, got {config.feedback!r}"
        )
    if config.mutator not in ("aeg", "classical"):
        problems.append(f"mutator must be aeg or classical, got {config.mutator!r}")
    if config.mutator == "aeg" and (not config.gen_forward or not config.gen_backward):
        problems.append("aeg mutation requires gen_forward and gen_backward models")
    if problems:
        raise ConfigError("; ".join(problems))


def init_pool(dataset_dir: str, classifier: Model,
              tracker: CoverageTracker) -> tuple[SeedPool, dict, dict]:
    """Build the starting pool from a labeled dataset directory.

    Only inputs the classifier already labels correctly become seeds; each
    seed's activation profile is folded into the tracker and its popcount
    recorded.  Returns the pool, init statistics (including how many inputs
    were skipped as misclassified), and the per-seed profiles.
    """
    if not os.path.isdir(dataset_dir):
        raise IoError(f"dataset directory {dataset_dir} does not exist")
    layers = classifier.manifest.layers
    if not layers or layers[-1].kind != "softmax":
        raise NotAClassifier(
            f"model {classifier.manifest.name!r} does not end in softmax"
        )

    pool = SeedPool()
    skipped = 0
    profiles = {}
    names = sorted(
        n[: -len(".meta.json")]
        for n in os.listdir(dataset_dir)
        if n.endswith(".meta.json")
    )
    for name in names:
        meta_path = os.path.join(dataset_dir, f"{name}.meta.json")
        with open(meta_path, "r", encoding="utf-8") as fh:
            meta = json.load(fh)
        image = read_tensor(os.path.join(dataset_dir, f"{name}.tensor"))
        truth = int(meta["label"])
        probs, record = forward(classifier, image)
        predicted = int(np.argmax(probs))
        if predicted != truth:
            skipped += 1
            continue
        profile = activation_profile(record, tracker.threshold, tracker.mode)
        tracker.update(profile)
        entry = pool.add(image, truth, None, profile.popcount, now=0)
        profiles[entry.id] = profile

    if not pool.entries:
        raise EmptyPool(
            f"dataset {dataset_dir} yielded no correctly classified seeds"
        )
    stats = {
        "pool_size": len(pool),
        "skipped_misclassified": skipped,
        "nc_ratio": tracker.nc_ratio(),
        "neuron_count": tracker.neuron_count,
    }
    return pool, stats, profiles


def _jsonl_path(report_path: str) -> str:
    base, _ = os.path.splitext(report_path)
    return base + ".jsonl"


def _persist_finding(findings_dir: str, finding: Finding) -> None:
    os.makedirs(findings_dir, exist_ok=True)
    meta = {
        "id": finding.id,
        "iteration": finding.iteration,
        "parent_id": finding.parent_id,
        "truth": finding.truth,
        "predicted": finding.predicted,
        "confidence": finding.confidence,
        "content_sha256": finding.content_sha256,
        "also_pooled": finding.also_pooled,
    }
    path = os.path.join(findings_dir, f"{finding.id}.meta.json")
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    write_tensor(os.path.join(findings_dir, f"{finding.id}.tensor"), finding.image)


def run_campaign(config: CampaignConfig) -> dict:
    """Run a full campaign; returns the report written to config.report.

    Configuration and model problems raise before the first iteration.
    Filesystem failures mid-run write a partial report marked incomplete
    and raise CampaignAborted.
    """
    started = time.monotonic()
    _validate_config(config)

    classifier = load_model(config.classifier, weights_path(config.classifier))
    extractor = load_model(config.extractor, weights_path(config.extractor))
    gens = None
    if config.mutator == "aeg":
        gens = GeneratorPair(
            forward=load_model(config.gen_forward, weights_path(config.gen_forward)),
            backward=load_model(config.gen_backward, weights_path(config.gen_backward)),
            source_range=classifier.manifest.input_range,
        )
        gens.check_shapes(classifier.manifest.input_shape)

    tracker = CoverageTracker(
        neuron_count(classifier), config.act_threshold, config.scaling
    )
    pool, init_stats, parent_profiles = init_pool(config.dataset, classifier, tracker)
    pool_hashes = {content_hash(e.image) for e in pool.entries}
    parent_features: dict = {}
    pending_features: dict = {}

    mut_config = MutatorConfig(
        kind=config.mutator,
        per_parent=config.per_parent,
        noise_scale=config.noise_scale,
        value_range=tuple(classifier.manifest.input_range),
    )
    rng = np.random.default_rng(config.seed)
    clip_counter = ClipCounter()

    findings: list[Finding] = []
    finding_hashes: set = set()
    duplicate_findings = 0
    duplicate_pool_skips = 0
    iteration_lines: list[dict] = []
    incomplete = False
    abort_reason = None

    try:
        for iteration in range(1, config.iterations + 1):
            pool.t = iteration
            parent = pool.select(iteration, rng)
            candidates = batch_generate(parent.image, mut_config, gens, rng)

            if parent.id not in parent_features:
                cached = pending_features.pop(parent.id, None)
                parent_features[parent.id] = (
                    cached if cached is not None
                    else extract_features(extractor, parent.image)
                )
            parent_feat = parent_features[parent.id]
            candidate_features = [extract_features(extractor, c) for c in candidates]

            decisions = gate_and_rank(
                parent_feat,
                list(enumerate(candidate_features)),
                threshold=config.sim_threshold,
                top_k=config.top_k,
            )
            kept = sorted(
                (d for d in decisions if d.kept), key=lambda d: d.rank
            )

            nc_before = tracker.nc_ratio()
            evaluated = []
            added = 0
            new_findings = 0
            for decision in kept:
                candidate = candidates[decision.candidate_id]
                probs, record = forward(
                    classifier, candidate, clip_counter=clip_counter
                )
                predicted = int(np.argmax(probs))
                profile = activation_profile(
                    record, tracker.threshold, tracker.mode
                )
                fresh = is_new_coverage(
                    parent_profiles[parent.id], profile, tracker, config.feedback
                )
                tracker.update(profile)

                digest = content_hash(candidate)
                finding = None
                if predicted != parent.label:
                    if digest in finding_hashes:
                        duplicate_findings += 1
                    else:
                        finding_hashes.add(digest)
                        finding = Finding(
                            id=f"finding-{digest[:12]}",
                            image=candidate,
                            parent_id=parent.id,
                            truth=parent.label,
                            predicted=predicted,
                            confidence=float(probs[predicted]),
                            iteration=iteration,
                            content_sha256=digest,
                        )
                        findings.append(finding)
                        new_findings += 1

                added_id = None
                if fresh:
                    if digest in pool_hashes:
                        duplicate_pool_skips += 1
                    else:
                        pool_hashes.add(digest)
                        entry = pool.add(
                            candidate, parent.label, parent.id,
                            profile.popcount, now=iteration,
                        )
                        parent_profiles[entry.id] = profile
                        pending_features[entry.id] = (
                            candidate_features[decision.candidate_id]
                        )
                        added_id = entry.id
                        added += 1
                        if finding is not None:
                            finding.also_pooled = True

                evaluated.append({
                    "id": decision.candidate_id,
                    "predicted": predicted,
                    "truth": parent.label,
                    "finding": predicted != parent.label,
                    "new_coverage": bool(fresh),
                    "popcount": profile.popcount,
                    "added": added_id,
                })

            iteration_lines.append({
                "iteration": iteration,
                "parent": parent.id,
                "candidates": len(candidates),
                "gate": [
                    {
                        "id": d.candidate_id,
                        "sim": d.similarity,
                        "kept": d.kept,
                        "rank": d.rank,
                        "degenerate": d.degenerate,
                    }
                    for d in decisions
                ],
                "kept": len(kept),
                "evaluated": evaluated,
                "added": added,
                "findings": new_findings,
                "nc_before": nc_before,
                "nc_after": tracker.nc_ratio(),
                "pool_size": len(pool),
            })
    except (IoError, OSError) as exc:
        incomplete = True
        abort_reason = str(exc)

    try:
        os.makedirs(config.corpus, exist_ok=True)
        pool.persist(config.corpus)
        findings_dir = os.path.join(config.corpus, "findings")
        for finding in findings:
            _persist_finding(findings_dir, finding)

        report = {
            "config": asdict(config),
            "initial": init_stats,
            "iterations_run": len(iteration_lines),
            "final": {
                "pool_size": len(pool),
                "nc_ratio": tracker.nc_ratio(),
                "findings": len(findings),
                "duplicate_findings": duplicate_findings,
                "duplicate_pool_skips": duplicate_pool_skips,
                "clipped_inputs": clip_counter.clipped_inputs,
            },
            "findings": [
                {
                    "id": f.id,
                    "iteration": f.iteration,
                    "parent_id": f.parent_id,
                    "truth": f.truth,
                    "predicted": f.predicted,
                    "confidence": f.confidence,
                    "content_sha256": f.content_sha256,
                    "also_pooled": f.also_pooled,
                }
                for f in findings
            ],
            "incomplete": incomplete,
        }
        if abort_reason is not None:
            report["abort_reason"] = abort_reason

        report_dir = os.path.dirname(config.report)
        if report_dir:
            os.makedirs(report_dir, exist_ok=True)
        with open(_jsonl_path(config.report), "w", encoding="utf-8") as fh:
            for line in iteration_lines:
                fh.write(json.dumps(line))
                fh.write("\n")

        report["wall_time_seconds"] = time.monotonic() - started
        with open(config.report, "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write campaign outputs: {exc}") from exc

    if incomplete:
        raise CampaignAborted(
            f"campaign stopped after {len(iteration_lines)} iterations: {abort_reason}"
        )
    return report
