"""Command-line surface for the three workflows: policy, update, metrics.

Every command prints a JSON result on stdout; failures print a
machine-readable {"code", "message"} object on stderr and exit nonzero.
Monitor commands use the exit-code contract 0 = pass, 2 = alert,
3 = insufficient data.
"""
from __future__ import annotations

import os
import sys
import json
import functools

import click

from .model import (
    ContentItem,
    PolicyVersion,
    GoldLabel,
    AgentDecision,
    canonical_json,
)
from .store import GdsStore
from .sampler import (
    TrainConfig,
    train_propensity,
    select_batch,
    uniform_batch,
    coverage_gain_experiment,
)
from .tasks import TaskQueue
from . import metrics, delta as delta_mod, monitor as monitor_mod, simlab


def _emit(obj):
    click.echo(json.dumps(obj, indent=2, sort_keys=True))


def _fail(exc, exit_code=1):
    code = getattr(exc, "code", "error")
    click.echo(json.dumps({"code": code, "message": str(exc)}), err=True)
    sys.exit(exit_code)


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except Exception as exc:  # GoldsetError and friends -> JSON on stderr
            _fail(exc)
    return wrapper


def _read_jsonl(path):
    with open(path) as fh:
        return [json.loads(line) for line in fh if line.strip()]


def _write_jsonl(path, dicts):
    with open(path, "w") as fh:
        for d in dicts:
            fh.write(canonical_json(d) + "\n")


def _parse_policy_ref(text):
    policy_id, _, version = text.rpartition("@")
    if not policy_id:
        raise click.BadParameter("expected <policy_id>@<version>")
    return policy_id, int(version)


def _load_decisions(path):
    return [AgentDecision.from_dict(d) for d in _read_jsonl(path)]


data_option = click.option("--data", "data_dir", required=True,
                           envvar="GOLDSET_DATA", help="data directory root")


@click.group()
def main():
    """Golden-set curation, benchmarking, and monitoring."""


# -- policy workflow ----------------------------------------------------------

@main.group()
def policy():
    """Policy registry commands."""


@policy.command("register")
@data_option
@click.option("--policy-id", required=True)
@click.option("--version", required=True, type=int)
@click.option("--labels", default="positive,negative", show_default=True)
@click.option("--entity-type", default="pin", show_default=True)
@click.option("--guideline-digest", default="")
@handle_errors
def policy_register(data_dir, policy_id, version, labels, entity_type, guideline_digest):
    store = GdsStore(data_dir)
    p = PolicyVersion(
        policy_id=policy_id,
        version=version,
        label_set=tuple(labels.split(",")),
        entity_type=entity_type,
        guideline_digest=guideline_digest,
    )
    store.register_policy(p)
    _emit(p.to_dict())


@policy.command("show")
@data_option
@click.option("--policy", "policy_ref", required=True, help="<policy_id>@<version>")
@handle_errors
def policy_show(data_dir, policy_ref):
    store = GdsStore(data_dir)
    _emit(store.get_policy(*_parse_policy_ref(policy_ref)).to_dict())


# -- update workflow ----------------------------------------------------------

@main.command()
@data_option
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@handle_errors
def ingest(data_dir, input_path):
    """Add content candidates from a JSONL file to the pool."""
    store = GdsStore(data_dir)
    items = [ContentItem.from_dict(d) for d in _read_jsonl(input_path)]
    _emit(store.ingest(items).to_dict())


@main.command()
@data_option
@click.option("--gds", "gds_id", default=None, help="current GDS version id")
@click.option("--policy", "policy_ref", required=True, help="<policy_id>@<version>")
@click.option("--k", required=True, type=int)
@click.option("--mode", type=click.Choice(["weighted", "bottom_k"]), default="weighted",
              show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--model-kind",
              type=click.Choice(["logistic", "rbf_logistic", "kernel", "boosted_stumps"]),
              default="logistic", show_default=True)
@handle_errors
def sample(data_dir, gds_id, policy_ref, k, mode, seed, model_kind):
    """Train the propensity model and queue the next labeling batch.

    With no current GDS (or one covering the whole pool) there is nothing
    to train on, so the batch falls back to a seeded uniform draw.
    """
    store = GdsStore(data_dir)
    pool = store.load_pool()
    members = set()
    if gds_id:
        members = set(store.get_version(gds_id).records)
    model = None
    if 0 < len(members) < len(pool.items):
        model = train_propensity(pool, members, TrainConfig(kind=model_kind, seed=seed))
        batch = select_batch(pool, members, model, k, mode=mode, seed=seed)
    else:
        batch = uniform_batch(pool, members, k, seed=seed)
    policy_obj = store.get_policy(*_parse_policy_ref(policy_ref))
    queue = TaskQueue(data_dir)
    tasks = queue.create_batch(batch, policy_obj)
    if model is not None:
        with open(os.path.join(queue.batch_dir(batch.batch_id), "model.json"), "w") as fh:
            json.dump(model.to_dict(), fh)
    _emit({**batch.to_dict(), "tasks": len(tasks),
           "train_auc": model.training_meta.get("train_auc") if model else None})


@main.group()
def labels():
    """Label import commands (file-based SME path)."""


@labels.command("import")
@data_option
@click.option("--batch", "batch_id", required=True)
@click.option("--input", "input_path", required=True, type=click.Path(exists=True))
@handle_errors
def labels_import(data_dir, batch_id, input_path):
    """Fill batch tasks from a JSONL of {item_id, label, sme_id} rows."""
    store = GdsStore(data_dir)
    queue = TaskQueue(data_dir)
    info = queue.batch_info(batch_id)
    policy_obj = store.get_policy(info["policy_id"], info["policy_version"])
    filled = queue.import_labels(batch_id, _read_jsonl(input_path), policy_obj)
    _emit({"batch_id": batch_id, "labeled": filled, **queue.progress(batch_id)})


@main.command()
@data_option
@click.option("--policy", "policy_ref", required=True, help="<policy_id>@<version>")
@click.option("--batch", "batch_id", default=None, help="publish labels from this batch")
@click.option("--labels", "labels_path", default=None, type=click.Path(exists=True),
              help="publish labels from a GoldLabel JSONL file")
@click.option("--parent", "parent_id", default=None)
@click.option("--allow-partial", is_flag=True, default=False)
@handle_errors
def publish(data_dir, policy_ref, batch_id, labels_path, parent_id, allow_partial):
    """Publish a new immutable GDS version; prints its version_id."""
    store = GdsStore(data_dir)
    policy_obj = store.get_policy(*_parse_policy_ref(policy_ref))
    gold = []
    if batch_id:
        queue = TaskQueue(data_dir)
        pending = queue.pending_count(batch_id)
        if pending and not allow_partial:
            raise click.ClickException(
                f"batch {batch_id} has {pending} pending tasks (use --allow-partial)")
        gold.extend(queue.gold_labels(batch_id))
    if labels_path:
        gold.extend(GoldLabel.from_dict(d) for d in _read_jsonl(labels_path))
    version = store.publish(gold, policy_obj, parent_id=parent_id)
    _emit(version.manifest())


# -- metrics workflow ---------------------------------------------------------

@main.command()
@data_option
@click.option("--gds", "gds_id", required=True)
@click.option("--production", "production_path", default=None, type=click.Path(exists=True),
              help="JSONL of production-sample ContentItems for JSD")
@handle_errors
def profile(data_dir, gds_id, production_path):
    """Coverage + code distribution of a GDS version, optional JSD vs production."""
    store = GdsStore(data_dir)
    version = store.get_version(gds_id)
    pool = store.load_pool()
    items = [pool.items[i] for i in version.records if i in pool.items]
    production = None
    if production_path:
        production = [ContentItem.from_dict(d) for d in _read_jsonl(production_path)]
    result = metrics.profile_dataset(items, production)
    _emit({"version_id": gds_id, **result.to_dict()})


@main.command()
@data_option
@click.option("--gds", "gds_id", required=True)
@click.option("--decisions", "decisions_path", required=True, type=click.Path(exists=True))
@click.option("--baseline", "baseline_path", default=None, type=click.Path(exists=True),
              help="QualityReport JSON to diff against (Table-1 convention)")
@handle_errors
def evaluate(data_dir, gds_id, decisions_path, baseline_path):
    """Score an agent decision file against a GDS version."""
    store = GdsStore(data_dir)
    version = store.get_version(gds_id)
    policy_obj = store.get_policy(version.policy_id, version.policy_version)
    decisions = _load_decisions(decisions_path)
    result = metrics.confusion(decisions, version, policy_obj)
    report = metrics.quality_report(result.counts)
    out = {"report": report.to_dict(), "uncovered": result.uncovered}
    if baseline_path:
        with open(baseline_path) as fh:
            baseline = metrics.QualityReport.from_dict(json.load(fh))
        rel = metrics.relative_report(baseline, report)
        out["relative"] = rel.to_dict()
    _emit(out)


@main.command()
@click.option("--a", "path_a", required=True, type=click.Path(exists=True))
@click.option("--b", "path_b", required=True, type=click.Path(exists=True))
@handle_errors
def agree(path_a, path_b):
    """Cohen's kappa between two aligned decision files."""
    da = {d.item_id: d.label for d in _load_decisions(path_a)}
    db = {d.item_id: d.label for d in _load_decisions(path_b)}
    shared = sorted(set(da) & set(db))
    result = metrics.cohens_kappa([da[i] for i in shared], [db[i] for i in shared])
    _emit({**result.to_dict(), "n": len(shared)})


@main.command()
@data_option
@click.option("--v1", required=True)
@click.option("--v2", required=True)
@click.option("--sankey", "sankey_path", default=None, type=click.Path())
@handle_errors
def delta(data_dir, v1, v2, sankey_path):
    """Policy-delta transition matrix between two GDS versions."""
    store = GdsStore(data_dir)
    version1, version2 = store.get_version(v1), store.get_version(v2)
    old_policy = store.get_policy(version1.policy_id, version1.policy_version)
    new_policy = store.get_policy(version2.policy_id, version2.policy_version)
    matrix = delta_mod.policy_delta(version1, version2, old_policy, new_policy)
    flows = delta_mod.sankey_export(matrix)
    if sankey_path:
        with open(sankey_path, "w") as fh:
            json.dump(flows, fh, indent=2)
    _emit({**matrix.to_dict(), "sankey": flows})


# -- monitors -----------------------------------------------------------------

def _monitor_config(kind, threshold, min_n, seed, resamples):
    base = monitor_mod.DRIFT_DEFAULTS if kind == "drift" else monitor_mod.STABILITY_DEFAULTS
    return monitor_mod.MonitorConfig(
        primary_metric=base.primary_metric,
        threshold_pp=threshold if threshold is not None else base.threshold_pp,
        min_n=min_n,
        seed=seed,
        resamples=resamples,
    )


def _finish_monitor(data_dir, alert):
    log_path = os.path.join(data_dir, "alerts.jsonl")
    monitor_mod.append_alert(log_path, alert)
    _emit(alert.to_dict())
    if alert.status == "pass":
        sys.exit(0)
    sys.exit(3 if alert.reason == "insufficient_data" else 2)


@main.group()
def monitor():
    """Continuous validation monitors (exit codes: 0 pass, 2 alert, 3 insufficient)."""


@monitor.command("baseline")
@data_option
@click.option("--gds", "gds_id", required=True)
@click.option("--decisions", "decisions_path", required=True, type=click.Path(exists=True))
@click.option("--agent-id", required=True)
@click.option("--config-digest", required=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@handle_errors
def monitor_baseline(data_dir, gds_id, decisions_path, agent_id, config_digest, out_path):
    """Establish and save a MonitorBaseline for later checks."""
    store = GdsStore(data_dir)
    version = store.get_version(gds_id)
    policy_obj = store.get_policy(version.policy_id, version.policy_version)
    decisions = _load_decisions(decisions_path)
    result = metrics.confusion(decisions, version, policy_obj)
    baseline = monitor_mod.MonitorBaseline(
        agent_id=agent_id,
        config_digest=config_digest,
        pinned_version=gds_id,
        baseline_report=metrics.quality_report(result.counts),
    )
    with open(out_path, "w") as fh:
        json.dump(baseline.to_dict(), fh, indent=2)
    _emit(baseline.to_dict())


@monitor.command("drift")
@data_option
@click.option("--child", required=True)
@click.option("--parent", required=True)
@click.option("--decisions", "decisions_path", required=True, type=click.Path(exists=True))
@click.option("--baseline", "baseline_path", required=True, type=click.Path(exists=True))
@click.option("--threshold", type=float, default=None)
@click.option("--min-n", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--resamples", type=int, default=1000, show_default=True)
@handle_errors
def monitor_drift(data_dir, child, parent, decisions_path, baseline_path,
                  threshold, min_n, seed, resamples):
    """Content-drift check over items new in the child version."""
    store = GdsStore(data_dir)
    child_v, parent_v = store.get_version(child), store.get_version(parent)
    policy_obj = store.get_policy(child_v.policy_id, child_v.policy_version)
    with open(baseline_path) as fh:
        baseline = monitor_mod.MonitorBaseline.from_dict(json.load(fh))
    alert = monitor_mod.drift_check(
        _load_decisions(decisions_path), child_v, parent_v, baseline, policy_obj,
        _monitor_config("drift", threshold, min_n, seed, resamples),
        resolver=store.get_version,
    )
    _finish_monitor(data_dir, alert)


@monitor.command("stability")
@data_option
@click.option("--gds", "gds_id", required=True, help="pinned version id")
@click.option("--decisions", "decisions_path", required=True, type=click.Path(exists=True))
@click.option("--baseline", "baseline_path", required=True, type=click.Path(exists=True))
@click.option("--config-digest", required=True)
@click.option("--threshold", type=float, default=None)
@click.option("--min-n", type=int, default=50, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--resamples", type=int, default=1000, show_default=True)
@handle_errors
def monitor_stability(data_dir, gds_id, decisions_path, baseline_path, config_digest,
                      threshold, min_n, seed, resamples):
    """System-stability check against the pinned baseline version."""
    store = GdsStore(data_dir)
    pinned = store.get_version(gds_id)
    policy_obj = store.get_policy(pinned.policy_id, pinned.policy_version)
    with open(baseline_path) as fh:
        baseline = monitor_mod.MonitorBaseline.from_dict(json.load(fh))
    alert = monitor_mod.stability_check(
        _load_decisions(decisions_path), pinned, baseline, policy_obj, config_digest,
        _monitor_config("stability", threshold, min_n, seed, resamples),
    )
    _finish_monitor(data_dir, alert)


# -- simulation lab -----------------------------------------------------------

@main.group()
def sim():
    """Synthetic world, agents, and experiments."""


@sim.command("world")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out-items", required=True, type=click.Path())
@click.option("--out-truth", default=None, type=click.Path())
@handle_errors
def sim_world(config_path, seed, out_items, out_truth):
    """Generate a synthetic content pool from a world config JSON."""
    with open(config_path) as fh:
        cfg = simlab.WorldConfig(**json.load(fh))
    world, pool = simlab.generate_world(cfg, seed=seed)
    _write_jsonl(out_items, (item.to_dict() for item in pool.items.values()))
    if out_truth:
        with open(out_truth, "w") as fh:
            json.dump(world.truth, fh, sort_keys=True)
    _emit({"items": len(pool), "clusters": cfg.n_clusters,
           "coverage": metrics.semantic_coverage(pool.items.values()).coverage})


@sim.command("agents")
@data_option
@click.option("--gds", "gds_id", required=True)
@click.option("--profiles", "profiles_path", required=True, type=click.Path(exists=True),
              help="JSON list of agent profiles")
@click.option("--out-dir", required=True, type=click.Path())
@click.option("--run-id", default="run-0", show_default=True)
@handle_errors
def sim_agents(data_dir, gds_id, profiles_path, out_dir, run_id):
    """Simulate noisy agents over a GDS version; one decision JSONL per agent."""
    store = GdsStore(data_dir)
    version = store.get_version(gds_id)
    policy_obj = store.get_policy(version.policy_id, version.policy_version)
    with open(profiles_path) as fh:
        profiles = [simlab.NoisyAgentProfile.from_dict(d) for d in json.load(fh)]
    os.makedirs(out_dir, exist_ok=True)
    written = {}
    for p in profiles:
        decisions = simlab.simulate_agent(p, version, policy_obj, run_id=run_id)
        path = os.path.join(out_dir, f"{p.agent_id}.jsonl")
        _write_jsonl(path, (d.to_dict() for d in decisions))
        written[p.agent_id] = path
    _emit({"agents": written, "items": version.item_count})


@sim.command("experiment")
@data_option
@click.option("--gds", "gds_id", default=None, help="initial GDS version id")
@click.option("--budget", type=int, required=True)
@click.option("--rounds", type=int, required=True)
@click.option("--strategy", type=click.Choice(["propensity", "uniform"]),
              default="propensity", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@handle_errors
def sim_experiment(data_dir, gds_id, budget, rounds, strategy, seed):
    """Coverage-gain experiment over the stored pool."""
    store = GdsStore(data_dir)
    pool = store.load_pool()
    members = set(store.get_version(gds_id).records) if gds_id else set()
    trace = coverage_gain_experiment(pool, members, budget, rounds, strategy, seed)
    _emit({"strategy": strategy, "seed": seed, "trace": trace})


# -- service ------------------------------------------------------------------

@main.command()
@data_option
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8400, show_default=True)
@handle_errors
def serve(data_dir, host, port):
    """Run the labeling/publishing HTTP service."""
    import uvicorn
    from .service import create_app
    uvicorn.run(create_app(data_dir), host=host, port=port)


if __name__ == "__main__":
    main()
