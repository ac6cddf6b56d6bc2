"""Run report assembly.

The report is deliberately free of timestamps, wall-clock durations, and
absolute paths: two runs with the same config and seed must produce
byte-identical reports. Volatile timing lives in a separate timings file.
"""
from __future__ import annotations

import json
from pathlib import Path

from .agent import SearchResult
from .config import RunConfig
from .strategy import Strategy

REPORT_SCHEMA = 1


def _entry(strategy: Strategy, score: float, relative: float) -> dict:
    return {
        "strategy": strategy.canonical(),
        "score": score if score != float("-inf") else None,
        "relative_score": relative if relative != float("-inf") else None,
    }


def build_report(
    result: SearchResult,
    run_cfg: RunConfig,
    dataset_fingerprint: str,
    cache_stats: dict[str, int],
    final_dataset_fingerprint: str | None = None,
) -> dict:
    rounds = []
    for round_ in result.rounds:
        rounds.append(
            {
                "round": round_.index,
                "entries": [
                    _entry(strategy, score, relative)
                    for strategy, score, relative in zip(
                        round_.strategies, round_.scores, round_.relative_scores
                    )
                ],
            }
        )
    return {
        "schema": REPORT_SCHEMA,
        "seed": run_cfg.seed,
        "config_digest": run_cfg.operators.digest(),
        "evaluation_mode": run_cfg.evaluation.mode,
        "dataset_fingerprint": dataset_fingerprint,
        "sampled_fingerprint": result.sampled_fingerprint,
        "sampling_rate": run_cfg.sampling_rate,
        "baseline_score": result.baseline_score,
        "rounds": rounds,
        "rounds_executed": result.rounds_executed,
        "best_strategy": result.best_strategy.canonical(),
        "best_score": result.best_score if result.best_score != float("-inf") else None,
        "termination_reason": result.termination_reason,
        "cache": dict(cache_stats),
        "final_dataset_fingerprint": final_dataset_fingerprint,
        "notes": {
            # prefix reuse is only claimed under deterministic operators,
            # which the key enforces by binding the config digest and seed
            "cache_reuse_assumes_deterministic_operators": True,
        },
    }


def format_report_text(report: dict) -> str:
    lines = [
        "pipecraft run report",
        "====================",
        f"seed:              {report['seed']}",
        f"config digest:     {report['config_digest']}",
        f"dataset:           {report['dataset_fingerprint'][:16]}",
        f"sampled subset:    {report['sampled_fingerprint'][:16]} "
        f"(rate {report['sampling_rate']})",
        f"baseline score:    {report['baseline_score']:.6f}",
        "",
    ]
    for round_ in report["rounds"]:
        lines.append(f"round {round_['round']}")
        for entry in round_["entries"]:
            score = "failed" if entry["score"] is None else f"{entry['score']:.6f}"
            rel = (
                "-inf"
                if entry["relative_score"] is None
                else f"{entry['relative_score']:+.6f}"
            )
            lines.append(f"  {entry['strategy']:<60} {score:>10} {rel:>12}")
        lines.append("")
    best_score = report["best_score"]
    lines.extend(
        [
            f"best strategy:     {report['best_strategy']}",
            f"best score:        "
            f"{'failed' if best_score is None else format(best_score, '.6f')}",
            f"termination:       {report['termination_reason']} "
            f"after {report['rounds_executed']} round(s)",
            f"cache:             entries={report['cache']['entries']} "
            f"hits={report['cache']['hits']} "
            f"team_invocations_saved={report['cache']['team_invocations_saved']}",
        ]
    )
    if report.get("final_dataset_fingerprint"):
        lines.append(f"final dataset:     {report['final_dataset_fingerprint'][:16]}")
    lines.append("")
    return "\n".join(lines)


def write_report(report: dict, run_dir: str | Path) -> None:
    run_dir = Path(run_dir)
    (run_dir / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (run_dir / "report.txt").write_text(format_report_text(report), encoding="utf-8")


def load_report(run_dir: str | Path) -> dict:
    return json.loads((Path(run_dir) / "report.json").read_text(encoding="utf-8"))
