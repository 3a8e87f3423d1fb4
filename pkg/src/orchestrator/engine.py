import asyncio
from datetime import datetime
from typing import Any, Dict, Optional

from ..boolean.verification import run_boolean_campaign
from ..config.config import Config
from ..lattice.averaging import audit_staircase
from ..models.errors import InvariantViolation
from ..models.experiment import (
    ExperimentConfig,
    ExperimentKind,
    ExperimentRun,
    JobStatus,
    RunStatus,
    plan_jobs,
)
from ..utils.logger import ExperimentLogger
from .limits import LimitsPolicy
from .reports import Artifact, build_artifact
from .results_store import ResultStore
from .sample_executor import SampleExecutor


class ExperimentEngine:
    def __init__(
        self,
        executor: Optional[SampleExecutor] = None,
        limits: Optional[LimitsPolicy] = None,
        store: Optional[ResultStore] = None,
    ):
        self.executor = executor or SampleExecutor(Config.WORKERS, Config.CHUNK_SIZE)
        self.limits = limits or LimitsPolicy()
        self.store = store or ResultStore(Config.OUTPUT_DIR)
        self.logger = ExperimentLogger()

    def plan(self, config: ExperimentConfig) -> ExperimentRun:
        run_id = f"{config.kind.value}-{config.config_hash()[:12]}-{config.shard.index}of{config.shard.count}"
        return ExperimentRun(id=run_id, config=config, jobs=plan_jobs(config))

    async def execute(self, run: ExperimentRun) -> ExperimentRun:
        """
        Run every job over this shard's sample range, in plan order. A failing
        job marks itself and the run FAILED and the error propagates; nothing is
        written for a failed run.
        """
        config = run.config
        self.limits.validate(config)
        run.started_at = datetime.now()
        run.status = RunStatus.RUNNING
        self.logger.log_run_status(run.id, run.status.value, {"jobs": len(run.jobs)})
        start, stop = config.shard.sample_range(config.samples)

        for job in run.jobs:
            job.status = JobStatus.RUNNING
            job.started_at = datetime.now()
            self.logger.log_job_start(run.id, job.id, job.kind.value, stop - start)
            try:
                job.result = await self.executor.execute_job(config, job, start, stop)
            except Exception as e:
                job.status = JobStatus.FAILED
                job.error = str(e)
                job.completed_at = datetime.now()
                run.status = RunStatus.FAILED
                self.logger.log_error(run.id, job.id, str(e), {"start": start, "stop": stop})
                self.logger.log_run_status(run.id, run.status.value)
                raise
            job.status = JobStatus.SUCCESS
            job.completed_at = datetime.now()
            duration_ms = (job.completed_at - job.started_at).total_seconds() * 1000
            self.logger.log_job_end(run.id, job.id, job.status.value, duration_ms)

        run.status = RunStatus.SUCCESS
        run.completed_at = datetime.now()
        self.logger.log_run_status(run.id, run.status.value)
        return run

    def run(self, config: ExperimentConfig) -> Artifact:
        """Plan, execute and persist a sampled experiment"""
        if not config.kind.sampled:
            raise ValueError(f"'{config.kind.value}' is a verification campaign, not a sampled experiment")
        run = asyncio.run(self.execute(self.plan(config)))
        artifact = build_artifact(config, run.results)
        self.store.write(artifact, config.out)
        return artifact

    def _expect(self, config: ExperimentConfig, kind: ExperimentKind) -> ExperimentConfig:
        if config.kind is not kind:
            raise ValueError(f"Expected a '{kind.value}' config, got '{config.kind.value}'")
        return config

    def run_variance_scan(self, config: ExperimentConfig) -> Artifact:
        return self.run(self._expect(config, ExperimentKind.VARIANCE_SCAN))

    def run_circumference_scan(self, config: ExperimentConfig) -> Artifact:
        return self.run(self._expect(config, ExperimentKind.CIRC_SCAN))

    def run_tail_estimate(self, config: ExperimentConfig) -> Artifact:
        return self.run(self._expect(config, ExperimentKind.TAIL))

    def run_midpoint_probe(self, config: ExperimentConfig) -> Artifact:
        return self.run(self._expect(config, ExperimentKind.MIDPOINT))

    def run_influence_map(self, config: ExperimentConfig) -> Artifact:
        return self.run(self._expect(config, ExperimentKind.INFLUENCE_MAP))

    # Verification campaigns

    def check_boolean(self, config: ExperimentConfig) -> Dict[str, Any]:
        """Hypercube inequality campaign; raises InvariantViolation after writing the report"""
        self._expect(config, ExperimentKind.CHECK_BOOL)
        self.limits.validate(config)
        report = run_boolean_campaign(
            n_random=config.samples,
            max_j=config.max_j,
            seed=config.seed,
            p_grid=config.p_grid,
            indicator_max_j=config.indicator_max_j,
            quadrature_every=config.quadrature_every,
        )
        report["config_sha256"] = config.config_hash()
        self.store.write_report(report, config.out)
        violations = report["totals"]["violations"]
        self.logger.log_invariant_event("check-bool", violations == 0, {"violations": violations})
        if violations:
            raise InvariantViolation(f"{violations} tables violate a verified inequality", report=report)
        return report

    def check_lemma(self, config: ExperimentConfig) -> Dict[str, Any]:
        """Staircase audit: range, Lipschitz constant 1 and level probabilities <= 2/m"""
        self._expect(config, ExperimentKind.CHECK_LEMMA)
        self.limits.validate(config)
        entries = audit_staircase(config.m_values, random_flips=config.random_flips, seed=config.seed)
        failures = [
            entry["m"] for entry in entries
            if not (entry["range_ok"] and entry["lipschitz"] <= 1 and entry["within_bound"])
        ]
        report = {
            "config_sha256": config.config_hash(),
            "m_values": list(config.m_values),
            "entries": entries,
            "failures": failures,
        }
        self.store.write_report(report, config.out)
        self.logger.log_invariant_event("check-lemma", not failures, {"failures": failures})
        if failures:
            raise InvariantViolation(f"Staircase audit failed for m in {failures}", report=report)
        return report
