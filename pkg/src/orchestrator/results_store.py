import csv
import hashlib
import io
import json
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple, Union

from ..models.errors import ShardMismatchError
from ..models.experiment import ExperimentConfig, JobResult, ShardSpec
from ..utils.logger import ExperimentLogger
from .parser import ExperimentConfigParser
from .reports import Artifact, build_artifact

FORMAT_MARKER = "fpp-artifact 1"
HEADER_PREFIX = "# "


def format_value(value: Any) -> str:
    """17 significant digits for floats, so values round-trip exactly"""
    if isinstance(value, bool):
        return "true" if value else "false"
    if value is None:
        return ""
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


class ResultStore:
    """
    Artifacts are CSV files preceded by `# `-prefixed header lines: a format
    marker, the full config, its hash, one JSON record per job result, run notes
    and the hash of the CSV body. Nothing time-dependent is written, so equal
    inputs give byte-identical files.
    """

    def __init__(self, output_dir: Optional[str] = None):
        self.output_dir = Path(output_dir) if output_dir else None
        self.parser = ExperimentConfigParser()
        self.logger = ExperimentLogger(component="results_store")

    def render_body(self, artifact: Artifact) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(artifact.columns)
        for row in artifact.rows:
            writer.writerow([format_value(value) for value in row])
        return buffer.getvalue()

    @staticmethod
    def _config_record(config: ExperimentConfig) -> Dict[str, Any]:
        # the destination path is not part of the provenance
        record = config.to_dict()
        record.pop("out")
        return record

    def render(self, artifact: Artifact) -> str:
        body = self.render_body(artifact)
        header = [
            FORMAT_MARKER,
            "config " + _dumps(self._config_record(artifact.config)),
            "config_sha256 " + artifact.config.config_hash(),
        ]
        header += ["result " + _dumps(result.to_record()) for result in artifact.results]
        header += [
            "notes " + _dumps(artifact.notes),
            "content_sha256 " + _sha256(body),
        ]
        return "".join(HEADER_PREFIX + line + "\n" for line in header) + body

    def resolve(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        if self.output_dir is not None and not path.is_absolute():
            path = self.output_dir / path
        return path

    def write(self, artifact: Artifact, path: Optional[Union[str, Path]] = None) -> str:
        """Write the artifact to `path` (or return it for stdout when no path is given)"""
        text = self.render(artifact)
        if path is not None:
            target = self.resolve(path)
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text)
            self.logger.log_run_status(
                artifact.config.config_hash()[:12], "artifact_written", {"path": str(target)}
            )
        return text

    def write_report(self, report: Dict[str, Any], path: Optional[Union[str, Path]] = None) -> str:
        """JSON reports of the verification campaigns"""
        text = json.dumps(report, sort_keys=True, indent=2) + "\n"
        if path is not None:
            target = self.resolve(path)
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text)
        return text

    def parse(self, text: str) -> Tuple[ExperimentConfig, List[JobResult]]:
        header: Dict[str, List[str]] = {}
        body_lines = []
        for line in text.splitlines(keepends=True):
            if line.startswith(HEADER_PREFIX):
                tag, _, payload = line[len(HEADER_PREFIX):].rstrip("\n").partition(" ")
                header.setdefault(tag, []).append(payload)
            else:
                body_lines.append(line)
        if header.get("fpp-artifact") != ["1"]:
            raise ShardMismatchError("Not an experiment artifact (missing format marker)")
        body = "".join(body_lines)
        if header.get("content_sha256") != [_sha256(body)]:
            raise ShardMismatchError("Artifact body does not match its content hash")

        record = json.loads(header["config"][0])
        config = self.parser.parse(record, kind=record.get("kind"))
        if header.get("config_sha256") != [config.config_hash()]:
            raise ShardMismatchError("Artifact config does not match its config hash")
        results = [JobResult.from_record(json.loads(payload)) for payload in header.get("result", [])]
        return config, results

    def read(self, path: Union[str, Path]) -> Tuple[ExperimentConfig, List[JobResult]]:
        return self.parse(Path(path).read_text())

    def merge_shards(self, paths: Sequence[Union[str, Path]], out: Optional[str] = None) -> Artifact:
        """
        Exact merge of shard artifacts. The merged artifact is rendered as shard
        0/1, so merging a complete split reproduces the unsharded run byte for byte.
        """
        if not paths:
            raise ShardMismatchError("No shards to merge")
        loaded = [self.read(path) for path in paths]
        base_config, _ = loaded[0]
        base_hash = base_config.config_hash()
        for path, (config, _) in zip(paths, loaded):
            if config.config_hash() != base_hash:
                raise ShardMismatchError(f"Shard {path} belongs to a different experiment")

        order: List[str] = []
        merged: Dict[str, JobResult] = {}
        for _, results in loaded:
            for result in results:
                if result.job_id in merged:
                    merged[result.job_id] = merged[result.job_id].merge(result)
                else:
                    order.append(result.job_id)
                    merged[result.job_id] = result

        config = replace(base_config, shard=ShardSpec(), out=out)
        for result in merged.values():
            ranges = next(iter(result.summaries.values())).index_ranges
            if ranges != [(0, config.samples)]:
                self.logger.log_warning("incomplete_merge", job_id=result.job_id, ranges=ranges)
        self.logger.log_run_status(base_hash[:12], "shards_merged", {"shards": len(paths)})
        return build_artifact(config, [merged[job_id] for job_id in order])
