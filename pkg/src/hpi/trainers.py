"""Pluggable learners: fit on a train set with one grid point, score on test.

Two implementations: the built-in boosted-trees learner, and a client
for external engines speaking newline-delimited JSON over stdin/stdout.

Wire protocol (version 1), one JSON object per line:

  parent -> child   {"cmd": "hello", "protocol": 1}
  child  -> parent  {"protocol": 1, "hyperparameters": ["max_depth", ...]}
  parent -> child   {"id": 7, "cmd": "evaluate", "train": "/path.csv",
                     "test": "/path.csv", "label": "y",
                     "hyperparams": {"max_depth": 4}, "metric": "auc",
                     "seed": 123}
  child  -> parent  {"id": 7, "loss": 0.93}          on success
  child  -> parent  {"id": 7, "error": "message"}    on failure

Responses arrive one per request, in request order. The "loss" field
carries the metric value in its natural orientation. The child must exit
when its stdin closes.
"""

from __future__ import annotations

import json
import math
import select
import shlex
import subprocess
import tempfile
import time
from pathlib import Path
from typing import Any, Protocol, Sequence

from .data import Dataset, save_dataset
from .errors import ConfigError, ProtocolError, TrainerError
from .gbm import GBM_HYPERPARAMETERS, GbmParams, gbm_fit, gbm_predict
from .grid import Assignment
from .metrics import Metric

PROTOCOL_VERSION = 1
DEFAULT_EVAL_TIMEOUT = 600.0


class TrainerContract(Protocol):
    """What the pipeline needs from a learner."""

    @property
    def declared_hyperparameters(self) -> frozenset[str]: ...

    def evaluate(
        self,
        train: Dataset,
        test: Dataset,
        assignment: Assignment,
        metric: Metric,
        seed: int,
    ) -> float: ...

    def close(self) -> None: ...


class BuiltinGbmTrainer:
    """The in-process boosted-trees learner."""

    declared_hyperparameters = frozenset(GBM_HYPERPARAMETERS)

    def evaluate(
        self,
        train: Dataset,
        test: Dataset,
        assignment: Assignment,
        metric: Metric,
        seed: int,
    ) -> float:
        params = GbmParams.from_assignment(assignment)
        model = gbm_fit(train, params, seed)
        scores = gbm_predict(model, test.features)
        return metric(scores, test.labels)

    def close(self) -> None:
        pass


class ExternalTrainer:
    """Client for one persistent external-trainer child process.

    Not thread-safe: the pipeline creates one instance per worker. Train
    and test sets are materialized as temp CSVs, cached by content hash
    so repeated grid points over the same subsample reuse one file.
    """

    def __init__(self, command: str | Sequence[str], timeout: float = DEFAULT_EVAL_TIMEOUT):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.command:
            raise ConfigError("external trainer command is empty")
        self.timeout = timeout
        self._proc: subprocess.Popen[str] | None = None
        self._declared: frozenset[str] | None = None
        self._next_id = 0
        self._tmpdir: tempfile.TemporaryDirectory[str] | None = None
        self._csv_cache: dict[str, str] = {}

    # -- process management -------------------------------------------------

    def _ensure_started(self) -> None:
        if self._proc is not None:
            return
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                bufsize=1,
            )
        except OSError as exc:
            raise TrainerError(f"could not start external trainer {self.command!r}: {exc}") from exc
        self._tmpdir = tempfile.TemporaryDirectory(prefix="hpi-trainer-")
        reply = self._roundtrip({"cmd": "hello", "protocol": PROTOCOL_VERSION})
        if reply.get("protocol") != PROTOCOL_VERSION:
            raise ProtocolError(
                f"handshake failed: expected protocol {PROTOCOL_VERSION}, got {reply!r}"
            )
        names = reply.get("hyperparameters")
        if not isinstance(names, list) or not all(isinstance(n, str) for n in names):
            raise ProtocolError(f"handshake must list hyperparameter names, got {reply!r}")
        self._declared = frozenset(names)

    def _send(self, message: dict[str, Any]) -> None:
        proc = self._proc
        assert proc is not None and proc.stdin is not None
        try:
            proc.stdin.write(json.dumps(message, separators=(",", ":")) + "\n")
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise TrainerError(f"external trainer died while receiving a request: {exc}") from exc

    def _read_line(self) -> str:
        proc = self._proc
        assert proc is not None and proc.stdout is not None
        deadline = time.monotonic() + self.timeout
        while True:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self.close()
                raise TrainerError(f"external trainer timed out after {self.timeout} s")
            ready, _, _ = select.select([proc.stdout], [], [], min(remaining, 1.0))
            if not ready:
                if proc.poll() is not None:
                    raise TrainerError(
                        f"external trainer exited with code {proc.returncode} before replying"
                    )
                continue
            line = proc.stdout.readline()
            if line == "":
                raise TrainerError(
                    "external trainer closed its stdout before replying"
                    + (f" (exit code {proc.returncode})" if proc.poll() is not None else "")
                )
            if line.strip():
                return line

    def _roundtrip(self, message: dict[str, Any]) -> dict[str, Any]:
        self._send(message)
        line = self._read_line()
        try:
            reply = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"external trainer sent a malformed line: {line.strip()!r}") from exc
        if not isinstance(reply, dict):
            raise ProtocolError(f"external trainer sent a non-object reply: {line.strip()!r}")
        return reply

    # -- contract -------------------------------------------------------------

    @property
    def declared_hyperparameters(self) -> frozenset[str]:
        self._ensure_started()
        assert self._declared is not None
        return self._declared

    def _dataset_path(self, data: Dataset) -> str:
        key = data.fingerprint()
        path = self._csv_cache.get(key)
        if path is None:
            assert self._tmpdir is not None
            path = str(Path(self._tmpdir.name) / f"{key[:24]}.csv")
            save_dataset(data, path)
            self._csv_cache[key] = path
        return path

    def evaluate(
        self,
        train: Dataset,
        test: Dataset,
        assignment: Assignment,
        metric: Metric,
        seed: int,
    ) -> float:
        self._ensure_started()
        request_id = self._next_id
        self._next_id += 1
        reply = self._roundtrip(
            {
                "id": request_id,
                "cmd": "evaluate",
                "train": self._dataset_path(train),
                "test": self._dataset_path(test),
                "label": train.label_name,
                "hyperparams": assignment.as_dict(),
                "metric": metric.kind,
                "seed": seed,
            }
        )
        if reply.get("id") != request_id:
            raise ProtocolError(
                f"reply id {reply.get('id')!r} does not match request id {request_id}"
            )
        if "error" in reply:
            raise TrainerError(f"external trainer error: {reply['error']}")
        if "loss" not in reply:
            raise ProtocolError(f"reply carries neither 'loss' nor 'error': {reply!r}")
        raw = reply["loss"]
        try:
            loss = float(raw)
        except (TypeError, ValueError):
            raise ProtocolError(f"loss field is not a number: {raw!r}") from None
        if not math.isfinite(loss):
            raise TrainerError(f"external trainer returned a non-finite loss: {raw!r}")
        return loss

    def close(self) -> None:
        proc, self._proc = self._proc, None
        self._declared = None
        self._csv_cache.clear()
        if proc is not None:
            try:
                if proc.stdin is not None:
                    proc.stdin.close()
                proc.wait(timeout=5.0)
            except (OSError, subprocess.TimeoutExpired):
                proc.kill()
                proc.wait()
        if self._tmpdir is not None:
            self._tmpdir.cleanup()
            self._tmpdir = None

    def __enter__(self) -> "ExternalTrainer":
        self._ensure_started()
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


def make_trainer_factory(kind: str, external_command: str | Sequence[str] | None = None,
                         timeout: float = DEFAULT_EVAL_TIMEOUT):
    """Factory of per-worker trainer instances for the pipeline."""
    if kind == "builtin":
        return BuiltinGbmTrainer
    if kind == "external":
        if not external_command:
            raise ConfigError("external trainer selected but no command given")
        return lambda: ExternalTrainer(external_command, timeout=timeout)
    raise ConfigError(f"unknown trainer kind {kind!r}; choose 'builtin' or 'external'")
