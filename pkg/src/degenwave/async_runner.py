# degenwave/async_runner.py

""" An asynchronous job runner for independent numerical runs that supports:
- Dispatch of picklable jobs to a process pool (or a thread pool)
- Awaited, background and ordered-batch execution
- Job status tracking keyed by job id
- JSON result logs written with aiofiles
- Teardown of pool workers through psutil

PDE runs and sweep cells are CPU-bound and independent, so they are executed in
worker processes while the event loop stays free for progress reporting. """
import asyncio
import itertools
import json
import logging
import tempfile
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Union

import aiofiles
import psutil

from .utils import to_jsonable, worker_count

logger = logging.getLogger(__name__)


@dataclass
class JobStatus:
    """The status and result of a submitted job.

    Attributes:
        name (str): Label of the job, usually the function name.
        args (tuple): Positional arguments passed to the function.
        job_id (int): Identifier assigned by the runner.
        result (Any): Return value once the job has completed.
        error (Optional[BaseException]): Exception raised by the job, if any.
        log_file (Optional[Path]): JSON log holding the result or the error.
        task (Optional[asyncio.Task]): Background task of a forked job.
        done (bool): Whether the job has finished, successfully or not.
    """
    name: str
    args: tuple
    job_id: int
    result: Any = None
    error: Optional[BaseException] = None
    log_file: Optional[Path] = None
    task: Optional[asyncio.Task] = None
    done: bool = False


class JobError(Exception):
    """Raised when a job cannot be submitted or its result is unavailable"""
    pass


class AsyncJobRunner:

    def __init__(
        self,
        log_dir: Optional[Union[str, Path]] = None,
        track_jobs: bool = False,
        max_workers: Optional[int] = None,
        use_processes: bool = True,
    ):
        """
        Initialize the AsyncJobRunner.

        Args:
            log_dir: Directory where job logs will be stored. If None, a temporary directory will be created.
            track_jobs: Whether to keep JobStatus records for status queries.
            max_workers: Pool size; capped by DEGENWAVE_THREADS, physical core count by default.
            use_processes: Run jobs in worker processes; threads otherwise.
        """
        self.track_jobs = track_jobs
        self.max_workers = worker_count(max_workers)
        self.use_processes = use_processes
        self._jobs: Dict[int, JobStatus] = {}
        self._ids = itertools.count(1)
        self._executor: Optional[Executor] = None
        self._background_tasks: List[asyncio.Task] = []
        self._using_temp_dir = False

        if log_dir:
            self.log_dir = Path(log_dir).resolve()
            self.log_dir.mkdir(parents=True, exist_ok=True)
            logger.info(f"Using specified log directory at {self.log_dir}")
        else:
            self._temp_dir_manager = tempfile.TemporaryDirectory(prefix="degenwave_jobs")
            self.log_dir = Path(self._temp_dir_manager.name).resolve()
            self._using_temp_dir = True
            logger.info(f"Created temporary log directory at {self.log_dir}")

    @property
    def executor(self) -> Executor:
        if self._executor is None:
            pool = ProcessPoolExecutor if self.use_processes else ThreadPoolExecutor
            self._executor = pool(max_workers=self.max_workers)
            logger.debug(f"Started {pool.__name__} with {self.max_workers} workers")
        return self._executor

    def get_active_jobs(self) -> Dict[int, JobStatus]:
        """
        Get a dictionary of all tracked jobs.
        """
        if not self.track_jobs:
            raise RuntimeError("Job tracking is not enabled")
        return self._jobs

    def get_job(self, job_id: int) -> Dict[str, Any]:
        """Get the status of a job.

        Args:
            job_id: Identifier returned by fork or execute

        Returns:
            dict: Status information including:
                - status: 'not_found', 'running', 'completed', or 'failed'
                - job_id: Job identifier
                - error: Error message if the job failed
        """
        if not self.track_jobs:
            raise RuntimeError("Job tracking is not enabled")
        if job_id not in self._jobs:
            return {'status': 'not_found', 'job_id': job_id, 'error': None}

        status = self._jobs[job_id]
        if not status.done:
            state = 'running'
        elif status.error is None:
            state = 'completed'
        else:
            state = 'failed'
        return {
            'status': state,
            'job_id': job_id,
            'error': None if status.error is None else str(status.error),
        }

    def cancel_job(self, job_id: int) -> bool:
        """Cancel a forked job.

        A job that has already started in a worker process runs to completion;
        its result is discarded.

        Returns:
            bool: True if the job was cancelled before it finished.
        """
        if not self.track_jobs:
            raise RuntimeError("Job tracking is not enabled")
        if job_id not in self._jobs:
            raise ValueError(f"Job {job_id} not found")
        status = self._jobs[job_id]
        if status.done or status.task is None:
            return False
        cancelled = status.task.cancel()
        if cancelled:
            status.error = JobError("cancelled")
            status.done = True
            logger.info(f"Cancelled job {job_id} ({status.name})")
        return cancelled

    async def wait_for_job(self, job_id: int, timeout_seconds: float = 60):
        """ Asynchronous function to wait for a given job to finish

        Args:
            job_id: Job to wait for
            timeout_seconds: Maximum time to wait in seconds (default: 60)
        """
        iterations = int(timeout_seconds * 10)
        for _ in range(iterations):
            if self.get_job(job_id)['status'] in ['completed', 'failed', 'not_found']:
                break
            await asyncio.sleep(0.1)
        else:
            raise TimeoutError(f"Job {job_id} did not complete within {timeout_seconds} seconds")

    def get_job_log(self, job_id: int) -> str:
        """Get the JSON log written when a job finished."""
        if job_id not in self._jobs:
            return "Job ID not found"
        status = self._jobs[job_id]
        if not status.log_file or not status.log_file.exists():
            raise FileNotFoundError(f"Log file not found: {status.log_file}")
        return status.log_file.read_text(encoding="utf-8")

    def get_json_result(self, job_id: int) -> Dict[str, Any]:
        """Load the result recorded in a job's log.

        Raises:
            JobError: If the job failed or its log cannot be parsed.
            FileNotFoundError: If the log file is missing.
        """
        if not self.track_jobs:
            raise RuntimeError("Job tracking is not enabled")
        content = self.get_job_log(job_id)
        try:
            record = json.loads(content)
        except json.JSONDecodeError as e:
            logger.error(f"Failed to parse job log as JSON: {e}")
            raise JobError(f"Failed to parse job log as JSON: {e}")
        if record.get("error"):
            raise JobError(f"Job {job_id} failed: {record['error']}")
        return record

    def _log_path(self, name: str, job_id: int) -> Path:
        timestamp = datetime.now().strftime("%Y%m%d_%H%M%S")
        return self.log_dir / f"{name}_{job_id}_{timestamp}.json"

    async def _write_log(self, status: JobStatus):
        record = {
            "job_id": status.job_id,
            "name": status.name,
            "args": to_jsonable(status.args),
            "result": to_jsonable(status.result),
            "error": None if status.error is None else to_jsonable(status.error),
        }
        async with aiofiles.open(status.log_file, "w", encoding="utf-8") as f:
            await f.write(json.dumps(record, indent=2))

    def _new_status(self, func: Callable, args: Sequence[Any], name: Optional[str]) -> JobStatus:
        job_id = next(self._ids)
        label = name or getattr(func, "__name__", "job")
        status = JobStatus(name=label, args=tuple(args), job_id=job_id, log_file=self._log_path(label, job_id))
        if self.track_jobs:
            self._jobs[job_id] = status
        return status

    async def _run(self, status: JobStatus, func: Callable) -> JobStatus:
        loop = asyncio.get_running_loop()
        logger.info(f"Starting job {status.job_id}: {status.name}")
        try:
            status.result = await loop.run_in_executor(self.executor, func, *status.args)
            logger.info(f"Job {status.job_id} completed")
        except asyncio.CancelledError:
            status.error = JobError("cancelled")
            status.done = True
            raise
        except Exception as e:
            logger.error(f"Job {status.job_id} ({status.name}) failed: {e}")
            status.error = e
        status.done = True
        try:
            await self._write_log(status)
        except (OSError, TypeError, ValueError) as e:
            logger.error(f"Could not write log for job {status.job_id}: {e}")
        return status

    async def execute(self, func: Callable, *args: Any, name: Optional[str] = None,
                      timeout: Optional[float] = None) -> JobStatus:
        """Run ``func(*args)`` in the pool and wait for it.

        Errors raised by the job are recorded on the returned status, not re-raised.

        Args:
            func: Picklable callable when the runner uses processes
            args: Positional arguments
            name: Label for logs; defaults to the function name
            timeout: Optional timeout in seconds

        Returns:
            JobStatus with ``done`` set
        """
        status = self._new_status(func, args, name)
        if timeout is None:
            return await self._run(status, func)
        try:
            return await asyncio.wait_for(self._run(status, func), timeout=timeout)
        except asyncio.TimeoutError:
            logger.warning(f"Job {status.job_id} timed out after {timeout} seconds")
            status.error = TimeoutError(f"timed out after {timeout} seconds")
            status.done = True
            return status

    async def fork(self, func: Callable, *args: Any, name: Optional[str] = None) -> JobStatus:
        """Start ``func(*args)`` in the background and return immediately.

        Use get_job or wait_for_job to follow it.
        """
        status = self._new_status(func, args, name)
        status.task = asyncio.create_task(self._run(status, func))
        self._background_tasks.append(status.task)
        logger.info(f"Forked job {status.job_id}: {status.name}")
        return status

    async def map(self, func: Callable, items: Sequence[Any], name: Optional[str] = None) -> List[JobStatus]:
        """Run ``func(item)`` for every item concurrently; statuses come back in input order."""
        return list(await asyncio.gather(*(self.execute(func, item, name=name) for item in items)))

    async def _clean_background_tasks(self):
        """Clean up any background tasks."""
        if self._background_tasks:
            for task in self._background_tasks:
                if not task.done():
                    task.cancel()
            await asyncio.gather(*self._background_tasks, return_exceptions=True)
            self._background_tasks.clear()

    def _kill_workers(self):
        """Terminate pool worker processes, forcing a kill after a grace period."""
        pids = list(getattr(self._executor, "_processes", None) or {})
        children = []
        for pid in pids:
            try:
                children.append(psutil.Process(pid))
            except psutil.NoSuchProcess:
                pass
        for child in children:
            try:
                child.terminate()
            except psutil.NoSuchProcess:
                pass
        _, alive = psutil.wait_procs(children, timeout=3)
        for child in alive:
            logger.warning(f"Worker {child.pid} did not terminate gracefully, forcing kill...")
            try:
                child.kill()
            except psutil.NoSuchProcess:
                pass

    async def teardown(self):
        """Cancel background jobs, stop the pool and remove a temporary log directory."""
        await self._clean_background_tasks()
        if self._executor is not None:
            if self.use_processes:
                self._kill_workers()
            self._executor.shutdown(wait=False, cancel_futures=True)
            self._executor = None
        if self._using_temp_dir:
            self._temp_dir_manager.cleanup()
            self._using_temp_dir = False
