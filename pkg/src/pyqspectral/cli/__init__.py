"""Command-line front door: run configurations and pipelines."""

from .config import RunConfig, parse_config
from .run import PipelineRunner, main

__all__ = ["PipelineRunner", "RunConfig", "main", "parse_config"]
