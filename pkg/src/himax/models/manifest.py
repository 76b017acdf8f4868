"""Run manifest written next to every artifact."""

from datetime import datetime
from typing import Any

from pydantic import BaseModel, Field

from himax import __version__


class RunManifest(BaseModel):
    """Resolved configuration, input digests and timings of one command."""

    command: str
    options: dict[str, Any] = Field(description="Every option with defaults applied")
    inputs: dict[str, str] = Field(default_factory=dict, description="path -> sha256")
    outputs: list[str] = Field(default_factory=list)
    seed: int | None = None
    version: str = __version__
    timings: dict[str, float] = Field(default_factory=dict, description="stage -> seconds")
    created_at: datetime = Field(default_factory=datetime.now)

    model_config = {"from_attributes": True}
