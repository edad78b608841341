"""HTTP service wrapping the estimator library."""

from __future__ import annotations

from fedcarbon.service.app import app, create_app

__all__ = ["app", "create_app"]
