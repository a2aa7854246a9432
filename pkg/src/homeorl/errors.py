from __future__ import annotations


class ConfigError(ValueError):
    """Invalid configuration value, file line, or network shape."""


class DivergenceError(RuntimeError):
    """Training produced a non-finite loss or Q-value."""

    def __init__(self, message: str, step: int | None = None, agent: str | None = None):
        self.step = step
        self.agent = agent
        context = ", ".join(
            part for part in (f"step {step}" if step is not None else "", agent or "") if part
        )
        super().__init__(f"{message} ({context})" if context else message)
