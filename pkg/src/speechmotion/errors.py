"""Exception types shared across the toolkit, mapped to CLI exit codes."""


class ValidationError(ValueError):
    """Input violates a documented precondition."""


class FormatError(ValidationError):
    """A serialized container is malformed or corrupt."""


class ConfigError(ValueError):
    """Run configuration could not be parsed or is inconsistent."""


class MissingPrerequisiteError(RuntimeError):
    """A pipeline stage ran before the stage that produces its inputs."""

    def __init__(self, missing_path, required_command):
        self.missing_path = str(missing_path)
        self.required_command = required_command
        super().__init__(
            f"missing artifact {self.missing_path!r}: run `{required_command}` first"
        )


class BackendUnavailableError(RuntimeError):
    """An external speech-embedding provider is not installed or reachable."""
