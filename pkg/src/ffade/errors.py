class FfadeError(RuntimeError):
    """Base class for engine, stream and checkpoint failures."""


class ConfigError(FfadeError, ValueError):
    pass


class StreamFormatError(FfadeError, ValueError):
    def __init__(self, message: str, line_no: int | None = None) -> None:
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class StreamOrderError(FfadeError):
    def __init__(self, event_index: int, time: int, current: int) -> None:
        self.event_index = event_index
        self.time = time
        self.current = current
        super().__init__(
            f"event {event_index}: time {time} is earlier than current tick {current}"
        )


class CheckpointError(FfadeError):
    pass
