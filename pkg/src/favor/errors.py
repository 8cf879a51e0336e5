"""Exception types raised across the toolkit."""


class FavorError(Exception):
    """Base class for all toolkit errors."""


# --- media ingestion ---

class UnreadableFile(FavorError):
    pass


class UnsupportedColorFormat(FavorError):
    pass


class EmptySequence(FavorError):
    pass


class DegenerateFrame(FavorError):
    pass


# --- feature backend ---

class GraphLoadError(FavorError):
    pass


class MissingTap(FavorError):
    def __init__(self, name):
        super().__init__(f"tap {name!r} not found in graph")
        self.name = name


class ChannelMismatch(FavorError):
    def __init__(self, stage, expected, found):
        super().__init__(
            f"stage {stage}: declared {expected} channels, graph yields {found}"
        )
        self.stage = stage
        self.expected = expected
        self.found = found


class InferenceFailure(FavorError):
    pass


# --- frame quality ---

class PyramidMismatch(FavorError):
    pass


class ShapeMismatch(FavorError):
    pass


# --- temporal pooling ---

class EmptySeries(FavorError):
    pass


class UnknownStrategy(FavorError):
    pass


class BadStrategyParam(FavorError):
    pass


# --- subjective stats ---

class DegenerateSubject(FavorError):
    def __init__(self, subject_id, reason="zero rating spread"):
        super().__init__(f"subject {subject_id!r}: {reason}")
        self.subject_id = subject_id


class InsufficientRatings(FavorError):
    pass


# --- benchmark evaluation ---

class DegenerateInput(FavorError):
    pass


# --- baselines ---

class TooSmall(FavorError):
    pass


# --- CLI / pipeline ---

class FrameCountMismatch(FavorError):
    pass


class SchemaError(FavorError):
    def __init__(self, message, row=None):
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)
        self.row = row
