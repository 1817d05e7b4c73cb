"""Exception hierarchy shared across the package.

Three families map onto the CLI exit codes: ``UsageError`` (1),
``DataError`` (2) and ``ServiceError`` (3).
"""


class SentextError(Exception):
    pass


class UsageError(SentextError):
    """Bad command line, bad config key, empty modality subset."""


class DataError(SentextError):
    """Problems with input data or with values derived from it."""


# -- corpus ------------------------------------------------------------

class MissingFieldError(DataError):
    def __init__(self, row: int, field: str):
        super().__init__(f"manifest row {row}: missing field '{field}'")
        self.row = row
        self.field = field


class DuplicateExchangeError(DataError):
    def __init__(self, participant: str, exchange: str):
        super().__init__(f"duplicate exchange '{exchange}' for participant '{participant}'")
        self.participant = participant
        self.exchange = exchange


class LabelOutOfRangeError(DataError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


# -- audio -------------------------------------------------------------

class EmptyWaveformError(DataError):
    pass


class BadPitchRangeError(DataError):
    pass


class EmptySeriesError(DataError):
    pass


# -- facial ------------------------------------------------------------

class MissingColumnError(DataError):
    def __init__(self, au_id: int, path: str = ""):
        super().__init__(f"AU column for AU{au_id:02d} missing" + (f" in {path}" if path else ""))
        self.au_id = au_id


class NonBinaryValueError(DataError):
    def __init__(self, row: int, au_id: int, value: str):
        super().__init__(f"row {row}: AU{au_id:02d} value {value!r} is not 0 or 1")
        self.row = row
        self.au_id = au_id


class EmptyFileError(DataError):
    pass


# -- locale / composition ----------------------------------------------

class MissingLocaleKeyError(DataError):
    def __init__(self, key: str):
        super().__init__(f"locale table has no value for key '{key}'")
        self.key = key


class NoModalityPresentError(DataError):
    pass


class TemplateSlotUnknownError(DataError):
    def __init__(self, slot: str):
        super().__init__(f"paragraph template references unknown slot '{slot}'")
        self.slot = slot


class SeparatorCollisionError(DataError):
    """A description unit contains the separator token itself."""


# -- llm protocol --------------------------------------------------------

class WrongCombinationMethodError(DataError):
    pass


class UnknownCategoryNameError(DataError):
    def __init__(self, category: str):
        super().__init__(f"no sentiment class mapped for category '{category}'")
        self.category = category


# -- evaluation ----------------------------------------------------------

class LengthMismatchError(DataError):
    pass


class EmptyInputError(DataError):
    pass


class TooFewParticipantsError(DataError):
    pass


class BadFoldIndexError(DataError):
    pass


class IncompleteMatrixError(DataError):
    pass


# -- service -------------------------------------------------------------

class ServiceError(SentextError):
    """Transport-level failures when talking to the completion service."""


class AuthError(ServiceError):
    pass


class RateLimitExhaustedError(ServiceError):
    pass


class TransportError(ServiceError):
    pass


class MalformedServiceReplyError(ServiceError):
    pass
