"""Exception hierarchy shared across the package."""


class StoryGaugeError(Exception):
    """Base class for all errors raised by this package."""


class MissingColumn(StoryGaugeError):
    def __init__(self, name: str):
        super().__init__(f"required CSV column missing: {name!r}")
        self.name = name


class MalformedCsv(StoryGaugeError):
    def __init__(self, line: int, detail: str = ""):
        msg = f"malformed CSV near line {line}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
        self.line = line


class EmptyBacklog(StoryGaugeError):
    pass


class TooFewDocuments(StoryGaugeError):
    pass


class DimensionMismatch(StoryGaugeError):
    pass


class InsufficientLabels(StoryGaugeError):
    pass


class MissingResource(StoryGaugeError):
    pass


class EmptyResource(StoryGaugeError):
    pass


class EmptyComparisonSet(StoryGaugeError):
    pass


class EmptyInput(StoryGaugeError):
    pass


class StoreIO(StoryGaugeError):
    pass


class CorruptBundle(StoryGaugeError):
    pass


class BundleMissing(StoryGaugeError):
    pass


class TooFewValues(StoryGaugeError):
    pass


class LengthMismatch(StoryGaugeError):
    pass


class SingularDesign(StoryGaugeError):
    pass


class InsufficientRows(StoryGaugeError):
    pass
