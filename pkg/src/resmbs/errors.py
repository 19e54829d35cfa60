"""Exception types shared across the pipeline."""


class ResmbsError(Exception):
    """Base class for all library errors."""


class ConfigError(ResmbsError):
    """A configuration value is missing, malformed, or out of range."""


class DuplicateDocumentError(ResmbsError):
    def __init__(self, doc_id):
        super().__init__(f"duplicate document id: {doc_id!r}")
        self.doc_id = doc_id


class YearOutOfRangeError(ResmbsError):
    def __init__(self, doc_id, year, year_range):
        super().__init__(
            f"document {doc_id!r} has year {year} outside configured range "
            f"{year_range[0]}-{year_range[1]}"
        )
        self.doc_id = doc_id
        self.year = year


class EmptyCorpusError(ResmbsError):
    """Construction or filtering produced a corpus with no documents."""


class UnknownRoleError(ResmbsError):
    def __init__(self, role):
        super().__init__(f"role {role!r} is not in the role registry")
        self.role = role


class UnresolvedEntityError(ResmbsError):
    def __init__(self, raw_name):
        super().__init__(f"cannot resolve institution name {raw_name!r}")
        self.raw_name = raw_name


class VocabularyMismatchError(ResmbsError):
    """Two model fits do not share a vocabulary (or topic count)."""


class InferenceError(ResmbsError):
    """Document-level topic inference cannot proceed (e.g. no known tokens)."""


class MirParseError(ResmbsError):
    def __init__(self, value):
        super().__init__(f"unrecognizable initial-rating value: {value!r}")
        self.value = value


class ColumnMismatchError(ResmbsError):
    """A feature matrix does not carry the columns a fitted model expects."""


class MissingDependencyError(ResmbsError):
    """A pipeline stage requires an artifact that has not been produced."""

    def __init__(self, path, stage=None):
        where = f" (needed by stage {stage!r})" if stage else ""
        super().__init__(f"missing input artifact: {path}{where}")
        self.path = str(path)
        self.stage = stage


class NumericFailureError(ResmbsError):
    """A numeric routine failed in a way that invalidates its output."""
