"""Exception hierarchy.  The CLI maps these onto exit codes."""


class FmtkError(Exception):
    """Base class for all toolkit errors."""


class ParseError(FmtkError):
    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(where + message)


class VocabularyError(FmtkError):
    """Arity mismatch, unknown symbol, name clash or mismatched vocabularies."""


class StructureError(FmtkError):
    """Element outside the universe, constant problems and similar."""


class FormulaError(FmtkError):
    """Ill-formed formula for the requested operation (free variables, capture...)."""


class CapExceeded(FmtkError):
    """A configured resource cap would be exceeded."""


class VerificationError(FmtkError):
    """An independent re-check of a computed result failed."""


class OracleError(FmtkError):
    """A representation oracle does not meet the preconditions of a reduction."""
