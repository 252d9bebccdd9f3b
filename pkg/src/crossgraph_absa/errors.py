"""Exception hierarchy shared by every crossgraph_absa module."""


class AbsaError(Exception):
    """Base class for every error raised on purpose by this package."""


class ContractError(AbsaError, ValueError):
    """A caller violated an operation's precondition."""


class DimensionError(ContractError):
    """Operand shapes are incompatible."""

    def __init__(self, op: str, *shapes: tuple[int, ...]) -> None:
        rendered = " vs ".join(str(tuple(shape)) for shape in shapes)
        super().__init__(f"{op}: incompatible shapes {rendered}")
        self.op = op
        self.shapes = shapes


class EmptyInputError(ContractError):
    """An operation received an empty collection it cannot reduce."""


class NumericalError(ContractError):
    """A computation produced NaN or Inf."""


class ConfigError(AbsaError, ValueError):
    """A configuration value is out of its allowed range."""


class DatasetError(AbsaError, ValueError):
    """A dataset file or split cannot be used."""


class UnencodableInstanceError(DatasetError):
    """An instance cannot be laid out within max_length."""


class CheckpointError(AbsaError, ValueError):
    """A checkpoint is corrupted or disagrees with its configuration."""


class TrainingDivergedError(AbsaError, RuntimeError):
    """The training loss became non-finite."""
