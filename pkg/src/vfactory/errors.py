"""Shared exception types."""


class VFactoryError(Exception):
    """Base class for all testbed errors."""


class ConfigInvalid(VFactoryError):
    """Scenario configuration failed validation.

    ``field`` carries the dotted path of the offending entry, e.g.
    ``attacks[0].target``.
    """

    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(f"{field}: {message}" if message else field)


class PastTick(VFactoryError):
    """Event scheduled for a tick earlier than the current tick."""


class TargetNotFound(VFactoryError):
    """Referenced cylinder or station does not exist."""


class UnknownParameter(VFactoryError):
    """Parameter name not in the PLC's parameter schema."""


class OutOfBounds(VFactoryError):
    """Parameter value outside its declared bounds."""


class UnknownLink(VFactoryError):
    """Link id not present in the topology."""


class BindFailed(VFactoryError):
    """Could not bind a host TCP port."""


class OutOfStock(VFactoryError):
    """No stored cylinder of the requested color."""


class InvalidParameter(VFactoryError):
    """Order parameter outside PLC bounds."""


class SchemaMismatch(VFactoryError):
    """Trajectories with incompatible variable schemas."""


class SchemaUnsupported(VFactoryError):
    """Dataset schema version not supported by this build."""


class CorruptRecord(VFactoryError):
    """Unparseable dataset line; carries the 1-based line number."""

    def __init__(self, line_no: int, message: str = ""):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}" if message else f"line {line_no}")


class NoGroundTruth(VFactoryError):
    """Evaluation requested on a dataset without ground-truth intervals."""


class TimelineMismatch(VFactoryError):
    """Alerts and ground truth do not share a tick timeline."""


class EmptyTraining(VFactoryError):
    """No training observations for a variable or channel."""


class ModbusError(VFactoryError):
    """Protocol-level encode/decode failure."""


class InvalidQuantity(ModbusError):
    """Quantity outside the per-function bounds."""


class PayloadTooLarge(ModbusError):
    """PDU payload exceeds the MBAP length field capacity."""


class BadProtocolId(ModbusError):
    """MBAP protocol id nonzero."""


class LengthMismatch(ModbusError):
    """MBAP length inconsistent with the framed payload."""


class Timeout(VFactoryError):
    """No matching response within the deadline (link loss or jam)."""


class ExceptionResponse(VFactoryError):
    """Server answered with a Modbus exception."""

    def __init__(self, code: int):
        self.code = code
        super().__init__(f"modbus exception 0x{code:02x}")
