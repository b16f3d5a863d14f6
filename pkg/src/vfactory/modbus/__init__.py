from .codec import (
    FUNC_READ_COILS,
    FUNC_READ_DISCRETE_INPUTS,
    FUNC_READ_HOLDING_REGISTERS,
    FUNC_READ_INPUT_REGISTERS,
    FUNC_WRITE_MULTIPLE_COILS,
    FUNC_WRITE_MULTIPLE_REGISTERS,
    FUNC_WRITE_SINGLE_COIL,
    FUNC_WRITE_SINGLE_REGISTER,
    ModbusFrame,
    StreamDecoder,
    decode_pdu,
    encode_exception,
    encode_frame,
    encode_read_request,
    encode_read_response_bits,
    encode_read_response_words,
    encode_write_multiple_coils,
    encode_write_multiple_registers,
    encode_write_single,
)

__all__ = [
    "FUNC_READ_COILS",
    "FUNC_READ_DISCRETE_INPUTS",
    "FUNC_READ_HOLDING_REGISTERS",
    "FUNC_READ_INPUT_REGISTERS",
    "FUNC_WRITE_MULTIPLE_COILS",
    "FUNC_WRITE_MULTIPLE_REGISTERS",
    "FUNC_WRITE_SINGLE_COIL",
    "FUNC_WRITE_SINGLE_REGISTER",
    "ModbusFrame",
    "StreamDecoder",
    "decode_pdu",
    "encode_exception",
    "encode_frame",
    "encode_read_request",
    "encode_read_response_bits",
    "encode_read_response_words",
    "encode_write_multiple_coils",
    "encode_write_multiple_registers",
    "encode_write_single",
]
