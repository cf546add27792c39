# {{banner}}
import cocotb
from cocotb.triggers import Timer


@cocotb.test()
async def {{test_name}}(dut):
    """Exhaustive over the immediate field."""
    width, out_width = {{IMMEDIATE_WIDTH}}, {{DATA_WIDTH}}
    for v in range(1 << width):
        dut.imm_in.value = v
        await Timer(1, "ns")
        signed = v - (1 << width) if v >> (width - 1) else v
        assert int(dut.imm_out.value) == signed & ((1 << out_width) - 1), "imm_out mismatch"
    dut._log.info("SignExtender test finished successfully!")
