# {{banner}}
import random

import cocotb
from cocotb.clock import Clock
from cocotb.triggers import RisingEdge, Timer


@cocotb.test()
async def {{test_name}}(dut):
    """Reset clears the counter; otherwise it loads pc_next_addr each edge."""
    cocotb.start_soon(Clock(dut.clk, 10, "ns").start())
    dut.rst.value = 1
    dut.pc_next_addr.value = 0x55
    await RisingEdge(dut.clk)
    await Timer(1, "ns")
    assert int(dut.pc_out.value) == 0, "pc_out not cleared by reset"
    dut.rst.value = 0
    rng = random.Random(5)
    for _ in range(50):
        nxt = rng.getrandbits({{ADDRESS_WIDTH}})
        dut.pc_next_addr.value = nxt
        await RisingEdge(dut.clk)
        await Timer(1, "ns")
        assert int(dut.pc_out.value) == nxt, "pc_out mismatch"
    dut._log.info("ProgramCounter test finished successfully!")
