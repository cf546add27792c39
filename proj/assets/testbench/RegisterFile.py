# {{banner}}
import random

import cocotb
from cocotb.clock import Clock
from cocotb.triggers import RisingEdge, Timer

DATA_MASK = (1 << {{DATA_WIDTH}}) - 1
REGS = 1 << {{REG_ADDR_WIDTH}}


@cocotb.test()
async def {{test_name}}(dut):
    """Writes and reads every register; register 0 must stay zero."""
    cocotb.start_soon(Clock(dut.clk, 10, "ns").start())
    dut.rst.value = 1
    dut.write_en.value = 0
    dut.write_addr.value = 0
    dut.write_data.value = 0
    dut.read_addr1.value = 0
    dut.read_addr2.value = 0
    await RisingEdge(dut.clk)
    await RisingEdge(dut.clk)
    dut.rst.value = 0

    rng = random.Random(7)
    model = [0] * REGS
    for _ in range(200):
        addr = rng.randrange(REGS)
        data = rng.getrandbits({{DATA_WIDTH}})
        dut.write_addr.value = addr
        dut.write_data.value = data
        dut.write_en.value = 1
        await RisingEdge(dut.clk)
        if addr != 0:
            model[addr] = data & DATA_MASK
        dut.write_en.value = 0
        r1, r2 = rng.randrange(REGS), rng.randrange(REGS)
        dut.read_addr1.value = r1
        dut.read_addr2.value = r2
        await Timer(1, "ns")
        assert int(dut.read_data1.value) == model[r1], "read_data1 mismatch"
        assert int(dut.read_data2.value) == model[r2], "read_data2 mismatch"
    dut._log.info("RegisterFile test finished successfully!")
