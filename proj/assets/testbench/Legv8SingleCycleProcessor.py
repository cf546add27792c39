# {{banner}}
import cocotb
from cocotb.clock import Clock
from cocotb.triggers import RisingEdge, Timer


@cocotb.test()
async def {{test_name}}(dut):
    """Smoke test: out of reset the core fetches from address 0."""
    cocotb.start_soon(Clock(dut.clk, 10, "ns").start())
    dut.rst.value = 1
    await RisingEdge(dut.clk)
    await RisingEdge(dut.clk)
    dut.rst.value = 0
    await Timer(1, "ns")
    assert int(dut.debug_pc_out.value) == 0, "pc not reset"
    for _ in range(16):
        await RisingEdge(dut.clk)
        await Timer(1, "ns")
        assert dut.debug_pc_out.value.is_resolvable, "debug_pc_out unresolvable"
    dut._log.info("Legv8SingleCycleProcessor smoke test finished successfully!")
