# {{banner}}
import cocotb
from cocotb.clock import Clock
from cocotb.triggers import FallingEdge, RisingEdge

CYCLES = {{cycles}}
HEADER = "cycle,debug_pc_out,debug_instruction_out,debug_alu_result,debug_reg_write_data"


@cocotb.test()
async def {{test_name}}(dut):
    """Runs instruction.hex and records the debug outputs once per cycle."""
    cocotb.start_soon(Clock(dut.clk, 10, "ns").start())
    dut.rst.value = 1
    await RisingEdge(dut.clk)
    await RisingEdge(dut.clk)
    dut.rst.value = 0
    rows = [HEADER]
    halted_at = None
    for cycle in range(CYCLES):
        await FallingEdge(dut.clk)
        pc = int(dut.debug_pc_out.value)
        instr = int(dut.debug_instruction_out.value)
        rows.append("%d,%0{{pc_digits}}X,%0{{instr_digits}}X,%0{{data_digits}}X,%0{{data_digits}}X" % (
            cycle, pc, instr,
            int(dut.debug_alu_result.value), int(dut.debug_reg_write_data.value)))
        if instr == {{halt_word}}:
            halted_at = cycle
            break
        await RisingEdge(dut.clk)
    with open("dut_trace.csv", "w") as f:
        f.write("\n".join(rows) + "\n")
    dut._log.info("system trace captured (%d cycles, halt at %s)", len(rows) - 1, halted_at)
