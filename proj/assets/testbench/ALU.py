# {{banner}}
import random

import cocotb
from cocotb.triggers import Timer

MASK = (1 << {{DATA_WIDTH}}) - 1


def model(a, b, op):
    return {0: a + b, 1: a - b, 2: a & b, 3: a | b, 4: b}.get(op, 0) & MASK


@cocotb.test()
async def {{test_name}}(dut):
    """Checks every operation against a Python model."""
    rng = random.Random(3)
    for _ in range(500):
        a, b = rng.getrandbits({{DATA_WIDTH}}), rng.getrandbits({{DATA_WIDTH}})
        op = rng.randrange(1 << {{ALU_OP_WIDTH}})
        dut.a.value = a
        dut.b.value = b
        dut.alu_op.value = op
        await Timer(1, "ns")
        expected = model(a, b, op)
        assert int(dut.result.value) == expected, f"result mismatch for op {op}"
        assert int(dut.zero.value) == int(expected == 0), "zero flag mismatch"
    dut._log.info("ALU test finished successfully!")
