# Copyright 2026 The hybridq Authors
# SPDX-License-Identifier: Apache-2.0

"""Post-training quantization for hybrid CNN/transformer models."""

from hybridq._core import (
    HybridqError,
    affine_params,
    dequantize,
    evaluate,
    execute,
    identify_blocks,
    log2_params,
    quantize_log2,
    quantize_model,
    quantize_uniform,
    report,
    trace,
    write_fixture,
)

# Error code name, e.g. "record_out_of_range".
HybridqError.code = property(lambda self: self.args[1] if len(self.args) > 1 else None)

__all__ = [
    "HybridqError",
    "affine_params",
    "dequantize",
    "evaluate",
    "execute",
    "identify_blocks",
    "log2_params",
    "quantize_log2",
    "quantize_model",
    "quantize_uniform",
    "report",
    "trace",
    "write_fixture",
]
