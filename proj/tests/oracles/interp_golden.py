"""Bilinear resampling goldens from torch (half-pixel centres, align_corners=False)."""
import json
import sys

import torch
import torch.nn.functional as F


def resize(values, n):
    x = torch.tensor(values, dtype=torch.float64)
    if x.dim() == 2:
        x = x[None]
    y = F.interpolate(x[None], size=(n, n), mode="bilinear", align_corners=False)[0]
    return y.tolist()


if __name__ == "__main__":
    g = torch.Generator().manual_seed(5)
    rand3 = torch.rand((2, 3, 3), generator=g, dtype=torch.float64).tolist()
    rand4 = torch.rand((1, 4, 4), generator=g, dtype=torch.float64).tolist()
    cases = [
        {"input": [[[0.0, 1.0], [2.0, 3.0]]], "n": 4},
        {"input": rand3, "n": 5},
        {"input": rand4, "n": 3},
        {"input": rand4, "n": 7},
    ]
    for case in cases:
        case["output"] = resize(case["input"], case["n"])
    json.dump({"cases": cases}, sys.stdout, indent=1)
    sys.stdout.write("\n")
