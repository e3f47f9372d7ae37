# Copyright 2026 The trigen Authors.
# SPDX-License-Identifier: Apache-2.0
"""Exports the LPIPS AlexNet metric into trigen's perceptual-network format.

Writes <out>.pt (named tensors) and <out>.json (layer layout). Needs the
`lpips` package for the linear calibration weights and torchvision for the
AlexNet backbone. Pass --alexnet-weights to use a local ImageNet checkpoint
instead of downloading one.
"""

import argparse
import json
import os

import lpips
import torch
import torchvision

# AlexNet feature stack up to the fifth ReLU. The LPIPS taps sit after every ReLU.
LAYERS = [
    {"kind": "conv", "stride": 4, "padding": 2},
    {"kind": "relu", "tap": True},
    {"kind": "maxpool", "kernel": 3, "stride": 2},
    {"kind": "conv", "stride": 1, "padding": 2},
    {"kind": "relu", "tap": True},
    {"kind": "maxpool", "kernel": 3, "stride": 2},
    {"kind": "conv", "stride": 1, "padding": 1},
    {"kind": "relu", "tap": True},
    {"kind": "conv", "stride": 1, "padding": 1},
    {"kind": "relu", "tap": True},
    {"kind": "conv", "stride": 1, "padding": 1},
    {"kind": "relu", "tap": True},
]


def export(out, alexnet_weights=None, random_backbone=False):
  if random_backbone:
    backbone = torchvision.models.alexnet(weights=None)
  elif alexnet_weights:
    backbone = torchvision.models.alexnet(weights=None)
    backbone.load_state_dict(torch.load(alexnet_weights, map_location="cpu"))
  else:
    backbone = torchvision.models.alexnet(weights="IMAGENET1K_V1")
  lin_file = os.path.join(os.path.dirname(lpips.__file__), "weights", "v0.1", "alex.pth")
  lin = torch.load(lin_file, map_location="cpu")

  tensors = {}
  for i, layer in enumerate(LAYERS):
    if layer["kind"] == "conv":
      conv = backbone.features[i]
      tensors[f"features.{i}.weight"] = conv.weight.detach().float().contiguous()
      tensors[f"features.{i}.bias"] = conv.bias.detach().float().contiguous()
  for k in range(5):
    tensors[f"lin{k}.weight"] = lin[f"lin{k}.model.1.weight"].float().contiguous()
  tensors["scaling.shift"] = torch.tensor([-0.030, -0.088, -0.188])
  tensors["scaling.scale"] = torch.tensor([0.458, 0.448, 0.450])

  os.makedirs(os.path.dirname(os.path.abspath(out)), exist_ok=True)
  torch.save(tensors, out + ".pt")
  manifest = {"kind": "perceptual_network", "backbone": "alex", "layers": LAYERS}
  with open(out + ".json", "w") as f:
    json.dump(manifest, f, indent=2)


def main():
  parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
  parser.add_argument("--out", required=True, help="output stem, e.g. cache/lpips/alex")
  parser.add_argument("--alexnet-weights", help="local torchvision AlexNet state dict")
  parser.add_argument("--random-backbone", action="store_true",
                      help="untrained AlexNet; only for format checks")
  args = parser.parse_args()
  export(args.out, args.alexnet_weights, args.random_backbone)
  print(f"perceptual network written to {args.out}.{{pt,json}}")


if __name__ == "__main__":
  main()
