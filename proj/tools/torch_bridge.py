#!/usr/bin/env python3
"""Serves exported TorchScript encoder/generator/parser modules to refcanvas.

Framing (both directions): one JSON header line, then `bytes` raw payload bytes.
Images travel as little-endian float32 HWC in [0, 1]; latents as float32 (L, D);
label maps as uint8 (H, W).
"""

import argparse
import json
import sys

import numpy as np
import torch
import torch.nn.functional as F

IMAGENET_MEAN = torch.tensor([0.485, 0.456, 0.406]).view(1, 3, 1, 1)
IMAGENET_STD = torch.tensor([0.229, 0.224, 0.225]).view(1, 3, 1, 1)


def read_exact(stream, n):
    buf = bytearray()
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            raise EOFError("input closed")
        buf.extend(chunk)
    return bytes(buf)


def send(out, header, payload=b""):
    header = dict(header)
    header["bytes"] = len(payload)
    out.write((json.dumps(header) + "\n").encode())
    if payload:
        out.write(payload)
    out.flush()


def first_tensor(value):
    # Parsing networks such as BiSeNet return (main, aux, aux).
    if isinstance(value, (tuple, list)):
        return value[0]
    return value


def image_tensor(header, payload):
    h, w = int(header["height"]), int(header["width"])
    arr = np.frombuffer(payload, dtype="<f4").reshape(h, w, 3)
    return torch.from_numpy(arr.copy()).permute(2, 0, 1).unsqueeze(0), h, w


class Models:
    def __init__(self, args):
        torch.use_deterministic_algorithms(True)
        self.encoder = torch.jit.load(args.encoder, map_location="cpu").eval()
        self.generator = torch.jit.load(args.generator, map_location="cpu").eval()
        self.parser = None
        if args.parser:
            self.parser = torch.jit.load(args.parser, map_location="cpu").eval()
        self.encoder_size = args.encoder_size
        self.parser_size = args.parser_size
        with torch.no_grad():
            probe = self.encoder(torch.zeros(1, 3, self.encoder_size, self.encoder_size))
            self.latent_shape = list(probe.shape[1:])
            image = self.generator(probe)
            self.image_size = list(image.shape[2:])

    def info(self):
        return {
            "ok": True,
            "latent_shape": self.latent_shape,
            "image_size": self.image_size,
            "parser": self.parser is not None,
        }

    @torch.no_grad()
    def encode(self, header, payload):
        x, _, _ = image_tensor(header, payload)
        x = F.interpolate(x, size=(self.encoder_size, self.encoder_size), mode="bilinear",
                          align_corners=False)
        latent = self.encoder(x * 2.0 - 1.0)[0]
        out = latent.to(torch.float32).contiguous().numpy().astype("<f4")
        return {"ok": True, "shape": list(out.shape)}, out.tobytes()

    @torch.no_grad()
    def generate(self, header, payload):
        layers, width = int(header["layers"]), int(header["width"])
        latent = np.frombuffer(payload, dtype="<f4").reshape(1, layers, width)
        image = self.generator(torch.from_numpy(latent.copy()))
        image = ((image[0] + 1.0) / 2.0).clamp(0.0, 1.0).permute(1, 2, 0)
        out = image.to(torch.float32).contiguous().numpy().astype("<f4")
        return {"ok": True, "height": out.shape[0], "width": out.shape[1]}, out.tobytes()

    @torch.no_grad()
    def parse(self, header, payload):
        if self.parser is None:
            raise RuntimeError("no face parser loaded")
        x, h, w = image_tensor(header, payload)
        x = F.interpolate(x, size=(self.parser_size, self.parser_size), mode="bilinear",
                          align_corners=False)
        logits = first_tensor(self.parser((x - IMAGENET_MEAN) / IMAGENET_STD))
        labels = logits.argmax(dim=1, keepdim=True).to(torch.float32)
        labels = F.interpolate(labels, size=(h, w), mode="nearest")[0, 0]
        out = labels.to(torch.uint8).contiguous().numpy()
        return {"ok": True, "height": h, "width": w}, out.tobytes()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--encoder", required=True)
    ap.add_argument("--generator", required=True)
    ap.add_argument("--parser")
    ap.add_argument("--encoder-size", type=int, default=256)
    ap.add_argument("--parser-size", type=int, default=512)
    args = ap.parse_args()

    stdin, stdout = sys.stdin.buffer, sys.stdout.buffer
    # Anything printed by model code must not corrupt the protocol stream.
    sys.stdout = sys.stderr
    models = None
    load_error = None
    try:
        models = Models(args)
    except Exception as exc:  # reported on the first request
        load_error = f"{type(exc).__name__}: {exc}"

    handlers = {}
    if models is not None:
        handlers = {"encode": models.encode, "generate": models.generate, "parse": models.parse}

    while True:
        line = stdin.readline()
        if not line:
            return
        header = json.loads(line)
        payload = read_exact(stdin, int(header.get("bytes", 0)))
        op = header.get("op")
        if load_error is not None:
            send(stdout, {"ok": False, "error": load_error})
            continue
        try:
            if op == "info":
                send(stdout, models.info())
            elif op in handlers:
                reply, data = handlers[op](header, payload)
                send(stdout, reply, data)
            else:
                send(stdout, {"ok": False, "error": f"unknown op {op!r}"})
        except Exception as exc:
            send(stdout, {"ok": False, "error": f"{type(exc).__name__}: {exc}"})


if __name__ == "__main__":
    main()
