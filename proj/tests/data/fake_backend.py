#!/usr/bin/env python3
"""Deterministic stand-in for the external caption / CLIP / LPIPS programs.

Reads the request file named on the command line and prints one JSON object.
Set FAKE_BACKEND_FAIL=1 to make it exit with status 3.
"""
import hashlib
import json
import math
import os
import sys

from PIL import Image

DIM = 64
COLORS = ["black", "red", "green", "yellow", "blue", "magenta", "cyan", "white"]


def pixels(path):
    img = Image.open(path).convert("RGB")
    return list(img.getdata())


def caption(path):
    px = pixels(path)
    n = len(px)
    mean = [sum(p[c] for p in px) / n for c in range(3)]
    code = sum((1 << c) for c in range(3) if mean[c] >= 128)
    light = sum(mean) / 3
    tone = "bright" if light > 170 else "dim" if light < 85 else "muted"
    spread = max(max(p[c] for p in px) - min(p[c] for p in px) for c in range(3))
    texture = "textured" if spread > 64 else "plain"
    return f"a {tone} {texture} {COLORS[code]} scene with soft light"


def embed_text(text):
    words = ["<s>"] + text.lower().split() + ["</s>"]
    v = [0.0] * DIM
    for a, b in zip(words, words[1:]):
        h = hashlib.sha256(f"{a} {b}".encode()).digest()
        v[h[0] % DIM] += 1.0 if h[1] & 1 else -1.0
    return v


def main():
    if os.environ.get("FAKE_BACKEND_FAIL") == "1":
        print("fake backend: forced failure", file=sys.stderr)
        return 3
    with open(sys.argv[1]) as f:
        req = json.load(f)
    task = req["task"]
    if task == "caption":
        out = {"caption": caption(req["images"][0])}
    elif task == "embed_image":
        out = {"embedding": embed_text(caption(req["images"][0]))}
    elif task == "embed_text":
        out = {"embedding": embed_text(req["text"])}
    elif task == "lpips":
        a, b = pixels(req["images"][0]), pixels(req["images"][1])
        d = sum((x - y) ** 2 for p, q in zip(a, b) for x, y in zip(p, q)) / (3 * len(a) * 255.0 ** 2)
        out = {"distance": math.sqrt(d)}
    else:
        print(f"unknown task {task}", file=sys.stderr)
        return 2
    print(json.dumps(out))
    return 0


if __name__ == "__main__":
    sys.exit(main())
