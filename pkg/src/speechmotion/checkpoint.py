"""Model checkpoints stored in the framed-block container.

Every state-dict entry becomes one block (flattened to a single row);
tensor shapes, dtypes, and the model's config travel in the header, so a
checkpoint reconstructs its model without outside information. Float32
parameters round-trip bit-exactly; integer step counters are stored as
float32, which is exact below 2**24 and converted back on load.
"""

from dataclasses import asdict

import numpy as np
import torch

from .errors import FormatError
from .face import FaceGenerator, FaceTrainConfig
from .motionfile import read_blocks, write_blocks
from .prior import ArConfig, ArModel
from .vq import VqConfig, VqModel

_KINDS = {
    "face": (FaceGenerator, FaceTrainConfig),
    "vq": (VqModel, VqConfig),
    "ar": (ArModel, ArConfig),
}
_SAVED_DTYPES = {"torch.float32", "torch.int64"}


def _kind_of(model):
    for kind, (cls, _) in _KINDS.items():
        if type(model) is cls:
            return kind
    raise FormatError(f"cannot checkpoint a {type(model).__name__}")


def save_checkpoint(path, model, extra=None):
    kind = _kind_of(model)
    blocks = {}
    shapes = {}
    dtypes = {}
    for name, tensor in model.state_dict().items():
        dtype = str(tensor.dtype)
        if dtype not in _SAVED_DTYPES:
            raise FormatError(f"unsupported tensor dtype {dtype} for {name!r}")
        if dtype == "torch.int64" and tensor.numel() and tensor.abs().max().item() >= 2**24:
            raise FormatError(f"integer tensor {name!r} too large for exact storage")
        blocks[name] = tensor.detach().numpy().astype(np.float32).reshape(1, -1)
        shapes[name] = list(tensor.shape)
        dtypes[name] = dtype
    meta = {
        "kind": kind,
        "config": asdict(model.cfg),
        "shapes": shapes,
        "dtypes": dtypes,
        "extra": dict(extra or {}),
    }
    return write_blocks(path, blocks, fps=0.0, meta=meta)


def load_checkpoint(path):
    """Rebuild the saved model; returns (model, extra). Mismatches are fatal."""
    blocks, _, meta = read_blocks(path)
    try:
        kind = meta["kind"]
        cls, cfg_cls = _KINDS[kind]
        cfg = cfg_cls(**meta["config"])
        shapes = meta["shapes"]
        dtypes = meta["dtypes"]
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed checkpoint header in {path}: {exc}") from exc
    model = cls(cfg)
    state = {}
    for name, block in blocks.items():
        if name not in shapes:
            raise FormatError(f"checkpoint block {name!r} missing shape metadata")
        arr = block.reshape(shapes[name])
        tensor = torch.from_numpy(arr.copy())
        if dtypes.get(name) == "torch.int64":
            tensor = tensor.to(torch.int64)
        state[name] = tensor
    try:
        model.load_state_dict(state, strict=True)
    except RuntimeError as exc:
        raise FormatError(f"checkpoint does not fit a fresh {kind} model: {exc}") from exc
    model.eval()
    return model, meta["extra"]
