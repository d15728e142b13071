"""Single-file model container: JSON with base64-packed float arrays.

One self-describing, versioned format covers the autoencoder and both
T-learner kinds (distinguished by a kind tag), plus the feature
standardizer fitted alongside the model. Arrays round-trip losslessly
(raw little-endian bytes), and writing is byte-deterministic.
"""

from __future__ import annotations

import base64
import json
from dataclasses import asdict

import numpy as np

from .baselines import (
    LogisticConfig,
    LogisticModel,
    MlpClassifier,
    MlpConfig,
    TLearner,
)
from .data import Standardizer
from .exceptions import ConfigurationError
from .model import CaeConfig, CausalAutoencoder
from .nn import Network, NetworkSpec
from .populations import LatentLayout

FORMAT = "causalae-model"
FORMAT_VERSION = 1


def _pack(arr: np.ndarray) -> dict:
    arr = np.ascontiguousarray(arr, dtype=np.float64)
    return {
        "shape": list(arr.shape),
        "data": base64.b64encode(arr.astype("<f8").tobytes()).decode("ascii"),
    }


def _unpack(entry: dict) -> np.ndarray:
    raw = base64.b64decode(entry["data"])
    return np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(entry["shape"])


def _spec_meta(spec: NetworkSpec) -> dict:
    return {
        "layer_sizes": list(spec.layer_sizes),
        "activations": list(spec.activations),
        "batch_norm": list(spec.batch_norm),
    }


def _network_arrays(prefix: str, net: Network, arrays: dict) -> None:
    for i, (lin, bn) in enumerate(zip(net.layers, net.norms)):
        arrays[f"{prefix}.{i}.weights"] = _pack(lin.weights)
        arrays[f"{prefix}.{i}.bias"] = _pack(lin.bias)
        if bn is not None:
            arrays[f"{prefix}.{i}.gamma"] = _pack(bn.gamma)
            arrays[f"{prefix}.{i}.beta"] = _pack(bn.beta)
            arrays[f"{prefix}.{i}.running_mean"] = _pack(bn.running_mean)
            arrays[f"{prefix}.{i}.running_var"] = _pack(bn.running_var)


def _restore_network(prefix: str, meta: dict, arrays: dict) -> Network:
    spec = NetworkSpec(
        layer_sizes=tuple(meta["layer_sizes"]),
        activations=tuple(meta["activations"]),
        batch_norm=tuple(meta["batch_norm"]),
    )
    net = Network(spec, 0)
    for i, (lin, bn) in enumerate(zip(net.layers, net.norms)):
        lin.weights = _unpack(arrays[f"{prefix}.{i}.weights"])
        lin.bias = _unpack(arrays[f"{prefix}.{i}.bias"])
        if bn is not None:
            bn.gamma = _unpack(arrays[f"{prefix}.{i}.gamma"])
            bn.beta = _unpack(arrays[f"{prefix}.{i}.beta"])
            bn.running_mean = _unpack(arrays[f"{prefix}.{i}.running_mean"])
            bn.running_var = _unpack(arrays[f"{prefix}.{i}.running_var"])
    return net


def save_model(path, model, scaler: Standardizer | None = None) -> None:
    """Write a trained model (and optional standardizer) to one file."""
    arrays: dict = {}
    if isinstance(model, CausalAutoencoder):
        kind = "cae"
        meta = {
            "config": asdict(model.config),
            "layout": asdict(model.layout),
            "encoder_spec": _spec_meta(model.encoder.spec),
            "decoder_spec": _spec_meta(model.decoder.spec),
        }
        _network_arrays("encoder", model.encoder, arrays)
        _network_arrays("decoder", model.decoder, arrays)
    elif isinstance(model, TLearner):
        kind = model.kind
        meta = {
            "config": asdict(model.config),
            "treated_spec": _spec_meta(model.model_treated.net.spec),
            "control_spec": _spec_meta(model.model_control.net.spec),
        }
        _network_arrays("treated", model.model_treated.net, arrays)
        _network_arrays("control", model.model_control.net, arrays)
    else:
        raise ConfigurationError(f"cannot serialize object of type {type(model).__name__}")
    if scaler is not None:
        arrays["scaler.mean"] = _pack(scaler.mean)
        arrays["scaler.scale"] = _pack(scaler.scale)
    doc = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "kind": kind,
        "meta": meta,
        "arrays": arrays,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_model(path):
    """Read a model file back; returns ``(model, standardizer or None)``."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"model file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path} is not a valid model file: {exc}") from exc
    if doc.get("format") != FORMAT:
        raise ConfigurationError(f"{path} is not a {FORMAT} file")
    if doc.get("version") != FORMAT_VERSION:
        raise ConfigurationError(f"unsupported model format version {doc.get('version')}")
    kind = doc["kind"]
    meta = doc["meta"]
    arrays = doc["arrays"]
    if kind == "cae":
        cfg_dict = dict(meta["config"])
        if cfg_dict.get("encoder_hidden_sizes") is not None:
            cfg_dict["encoder_hidden_sizes"] = tuple(cfg_dict["encoder_hidden_sizes"])
        config = CaeConfig(**cfg_dict)
        layout = LatentLayout(**meta["layout"])
        encoder = _restore_network("encoder", meta["encoder_spec"], arrays)
        decoder = _restore_network("decoder", meta["decoder_spec"], arrays)
        model = CausalAutoencoder(encoder, decoder, layout, config)
    elif kind in ("t_lr", "t_mlpc"):
        cls = LogisticModel if kind == "t_lr" else MlpClassifier
        cfg = (LogisticConfig if kind == "t_lr" else MlpConfig)(**meta["config"])
        treated = cls(_restore_network("treated", meta["treated_spec"], arrays), [])
        control = cls(_restore_network("control", meta["control_spec"], arrays), [])
        model = TLearner(kind=kind, model_treated=treated, model_control=control, config=cfg)
    else:
        raise ConfigurationError(f"unknown model kind {kind!r}")
    scaler = None
    if "scaler.mean" in arrays:
        scaler = Standardizer(
            mean=_unpack(arrays["scaler.mean"]),
            scale=_unpack(arrays["scaler.scale"]),
        )
    return model, scaler
