"""Offline test fixtures: a tiny randomly initialized CLIP with a real
character-level BPE tokenizer, so the full inference path runs without any
checkpoint download."""

import json
import os
import string

import pytest
import torch

os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

from transformers import CLIPConfig, CLIPImageProcessor, CLIPModel, CLIPTokenizer  # noqa: E402

from oscope_exporter.models import ClipBackend  # noqa: E402


def _write_tokenizer_files(tmp_path):
    chars = string.ascii_lowercase + string.digits + string.punctuation
    vocab = {}
    for ch in chars:
        vocab[ch] = len(vocab)
        vocab[ch + "</w>"] = len(vocab)
    vocab["<|startoftext|>"] = len(vocab)
    vocab["<|endoftext|>"] = len(vocab)
    vocab_file = tmp_path / "vocab.json"
    merges_file = tmp_path / "merges.txt"
    vocab_file.write_text(json.dumps(vocab))
    merges_file.write_text("#version: 0.2\n")
    return str(vocab_file), str(merges_file), len(vocab)


@pytest.fixture(scope="session")
def tiny_backend(tmp_path_factory) -> ClipBackend:
    tmp = tmp_path_factory.mktemp("tokenizer")
    vocab_file, merges_file, vocab_size = _write_tokenizer_files(tmp)
    tokenizer = CLIPTokenizer(vocab_file, merges_file)
    if tokenizer.pad_token is None:
        tokenizer.pad_token = tokenizer.eos_token
    config = CLIPConfig(
        text_config={
            "vocab_size": vocab_size,
            "hidden_size": 32,
            "intermediate_size": 64,
            "num_hidden_layers": 2,
            "num_attention_heads": 2,
            "max_position_embeddings": 77,
            "bos_token_id": tokenizer.bos_token_id,
            "eos_token_id": tokenizer.eos_token_id,
            "pad_token_id": tokenizer.pad_token_id,
        },
        vision_config={
            "hidden_size": 32,
            "intermediate_size": 64,
            "num_hidden_layers": 2,
            "num_attention_heads": 2,
            "image_size": 32,
            "patch_size": 8,
        },
        projection_dim=16,
    )
    config._attn_implementation = "eager"
    torch.manual_seed(1234)
    model = CLIPModel(config)
    processor = CLIPImageProcessor(
        size={"shortest_edge": 32}, crop_size={"height": 32, "width": 32}
    )
    return ClipBackend(model, tokenizer, processor, "tiny-random-clip")
