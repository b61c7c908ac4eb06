"""CLIP-family checkpoint loading and batched inference."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image

from . import ExportError


class ClipBackend:
    """Wraps a transformers CLIP model + tokenizer + image processor."""

    def __init__(self, model, tokenizer, image_processor, checkpoint_id: str, device: str = "cpu"):
        self.model = model.to(device).eval()
        self.tokenizer = tokenizer
        self.image_processor = image_processor
        self.checkpoint_id = checkpoint_id
        self.device = device

    @classmethod
    def from_checkpoint(cls, checkpoint_id: str, device: str = "cpu") -> "ClipBackend":
        try:
            from transformers import AutoImageProcessor, AutoTokenizer, CLIPModel

            # eager attention keeps CLS attention weights accessible
            model = CLIPModel.from_pretrained(checkpoint_id, attn_implementation="eager")
            tokenizer = AutoTokenizer.from_pretrained(checkpoint_id)
            processor = AutoImageProcessor.from_pretrained(checkpoint_id)
        except Exception as exc:
            raise ExportError(f"cannot load checkpoint {checkpoint_id!r}: {exc}") from exc
        return cls(model, tokenizer, processor, checkpoint_id, device)

    @staticmethod
    def _features(out) -> torch.Tensor:
        # transformers >= 5 returns an output object; 4.x returns the tensor
        return out if torch.is_tensor(out) else out.pooler_output

    @torch.no_grad()
    def encode_texts(self, texts: list[str], batch_size: int) -> np.ndarray:
        chunks = []
        for start in range(0, len(texts), batch_size):
            batch = self.tokenizer(
                texts[start : start + batch_size],
                padding=True,
                truncation=True,
                return_tensors="pt",
            ).to(self.device)
            feats = self._features(self.model.get_text_features(**batch))
            chunks.append(feats.cpu().to(torch.float32).numpy())
        return np.vstack(chunks) if chunks else np.empty((0, self.model.config.projection_dim), np.float32)

    def _pixel_values(self, paths: list[Path]) -> torch.Tensor:
        images = [Image.open(p).convert("RGB") for p in paths]
        return self.image_processor(images=images, return_tensors="pt")["pixel_values"].to(self.device)

    @torch.no_grad()
    def encode_images(self, paths: list[Path], batch_size: int) -> np.ndarray:
        chunks = []
        for start in range(0, len(paths), batch_size):
            pixels = self._pixel_values(paths[start : start + batch_size])
            feats = self._features(self.model.get_image_features(pixel_values=pixels))
            chunks.append(feats.cpu().to(torch.float32).numpy())
        return np.vstack(chunks) if chunks else np.empty((0, self.model.config.projection_dim), np.float32)

    @torch.no_grad()
    def cls_patch_attention(self, paths: list[Path], batch_size: int) -> np.ndarray:
        """Final-block CLS-to-patch attention, averaged over heads: (n, patches)."""
        chunks = []
        for start in range(0, len(paths), batch_size):
            pixels = self._pixel_values(paths[start : start + batch_size])
            out = self.model.vision_model(pixel_values=pixels, output_attentions=True)
            if not out.attentions:
                raise ExportError(f"{self.checkpoint_id!r} does not expose attention weights")
            last = out.attentions[-1]  # (batch, heads, 1 + patches, 1 + patches)
            cls_row = last[:, :, 0, 1:].mean(dim=1)  # head-averaged CLS -> patch
            chunks.append(cls_row.cpu().to(torch.float32).numpy())
        if not chunks:
            raise ExportError("no images to analyze")
        return np.vstack(chunks)

    @property
    def patch_grid(self) -> int:
        cfg = self.model.config.vision_config
        return cfg.image_size // cfg.patch_size
