"""Offline test fixtures: a tiny randomly initialized BERT saved locally."""

import json
import os

# keep transformers fully offline before it is imported anywhere
os.environ.setdefault("HF_HUB_OFFLINE", "1")
os.environ.setdefault("TRANSFORMERS_OFFLINE", "1")

import pytest

WORDS = [
    "parser", "widget", "cache", "queue", "token", "buffer", "socket",
    "thread", "module", "config", "plugin", "handler", "request", "update",
    "remove", "adds", "support", "option", "flag", "timeout", "retry",
    "the", "fix", "bug", "see", "and", "for",
]


@pytest.fixture(scope="session")
def tiny_model_dir(tmp_path_factory):
    import torch
    from transformers import BertConfig, BertModel, BertTokenizer

    model_dir = tmp_path_factory.mktemp("tiny-encoder")
    vocab = ["[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]"] + WORDS
    (model_dir / "vocab.txt").write_text("\n".join(vocab) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(model_dir / "vocab.txt"))
    tokenizer.save_pretrained(model_dir)
    config = BertConfig(
        vocab_size=len(vocab),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=160,
    )
    torch.manual_seed(0)
    BertModel(config).save_pretrained(model_dir)
    return str(model_dir)


def write_docs(path, docs):
    with open(path, "w", encoding="utf-8") as fh:
        for doc_id, text in docs:
            fh.write(json.dumps({"id": doc_id, "text": text}, sort_keys=True,
                                ensure_ascii=False) + "\n")
    return path
