import argparse

import pytest

from speechcorpus_adapter.cli import _parse_model_spec, build_parser
from speechcorpus_adapter.config import CAPABILITIES, STUB


def test_defaults():
    args = build_parser().parse_args([])
    assert args.host == "127.0.0.1"
    assert args.port == 8322
    assert args.max_concurrent == 4
    assert args.model == []


def test_model_spec_overrides():
    models = _parse_model_spec(["transcribe=whisper-large-v3", "embed=ecapa"])
    assert models["transcribe"] == "whisper-large-v3"
    assert models["embed"] == "ecapa"
    for capability in ("completeness", "music", "punctuate"):
        assert models[capability] == STUB


def test_empty_spec_is_all_stubs():
    assert _parse_model_spec([]) == {cap: STUB for cap in CAPABILITIES}


@pytest.mark.parametrize("spec", ["whisper", "asr=whisper", "transcribe="])
def test_invalid_model_spec(spec):
    with pytest.raises(argparse.ArgumentTypeError):
        _parse_model_spec([spec])
