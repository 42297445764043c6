import numpy as np
import pytest

from polarlab.channel import ChannelParams, awgn_llrs, frame_rng, modulate
from polarlab.codes import build_code_spec
from polarlab.encode import encode


@pytest.fixture(scope="session")
def spec8():
    """Polar(8, 4, {4, 6, 7, 8}) - the small worked example."""
    spec = build_code_spec(8, 4, "fiveg")
    assert spec.info_set == (4, 6, 7, 8)
    return spec


@pytest.fixture(scope="session")
def spec128():
    return build_code_spec(128, 64, "fiveg")


def make_frame(spec, params: ChannelParams, master_seed: int, idx: int):
    """Random payload, encoded frame and channel LLRs for frame ``idx``."""
    payload = frame_rng(master_seed, idx, stream=0).integers(
        0, 2, size=spec.payload_len, dtype=np.int8
    )
    enc = encode(payload, spec)
    llr = awgn_llrs(modulate(enc.codeword), params, (master_seed, idx))
    return payload, enc, llr
