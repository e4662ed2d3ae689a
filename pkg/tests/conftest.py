import pytest

from boltscope.excitation import ExcitationSpec, render
from boltscope.jointsim import JointModel, SimConfig, preload_to_params, simulate_response
from boltscope.spectral import welch_psd

SIM_FS = 25600.0
SIM_AMPLITUDE = 200.0
SIM_DURATION = 8.0
PSD_SEGMENT = 51200  # 0.5 Hz resolution at 25600 Hz


@pytest.fixture(scope="session")
def sim_psd_cache():
    """Memoized (preload, spec-kind, seed) -> response PSD for the default joint.

    Simulations are deterministic, so sharing them across test modules only
    saves time; results are identical to fresh runs.
    """
    base = JointModel()
    cfg = SimConfig()
    specs = {
        "tone": ExcitationSpec.tone(130.0, amplitude=SIM_AMPLITUDE, duration=SIM_DURATION),
        "fm": ExcitationSpec.fm(130.0, 2.0, 5.0, amplitude=SIM_AMPLITUDE, duration=SIM_DURATION),
    }
    rendered = {}
    cache = {}

    def get(p: float, kind: str, seed: int):
        key = (p, kind, seed)
        if key not in cache:
            if kind not in rendered:
                rendered[kind] = render(specs[kind], SIM_FS)
            response = simulate_response(preload_to_params(p, base), rendered[kind], cfg, seed=seed)
            cache[key] = welch_psd(response, segment_length=PSD_SEGMENT, overlap=0.5)
        return cache[key]

    return get
