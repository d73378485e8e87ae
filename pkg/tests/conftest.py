import pytest

from iwlearn.data import SynthSpec, split, synth_generate

# the desk-scale task behind the robustness and active-learning checks
TASK = SynthSpec(dim=20, n=20_000, margin=0.3, label_noise=0.05, seed=0)


@pytest.fixture(scope="session")
def synth_task():
    return split(synth_generate(TASK), 0.2, seed=0)
