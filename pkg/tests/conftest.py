import numpy as np
import pytest

from eegval.eeg_io import EegTrial, assemble_dataset
from eegval.features import build_feature_matrix
from eegval.synth import SynthConfig, generate_corpus


def make_trial(subject="co2a0000364", label=1, channels=("FP1", "CZ", "O1"), n=64, seed=0,
               trial_id=None, scale=20.0):
    rng = np.random.default_rng(seed)
    samples = scale * rng.uniform(-1, 1, size=(len(channels), n))
    return EegTrial(subject, label, tuple(channels), samples, 256.0,
                    trial_id or f"{subject}_{seed}")


@pytest.fixture(scope="session")
def small_fm():
    """40 trials from 8 synthetic subjects, 4 channels."""
    cfg = SynthConfig(n_subjects_per_class=4, trials_per_subject=5,
                      channels=("FP1", "CZ", "PZ", "O1"), seed=3)
    return build_feature_matrix(generate_corpus(cfg).trials)


@pytest.fixture(scope="session")
def default_fm():
    """The default 300-trial synthetic feature matrix."""
    ds = assemble_dataset(generate_corpus(SynthConfig(seed=0)).trials, 150, 15, 0)
    return build_feature_matrix(ds.trials)
