"""Motor-cortex EEG/EMG analysis: ERP and ERD/ERS, phase connectivity, EMG onsets.

Modules
-------
bdf_io        BDF reading and writing, trial-set loading
precondition  drift removal, trends and the zero-phase CIC band-pass
erp           trigger-averaged ERPs, ERD/ERS quantification, TF maps
connectivity  perturbation-averaged phase, PLV and coherence maps
emg           EMG onset detection, ECG removal and EMG quantification
synth         synthetic trial sets with ground truth
cli           ``motorsig`` command line
"""
from .errors import *  # noqa: F401,F403
from .precondition import BandSpec, cic_bandpass, drift_reject  # noqa: F401
from .trials import TrialSet, load_archive, save_archive  # noqa: F401

__version__ = '0.1.0'
