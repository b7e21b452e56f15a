"""Default parameter values used across the package."""

NAMED_BANDS = {
    'delta': (1.0, 4.0),
    'theta': (4.0, 8.0),
    'alpha': (8.0, 12.0),
    'beta': (12.0, 32.0),
    'gamma': (32.0, 80.0),
}

# trigger synchronization / ERP
DURATION_S = 2.0
REF_PER_S = (-1.3, -0.3)
COF_INTV = 3.0
TF_METHOD = 'STFT'
ERP_TREND_S = 0.25
CIC_ORDER = 4

# drift rejection (both stages)
DRIFT_WINDOW_S = 1.5

# time-frequency maps
STFT_WINDOW_S = 0.25
STFT_OVERLAP = 0.5
CWT_W0 = 6.0
CWT_N_FREQS = 48
TF_FREQ_RANGE = (4.0, 40.0)
NBCH_BIN_HZ = 2.0

# connectivity
PERTNUM = 100
CONN_BAND = (12.0, 32.0)
CONN_DURATION_S = (-3.0, 2.0)
CONN_WINDOW_S = 1.0
MSC_SEGMENTS = 4
REFERENCE_LABEL = 'C3'
TFP_F0_JITTER = 0.01   # fraction of bandwidth, uniform +/-
TFP_BW_JITTER = 0.05   # relative, uniform +/-

# emg
TH_COEFF = 1.0
ONSET_WINDOW_S = 0.05
ONSET_BASELINE_S = 0.5
ECG_LPF_HZ = 30.0
ECG_LPF_ORDER = 4
ECG_RIPPLE_DB = 0.1
ECG_STOP_DB = 50.0
ECG_MEDIAN_S = 0.05
EMG_TREND_S = 0.25
EMG_EARLY_SLOPE_S = 0.2

SEED = 0
