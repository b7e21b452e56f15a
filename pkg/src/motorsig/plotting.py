"""Static SVG figures for ERP, time-frequency and connectivity results."""
import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed hash salt and no date stamp keep SVG output byte-identical across runs
_RC = {'svg.hashsalt': 'motorsig', 'svg.fonttype': 'none'}
_META = {'Date': None}


def _save(fig, path):
    fig.savefig(path, format='svg', metadata=_META)
    plt.close(fig)
    return path


def plot_erp(report, path, title=None):
    """ERP curve in percent of reference with the confidence lines and segments."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 3.5))
        t = report.time_vec - report.trigger_time_sec
        ax.plot(t, report.quant_erp, color='k', lw=1.0, label='ERP')
        ax.axhline(100.0, color='0.5', lw=0.8)
        ax.axhline(report.lower_line, color='tab:blue', ls='--', lw=0.8, label='lower line')
        ax.axhline(report.upper_line, color='tab:red', ls='--', lw=0.8, label='upper line')
        ax.axvline(0.0, color='0.3', ls=':', lw=0.8)
        for s in report.segments:
            color = 'tab:blue' if s.kind == 'ERD' else 'tab:red'
            ax.axvspan(s.start_s - report.trigger_time_sec, s.end_s - report.trigger_time_sec,
                       color=color, alpha=0.15, lw=0)
        ax.set_xlabel('time from trigger (s)')
        ax.set_ylabel('power (% of reference)')
        if title:
            ax.set_title(title)
        ax.legend(loc='upper left', fontsize=7, frameon=False)
        fig.tight_layout()
        return _save(fig, path)


def plot_tf(tfmap, path, fmax=None, title=None):
    """Heat map of a trial-averaged time-frequency map."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 3.5))
        keep = np.ones(tfmap.freq_vec.size, bool) if fmax is None else tfmap.freq_vec <= fmax
        mesh = ax.pcolormesh(tfmap.time_vec - tfmap.trigger_time_sec, tfmap.freq_vec[keep],
                             tfmap.power[keep], shading='auto', cmap='viridis')
        fig.colorbar(mesh, ax=ax, label='power (µV²)')
        ax.axvline(0.0, color='w', ls=':', lw=0.8)
        ax.set_xlabel('time from trigger (s)')
        ax.set_ylabel('frequency (Hz)')
        ax.set_title(title or f'{tfmap.method} map')
        fig.tight_layout()
        return _save(fig, path)


def plot_connectivity(cmap, window, path):
    """Channel-by-channel heat map of one window of a ConnectivityMap."""
    s, e = cmap.windows[window]
    labels = list(cmap.channel_labels)
    with plt.rc_context(_RC):
        size = 2.5 + 0.3 * len(labels)
        fig, ax = plt.subplots(figsize=(size + 1, size))
        im = ax.imshow(cmap.values[window], vmin=0.0, vmax=1.0, cmap='magma', origin='upper')
        fig.colorbar(im, ax=ax, label=cmap.measure)
        ax.set_xticks(range(len(labels)), labels, rotation=90, fontsize=7)
        ax.set_yticks(range(len(labels)), labels, fontsize=7)
        ax.set_title(f'{cmap.measure} {s:g} to {e:g} s')
        fig.tight_layout()
        return _save(fig, path)


def plot_emg(quant, path, title=None):
    """Trigger-averaged rectified EMG envelope with its peak marked."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(7, 3.5))
        t = quant.time_vec - quant.trigger_time_sec
        ax.plot(t, quant.curve, color='k', lw=1.0)
        ax.plot([quant.peak_time_sec - quant.trigger_time_sec], [quant.peak_magnitude], 'o',
                color='tab:red', ms=4)
        ax.axvline(0.0, color='0.3', ls=':', lw=0.8)
        ax.set_xlabel('time from onset (s)')
        ax.set_ylabel('rectified EMG (µV)')
        if title:
            ax.set_title(title)
        fig.tight_layout()
        return _save(fig, path)
