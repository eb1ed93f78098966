"""Multi-view frequency-consistent score distillation for splat scenes."""

from splatstyle._core import (  # noqa: F401
    FrozenLinearDenoiser,
    GaussianToyDenoiser,
    NoiseSchedule,
    Scene,
    band_scale,
    build_schedule,
    cfg_combine,
    csd_delta,
    ddim_noise,
    default_config_json,
    export_png_views,
    fft3,
    guided_predict,
    ifft3,
    load_scene,
    load_stack,
    make_highpass,
    make_synthetic_scene,
    mvfc,
    sample_timesteps,
    save_stack,
    sh_eval,
    stylize,
)

__version__ = "0.1.0"
