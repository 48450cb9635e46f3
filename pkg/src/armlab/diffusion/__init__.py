from armlab.diffusion.schedule import NoiseSchedule, make_schedule, schedule_csv
from armlab.diffusion.sampler import (
    DiffusionConfig, q_sample, ddim_step, inference_timesteps,
    ddim_sample, ddim_sample_batch,
)
from armlab.diffusion.loss import epsilon_loss, epsilon_loss_batch, l1_loss_batch

__all__ = [
    "NoiseSchedule", "make_schedule", "schedule_csv",
    "DiffusionConfig", "q_sample", "ddim_step", "inference_timesteps",
    "ddim_sample", "ddim_sample_batch",
    "epsilon_loss", "epsilon_loss_batch", "l1_loss_batch",
]
