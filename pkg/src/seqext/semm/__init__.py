"""Recurrent log-normal mixture model for sequence extension, plus regression baselines."""
from .mixture import (MixtureParams, gumbel_softmax_sample, mixture_logpdf, mixture_mean,
                      mixture_pdf, sample_next)
from .model import SemmModel, encode, gru_step, heads_forward, nll
from .extend import extend_semm, extend_semm_batch, forecast_semm
from .train import TrainConfig, TrainResult, TrainingDiverged, train
from .baselines import BaselineConfig, FcnnBaseline, GruDirectBaseline
from .checkpoint import load_model, save_model
from .evaluate import gap_histogram_scores, terms_rmse
