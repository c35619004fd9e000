"""
K-sample importance-weighted lower bounds.

All estimators share one sampling pass (log_weight_terms): draw z from the
encoder, draw the missing covariates from the imputer, complete x with the
observed values, then score every factor of the joint and of the proposal.
Rows are laid out k-major, so a (K, B) view of any per-sample quantity is a
reshape of the flat (K * B,) tensor.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from autodiff import Tensor, concat, where
from dataset import Dataset, FeatureKind, preimpute_zero
from distributions import (
    GumbelSoftmax,
    bernoulli_logpmf,
    gaussian_log_density,
    gumbel_noise,
    gumbel_softmax_logpdf,
    sigma_from_log,
    standard_normal_logpdf,
)
from glm import y_loglik
from utils.errors import NonFiniteBoundError, ShapeMismatchError, UnsupportedConfigurationError

from .dlglm import DlglmModel

logger = logging.getLogger(__name__)

# Relaxed one-hot samples are kept strictly inside the simplex
SIMPLEX_FLOOR = 1e-10


@dataclass(frozen=True)
class Batch:
    """Zero pre-imputed covariates with their mask, response and dataset row ids"""

    x: np.ndarray
    y: np.ndarray
    mask: np.ndarray
    rows: np.ndarray

    @property
    def size(self) -> int:
        return int(self.x.shape[0])


def make_batch(dataset: Dataset, rows: Optional[np.ndarray] = None) -> Batch:
    rows = np.arange(dataset.n_rows) if rows is None else np.asarray(rows, dtype=np.int64)
    y = dataset.y[rows]
    if not np.all(np.isfinite(y)):
        raise UnsupportedConfigurationError("Missing responses are not supported")
    mask = dataset.mask[rows]
    return Batch(preimpute_zero(dataset.x[rows], mask), y, mask, rows)


@dataclass(frozen=True)
class BoundNoise:
    """Auxiliary noise of one bound evaluation; fixing it makes the bound deterministic"""

    eps_z: Optional[np.ndarray]
    eps_x: np.ndarray
    gumbel: np.ndarray


def draw_noise(model: DlglmModel, k: int, batch_size: int, rng: np.random.Generator) -> BoundNoise:
    """z noise first, then Gaussian imputer noise, then Gumbel noise"""
    schema = model.schema
    n_cont = sum(1 for f in schema.miss_features if f.kind == FeatureKind.CONTINUOUS)
    n_levels = sum(f.width for f in schema.miss_features if f.kind == FeatureKind.CATEGORICAL)
    eps_z = rng.standard_normal((k, batch_size, model.hp.dz)) if model.is_latent else None
    eps_x = rng.standard_normal((k, batch_size, n_cont))
    gumbel = gumbel_noise((k, batch_size, n_levels), rng)
    return BoundNoise(eps_z, eps_x, gumbel)


@dataclass
class WeightTerms:
    """Per-sample factors of the log importance weight, each of shape (K * B,)"""

    k: int
    batch_size: int
    log_py: Tensor
    log_px: Tensor
    log_pz: Tensor
    log_pr: Tensor
    log_qz: Tensor
    log_qx: Tensor
    x_full: Tensor

    def log_weights(self, use_y: bool = True, use_mask: bool = True) -> Tensor:
        """(K, B) log importance weights with the chosen factors"""
        total = self.log_px + self.log_pz - self.log_qz - self.log_qx
        if use_y:
            total = total + self.log_py
        if use_mask:
            total = total + self.log_pr
        return total.reshape(self.k, self.batch_size)


def _tile(values: np.ndarray, k: int) -> np.ndarray:
    return np.tile(values, (k,) + (1,) * (values.ndim - 1))


def _check_mask(model: DlglmModel, batch: Batch) -> None:
    if batch.x.shape[1] != model.schema.p:
        raise ShapeMismatchError(f"Batch has {batch.x.shape[1]} columns, model {model.schema.p}")
    outside = np.ones(model.schema.p, dtype=bool)
    outside[model.schema.miss_columns] = False
    if (batch.mask[:, outside] == 0).any():
        raise UnsupportedConfigurationError(
            "Missing values in features the model treats as complete"
        )


def log_weight_terms(
    model: DlglmModel,
    batch: Batch,
    k: int,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[BoundNoise] = None,
) -> WeightTerms:
    """One sampling pass over a batch with K draws per row"""
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    _check_mask(model, batch)
    schema, hp = model.schema, model.hp
    b = batch.size
    if noise is None:
        if rng is None:
            raise ValueError("Either rng or noise is required")
        noise = draw_noise(model, k, b, rng)

    x0 = _tile(batch.x, k)
    r = _tile(batch.mask, k).astype(np.float64)
    zero = Tensor(np.zeros(k * b))

    # latent z and its proposal
    z: Optional[Tensor] = None
    log_pz = log_qz = zero
    if model.is_latent:
        assert model.encoder is not None and noise.eps_z is not None
        enc = model.encoder(Tensor(batch.x))
        mu_z, sigma_z = enc[:, : hp.dz], sigma_from_log(enc[:, hp.dz :])
        z3 = mu_z + sigma_z * noise.eps_z
        log_qz = gaussian_log_density(z3, mu_z, sigma_z).sum(axis=-1).reshape(k * b)
        log_pz = standard_normal_logpdf(z3).reshape(k * b)
        z = z3.reshape(k * b, hp.dz)

    y_cols = _tile(schema.y_features(batch.y), k) if hp.include_y_in_posterior else None

    # missing covariates and their proposal
    samples: dict[int, Tensor] = {}
    log_qx = zero
    if model.imputer is not None:
        parts: list[Tensor] = [] if z is None else [z]
        parts.append(Tensor(x0))
        if model.is_mnar:
            parts.append(Tensor(r[:, schema.miss_columns]))
        if y_cols is not None:
            parts.append(Tensor(y_cols))
        out = model.imputer(concat(parts, axis=-1))
        eps_x = noise.eps_x.reshape(k * b, -1)
        gumbel = noise.gumbel.reshape(k * b, -1)
        offset = cont = level = 0
        for idx in schema.missing_prone:
            feature = schema.features[idx]
            missing = r[:, feature.start] == 0
            if feature.kind == FeatureKind.CONTINUOUS:
                mu, sigma = out[:, offset], sigma_from_log(out[:, offset + 1])
                draw = mu + sigma * eps_x[:, cont]
                term = gaussian_log_density(draw, mu, sigma)
                samples[idx] = draw.reshape(k * b, 1)
                offset, cont = offset + 2, cont + 1
            else:
                width = feature.width
                logits = out[:, offset : offset + width]
                g = gumbel[:, level : level + width]
                draw = ((logits + g) / hp.tau).softmax(axis=-1).clip(SIMPLEX_FLOOR, 1.0)
                term = gumbel_softmax_logpdf(draw, GumbelSoftmax.from_logits(logits, hp.tau))
                samples[idx] = draw
                offset, level = offset + width, level + width
            log_qx = log_qx + where(missing, term, 0.0)

    # completed covariates
    blocks: list[Tensor] = []
    for idx, feature in enumerate(schema.features):
        observed = x0[:, feature.start : feature.stop]
        if idx in samples:
            keep = r[:, feature.start : feature.stop] == 1
            blocks.append(where(keep, observed, samples[idx]))
        else:
            blocks.append(Tensor(observed))
    x_full = concat(blocks, axis=-1)

    log_px = _covariate_loglik(model, x_full, x0, r, samples, z)

    assert model.head is not None
    eta = model.head(x_full)
    log_py = y_loglik(_tile(batch.y, k), eta, schema.family, model.alpha)

    log_pr = zero
    if model.mask_net is not None:
        mask_in = x_full if y_cols is None else concat([x_full, Tensor(y_cols)], axis=-1)
        logits = model.mask_net(mask_in)
        r_miss = r[:, [f.start for f in schema.miss_features]]
        log_pr = bernoulli_logpmf(r_miss, logits).sum(axis=-1)

    return WeightTerms(k, b, log_py, log_px, log_pz, log_pr, log_qz, log_qx, x_full)


def _covariate_loglik(
    model: DlglmModel,
    x_full: Tensor,
    x0: np.ndarray,
    r: np.ndarray,
    samples: dict[int, Tensor],
    z: Optional[Tensor],
) -> Tensor:
    """log p_ψ(x | z) for latent models, log p_ψ(x) for the known-Gaussian one"""
    if not model.is_latent:
        assert model.psi_mu is not None and model.psi_log_sigma is not None
        sigma = sigma_from_log(model.psi_log_sigma)
        return gaussian_log_density(x_full, model.psi_mu, sigma).sum(axis=-1)

    assert model.decoder is not None and z is not None
    out = model.decoder(z)
    total = Tensor(np.zeros(x_full.shape[0]))
    offset = 0
    for idx, feature in enumerate(model.schema.features):
        if feature.kind == FeatureKind.CONTINUOUS:
            mu, sigma = out[:, offset], sigma_from_log(out[:, offset + 1])
            total = total + gaussian_log_density(x_full[:, feature.start], mu, sigma)
            offset += 2
            continue
        width = feature.width
        logits = out[:, offset : offset + width]
        onehot = x0[:, feature.start : feature.stop]
        term = (logits.log_softmax(axis=-1) * onehot).sum(axis=-1)
        if idx in samples:
            relaxed = gumbel_softmax_logpdf(
                samples[idx], GumbelSoftmax.from_logits(logits, model.hp.tau)
            )
            term = where(r[:, feature.start] == 1, term, relaxed)
        total = total + term
        offset += width
    return total


def log_mean_exp(log_weights: Tensor) -> Tensor:
    """(K, B) -> (B,) log((1/K) Σ_k exp(w_k)), stable for any spread of w"""
    return log_weights.logsumexp(axis=0) - math.log(log_weights.shape[0])


def _check_finite(bounds: Tensor, row_ids: np.ndarray) -> None:
    bad = ~np.isfinite(bounds.data)
    if bad.any():
        row = int(row_ids[np.flatnonzero(bad)[0]])
        raise NonFiniteBoundError("Bound is not finite", row=row)


def row_bounds(
    model: DlglmModel,
    batch: Batch,
    k: int,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[BoundNoise] = None,
) -> Tensor:
    """Per-row bound of the model's own type, shape (B,)"""
    terms = log_weight_terms(model, batch, k, rng, noise)
    rows = log_mean_exp(terms.log_weights(use_y=True, use_mask=model.is_mnar))
    _check_finite(rows, batch.rows)
    return rows


def compute_dlglm_bound(
    model: DlglmModel,
    batch: Batch,
    k: int,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[BoundNoise] = None,
) -> Tensor:
    """Σ_rows log-mean-exp of p(y|x) p_ψ(x|z) p(z) p_φ(r|x) / (q(z) q(x^m))"""
    if not (model.is_mnar and model.is_latent):
        raise UnsupportedConfigurationError(
            f"dlglm bound needs an MNAR latent model, got {model.method_name}"
        )
    return row_bounds(model, batch, k, rng, noise).sum()


def compute_idlglm_bound(
    model: DlglmModel,
    batch: Batch,
    k: int,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[BoundNoise] = None,
) -> Tensor:
    """dlglm bound without the mask factor; the imputer does not see r"""
    if model.is_mnar or not model.is_latent:
        raise UnsupportedConfigurationError(
            f"idlglm bound needs an ignorable latent model, got {model.method_name}"
        )
    return row_bounds(model, batch, k, rng, noise).sum()


def compute_dlglmX_bound(
    model: DlglmModel,
    batch: Batch,
    k: int,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[BoundNoise] = None,
) -> Tensor:
    """Known diagonal-Gaussian covariates: no z terms; ignorable variant drops p_φ(r|·)"""
    if model.is_latent:
        raise UnsupportedConfigurationError(
            f"dlglmX bound needs the known diagonal-Gaussian model, got {model.method_name}"
        )
    return row_bounds(model, batch, k, rng, noise).sum()


def compute_iwae_bound(
    model: DlglmModel,
    x_complete: np.ndarray,
    k: int,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[BoundNoise] = None,
) -> Tensor:
    """
    Σ_rows log (1/K) Σ_k p_ψ(x|z_k) p(z_k) / q(z_k|x) on complete covariates.

    Only the encoder and decoder take part; the GLM head and mask network
    are ignored.
    """
    if k < 1:
        raise ValueError(f"K must be >= 1, got {k}")
    if not model.is_latent:
        raise UnsupportedConfigurationError("IWAE bound needs the latent covariate model")
    x_complete = np.asarray(x_complete, dtype=np.float64)
    if not np.all(np.isfinite(x_complete)):
        raise ValueError("IWAE bound needs complete covariates")
    n = x_complete.shape[0]
    rng_noise = noise
    if rng_noise is None:
        if rng is None:
            raise ValueError("Either rng or noise is required")
        rng_noise = draw_noise(model, k, n, rng)
    assert model.encoder is not None and rng_noise.eps_z is not None
    hp = model.hp
    enc = model.encoder(Tensor(x_complete))
    mu_z, sigma_z = enc[:, : hp.dz], sigma_from_log(enc[:, hp.dz :])
    z3 = mu_z + sigma_z * rng_noise.eps_z
    log_qz = gaussian_log_density(z3, mu_z, sigma_z).sum(axis=-1).reshape(k * n)
    log_pz = standard_normal_logpdf(z3).reshape(k * n)
    x0 = _tile(x_complete, k)
    ones = np.ones_like(x0)
    log_px = _covariate_loglik(model, Tensor(x0), x0, ones, {}, z3.reshape(k * n, hp.dz))
    weights = (log_px + log_pz - log_qz).reshape(k, n)
    rows = log_mean_exp(weights)
    _check_finite(rows, np.arange(n))
    return rows.sum()


def compute_bound(
    model: DlglmModel,
    batch: Batch,
    k: int,
    rng: Optional[np.random.Generator] = None,
    noise: Optional[BoundNoise] = None,
) -> Tensor:
    """The model's own bound: dlglm, idlglm, dlglmX or idlglmX"""
    if not model.is_latent:
        return compute_dlglmX_bound(model, batch, k, rng, noise)
    if model.is_mnar:
        return compute_dlglm_bound(model, batch, k, rng, noise)
    return compute_idlglm_bound(model, batch, k, rng, noise)
