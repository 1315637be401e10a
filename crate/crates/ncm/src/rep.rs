//! Representation maps: per-cluster affine encoder/decoder pairs trained to
//! round-trip cluster vectors, with an optional labeled auxiliary head.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{NcmError, Result};

#[derive(Clone, Debug)]
pub struct RepConfig {
    pub rep_dim: usize,
    pub learning_rate: f64,
    pub iterations: usize,
    /// Weight of the auxiliary classification loss; 0 trains pure
    /// reconstruction.
    pub lambda_r: f64,
    pub seed: u64,
}

impl Default for RepConfig {
    fn default() -> Self {
        RepConfig {
            rep_dim: 2,
            learning_rate: 0.05,
            iterations: 5000,
            lambda_r: 0.0,
            seed: 0,
        }
    }
}

/// Training vectors of one cluster, optionally with binary labels for the
/// auxiliary head.
#[derive(Clone, Debug)]
pub struct ClusterData {
    pub cluster: String,
    pub vectors: Vec<Vec<f64>>,
    pub labels: Option<Vec<usize>>,
}

/// Fitted affine encoder/decoder for one cluster.
#[derive(Clone, Debug)]
pub struct ClusterRep {
    pub cluster: String,
    pub encoder: Array2<f64>,
    pub encoder_bias: Array1<f64>,
    pub decoder: Array2<f64>,
    pub decoder_bias: Array1<f64>,
    pub aux_weight: Option<Array1<f64>>,
    pub aux_bias: Option<f64>,
    /// Final mean squared reconstruction error over the training vectors.
    pub reconstruction_error: f64,
}

impl ClusterRep {
    pub fn encode(&self, x: &[f64]) -> Vec<f64> {
        let x = Array1::from(x.to_vec());
        (self.encoder.dot(&x) + &self.encoder_bias).to_vec()
    }

    pub fn decode(&self, z: &[f64]) -> Vec<f64> {
        let z = Array1::from(z.to_vec());
        (self.decoder.dot(&z) + &self.decoder_bias).to_vec()
    }
}

#[derive(Clone, Debug)]
pub struct RepMap {
    pub reps: Vec<ClusterRep>,
}

impl RepMap {
    pub fn rep(&self, cluster: &str) -> Result<&ClusterRep> {
        self.reps
            .iter()
            .find(|r| r.cluster == cluster)
            .ok_or_else(|| NcmError::InvalidConfig(format!("no representation for cluster {cluster}")))
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Fit one affine autoencoder per cluster by full-batch gradient descent on
/// mean ‖decode(encode(x)) − x‖² + λ_r·BCE(aux(encode(x)), label).
pub fn fit_representation(data: &[ClusterData], config: &RepConfig) -> Result<RepMap> {
    if data.is_empty() {
        return Err(NcmError::InvalidConfig("no clusters to fit".into()));
    }
    if config.rep_dim == 0 {
        return Err(NcmError::InvalidConfig("rep_dim must be ≥ 1".into()));
    }
    if config.learning_rate <= 0.0 || !config.learning_rate.is_finite() {
        return Err(NcmError::InvalidConfig("learning_rate must be positive".into()));
    }
    if config.lambda_r < 0.0 {
        return Err(NcmError::InvalidConfig("lambda_r must be ≥ 0".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut reps = Vec::with_capacity(data.len());
    for cluster in data {
        reps.push(fit_cluster(cluster, config, &mut rng)?);
    }
    Ok(RepMap { reps })
}

fn fit_cluster(data: &ClusterData, config: &RepConfig, rng: &mut ChaCha8Rng) -> Result<ClusterRep> {
    let n = data.vectors.len();
    if n == 0 {
        return Err(NcmError::InvalidConfig(format!(
            "cluster {} has no vectors",
            data.cluster
        )));
    }
    let d = data.vectors[0].len();
    if d == 0 || data.vectors.iter().any(|v| v.len() != d) {
        return Err(NcmError::InvalidConfig(format!(
            "cluster {}: vectors must share one nonzero dimension",
            data.cluster
        )));
    }
    let labels = match &data.labels {
        Some(l) if config.lambda_r > 0.0 => {
            if l.len() != n {
                return Err(NcmError::InvalidConfig(format!(
                    "cluster {}: {} labels for {} vectors",
                    data.cluster,
                    l.len(),
                    n
                )));
            }
            if l.iter().any(|&y| y > 1) {
                return Err(NcmError::InvalidConfig(format!(
                    "cluster {}: labels must be 0/1",
                    data.cluster
                )));
            }
            Some(Array1::from_iter(l.iter().map(|&y| y as f64)))
        }
        _ => None,
    };

    let k = config.rep_dim;
    let x = Array2::from_shape_fn((n, d), |(i, j)| data.vectors[i][j]);
    let mut enc = Array2::from_shape_fn((k, d), |_| rng.random_range(-0.1..0.1));
    let mut enc_b = Array1::from_shape_fn(k, |_| rng.random_range(-0.1..0.1));
    let mut dec = Array2::from_shape_fn((d, k), |_| rng.random_range(-0.1..0.1));
    let mut dec_b = Array1::from_shape_fn(d, |_| rng.random_range(-0.1..0.1));
    let mut aux_w = labels
        .as_ref()
        .map(|_| Array1::from_shape_fn(k, |_| rng.random_range(-0.1..0.1)));
    let mut aux_b = labels.as_ref().map(|_| rng.random_range(-0.1..0.1));

    let lr = config.learning_rate;
    let inv_n = 1.0 / n as f64;
    for t in 0..config.iterations {
        let z = x.dot(&enc.t()) + &enc_b;
        let xh = z.dot(&dec.t()) + &dec_b;
        let resid = &xh - &x;
        let loss_rec = resid.mapv(|r| r * r).sum() * inv_n;

        let d_xh = resid.mapv(|r| 2.0 * r * inv_n);
        let d_dec = d_xh.t().dot(&z);
        let d_dec_b = d_xh.sum_axis(Axis(0));
        let mut d_z = d_xh.dot(&dec);

        let mut loss = loss_rec;
        if let (Some(y), Some(w), Some(b)) = (&labels, &aux_w, &aux_b) {
            let logits = z.dot(w) + *b;
            let p = logits.mapv(sigmoid);
            let eps = 1e-12;
            loss += config.lambda_r * inv_n
                * p.iter()
                    .zip(y)
                    .map(|(&pi, &yi)| {
                        let pi = pi.clamp(eps, 1.0 - eps);
                        -(yi * pi.ln() + (1.0 - yi) * (1.0 - pi).ln())
                    })
                    .sum::<f64>();
            let d_logit = (&p - y).mapv(|g| g * config.lambda_r * inv_n);
            let d_w = z.t().dot(&d_logit);
            let d_b = d_logit.sum();
            for i in 0..n {
                let g = d_logit[i];
                for j in 0..k {
                    d_z[[i, j]] += g * w[j];
                }
            }
            if let (Some(w), Some(b)) = (aux_w.as_mut(), aux_b.as_mut()) {
                *w -= &d_w.mapv(|g| g * lr);
                *b -= lr * d_b;
            }
        }

        if !loss.is_finite() {
            return Err(NcmError::Divergence { iteration: t, loss });
        }

        let d_enc = d_z.t().dot(&x);
        let d_enc_b = d_z.sum_axis(Axis(0));
        enc -= &d_enc.mapv(|g| g * lr);
        enc_b -= &d_enc_b.mapv(|g| g * lr);
        dec -= &d_dec.mapv(|g| g * lr);
        dec_b -= &d_dec_b.mapv(|g| g * lr);
    }

    let z = x.dot(&enc.t()) + &enc_b;
    let xh = z.dot(&dec.t()) + &dec_b;
    let reconstruction_error = (&xh - &x).mapv(|r| r * r).sum() * inv_n;
    Ok(ClusterRep {
        cluster: data.cluster.clone(),
        encoder: enc,
        encoder_bias: enc_b,
        decoder: dec,
        decoder_bias: dec_b,
        aux_weight: aux_w,
        aux_bias: aux_b,
        reconstruction_error,
    })
}

/// In-sample accuracy of a logistic probe trained on the given features —
/// the yardstick for how much label information a representation keeps.
pub fn linear_probe_accuracy(features: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let n = features.len();
    if n == 0 || labels.len() != n {
        return Err(NcmError::InvalidConfig(
            "probe needs matching nonempty features and labels".into(),
        ));
    }
    let d = features[0].len();
    if d == 0 || features.iter().any(|f| f.len() != d) {
        return Err(NcmError::InvalidConfig(
            "probe features must share one nonzero dimension".into(),
        ));
    }
    let x = Array2::from_shape_fn((n, d), |(i, j)| features[i][j]);
    let y = Array1::from_iter(labels.iter().map(|&l| (l.min(1)) as f64));
    let mut w = Array1::zeros(d);
    let mut b = 0.0;
    let inv_n = 1.0 / n as f64;
    for _ in 0..2000 {
        let p = (x.dot(&w) + b).mapv(sigmoid);
        let d_logit = (&p - &y).mapv(|g| g * inv_n);
        let d_w = x.t().dot(&d_logit);
        w -= &d_w.mapv(|g| g * 0.5);
        b -= 0.5 * d_logit.sum();
    }
    let p = (x.dot(&w) + b).mapv(sigmoid);
    let correct = p
        .iter()
        .zip(&y)
        .filter(|(&pi, &yi)| (pi > 0.5) == (yi > 0.5))
        .count();
    Ok(correct as f64 / n as f64)
}
