//! Two-layer GCN `Y = softmax(Â relu(Â X W1) W2)` with hand-derived gradients.

use std::fs;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::{bias, bias_grad_outputs};
use crate::graph::{Graph, Normalization, SimilarityMatrix};
use crate::sparse::CsrMatrix;

const MODEL_MAGIC: &[u8; 8] = b"FLKGCN01";

/// Weights of a two-layer GCN. Every mutation bumps `version`, which lets
/// gradient code detect a forward cache computed for older weights.
#[derive(Clone, Debug, PartialEq)]
pub struct GcnModel {
    w1: Array2<f64>,
    w2: Array2<f64>,
    version: u64,
}

impl GcnModel {
    pub fn new(w1: Array2<f64>, w2: Array2<f64>) -> Result<Self> {
        check_weights(&w1, &w2)?;
        Ok(GcnModel { w1, w2, version: 0 })
    }

    /// Glorot-uniform initialization from a seeded generator; `w1` is drawn
    /// before `w2`, both row-major.
    pub fn init(feature_dim: usize, hidden: usize, num_classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut glorot = |rows: usize, cols: usize| {
            let r = (6.0 / (rows + cols) as f64).sqrt();
            Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-r..=r))
        };
        let w1 = glorot(feature_dim, hidden);
        let w2 = glorot(hidden, num_classes);
        GcnModel { w1, w2, version: 0 }
    }

    pub fn zeros(feature_dim: usize, hidden: usize, num_classes: usize) -> Self {
        GcnModel {
            w1: Array2::zeros((feature_dim, hidden)),
            w2: Array2::zeros((hidden, num_classes)),
            version: 0,
        }
    }

    pub fn w1(&self) -> &Array2<f64> {
        &self.w1
    }

    pub fn w2(&self) -> &Array2<f64> {
        &self.w2
    }

    pub fn feature_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden(&self) -> usize {
        self.w1.ncols()
    }

    pub fn num_classes(&self) -> usize {
        self.w2.ncols()
    }

    pub fn version(&self) -> u64 {
        self.version
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.w2.len()
    }

    pub fn set_weights(&mut self, w1: Array2<f64>, w2: Array2<f64>) -> Result<()> {
        check_weights(&w1, &w2)?;
        if w1.dim() != self.w1.dim() || w2.dim() != self.w2.dim() {
            return Err(Error::Shape("replacement weights change the model shape".into()));
        }
        self.w1 = w1;
        self.w2 = w2;
        self.version += 1;
        Ok(())
    }

    /// `θ ← θ − lr (g + wd θ)`.
    pub fn step(&mut self, g: &Gradient, lr: f64, weight_decay: f64) {
        let decay = 1.0 - lr * weight_decay;
        self.w1 *= decay;
        self.w1.scaled_add(-lr, &g.w1);
        self.w2 *= decay;
        self.w2.scaled_add(-lr, &g.w2);
        self.version += 1;
    }

    /// Parameters as one vector: `w1` then `w2`, both row-major.
    pub fn to_flat(&self) -> Vec<f64> {
        self.w1.iter().chain(self.w2.iter()).copied().collect()
    }

    pub fn set_flat(&mut self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(Error::Shape(format!(
                "flat parameter length {} != {}",
                theta.len(),
                self.num_params()
            )));
        }
        let (a, b) = theta.split_at(self.w1.len());
        let w1 = Array2::from_shape_vec(self.w1.dim(), a.to_vec()).expect("length checked");
        let w2 = Array2::from_shape_vec(self.w2.dim(), b.to_vec()).expect("length checked");
        self.set_weights(w1, w2)
    }

    pub fn with_flat(&self, theta: &[f64]) -> Result<GcnModel> {
        let mut m = self.clone();
        m.set_flat(theta)?;
        Ok(m)
    }

    /// Runs the network and keeps the activations needed for backprop.
    pub fn forward(&self, a_hat: &CsrMatrix, x: &Array2<f64>) -> Result<ForwardCache> {
        self.forward_at(a_hat, x, 0)
    }

    pub(crate) fn forward_at(
        &self,
        a_hat: &CsrMatrix,
        x: &Array2<f64>,
        epoch: usize,
    ) -> Result<ForwardCache> {
        if x.ncols() != self.feature_dim() {
            return Err(Error::Shape(format!(
                "features have {} columns, model expects {}",
                x.ncols(),
                self.feature_dim()
            )));
        }
        if a_hat.rows() != x.nrows() || a_hat.cols() != x.nrows() {
            return Err(Error::Shape(format!(
                "propagation matrix is {}x{}, features have {} rows",
                a_hat.rows(),
                a_hat.cols(),
                x.nrows()
            )));
        }
        let z1 = a_hat.mul_dense(&x.dot(&self.w1).view());
        ensure_finite(&z1, "hidden pre-activation", epoch)?;
        let h = z1.mapv(|v| v.max(0.0));
        let ah = a_hat.mul_dense(&h.view());
        let logits = ah.dot(&self.w2);
        ensure_finite(&logits, "output logits", epoch)?;
        let log_y = log_softmax(&logits);
        let y = log_y.mapv(f64::exp);
        Ok(ForwardCache {
            version: self.version,
            z1,
            ah,
            log_y,
            y,
        })
    }

    /// Writes `model.bin`: magic, `k h c` as u64 LE, then `w1` and `w2` as f64 LE.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let mut buf = Vec::with_capacity(32 + 8 * self.num_params());
        buf.extend_from_slice(MODEL_MAGIC);
        for d in [self.feature_dim(), self.hidden(), self.num_classes()] {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in self.w1.iter().chain(self.w2.iter()) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf).map_err(|e| Error::io(path, e))?;
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        let bad = |msg: &str| Error::Parse {
            file: path.display().to_string(),
            line: 0,
            msg: msg.to_string(),
        };
        if bytes.len() < 32 || &bytes[..8] != MODEL_MAGIC {
            return Err(bad("not a model file"));
        }
        let dim = |i: usize| {
            let mut b = [0u8; 8];
            b.copy_from_slice(&bytes[8 + 8 * i..16 + 8 * i]);
            u64::from_le_bytes(b) as usize
        };
        let (k, h, c) = (dim(0), dim(1), dim(2));
        let count = k
            .checked_mul(h)
            .and_then(|a| h.checked_mul(c).and_then(|b| a.checked_add(b)))
            .ok_or_else(|| bad("header overflow"))?;
        if bytes.len() != 32 + 8 * count {
            return Err(bad("payload length does not match header"));
        }
        let vals: Vec<f64> = bytes[32..]
            .chunks_exact(8)
            .map(|ch| f64::from_le_bytes(ch.try_into().expect("8-byte chunk")))
            .collect();
        let w1 = Array2::from_shape_vec((k, h), vals[..k * h].to_vec()).expect("sized");
        let w2 = Array2::from_shape_vec((h, c), vals[k * h..].to_vec()).expect("sized");
        GcnModel::new(w1, w2)
    }
}

fn check_weights(w1: &Array2<f64>, w2: &Array2<f64>) -> Result<()> {
    if w1.ncols() != w2.nrows() {
        return Err(Error::Shape(format!(
            "w1 is {:?}, w2 is {:?}: hidden widths differ",
            w1.dim(),
            w2.dim()
        )));
    }
    if w1.iter().chain(w2.iter()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("weights must be finite".into()));
    }
    Ok(())
}

fn ensure_finite(m: &Array2<f64>, stage: &'static str, epoch: usize) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite { stage, epoch })
    }
}

fn log_softmax(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.axis_iter_mut(Axis(0)) {
        let m = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        row.mapv_inplace(|v| v - lse);
    }
    out
}

/// Activations of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    version: u64,
    z1: Array2<f64>,
    ah: Array2<f64>,
    log_y: Array2<f64>,
    y: Array2<f64>,
}

impl ForwardCache {
    pub fn predictions(&self) -> &Array2<f64> {
        &self.y
    }

    pub fn log_predictions(&self) -> &Array2<f64> {
        &self.log_y
    }

    pub fn into_predictions(self) -> Array2<f64> {
        self.y
    }

    pub fn version(&self) -> u64 {
        self.version
    }
}

/// Network inputs: a graph plus its symmetric-normalized propagation matrix.
#[derive(Clone, Debug)]
pub struct GcnInput<'g> {
    pub graph: &'g Graph,
    pub a_hat: CsrMatrix,
}

impl<'g> GcnInput<'g> {
    pub fn new(graph: &'g Graph) -> Self {
        GcnInput {
            graph,
            a_hat: graph.normalized_adjacency(Normalization::Symmetric),
        }
    }

    pub fn forward(&self, model: &GcnModel) -> Result<ForwardCache> {
        model.forward(&self.a_hat, self.graph.features())
    }
}

/// Gradient with respect to `(w1, w2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

impl Gradient {
    pub fn to_flat(&self) -> Vec<f64> {
        self.w1.iter().chain(self.w2.iter()).copied().collect()
    }
}

/// Backpropagates an upstream gradient on the logits `Z2 = Â H W2`.
pub fn backward_logits(
    model: &GcnModel,
    input: &GcnInput<'_>,
    cache: &ForwardCache,
    d_logits: &ArrayView2<f64>,
) -> Result<Gradient> {
    if cache.version != model.version {
        return Err(Error::StaleCache {
            cache: cache.version,
            model: model.version,
        });
    }
    let gw2 = cache.ah.t().dot(d_logits);
    let d_ah = d_logits.dot(&model.w2.t());
    let mut dz1 = input.a_hat.transpose_mul_dense(&d_ah.view());
    dz1.zip_mut_with(&cache.z1, |g, &z| {
        if z <= 0.0 {
            *g = 0.0;
        }
    });
    let d_xw = input.a_hat.transpose_mul_dense(&dz1.view());
    let gw1 = input.graph.features().t().dot(&d_xw);
    Ok(Gradient { w1: gw1, w2: gw2 })
}

/// Pulls an upstream gradient on `Y` back through the row-wise softmax:
/// `dZ_i = Y_i ⊙ (dY_i − ⟨dY_i, Y_i⟩)`.
pub fn softmax_vjp(y: &Array2<f64>, dy: &ArrayView2<f64>) -> Array2<f64> {
    let mut dz = Array2::zeros(y.dim());
    for ((mut out, yr), dr) in dz
        .axis_iter_mut(Axis(0))
        .zip(y.axis_iter(Axis(0)))
        .zip(dy.axis_iter(Axis(0)))
    {
        let dot: f64 = yr.iter().zip(dr.iter()).map(|(a, b)| a * b).sum();
        for ((o, &yv), &dv) in out.iter_mut().zip(yr.iter()).zip(dr.iter()) {
            *o = yv * (dv - dot);
        }
    }
    dz
}

/// Backpropagates an upstream gradient on the predictions `Y`.
pub fn backward_outputs(
    model: &GcnModel,
    input: &GcnInput<'_>,
    cache: &ForwardCache,
    dy: &ArrayView2<f64>,
) -> Result<Gradient> {
    let dz = softmax_vjp(&cache.y, dy);
    backward_logits(model, input, cache, &dz.view())
}

/// Checks a per-train-node weight vector: one entry per train node, each in [−1, 1].
pub fn check_weights_vector(weights: &[f64], num_train: usize) -> Result<()> {
    if weights.len() != num_train {
        return Err(Error::Shape(format!(
            "{} loss weights for {num_train} train nodes",
            weights.len()
        )));
    }
    if let Some((i, w)) = weights
        .iter()
        .enumerate()
        .find(|(_, w)| !(-1.0..=1.0).contains(*w))
    {
        return Err(Error::InvalidArgument(format!(
            "loss weight {w} at train position {i} is outside [-1, 1]"
        )));
    }
    Ok(())
}

fn train_label(labels: &[Option<usize>], v: usize) -> Result<usize> {
    labels
        .get(v)
        .copied()
        .flatten()
        .ok_or(Error::NotTrainNode(v))
}

/// `Σ_v (1 + w_v) · CE(ŷ_v, y_v)` over the listed train nodes; `weights`
/// aligns with `train` and `None` means all zero.
pub fn loss_weighted(
    y: &Array2<f64>,
    labels: &[Option<usize>],
    train: &[usize],
    weights: Option<&[f64]>,
) -> Result<f64> {
    if let Some(w) = weights {
        check_weights_vector(w, train.len())?;
    }
    let mut total = 0.0;
    for (pos, &v) in train.iter().enumerate() {
        let c = train_label(labels, v)?;
        let scale = 1.0 + weights.map_or(0.0, |w| w[pos]);
        if scale != 0.0 {
            total += scale * -y[[v, c]].ln();
        }
    }
    Ok(total)
}

fn loss_from_log(
    log_y: &Array2<f64>,
    labels: &[Option<usize>],
    train: &[usize],
    weights: Option<&[f64]>,
) -> Result<f64> {
    let mut total = 0.0;
    for (pos, &v) in train.iter().enumerate() {
        let c = train_label(labels, v)?;
        let scale = 1.0 + weights.map_or(0.0, |w| w[pos]);
        if scale != 0.0 {
            total -= scale * log_y[[v, c]];
        }
    }
    Ok(total)
}

/// `dL/dZ2` of the weighted cross-entropy: `(1 + w_v)(Y_v − e_{y_v})` on train rows.
pub fn ce_logit_grad(
    y: &Array2<f64>,
    labels: &[Option<usize>],
    train: &[usize],
    weights: Option<&[f64]>,
) -> Result<Array2<f64>> {
    let mut dz = Array2::zeros(y.dim());
    for (pos, &v) in train.iter().enumerate() {
        let c = train_label(labels, v)?;
        let scale = 1.0 + weights.map_or(0.0, |w| w[pos]);
        let mut row = dz.row_mut(v);
        row.assign(&y.row(v));
        row[c] -= 1.0;
        row *= scale;
    }
    Ok(dz)
}

/// The training objective `loss_weighted + λ · f_bias` (weight decay excluded).
#[derive(Clone, Copy, Debug)]
pub struct Objective<'a> {
    pub weights: Option<&'a [f64]>,
    pub lambda_fair: f64,
    pub similarity: Option<&'a SimilarityMatrix>,
}

impl<'a> Objective<'a> {
    pub fn cross_entropy() -> Self {
        Objective {
            weights: None,
            lambda_fair: 0.0,
            similarity: None,
        }
    }

    fn check(&self, num_train: usize) -> Result<()> {
        if let Some(w) = self.weights {
            check_weights_vector(w, num_train)?;
        }
        if !(self.lambda_fair >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda_fair must be >= 0, got {}",
                self.lambda_fair
            )));
        }
        if self.lambda_fair > 0.0 && self.similarity.is_none() {
            return Err(Error::InvalidArgument(
                "fairness regularization needs a similarity matrix".into(),
            ));
        }
        Ok(())
    }

    pub fn value(&self, input: &GcnInput<'_>, cache: &ForwardCache) -> Result<f64> {
        let g = input.graph;
        self.check(g.train_nodes().len())?;
        let mut f = loss_from_log(&cache.log_y, g.labels(), g.train_nodes(), self.weights)?;
        if self.lambda_fair > 0.0 {
            let s = self.similarity.expect("checked");
            f += self.lambda_fair * bias(&cache.y.view(), s).value;
        }
        Ok(f)
    }

    pub fn grad(
        &self,
        model: &GcnModel,
        input: &GcnInput<'_>,
        cache: &ForwardCache,
    ) -> Result<Gradient> {
        let g = input.graph;
        self.check(g.train_nodes().len())?;
        let mut dz = ce_logit_grad(&cache.y, g.labels(), g.train_nodes(), self.weights)?;
        if self.lambda_fair > 0.0 {
            let s = self.similarity.expect("checked");
            let mut dy = bias_grad_outputs(&cache.y.view(), s);
            dy *= self.lambda_fair;
            dz += &softmax_vjp(&cache.y, &dy.view());
        }
        backward_logits(model, input, cache, &dz.view())
    }
}

/// Gradient of the composite objective at `model` on `input`.
pub fn grad(
    model: &GcnModel,
    input: &GcnInput<'_>,
    weights: Option<&[f64]>,
    lambda_fair: f64,
    similarity: Option<&SimilarityMatrix>,
) -> Result<Gradient> {
    let cache = input.forward(model)?;
    Objective {
        weights,
        lambda_fair,
        similarity,
    }
    .grad(model, input, &cache)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub lambda_fair: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 16,
            epochs: 200,
            learning_rate: 0.01,
            weight_decay: 5e-4,
            lambda_fair: 0.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub const REG_LAMBDA_FAIR: f64 = 0.5;

    pub fn validate(&self) -> Result<()> {
        if self.hidden == 0 {
            return Err(Error::InvalidArgument("hidden width must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be > 0, got {}",
                self.learning_rate
            )));
        }
        if !(self.weight_decay >= 0.0) || !(self.lambda_fair >= 0.0) {
            return Err(Error::InvalidArgument(
                "weight decay and lambda_fair must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the training history, measured before that epoch's update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Objective without weight decay.
    pub loss: f64,
    /// Train-set accuracy.
    pub acc: f64,
    /// `f_bias` when a similarity matrix was available.
    pub bias: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainResult {
    pub model: GcnModel,
    /// Final predictions on the graph the model was last trained on.
    pub predictions: Array2<f64>,
    pub history: Vec<EpochRecord>,
}

fn descend(
    model: &mut GcnModel,
    input: &GcnInput<'_>,
    objective: &Objective<'_>,
    epochs: usize,
    lr: f64,
    weight_decay: f64,
) -> Result<TrainResult> {
    let g = input.graph;
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let cache = model.forward_at(&input.a_hat, g.features(), epoch)?;
        let loss = objective.value(input, &cache)?;
        let acc = if g.train_nodes().is_empty() {
            f64::NAN
        } else {
            accuracy(&cache.y, g.labels(), g.train_nodes())?
        };
        let bias_value = objective.similarity.map(|s| bias(&cache.y.view(), s).value);
        history.push(EpochRecord {
            epoch,
            loss,
            acc,
            bias: bias_value,
        });
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                loss,
                history,
            });
        }
        let gradient = objective.grad(model, input, &cache)?;
        model.step(&gradient, lr, weight_decay);
    }
    let cache = model.forward_at(&input.a_hat, g.features(), epochs)?;
    Ok(TrainResult {
        model: model.clone(),
        predictions: cache.into_predictions(),
        history,
    })
}

/// Full-batch gradient descent from a seeded Glorot initialization.
///
/// `similarity` feeds the fairness term when `lambda_fair > 0` and the bias
/// column of the history; it is computed from `graph` when needed and absent.
pub fn train(
    graph: &Graph,
    config: &TrainConfig,
    similarity: Option<&SimilarityMatrix>,
) -> Result<TrainResult> {
    config.validate()?;
    if graph.train_nodes().is_empty() {
        return Err(Error::InvalidArgument("graph has no train nodes".into()));
    }
    let owned;
    let similarity = match similarity {
        Some(s) => Some(s),
        None if config.lambda_fair > 0.0 => {
            owned = crate::graph::jaccard_similarity(graph);
            Some(&owned)
        }
        None => None,
    };
    let mut model = GcnModel::init(
        graph.feature_dim(),
        config.hidden,
        graph.num_classes(),
        config.seed,
    );
    let input = GcnInput::new(graph);
    let objective = Objective {
        weights: None,
        lambda_fair: config.lambda_fair,
        similarity,
    };
    descend(
        &mut model,
        &input,
        &objective,
        config.epochs,
        config.learning_rate,
        config.weight_decay,
    )
}

/// Continues gradient descent on `graph_prime` with the reweighted loss and
/// no fairness term. `similarity` is only used for the history's bias column.
pub fn fine_tune(
    model: &GcnModel,
    graph_prime: &Graph,
    weights: Option<&[f64]>,
    epochs: usize,
    config: &TrainConfig,
    similarity: Option<&SimilarityMatrix>,
) -> Result<TrainResult> {
    config.validate()?;
    if model.feature_dim() != graph_prime.feature_dim()
        || model.num_classes() != graph_prime.num_classes()
    {
        return Err(Error::Shape("model does not match the fine-tuning graph".into()));
    }
    let mut model = model.clone();
    let input = GcnInput::new(graph_prime);
    let objective = Objective {
        weights,
        lambda_fair: 0.0,
        similarity,
    };
    objective.check(graph_prime.train_nodes().len())?;
    descend(
        &mut model,
        &input,
        &objective,
        epochs,
        config.learning_rate,
        config.weight_decay,
    )
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(row: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in row.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Fraction of `mask` nodes whose argmax prediction equals their label.
/// Unlabeled nodes count as misclassified.
pub fn accuracy(y: &Array2<f64>, labels: &[Option<usize>], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::InvalidArgument("accuracy over an empty mask".into()));
    }
    let correct = mask
        .iter()
        .filter(|&&v| labels[v] == Some(argmax(y.row(v).iter().copied())))
        .count();
    Ok(correct as f64 / mask.len() as f64)
}

pub fn write_history(path: impl AsRef<Path>, history: &[EpochRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(["epoch", "loss", "acc", "bias"])?;
    for r in history {
        w.write_record([
            r.epoch.to_string(),
            format!("{:?}", r.loss),
            format!("{:?}", r.acc),
            r.bias.map(|b| format!("{b:?}")).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub fn write_predictions(path: impl AsRef<Path>, y: &Array2<f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let mut header = vec!["node".to_string()];
    header.extend((0..y.ncols()).map(|c| format!("p{c}")));
    w.write_record(&header)?;
    for (i, row) in y.axis_iter(Axis(0)).enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(row.iter().map(|v| format!("{v:?}")));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}
