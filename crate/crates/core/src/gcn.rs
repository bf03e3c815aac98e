//! Two-layer message-passing graph convolution with hand-written backprop.
//!
//! Inputs are one-hot node features, so the first aggregation of the
//! identity is the (augmented) adjacency itself and layer one reduces to
//! `H1 = ReLU(A W1)`. Layer two aggregates the hidden states and maps them to
//! one sigmoid output per disease: `Y = sigmoid((A H1) W2)`. Only circRNA
//! rows of `Y` enter the loss.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Probabilities are clamped to `[EPS, 1 - EPS]` inside the loss.
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregator {
    /// Plain neighbor sum.
    #[default]
    Sum,
    /// Neighbor sum divided by the (augmented) degree.
    RowNorm,
}

impl Aggregator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Aggregator::Sum => "sum",
            Aggregator::RowNorm => "row_norm",
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "sum" => Ok(Aggregator::Sum),
            "row_norm" => Ok(Aggregator::RowNorm),
            other => Err(Error::Usage(format!("unknown aggregator '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub self_loops: bool,
    pub aggregator: Aggregator,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Loss weight on label-1 cells.
    pub positive_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_dim: 64,
            learning_rate: 0.01,
            epochs: 100,
            seed: 42,
            self_loops: true,
            aggregator: Aggregator::Sum,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            positive_weight: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_dim == 0 {
            return Err(Error::Usage("hidden_dim must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Usage("learning_rate must be positive".into()));
        }
        let open_unit = |b: f64| b > 0.0 && b < 1.0;
        if !open_unit(self.adam_beta1) || !open_unit(self.adam_beta2) {
            return Err(Error::Usage("adam betas must lie in (0,1)".into()));
        }
        if !(self.adam_eps > 0.0 && self.adam_eps.is_finite()) {
            return Err(Error::Usage("adam_eps must be positive".into()));
        }
        if !(self.positive_weight > 0.0 && self.positive_weight.is_finite()) {
            return Err(Error::Usage("positive_weight must be positive".into()));
        }
        Ok(())
    }
}

/// Layer weights: `w1` is N x h, `w2` is h x n_disease. No biases.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
    pub seed: u64,
}

impl ModelParams {
    pub fn n_nodes(&self) -> usize {
        self.w1.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn n_disease(&self) -> usize {
        self.w2.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.w1.iter().chain(self.w2.iter()).all(|v| v.is_finite())
    }

    /// Text checkpoint: header `n_nodes h n_disease seed`, then `w1` and
    /// `w2` row-major with 17 significant digits.
    pub fn to_checkpoint(&self) -> String {
        let mut out = format!(
            "{} {} {} {}\n",
            self.n_nodes(),
            self.hidden_dim(),
            self.n_disease(),
            self.seed
        );
        for m in [&self.w1, &self.w2] {
            for row in m.outer_iter() {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
                out.push_str(&cells.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_checkpoint(text: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Data(format!("malformed checkpoint: {msg}"));
        let mut tokens = text.split_whitespace();
        let mut header = [0u64; 4];
        for slot in header.iter_mut() {
            *slot = tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad("header"))?;
        }
        let [n, h, d, seed] = header;
        let (n, h, d) = (n as usize, h as usize, d as usize);
        let mut read = |rows: usize, cols: usize| -> Result<Array2<f64>> {
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                let v: f64 = tokens
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| bad("weights truncated or not numeric"))?;
                values.push(v);
            }
            Ok(Array2::from_shape_vec((rows, cols), values).expect("sized above"))
        };
        let w1 = read(n, h)?;
        let w2 = read(h, d)?;
        if tokens.next().is_some() {
            return Err(bad("trailing data"));
        }
        Ok(Self { w1, w2, seed })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_checkpoint()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_checkpoint(&text)
    }
}

/// Glorot-uniform weights, deterministic in `seed`.
pub fn init_params(
    n_nodes: usize,
    hidden_dim: usize,
    n_disease: usize,
    seed: u64,
) -> Result<ModelParams> {
    if n_nodes == 0 || hidden_dim == 0 || n_disease == 0 {
        return Err(Error::Usage(format!(
            "model dimensions must be positive: nodes={n_nodes} hidden={hidden_dim} diseases={n_disease}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut uniform = |rows: usize, cols: usize| {
        let bound = (6.0 / (rows + cols) as f64).sqrt();
        Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
    };
    let w1 = uniform(n_nodes, hidden_dim);
    let w2 = uniform(hidden_dim, n_disease);
    Ok(ModelParams { w1, w2, seed })
}

/// The aggregation operator `A`: adjacency plus optional self-loops,
/// optionally divided by row degree.
#[derive(Debug, Clone)]
pub struct Propagation {
    offsets: Vec<usize>,
    indices: Vec<usize>,
    normalize: bool,
}

impl Propagation {
    pub fn new(g: &Graph, self_loops: bool, aggregator: Aggregator) -> Self {
        let n = g.n_nodes();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(g.column_indices().len() + n);
        offsets.push(0);
        for v in 0..n {
            let nbrs = g.neighbors(v);
            if self_loops {
                let at = nbrs.partition_point(|&u| u < v);
                indices.extend_from_slice(&nbrs[..at]);
                indices.push(v);
                indices.extend_from_slice(&nbrs[at..]);
            } else {
                indices.extend_from_slice(nbrs);
            }
            offsets.push(indices.len());
        }
        Self {
            offsets,
            indices,
            normalize: aggregator == Aggregator::RowNorm,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Sorted aggregation sources of `v` (including `v` with self-loops).
    pub fn sources(&self, v: usize) -> &[usize] {
        &self.indices[self.offsets[v]..self.offsets[v + 1]]
    }

    /// `A x`.
    pub fn apply(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.raw_dim());
        for (v, mut row) in out.outer_iter_mut().enumerate() {
            let src = self.sources(v);
            for &u in src {
                row += &x.row(u);
            }
            if self.normalize && !src.is_empty() {
                row /= src.len() as f64;
            }
        }
        out
    }

    /// `A^T x`.
    pub fn apply_transpose(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut out = Array2::zeros(x.raw_dim());
        for v in 0..self.n_nodes() {
            let src = self.sources(v);
            if src.is_empty() {
                continue;
            }
            let scale = if self.normalize {
                1.0 / src.len() as f64
            } else {
                1.0
            };
            for &u in src {
                out.row_mut(u).scaled_add(scale, &x.row(v));
            }
        }
        out
    }
}

/// Intermediate activations of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// `A W1`
    pub z1: Array2<f64>,
    /// `ReLU(z1)`
    pub h1: Array2<f64>,
    /// `A h1`
    pub s2: Array2<f64>,
    /// `sigmoid(s2 W2)`, N x n_disease
    pub yhat: Array2<f64>,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn check_params(prop: &Propagation, params: &ModelParams) -> Result<()> {
    if params.w1.nrows() != prop.n_nodes() || params.w2.nrows() != params.w1.ncols() {
        return Err(Error::Data(format!(
            "parameter shapes w1 {:?}, w2 {:?} do not fit a {}-node graph",
            params.w1.dim(),
            params.w2.dim(),
            prop.n_nodes()
        )));
    }
    if !params.is_finite() {
        return Err(Error::Numeric("non-finite model parameter".into()));
    }
    Ok(())
}

pub fn forward_with(prop: &Propagation, params: &ModelParams) -> Result<Forward> {
    check_params(prop, params)?;
    let z1 = prop.apply(params.w1.view());
    let h1 = z1.mapv(|v| v.max(0.0));
    let s2 = prop.apply(h1.view());
    let yhat = s2.dot(&params.w2).mapv(sigmoid);
    Ok(Forward { z1, h1, s2, yhat })
}

/// Returns the hidden layer (N x h) and the output probabilities (N x n_disease).
pub fn forward(
    g: &Graph,
    params: &ModelParams,
    cfg: &TrainConfig,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_graph_params(g, params)?;
    let prop = Propagation::new(g, cfg.self_loops, cfg.aggregator);
    let fwd = forward_with(&prop, params)?;
    Ok((fwd.h1, fwd.yhat))
}

fn check_graph_params(g: &Graph, params: &ModelParams) -> Result<()> {
    if params.n_disease() != g.n_disease() {
        return Err(Error::Data(format!(
            "model predicts {} diseases, graph has {}",
            params.n_disease(),
            g.n_disease()
        )));
    }
    Ok(())
}

fn check_labels(yhat: ArrayView2<f64>, labels: ArrayView2<u8>, mask: &[usize]) -> Result<()> {
    if mask.is_empty() {
        return Err(Error::Data("loss mask is empty".into()));
    }
    if labels.ncols() != yhat.ncols() || labels.nrows() > yhat.nrows() {
        return Err(Error::Data(format!(
            "labels {:?} do not fit predictions {:?}",
            labels.dim(),
            yhat.dim()
        )));
    }
    if let Some(&bad) = mask.iter().find(|&&i| i >= labels.nrows()) {
        return Err(Error::Data(format!("mask row {bad} is not a circRNA row")));
    }
    Ok(())
}

/// Weighted binary cross-entropy averaged over masked circRNA rows and all diseases.
pub fn bce_loss(
    yhat: ArrayView2<f64>,
    labels: ArrayView2<u8>,
    mask: &[usize],
    positive_weight: f64,
) -> Result<f64> {
    check_labels(yhat, labels, mask)?;
    let mut total = 0.0;
    for &i in mask {
        for (&p, &y) in yhat.row(i).iter().zip(labels.row(i)) {
            let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
            total -= if y == 1 {
                positive_weight * p.ln()
            } else {
                (1.0 - p).ln()
            };
        }
    }
    Ok(total / (mask.len() * labels.ncols()) as f64)
}

/// Gradients with respect to `w1` and `w2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub w1: Array2<f64>,
    pub w2: Array2<f64>,
}

/// Backpropagates the loss through a cached forward pass.
///
/// The output-layer gradient uses the unclamped logistic form
/// `p (w y + 1 - y) - w y`, which is exact wherever the probability clamp is
/// inactive.
pub fn gradients_with(
    prop: &Propagation,
    params: &ModelParams,
    fwd: &Forward,
    labels: ArrayView2<u8>,
    mask: &[usize],
    positive_weight: f64,
) -> Result<Gradients> {
    check_labels(fwd.yhat.view(), labels, mask)?;
    let scale = 1.0 / (mask.len() * labels.ncols()) as f64;
    let mut dz2 = Array2::zeros(fwd.yhat.raw_dim());
    for &i in mask {
        for ((g, &p), &y) in dz2
            .row_mut(i)
            .iter_mut()
            .zip(fwd.yhat.row(i))
            .zip(labels.row(i))
        {
            let y = y as f64;
            *g = scale * (p * (positive_weight * y + 1.0 - y) - positive_weight * y);
        }
    }
    let dw2 = fwd.s2.t().dot(&dz2);
    let ds2 = dz2.dot(&params.w2.t());
    let mut dz1 = prop.apply_transpose(ds2.view());
    Zip::from(&mut dz1).and(&fwd.z1).for_each(|g, &z| {
        if z <= 0.0 {
            *g = 0.0;
        }
    });
    let dw1 = prop.apply_transpose(dz1.view());
    Ok(Gradients { w1: dw1, w2: dw2 })
}

pub fn backward(
    g: &Graph,
    params: &ModelParams,
    cfg: &TrainConfig,
    labels: ArrayView2<u8>,
    mask: &[usize],
) -> Result<Gradients> {
    check_graph_params(g, params)?;
    let prop = Propagation::new(g, cfg.self_loops, cfg.aggregator);
    let fwd = forward_with(&prop, params)?;
    gradients_with(&prop, params, &fwd, labels, mask, cfg.positive_weight)
}

/// Adam moment estimates, shaped like the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m_w1: Array2<f64>,
    pub v_w1: Array2<f64>,
    pub m_w2: Array2<f64>,
    pub v_w2: Array2<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            m_w1: Array2::zeros(params.w1.raw_dim()),
            v_w1: Array2::zeros(params.w1.raw_dim()),
            m_w2: Array2::zeros(params.w2.raw_dim()),
            v_w2: Array2::zeros(params.w2.raw_dim()),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update, in place.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    if grads.w1.dim() != params.w1.dim()
        || grads.w2.dim() != params.w2.dim()
        || state.m_w1.dim() != params.w1.dim()
        || state.m_w2.dim() != params.w2.dim()
    {
        return Err(Error::Data(
            "gradient or optimizer state shape mismatch".into(),
        ));
    }
    if !grads
        .w1
        .iter()
        .chain(grads.w2.iter())
        .all(|g| g.is_finite())
    {
        return Err(Error::Numeric("non-finite gradient".into()));
    }
    state.t += 1;
    let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
    let c1 = 1.0 - b1.powi(state.t as i32);
    let c2 = 1.0 - b2.powi(state.t as i32);
    let (lr, eps) = (cfg.learning_rate, cfg.adam_eps);
    let update =
        |w: &mut Array2<f64>, g: &Array2<f64>, m: &mut Array2<f64>, v: &mut Array2<f64>| {
            Zip::from(w).and(g).and(m).and(v).for_each(|w, &g, m, v| {
                *m = b1 * *m + (1.0 - b1) * g;
                *v = b2 * *v + (1.0 - b2) * g * g;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            });
        };
    update(&mut params.w1, &grads.w1, &mut state.m_w1, &mut state.v_w1);
    update(&mut params.w2, &grads.w2, &mut state.m_w2, &mut state.v_w2);
    Ok(())
}

/// Per-epoch losses, measured before each epoch's update.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainHistory {
    pub train_loss: Vec<f64>,
    pub val_loss: Option<Vec<f64>>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.train_loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.train_loss.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(match self.val_loss {
            Some(_) => "epoch,train_loss,val_loss\n",
            None => "epoch,train_loss\n",
        });
        for (e, loss) in self.train_loss.iter().enumerate() {
            out.push_str(&format!("{},{loss}", e + 1));
            if let Some(val) = &self.val_loss {
                out.push_str(&format!(",{}", val[e]));
            }
            out.push('\n');
        }
        out
    }
}

fn check_mask_rows(mask: &[usize], n_circ: usize, what: &str) -> Result<()> {
    if let Some(&bad) = mask.iter().find(|&&i| i >= n_circ) {
        return Err(Error::Data(format!("{what} index {bad} out of range")));
    }
    Ok(())
}

/// Full-batch training. `observer` sees every epoch's output probabilities
/// before the update is applied.
pub fn train_observed<F>(
    g: &Graph,
    labels: ArrayView2<u8>,
    train_mask: &[usize],
    cfg: &TrainConfig,
    mut observer: F,
) -> Result<(ModelParams, Vec<f64>)>
where
    F: FnMut(usize, &Array2<f64>),
{
    cfg.validate()?;
    if train_mask.is_empty() {
        return Err(Error::Data("training mask is empty".into()));
    }
    check_mask_rows(train_mask, g.n_circ(), "training mask")?;
    if labels.dim() != (g.n_circ(), g.n_disease()) {
        return Err(Error::Data(format!(
            "labels {:?} do not match graph ({}, {})",
            labels.dim(),
            g.n_circ(),
            g.n_disease()
        )));
    }
    let mut params = init_params(g.n_nodes(), cfg.hidden_dim, g.n_disease(), cfg.seed)?;
    let prop = Propagation::new(g, cfg.self_loops, cfg.aggregator);
    let mut state = AdamState::new(&params);
    let mut losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let fwd = forward_with(&prop, &params)?;
        let loss = bce_loss(fwd.yhat.view(), labels, train_mask, cfg.positive_weight)?;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "loss diverged at epoch {}",
                epoch + 1
            )));
        }
        losses.push(loss);
        observer(epoch, &fwd.yhat);
        let grads = gradients_with(
            &prop,
            &params,
            &fwd,
            labels,
            train_mask,
            cfg.positive_weight,
        )?;
        adam_step(&mut params, &grads, &mut state, cfg)?;
    }
    Ok((params, losses))
}

/// Trains on `train_mask` rows; records validation loss when `val_mask` is non-empty.
pub fn train(
    g: &Graph,
    labels: ArrayView2<u8>,
    train_mask: &[usize],
    val_mask: &[usize],
    cfg: &TrainConfig,
) -> Result<(ModelParams, TrainHistory)> {
    check_mask_rows(val_mask, g.n_circ(), "validation mask")?;
    if val_mask.iter().any(|i| train_mask.contains(i)) {
        return Err(Error::Data("training and validation masks overlap".into()));
    }
    let mut val_loss = Vec::new();
    let mut val_err = None;
    let (params, train_loss) = train_observed(g, labels, train_mask, cfg, |_, yhat| {
        if val_mask.is_empty() || val_err.is_some() {
            return;
        }
        match bce_loss(yhat.view(), labels, val_mask, cfg.positive_weight) {
            Ok(l) => val_loss.push(l),
            Err(e) => val_err = Some(e),
        }
    })?;
    if let Some(e) = val_err {
        return Err(e);
    }
    let history = TrainHistory {
        train_loss,
        val_loss: (!val_mask.is_empty()).then_some(val_loss),
    };
    Ok((params, history))
}

/// circRNA rows of the output, `n_circ x n_disease`.
pub fn predict(g: &Graph, params: &ModelParams, cfg: &TrainConfig) -> Result<Array2<f64>> {
    let (_, yhat) = forward(g, params, cfg)?;
    Ok(yhat.slice(ndarray::s![..g.n_circ(), ..]).to_owned())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("n{i}")).collect()
    }

    fn cfg() -> TrainConfig {
        TrainConfig {
            hidden_dim: 3,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn init_deterministic_and_bounded() {
        let a = init_params(10, 4, 3, 1).unwrap();
        assert_eq!(a, init_params(10, 4, 3, 1).unwrap());
        assert_ne!(a.w1, init_params(10, 4, 3, 2).unwrap().w1);
        let b1 = (6.0f64 / 14.0).sqrt();
        let b2 = (6.0f64 / 7.0).sqrt();
        assert!(a.w1.iter().all(|v| v.abs() <= b1));
        assert!(a.w2.iter().all(|v| v.abs() <= b2));
        assert!(init_params(0, 4, 3, 1).is_err());
        assert!(init_params(3, 0, 3, 1).is_err());
    }

    #[test]
    fn single_node_self_loop() {
        let g = Graph::from_edges(0, 1, ids(1), []).unwrap();
        let params = ModelParams {
            w1: arr2(&[[1.0]]),
            w2: arr2(&[[0.0]]),
            seed: 0,
        };
        let c = TrainConfig {
            hidden_dim: 1,
            ..TrainConfig::default()
        };
        let (h1, yhat) = forward(&g, &params, &c).unwrap();
        assert_eq!(h1, arr2(&[[1.0]]));
        assert_eq!(yhat, arr2(&[[0.5]]));
    }

    #[test]
    fn empty_graph_without_self_loops_outputs_half() {
        let g = Graph::from_edges(3, 2, ids(5), []).unwrap();
        let params = init_params(5, 3, 2, 9).unwrap();
        let c = TrainConfig {
            self_loops: false,
            ..cfg()
        };
        let (h1, yhat) = forward(&g, &params, &c).unwrap();
        assert!(h1.iter().all(|&v| v == 0.0));
        assert!(yhat.iter().all(|&v| v == 0.5));

        let labels = Array2::from_elem((3, 2), 1u8);
        let grads = backward(&g, &params, &c, labels.view(), &[0, 1, 2]).unwrap();
        assert!(grads.w1.iter().all(|&v| v == 0.0));
        assert!(grads.w2.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn forward_rejects_bad_params() {
        let g = Graph::from_edges(2, 1, ids(3), [(0, 2)]).unwrap();
        let mut params = init_params(3, 2, 1, 0).unwrap();
        params.w1[[0, 0]] = f64::NAN;
        let err = forward(&g, &params, &cfg()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let params = init_params(4, 2, 1, 0).unwrap();
        assert!(forward(&g, &params, &cfg()).is_err());
    }

    #[test]
    fn loss_examples() {
        let yhat = Array2::from_elem((3, 2), 0.5);
        let labels = arr2(&[[1u8, 0], [0, 1], [1, 1]]);
        let l = bce_loss(yhat.view(), labels.view(), &[0, 1, 2], 1.0).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-15);

        let perfect = labels.mapv(|v| v as f64);
        let l = bce_loss(perfect.view(), labels.view(), &[0, 1, 2], 1.0).unwrap();
        assert!(l < 1e-6);

        assert!(bce_loss(yhat.view(), labels.view(), &[], 1.0).is_err());
    }

    #[test]
    fn loss_ignores_disease_rows() {
        let mut yhat = Array2::from_elem((4, 1), 0.5);
        let labels = arr2(&[[1u8], [0]]);
        let before = bce_loss(yhat.view(), labels.view(), &[0, 1], 1.0).unwrap();
        yhat[[2, 0]] = 0.999;
        yhat[[3, 0]] = 0.001;
        assert_eq!(
            before,
            bce_loss(yhat.view(), labels.view(), &[0, 1], 1.0).unwrap()
        );
        assert!(bce_loss(yhat.view(), labels.view(), &[2], 1.0).is_err());
    }

    #[test]
    fn positive_weight_scales_positive_cell_gradient() {
        let g = Graph::from_edges(2, 1, ids(3), [(0, 1), (1, 2)]).unwrap();
        let params = init_params(3, 3, 1, 5).unwrap();
        let labels = arr2(&[[1u8], [0]]);
        let base = backward(&g, &params, &cfg(), labels.view(), &[0]).unwrap();
        let doubled = TrainConfig {
            positive_weight: 2.0,
            ..cfg()
        };
        let twice = backward(&g, &params, &doubled, labels.view(), &[0]).unwrap();
        assert_eq!(twice.w1, &base.w1 * 2.0);
        assert_eq!(twice.w2, &base.w2 * 2.0);
    }

    #[test]
    fn adam_examples() {
        let c = TrainConfig {
            learning_rate: 0.1,
            ..TrainConfig::default()
        };
        let mut params = ModelParams {
            w1: arr2(&[[0.0]]),
            w2: arr2(&[[0.5]]),
            seed: 0,
        };
        let mut state = AdamState::new(&params);
        let grads = Gradients {
            w1: arr2(&[[1.0]]),
            w2: arr2(&[[0.0]]),
        };
        adam_step(&mut params, &grads, &mut state, &c).unwrap();
        assert_eq!(state.t, 1);
        assert!((params.w1[[0, 0]] + 0.1).abs() < 1e-8);
        assert_eq!(params.w2[[0, 0]], 0.5);

        let zero = Gradients {
            w1: arr2(&[[0.0]]),
            w2: arr2(&[[0.0]]),
        };
        let mut fresh = ModelParams {
            w1: arr2(&[[0.3]]),
            w2: arr2(&[[0.5]]),
            seed: 0,
        };
        let mut st = AdamState::new(&fresh);
        let snapshot = fresh.clone();
        adam_step(&mut fresh, &zero, &mut st, &c).unwrap();
        assert_eq!(fresh, snapshot);
        assert_eq!(st.t, 1);

        let nan = Gradients {
            w1: arr2(&[[f64::NAN]]),
            w2: arr2(&[[0.0]]),
        };
        assert!(adam_step(&mut fresh, &nan, &mut st, &c).is_err());
    }

    #[test]
    fn adam_deterministic() {
        let params = init_params(4, 2, 2, 3).unwrap();
        let grads = Gradients {
            w1: Array2::from_elem((4, 2), 0.25),
            w2: Array2::from_elem((2, 2), -0.5),
        };
        let run = || {
            let mut p = params.clone();
            let mut s = AdamState::new(&p);
            adam_step(&mut p, &grads, &mut s, &TrainConfig::default()).unwrap();
            (p, s)
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn zero_epochs_returns_init() {
        let g = Graph::from_edges(2, 1, ids(3), [(0, 2)]).unwrap();
        let labels = arr2(&[[1u8], [0]]);
        let c = TrainConfig { epochs: 0, ..cfg() };
        let (params, history) = train(&g, labels.view(), &[0], &[1], &c).unwrap();
        assert_eq!(params, init_params(3, c.hidden_dim, 1, c.seed).unwrap());
        assert!(history.is_empty());
    }

    #[test]
    fn train_rejects_bad_masks() {
        let g = Graph::from_edges(2, 1, ids(3), [(0, 2)]).unwrap();
        let labels = arr2(&[[1u8], [0]]);
        assert!(train(&g, labels.view(), &[], &[], &cfg()).is_err());
        assert!(train(&g, labels.view(), &[0], &[0], &cfg()).is_err());
        assert!(train(&g, labels.view(), &[2], &[], &cfg()).is_err());
    }

    #[test]
    fn history_csv() {
        let h = TrainHistory {
            train_loss: vec![0.5, 0.25],
            val_loss: Some(vec![0.75, 0.5]),
        };
        assert_eq!(
            h.to_csv(),
            "epoch,train_loss,val_loss\n1,0.5,0.75\n2,0.25,0.5\n"
        );
        let h = TrainHistory {
            train_loss: vec![0.5],
            val_loss: None,
        };
        assert_eq!(h.to_csv(), "epoch,train_loss\n1,0.5\n");
    }

    #[test]
    fn checkpoint_roundtrip_is_exact() {
        let params = init_params(6, 4, 3, 77).unwrap();
        let text = params.to_checkpoint();
        assert!(text.starts_with("6 4 3 77\n"));
        assert_eq!(ModelParams::from_checkpoint(&text).unwrap(), params);
        assert!(ModelParams::from_checkpoint("6 4 3 77\n0.1").is_err());
    }

    #[test]
    fn predict_slices_circ_rows() {
        let g = Graph::from_edges(3, 2, ids(5), [(0, 3), (1, 4), (0, 1), (3, 4)]).unwrap();
        let params = init_params(5, 3, 2, 4).unwrap();
        let scores = predict(&g, &params, &cfg()).unwrap();
        let (_, yhat) = forward(&g, &params, &cfg()).unwrap();
        assert_eq!(scores.dim(), (3, 2));
        assert_eq!(scores, yhat.slice(ndarray::s![..3, ..]));
        assert!(scores.iter().all(|&p| p > 0.0 && p < 1.0));
    }

    #[test]
    fn isolated_node_sum_aggregation_no_self_loops() {
        let g = Graph::from_edges(3, 1, ids(4), [(0, 3)]).unwrap();
        let params = init_params(4, 3, 1, 11).unwrap();
        let c = TrainConfig {
            self_loops: false,
            ..cfg()
        };
        let (h1, yhat) = forward(&g, &params, &c).unwrap();
        assert!(h1.row(2).iter().all(|&v| v == 0.0));
        assert_eq!(yhat[[2, 0]], 0.5);
    }
}
