//! Dense 64-bit numeric core: matrices, an LSTM layer with exact
//! backpropagation through time, softmax, cross-entropy and plain SGD.
//!
//! Every dot product accumulates left to right in one `f64`, so results are
//! bitwise reproducible on a given platform.

use crate::error::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                what: "matrix data",
                expected: rows * cols,
                got: data.len(),
            });
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// out += self · x
    pub(crate) fn mul_vec_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            *o += dot(self.row(r), x);
        }
    }

    /// out += selfᵀ · v
    pub(crate) fn mul_t_vec_acc(&self, v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(v.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (r, &vr) in v.iter().enumerate() {
            if vr == 0.0 {
                continue;
            }
            for (o, &w) in out.iter_mut().zip(self.row(r)) {
                *o += w * vr;
            }
        }
    }

    /// self += a · bᵀ
    pub(crate) fn add_outer(&mut self, a: &[f64], b: &[f64]) {
        debug_assert_eq!(a.len(), self.rows);
        debug_assert_eq!(b.len(), self.cols);
        for (r, &ar) in a.iter().enumerate() {
            if ar == 0.0 {
                continue;
            }
            for (w, &bc) in self.row_mut(r).iter_mut().zip(b) {
                *w += ar * bc;
            }
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// y = M·x
pub fn linear(m: &Matrix, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != m.cols {
        return Err(Error::Dimension {
            what: "linear input",
            expected: m.cols,
            got: x.len(),
        });
    }
    let mut out = vec![0.0; m.rows];
    m.mul_vec_acc(x, &mut out);
    Ok(out)
}

pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable softmax (max-shifted).
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = v.iter().map(|&x| (x - max).exp()).collect();
    let mut sum = 0.0;
    for &e in &exps {
        sum += e;
    }
    exps.into_iter().map(|e| e / sum).collect()
}

/// Floor applied to the gold probability before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

/// −ln p[label], with p[label] clamped to at least [`PROB_FLOOR`].
pub fn cross_entropy(p: &[f64], label: usize) -> Result<f64> {
    let &pk = p.get(label).ok_or(Error::Dimension {
        what: "cross-entropy label",
        expected: p.len(),
        got: label,
    })?;
    Ok(-pk.max(PROB_FLOOR).ln())
}

/// Gate order used for every per-gate array in [`LstmParams`].
pub const INPUT: usize = 0;
pub const FORGET: usize = 1;
pub const CELL: usize = 2;
pub const OUTPUT: usize = 3;

/// LSTM layer parameters. Peephole weights are diagonal (one per unit) for
/// the input, forget and output gates, and are ignored when `peepholes` is
/// off. The same struct doubles as a gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub peepholes: bool,
    /// hidden × input, per gate
    pub w_x: [Matrix; 4],
    /// hidden × hidden, per gate
    pub w_h: [Matrix; 4],
    pub bias: [Vec<f64>; 4],
    /// input, forget, output
    pub peep: [Vec<f64>; 3],
}

impl LstmParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize, peepholes: bool) -> Self {
        LstmParams {
            input_dim,
            hidden_dim,
            peepholes,
            w_x: std::array::from_fn(|_| Matrix::zeros(hidden_dim, input_dim)),
            w_h: std::array::from_fn(|_| Matrix::zeros(hidden_dim, hidden_dim)),
            bias: std::array::from_fn(|_| vec![0.0; hidden_dim]),
            peep: std::array::from_fn(|_| vec![0.0; hidden_dim]),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim, self.hidden_dim, self.peepholes)
    }

    fn check_shapes(&self) -> Result<()> {
        let h = self.hidden_dim;
        let dim = |what, expected, got| {
            if expected == got {
                Ok(())
            } else {
                Err(Error::Dimension { what, expected, got })
            }
        };
        for g in 0..4 {
            dim("lstm input weights", h * self.input_dim, self.w_x[g].as_slice().len())?;
            dim("lstm input weight rows", h, self.w_x[g].rows())?;
            dim("lstm recurrent weights", h * h, self.w_h[g].as_slice().len())?;
            dim("lstm recurrent weight rows", h, self.w_h[g].rows())?;
            dim("lstm bias", h, self.bias[g].len())?;
        }
        for p in &self.peep {
            dim("lstm peephole", h, p.len())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmState {
    pub h: Vec<f64>,
    pub c: Vec<f64>,
}

impl LstmState {
    pub fn zeros(hidden_dim: usize) -> Self {
        LstmState {
            h: vec![0.0; hidden_dim],
            c: vec![0.0; hidden_dim],
        }
    }
}

/// Everything the backward pass needs from one forward step.
#[derive(Debug, Clone)]
pub struct StepCache {
    pub x: Vec<f64>,
    pub h_prev: Vec<f64>,
    pub c_prev: Vec<f64>,
    /// Activated gate values, indexed by gate constant.
    pub gates: [Vec<f64>; 4],
    pub c: Vec<f64>,
    pub tanh_c: Vec<f64>,
    pub h: Vec<f64>,
}

impl StepCache {
    pub fn state(&self) -> LstmState {
        LstmState {
            h: self.h.clone(),
            c: self.c.clone(),
        }
    }
}

/// One LSTM step:
///
/// ```text
/// i  = σ(Wxi x + Whi h + pi ⊙ c + bi)
/// f  = σ(Wxf x + Whf h + pf ⊙ c + bf)
/// g  = tanh(Wxc x + Whc h + bc)
/// c' = f ⊙ c + i ⊙ g
/// o  = σ(Wxo x + Who h + po ⊙ c' + bo)
/// h' = o ⊙ tanh(c')
/// ```
pub fn lstm_step(p: &LstmParams, x: &[f64], s: &LstmState) -> Result<StepCache> {
    let h = p.hidden_dim;
    if x.len() != p.input_dim {
        return Err(Error::Dimension {
            what: "lstm input",
            expected: p.input_dim,
            got: x.len(),
        });
    }
    if s.h.len() != h || s.c.len() != h {
        return Err(Error::Dimension {
            what: "lstm state",
            expected: h,
            got: s.h.len().min(s.c.len()),
        });
    }

    let mut pre: [Vec<f64>; 4] = std::array::from_fn(|g| p.bias[g].clone());
    for (g, a) in pre.iter_mut().enumerate() {
        p.w_x[g].mul_vec_acc(x, a);
        p.w_h[g].mul_vec_acc(&s.h, a);
    }
    if p.peepholes {
        for k in 0..h {
            pre[INPUT][k] += p.peep[0][k] * s.c[k];
            pre[FORGET][k] += p.peep[1][k] * s.c[k];
        }
    }
    let i: Vec<f64> = pre[INPUT].iter().map(|&v| sigmoid(v)).collect();
    let f: Vec<f64> = pre[FORGET].iter().map(|&v| sigmoid(v)).collect();
    let g: Vec<f64> = pre[CELL].iter().map(|&v| v.tanh()).collect();
    let c: Vec<f64> = (0..h).map(|k| f[k] * s.c[k] + i[k] * g[k]).collect();
    if p.peepholes {
        for k in 0..h {
            pre[OUTPUT][k] += p.peep[2][k] * c[k];
        }
    }
    let o: Vec<f64> = pre[OUTPUT].iter().map(|&v| sigmoid(v)).collect();
    let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
    let out: Vec<f64> = o.iter().zip(&tanh_c).map(|(a, b)| a * b).collect();
    if !out.iter().chain(&c).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("lstm step"));
    }
    Ok(StepCache {
        x: x.to_vec(),
        h_prev: s.h.clone(),
        c_prev: s.c.clone(),
        gates: [i, f, g, o],
        c,
        tanh_c,
        h: out,
    })
}

pub fn lstm_cell_forward(p: &LstmParams, x: &[f64], s: &LstmState) -> Result<(Vec<f64>, LstmState)> {
    let cache = lstm_step(p, x, s)?;
    Ok((cache.h.clone(), LstmState { h: cache.h, c: cache.c }))
}

/// Runs a sequence from the zero state, keeping per-step caches.
pub fn lstm_sequence_forward(p: &LstmParams, xs: &[Vec<f64>]) -> Result<Vec<StepCache>> {
    p.check_shapes()?;
    let mut state = LstmState::zeros(p.hidden_dim);
    let mut caches = Vec::with_capacity(xs.len());
    for x in xs {
        let cache = lstm_step(p, x, &state)?;
        state = cache.state();
        caches.push(cache);
    }
    Ok(caches)
}

/// Full backpropagation through time. `dh[t]` is ∂loss/∂h_t coming from
/// outside the layer. Returns the parameter gradients and ∂loss/∂x_t.
pub fn lstm_sequence_backward(
    p: &LstmParams,
    caches: &[StepCache],
    dh: &[Vec<f64>],
) -> Result<(LstmParams, Vec<Vec<f64>>)> {
    if caches.len() != dh.len() {
        return Err(Error::Dimension {
            what: "bptt output gradients",
            expected: caches.len(),
            got: dh.len(),
        });
    }
    let h = p.hidden_dim;
    let mut grads = p.zeros_like();
    let mut dxs = vec![Vec::new(); caches.len()];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];

    for t in (0..caches.len()).rev() {
        let cache = &caches[t];
        if dh[t].len() != h {
            return Err(Error::Dimension {
                what: "bptt output gradient",
                expected: h,
                got: dh[t].len(),
            });
        }
        let [i, f, g, o] = &cache.gates;
        let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; h]);
        let mut dc_prev = vec![0.0; h];
        for k in 0..h {
            let dhk = dh[t][k] + dh_next[k];
            da[OUTPUT][k] = dhk * cache.tanh_c[k] * o[k] * (1.0 - o[k]);
            let mut dc = dhk * o[k] * (1.0 - cache.tanh_c[k] * cache.tanh_c[k]) + dc_next[k];
            if p.peepholes {
                dc += da[OUTPUT][k] * p.peep[2][k];
            }
            da[INPUT][k] = dc * g[k] * i[k] * (1.0 - i[k]);
            da[FORGET][k] = dc * cache.c_prev[k] * f[k] * (1.0 - f[k]);
            da[CELL][k] = dc * i[k] * (1.0 - g[k] * g[k]);
            dc_prev[k] = dc * f[k];
            if p.peepholes {
                dc_prev[k] += da[INPUT][k] * p.peep[0][k] + da[FORGET][k] * p.peep[1][k];
            }
        }

        let mut dx = vec![0.0; p.input_dim];
        let mut dh_prev = vec![0.0; h];
        for gate in 0..4 {
            grads.w_x[gate].add_outer(&da[gate], &cache.x);
            grads.w_h[gate].add_outer(&da[gate], &cache.h_prev);
            for (b, d) in grads.bias[gate].iter_mut().zip(&da[gate]) {
                *b += d;
            }
            p.w_x[gate].mul_t_vec_acc(&da[gate], &mut dx);
            p.w_h[gate].mul_t_vec_acc(&da[gate], &mut dh_prev);
        }
        if p.peepholes {
            for k in 0..h {
                grads.peep[0][k] += da[INPUT][k] * cache.c_prev[k];
                grads.peep[1][k] += da[FORGET][k] * cache.c_prev[k];
                grads.peep[2][k] += da[OUTPUT][k] * cache.c[k];
            }
        }
        dxs[t] = dx;
        dh_next = dh_prev;
        dc_next = dc_prev;
    }
    Ok((grads, dxs))
}

/// A fixed, ordered collection of parameter tensors.
pub trait Params {
    fn tensors(&self) -> Vec<&[f64]>;
    fn tensors_mut(&mut self) -> Vec<&mut [f64]>;
}

impl Params for Vec<f64> {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![self.as_slice()]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![self.as_mut_slice()]
    }
}

impl Params for LstmParams {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::with_capacity(15);
        for g in 0..4 {
            out.push(self.w_x[g].as_slice());
            out.push(self.w_h[g].as_slice());
            out.push(&self.bias[g]);
        }
        out.extend(self.peep.iter().map(Vec::as_slice));
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::with_capacity(15);
        let LstmParams {
            w_x, w_h, bias, peep, ..
        } = self;
        for ((wx, wh), b) in w_x.iter_mut().zip(w_h.iter_mut()).zip(bias.iter_mut()) {
            out.push(wx.as_mut_slice());
            out.push(wh.as_mut_slice());
            out.push(b.as_mut_slice());
        }
        out.extend(peep.iter_mut().map(Vec::as_mut_slice));
        out
    }
}

/// w ← w − lr·g
pub fn sgd_step(w: &mut [f64], g: &[f64], lr: f64) -> Result<()> {
    if w.len() != g.len() {
        return Err(Error::Dimension {
            what: "sgd gradient",
            expected: w.len(),
            got: g.len(),
        });
    }
    for (wi, gi) in w.iter_mut().zip(g) {
        *wi -= lr * gi;
    }
    Ok(())
}

/// Applies [`sgd_step`] tensor by tensor. Note that two successive updates
/// equal one update with the summed gradient only because the rule is
/// linear; in training the second gradient is recomputed at the moved
/// parameters, so the two do not commute with loss re-evaluation.
pub fn sgd_update<P: Params + ?Sized>(params: &mut P, grads: &P, lr: f64) -> Result<()> {
    let gs = grads.tensors();
    let mut ws = params.tensors_mut();
    if ws.len() != gs.len() {
        return Err(Error::Dimension {
            what: "sgd tensor count",
            expected: ws.len(),
            got: gs.len(),
        });
    }
    for (w, g) in ws.iter_mut().zip(gs) {
        sgd_step(w, g, lr)?;
    }
    Ok(())
}

pub fn global_norm<P: Params + ?Sized>(grads: &P) -> f64 {
    let mut acc = 0.0;
    for t in grads.tensors() {
        acc += dot(t, t);
    }
    acc.sqrt()
}

/// Rescales `grads` so its global L2 norm is at most `max_norm`. Returns
/// the norm before clipping.
pub fn clip_norm<P: Params + ?Sized>(grads: &mut P, max_norm: f64) -> f64 {
    let norm = global_norm(grads);
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for t in grads.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= scale);
        }
    }
    norm
}

/// Compares `analytic` against central differences of `loss` around
/// `params`, coordinate by coordinate. Returns the largest relative error,
/// using `max(|a|, |n|, 1e-8)` as denominator.
pub fn grad_check<P, F>(params: &P, analytic: &P, eps: f64, mut loss: F) -> Result<f64>
where
    P: Params + Clone,
    F: FnMut(&P) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::Config(format!("grad_check eps must be positive, got {eps}")));
    }
    let shapes: Vec<usize> = params.tensors().iter().map(|t| t.len()).collect();
    let analytic_t = analytic.tensors();
    if analytic_t.iter().map(|t| t.len()).ne(shapes.iter().copied()) {
        return Err(Error::Dimension {
            what: "grad_check analytic gradient",
            expected: shapes.iter().sum(),
            got: analytic_t.iter().map(|t| t.len()).sum(),
        });
    }
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for (ti, &len) in shapes.iter().enumerate() {
        for k in 0..len {
            let orig = probe.tensors()[ti][k];
            probe.tensors_mut()[ti][k] = orig + eps;
            let plus = loss(&probe);
            probe.tensors_mut()[ti][k] = orig - eps;
            let minus = loss(&probe);
            probe.tensors_mut()[ti][k] = orig;
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite("grad_check loss"));
            }
            let numeric = (plus - minus) / (2.0 * eps);
            let a = analytic_t[ti][k];
            let denom = a.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((a - numeric).abs() / denom);
        }
    }
    Ok(worst)
}
