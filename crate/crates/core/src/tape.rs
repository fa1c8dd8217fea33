//! Reverse-mode autodiff on an append-only op tape.
//!
//! Forward calls record ops and evaluate immediately (define-by-run);
//! [`Tape::backward`] walks the recorded ops in reverse and accumulates
//! vector-Jacobian products. Buffers are 2-d (rows x cols); a scalar is
//! 1 x 1 and a bias row is 1 x n.
//!
//! `backward` may be called more than once: each call propagates a fresh
//! unit seed through the graph and adds the result into the stored
//! gradients, so two calls yield exactly twice the gradient.

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::tensor::{dot, mm, mm_nt, mm_tn};

pub type BufId = usize;

/// Default layer-norm epsilon, added inside the square root.
pub const LAYER_NORM_EPS: f64 = 1e-5;

struct Buf {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

enum Op {
    MatMul { a: BufId, b: BufId, out: BufId },
    /// out = a * b^T, with b stored row-major as [n x k].
    MatMulNT { a: BufId, b: BufId, out: BufId },
    Add { a: BufId, b: BufId, out: BufId },
    /// Row-broadcast bias add: bias is 1 x n.
    AddBiasRow { x: BufId, bias: BufId, out: BufId },
    Scale { x: BufId, s: f64, out: BufId },
    /// Elementwise product with a constant mask (no gradient to the mask).
    MulMask { x: BufId, mask: Vec<f64>, out: BufId },
    LayerNorm {
        x: BufId,
        gamma: BufId,
        beta: BufId,
        out: BufId,
        xhat: Vec<f64>,
        inv_std: Vec<f64>,
    },
    SoftmaxRows { x: BufId, out: BufId },
    Gelu { x: BufId, out: BufId },
    MeanRows { x: BufId, out: BufId },
    ConcatCols { xs: Vec<BufId>, out: BufId },
    ConcatRows { xs: Vec<BufId>, out: BufId },
    SigmoidBce {
        logits: BufId,
        labels: Vec<f64>,
        weights: [f64; 2],
        out: BufId,
    },
}

#[derive(Default)]
pub struct Tape {
    bufs: Vec<Buf>,
    ops: Vec<Op>,
    grads: Vec<Option<Vec<f64>>>,
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    /// Registers a leaf buffer (input or parameter values).
    pub fn input(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> Result<BufId> {
        if rows * cols != data.len() {
            return Err(Error::Contract(format!(
                "buffer {}x{} wants {} values, got {}",
                rows,
                cols,
                rows * cols,
                data.len()
            )));
        }
        Ok(self.push(rows, cols, data))
    }

    fn push(&mut self, rows: usize, cols: usize, data: Vec<f64>) -> BufId {
        self.bufs.push(Buf { rows, cols, data });
        self.grads.push(None);
        self.bufs.len() - 1
    }

    pub fn value(&self, id: BufId) -> &[f64] {
        &self.bufs[id].data
    }

    pub fn dims(&self, id: BufId) -> (usize, usize) {
        let b = &self.bufs[id];
        (b.rows, b.cols)
    }

    /// Gradient of the last backward passes w.r.t. buffer `id`; `None` if no
    /// gradient ever flowed to it (an unused leaf has zero gradient).
    pub fn grad(&self, id: BufId) -> Option<&[f64]> {
        self.grads[id].as_deref()
    }

    pub fn grad_or_zeros(&self, id: BufId) -> Vec<f64> {
        match &self.grads[id] {
            Some(g) => g.clone(),
            None => vec![0.0; self.bufs[id].data.len()],
        }
    }

    // ── forward ops ──────────────────────────────────────────────────────

    pub fn matmul(&mut self, a: BufId, b: BufId) -> Result<BufId> {
        let (m, ka) = self.dims(a);
        let (kb, n) = self.dims(b);
        if ka != kb {
            return Err(Error::Contract(format!(
                "matmul inner dims {ka} vs {kb}"
            )));
        }
        let out = mm(self.value(a), self.value(b), m, ka, n);
        let id = self.push(m, n, out);
        self.ops.push(Op::MatMul { a, b, out: id });
        Ok(id)
    }

    /// a[m x k] * b[n x k]^T -> [m x n].
    pub fn matmul_nt(&mut self, a: BufId, b: BufId) -> Result<BufId> {
        let (m, ka) = self.dims(a);
        let (n, kb) = self.dims(b);
        if ka != kb {
            return Err(Error::Contract(format!(
                "matmul_nt inner dims {ka} vs {kb}"
            )));
        }
        let out = mm_nt(self.value(a), self.value(b), m, ka, n);
        let id = self.push(m, n, out);
        self.ops.push(Op::MatMulNT { a, b, out: id });
        Ok(id)
    }

    pub fn add(&mut self, a: BufId, b: BufId) -> Result<BufId> {
        let (ra, ca) = self.dims(a);
        let (rb, cb) = self.dims(b);
        if (ra, ca) != (rb, cb) {
            return Err(Error::Contract(format!(
                "add shapes {ra}x{ca} vs {rb}x{cb}"
            )));
        }
        let data = self
            .value(a)
            .iter()
            .zip(self.value(b))
            .map(|(x, y)| x + y)
            .collect();
        let id = self.push(ra, ca, data);
        self.ops.push(Op::Add { a, b, out: id });
        Ok(id)
    }

    pub fn add_bias_row(&mut self, x: BufId, bias: BufId) -> Result<BufId> {
        let (r, c) = self.dims(x);
        let (rb, cb) = self.dims(bias);
        if rb != 1 || cb != c {
            return Err(Error::Contract(format!(
                "bias must be 1x{c}, got {rb}x{cb}"
            )));
        }
        let mut data = self.value(x).to_vec();
        let b = self.value(bias).to_vec();
        for row in data.chunks_exact_mut(c) {
            for (v, bj) in row.iter_mut().zip(&b) {
                *v += bj;
            }
        }
        let id = self.push(r, c, data);
        self.ops.push(Op::AddBiasRow { x, bias, out: id });
        Ok(id)
    }

    /// Affine layer: x * w (+ bias row).
    pub fn dense(&mut self, x: BufId, w: BufId, bias: Option<BufId>) -> Result<BufId> {
        let y = self.matmul(x, w)?;
        match bias {
            Some(b) => self.add_bias_row(y, b),
            None => Ok(y),
        }
    }

    pub fn scale(&mut self, x: BufId, s: f64) -> Result<BufId> {
        let (r, c) = self.dims(x);
        let data = self.value(x).iter().map(|v| v * s).collect();
        let id = self.push(r, c, data);
        self.ops.push(Op::Scale { x, s, out: id });
        Ok(id)
    }

    /// Inverted dropout. Identity when `train` is false or rate is 0;
    /// otherwise zeroes elements with probability `rate` and scales the
    /// survivors by 1/(1-rate), drawing the mask from `stream`.
    pub fn dropout(
        &mut self,
        x: BufId,
        rate: f64,
        train: bool,
        stream: &mut Stream,
    ) -> Result<BufId> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        if !train || rate == 0.0 {
            return Ok(x);
        }
        let (r, c) = self.dims(x);
        let keep = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..r * c)
            .map(|_| if stream.next_f64() < rate { 0.0 } else { keep })
            .collect();
        let data = self
            .value(x)
            .iter()
            .zip(&mask)
            .map(|(v, m)| v * m)
            .collect();
        let id = self.push(r, c, data);
        self.ops.push(Op::MulMask { x, mask, out: id });
        Ok(id)
    }

    /// Row-wise layer normalization with population variance (1/d) and
    /// epsilon inside the square root. gamma and beta are 1 x d.
    pub fn layer_norm(&mut self, x: BufId, gamma: BufId, beta: BufId, eps: f64) -> Result<BufId> {
        let (r, d) = self.dims(x);
        if self.dims(gamma) != (1, d) || self.dims(beta) != (1, d) {
            return Err(Error::Contract(format!(
                "layer_norm scale/shift must be 1x{d}"
            )));
        }
        let mut out = vec![0.0; r * d];
        let mut xhat = vec![0.0; r * d];
        let mut inv_std = vec![0.0; r];
        let g = self.value(gamma).to_vec();
        let be = self.value(beta).to_vec();
        for (i, row) in self.value(x).chunks_exact(d).enumerate() {
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / (var + eps).sqrt();
            inv_std[i] = is;
            for j in 0..d {
                let xh = (row[j] - mean) * is;
                xhat[i * d + j] = xh;
                out[i * d + j] = g[j] * xh + be[j];
            }
        }
        let id = self.push(r, d, out);
        self.ops.push(Op::LayerNorm {
            x,
            gamma,
            beta,
            out: id,
            xhat,
            inv_std,
        });
        Ok(id)
    }

    /// Row-wise softmax with max subtraction.
    pub fn softmax_rows(&mut self, x: BufId) -> Result<BufId> {
        let (r, c) = self.dims(x);
        if c == 0 {
            return Err(Error::Input("softmax over empty rows".into()));
        }
        let mut out = vec![0.0; r * c];
        for (row_in, row_out) in self
            .value(x)
            .chunks_exact(c)
            .zip(out.chunks_exact_mut(c))
        {
            let max = row_in.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for (o, v) in row_out.iter_mut().zip(row_in) {
                *o = (v - max).exp();
                z += *o;
            }
            for o in row_out.iter_mut() {
                *o /= z;
            }
        }
        let id = self.push(r, c, out);
        self.ops.push(Op::SoftmaxRows { x, out: id });
        Ok(id)
    }

    /// Gaussian error linear unit (tanh approximation).
    pub fn gelu(&mut self, x: BufId) -> Result<BufId> {
        let (r, c) = self.dims(x);
        let data = self.value(x).iter().map(|&v| gelu_scalar(v)).collect();
        let id = self.push(r, c, data);
        self.ops.push(Op::Gelu { x, out: id });
        Ok(id)
    }

    /// Global average pool over rows: N x d -> 1 x d. Each column is
    /// accumulated over its values sorted ascending (total order), which
    /// makes the result bitwise invariant to row permutations.
    pub fn mean_rows(&mut self, x: BufId) -> Result<BufId> {
        let (r, c) = self.dims(x);
        if r == 0 {
            return Err(Error::Input("mean over zero rows".into()));
        }
        let v = self.value(x);
        let mut out = vec![0.0; c];
        let mut col = vec![0.0; r];
        for (j, o) in out.iter_mut().enumerate() {
            for i in 0..r {
                col[i] = v[i * c + j];
            }
            col.sort_by(f64::total_cmp);
            *o = col.iter().sum::<f64>() / r as f64;
        }
        let id = self.push(1, c, out);
        self.ops.push(Op::MeanRows { x, out: id });
        Ok(id)
    }

    /// Horizontal concatenation: all inputs share the row count.
    pub fn concat_cols(&mut self, xs: &[BufId]) -> Result<BufId> {
        if xs.is_empty() {
            return Err(Error::Contract("concat_cols of nothing".into()));
        }
        let r = self.dims(xs[0]).0;
        let mut cols = 0;
        for &x in xs {
            let (rx, cx) = self.dims(x);
            if rx != r {
                return Err(Error::Contract(format!(
                    "concat_cols row mismatch {rx} vs {r}"
                )));
            }
            cols += cx;
        }
        let mut data = vec![0.0; r * cols];
        let mut off = 0;
        for &x in xs {
            let (_, cx) = self.dims(x);
            let v = self.value(x);
            for i in 0..r {
                data[i * cols + off..i * cols + off + cx]
                    .copy_from_slice(&v[i * cx..(i + 1) * cx]);
            }
            off += cx;
        }
        let id = self.push(r, cols, data);
        self.ops.push(Op::ConcatCols {
            xs: xs.to_vec(),
            out: id,
        });
        Ok(id)
    }

    /// Vertical concatenation: all inputs share the column count.
    pub fn concat_rows(&mut self, xs: &[BufId]) -> Result<BufId> {
        if xs.is_empty() {
            return Err(Error::Contract("concat_rows of nothing".into()));
        }
        let c = self.dims(xs[0]).1;
        let mut rows = 0;
        let mut data = Vec::new();
        for &x in xs {
            let (rx, cx) = self.dims(x);
            if cx != c {
                return Err(Error::Contract(format!(
                    "concat_rows col mismatch {cx} vs {c}"
                )));
            }
            rows += rx;
            data.extend_from_slice(self.value(x));
        }
        let id = self.push(rows, c, data);
        self.ops.push(Op::ConcatRows {
            xs: xs.to_vec(),
            out: id,
        });
        Ok(id)
    }

    /// Class-weighted binary cross-entropy on logits, averaged over the
    /// batch. Stable log-sum-exp form; labels must be exactly 0 or 1, and
    /// `weights` is (w0, w1) indexed by label.
    pub fn sigmoid_bce(
        &mut self,
        logits: BufId,
        labels: &[f64],
        weights: (f64, f64),
    ) -> Result<BufId> {
        let (b, c) = self.dims(logits);
        if c != 1 {
            return Err(Error::Contract(format!("logits must be Bx1, got {b}x{c}")));
        }
        if labels.len() != b {
            return Err(Error::Contract(format!(
                "{} labels for {} logits",
                labels.len(),
                b
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 0.0 && y != 1.0) {
            return Err(Error::Input(format!("label must be 0 or 1, got {bad}")));
        }
        let mut loss = 0.0;
        for (&z, &y) in self.value(logits).iter().zip(labels) {
            let w = if y == 1.0 { weights.1 } else { weights.0 };
            // softplus(z) - y z, computed as max(z,0) - y z + ln(1 + e^{-|z|})
            loss += w * (z.max(0.0) - y * z + (-z.abs()).exp().ln_1p());
        }
        loss /= b as f64;
        let id = self.push(1, 1, vec![loss]);
        self.ops.push(Op::SigmoidBce {
            logits,
            labels: labels.to_vec(),
            weights: [weights.0, weights.1],
            out: id,
        });
        Ok(id)
    }

    // ── backward ─────────────────────────────────────────────────────────

    /// Reverse pass from a scalar loss. Accumulates into stored gradients.
    pub fn backward(&mut self, loss: BufId) -> Result<()> {
        let (r, c) = self.dims(loss);
        if (r, c) != (1, 1) {
            return Err(Error::Contract(format!(
                "backward needs a scalar loss, got {r}x{c}"
            )));
        }
        // Fresh seed per call; fold into persistent grads at the end so a
        // repeated call adds exactly one more full gradient.
        let mut local: Vec<Option<Vec<f64>>> = vec![None; self.bufs.len()];
        local[loss] = Some(vec![1.0]);

        macro_rules! take {
            ($id:expr) => {
                match local[$id].take() {
                    Some(g) => g,
                    None => continue,
                }
            };
        }
        macro_rules! acc {
            ($id:expr, $g:expr) => {{
                let g = $g;
                match &mut local[$id] {
                    Some(cur) => {
                        for (a, b) in cur.iter_mut().zip(&g) {
                            *a += b;
                        }
                    }
                    None => local[$id] = Some(g),
                }
            }};
        }

        for op in self.ops.iter().rev() {
            match op {
                Op::MatMul { a, b, out } => {
                    let go = take!(*out);
                    let (m, k) = (self.bufs[*a].rows, self.bufs[*a].cols);
                    let n = self.bufs[*b].cols;
                    acc!(*a, mm_nt(&go, &self.bufs[*b].data, m, n, k));
                    acc!(*b, mm_tn(&self.bufs[*a].data, &go, m, k, n));
                }
                Op::MatMulNT { a, b, out } => {
                    let go = take!(*out);
                    let (m, k) = (self.bufs[*a].rows, self.bufs[*a].cols);
                    let n = self.bufs[*b].rows;
                    acc!(*a, mm(&go, &self.bufs[*b].data, m, n, k));
                    acc!(*b, mm_tn(&go, &self.bufs[*a].data, m, n, k));
                }
                Op::Add { a, b, out } => {
                    let go = take!(*out);
                    acc!(*b, go.clone());
                    acc!(*a, go);
                }
                Op::AddBiasRow { x, bias, out } => {
                    let go = take!(*out);
                    let c = self.bufs[*x].cols;
                    let mut gb = vec![0.0; c];
                    for row in go.chunks_exact(c) {
                        for (g, v) in gb.iter_mut().zip(row) {
                            *g += v;
                        }
                    }
                    acc!(*bias, gb);
                    acc!(*x, go);
                }
                Op::Scale { x, s, out } => {
                    let mut go = take!(*out);
                    for g in go.iter_mut() {
                        *g *= s;
                    }
                    acc!(*x, go);
                }
                Op::MulMask { x, mask, out } => {
                    let mut go = take!(*out);
                    for (g, m) in go.iter_mut().zip(mask) {
                        *g *= m;
                    }
                    acc!(*x, go);
                }
                Op::LayerNorm {
                    x,
                    gamma,
                    beta,
                    out,
                    xhat,
                    inv_std,
                } => {
                    let go = take!(*out);
                    let d = self.bufs[*x].cols;
                    let g = &self.bufs[*gamma].data;
                    let mut ggamma = vec![0.0; d];
                    let mut gbeta = vec![0.0; d];
                    let mut gx = vec![0.0; go.len()];
                    for (i, grow) in go.chunks_exact(d).enumerate() {
                        let xh = &xhat[i * d..(i + 1) * d];
                        let is = inv_std[i];
                        let mut mean_dxh = 0.0;
                        let mut mean_dxh_xh = 0.0;
                        for j in 0..d {
                            ggamma[j] += grow[j] * xh[j];
                            gbeta[j] += grow[j];
                            let dxh = grow[j] * g[j];
                            mean_dxh += dxh;
                            mean_dxh_xh += dxh * xh[j];
                        }
                        mean_dxh /= d as f64;
                        mean_dxh_xh /= d as f64;
                        for j in 0..d {
                            let dxh = grow[j] * g[j];
                            gx[i * d + j] = is * (dxh - mean_dxh - xh[j] * mean_dxh_xh);
                        }
                    }
                    acc!(*gamma, ggamma);
                    acc!(*beta, gbeta);
                    acc!(*x, gx);
                }
                Op::SoftmaxRows { x, out } => {
                    let go = take!(*out);
                    let c = self.bufs[*x].cols;
                    let y = &self.bufs[*out].data;
                    let mut gx = vec![0.0; go.len()];
                    for ((grow, yrow), gxrow) in go
                        .chunks_exact(c)
                        .zip(y.chunks_exact(c))
                        .zip(gx.chunks_exact_mut(c))
                    {
                        let dy_dot_y = dot(grow, yrow);
                        for j in 0..c {
                            gxrow[j] = yrow[j] * (grow[j] - dy_dot_y);
                        }
                    }
                    acc!(*x, gx);
                }
                Op::Gelu { x, out } => {
                    let go = take!(*out);
                    let xv = &self.bufs[*x].data;
                    let gx = go
                        .iter()
                        .zip(xv)
                        .map(|(g, &v)| g * gelu_grad_scalar(v))
                        .collect();
                    acc!(*x, gx);
                }
                Op::MeanRows { x, out } => {
                    let go = take!(*out);
                    let (r, c) = (self.bufs[*x].rows, self.bufs[*x].cols);
                    let mut gx = vec![0.0; r * c];
                    for row in gx.chunks_exact_mut(c) {
                        for (g, v) in row.iter_mut().zip(&go) {
                            *g = v / r as f64;
                        }
                    }
                    acc!(*x, gx);
                }
                Op::ConcatCols { xs, out } => {
                    let go = take!(*out);
                    let cols = self.bufs[*out].cols;
                    let r = self.bufs[*out].rows;
                    let mut off = 0;
                    for &xid in xs {
                        let cx = self.bufs[xid].cols;
                        let mut gx = vec![0.0; r * cx];
                        for i in 0..r {
                            gx[i * cx..(i + 1) * cx]
                                .copy_from_slice(&go[i * cols + off..i * cols + off + cx]);
                        }
                        acc!(xid, gx);
                        off += cx;
                    }
                }
                Op::ConcatRows { xs, out } => {
                    let go = take!(*out);
                    let c = self.bufs[*out].cols;
                    let mut row0 = 0;
                    for &xid in xs {
                        let rx = self.bufs[xid].rows;
                        let gx = go[row0 * c..(row0 + rx) * c].to_vec();
                        acc!(xid, gx);
                        row0 += rx;
                    }
                }
                Op::SigmoidBce {
                    logits,
                    labels,
                    weights,
                    out,
                } => {
                    let go = take!(*out);
                    let upstream = go[0];
                    let b = labels.len() as f64;
                    let z = &self.bufs[*logits].data;
                    let gx = z
                        .iter()
                        .zip(labels)
                        .map(|(&zi, &y)| {
                            let w = if y == 1.0 { weights[1] } else { weights[0] };
                            upstream * w * (sigmoid(zi) - y) / b
                        })
                        .collect();
                    acc!(*logits, gx);
                }
            }
        }

        for (slot, g) in self.grads.iter_mut().zip(local) {
            if let Some(g) = g {
                match slot {
                    Some(cur) => {
                        for (a, b) in cur.iter_mut().zip(&g) {
                            *a += b;
                        }
                    }
                    None => *slot = Some(g),
                }
            }
        }
        Ok(())
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

const GELU_C: f64 = 0.7978845608028654; // sqrt(2/pi)
const GELU_A: f64 = 0.044715;

fn gelu_scalar(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad_scalar(x: f64) -> f64 {
    let u = GELU_C * (x + GELU_A * x * x * x);
    let t = u.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}
