//! Dense f64 tensors and the matrix kernels behind every model op.
//!
//! Determinism contract: each output element is reduced in a fixed order
//! that does not depend on the number of worker threads (threads partition
//! whole output rows and never split a reduction), so results are
//! bit-identical across runs and across `ZACHVIT_THREADS` settings.

use crate::error::{Error, Result};
use std::sync::OnceLock;

/// Immutable dense tensor. Values are fixed at construction; ops return new
/// tensors rather than mutating.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Contract(format!(
                "tensor shape {:?} wants {} values, got {}",
                shape,
                n,
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn matrix(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        Tensor::new(vec![rows, cols], data)
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Row count of a 2-d tensor.
    pub fn rows(&self) -> usize {
        debug_assert_eq!(self.shape.len(), 2);
        self.shape[0]
    }

    /// Column count of a 2-d tensor.
    pub fn cols(&self) -> usize {
        debug_assert_eq!(self.shape.len(), 2);
        self.shape[1]
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// Worker thread count, read once from `ZACHVIT_THREADS` (default 1).
pub fn thread_count() -> usize {
    static THREADS: OnceLock<usize> = OnceLock::new();
    *THREADS.get_or_init(|| {
        std::env::var("ZACHVIT_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&n| n >= 1)
            .unwrap_or(1)
    })
}

// Row-parallel work below this many multiply-adds is not worth spawning for.
const PAR_THRESHOLD: usize = 1 << 20;

fn split_rows(c: &mut [f64], n: usize, threads: usize) -> Vec<(usize, &mut [f64])> {
    let rows = c.len() / n;
    let per = rows.div_ceil(threads);
    let mut out = Vec::new();
    let mut rest = c;
    let mut row0 = 0;
    while !rest.is_empty() {
        let take = per.min(rest.len() / n);
        let (head, tail) = rest.split_at_mut(take * n);
        out.push((row0, head));
        row0 += take;
        rest = tail;
    }
    out
}

/// C[m x n] = A[m x k] * B[k x n]. Row-major, accumulates in fixed order
/// (k ascending per element; the 4-way unroll groups k into a fixed tree).
pub fn mm(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    let mut c = vec![0.0; m * n];
    let threads = thread_count();
    if threads > 1 && m >= 2 * threads && m * k * n >= PAR_THRESHOLD {
        std::thread::scope(|scope| {
            for (row0, chunk) in split_rows(&mut c, n, threads) {
                let rows = chunk.len() / n;
                let a_part = &a[row0 * k..(row0 + rows) * k];
                scope.spawn(move || mm_serial(a_part, b, k, n, chunk));
            }
        });
    } else {
        mm_serial(a, b, k, n, &mut c);
    }
    c
}

fn mm_serial(a: &[f64], b: &[f64], k: usize, n: usize, c: &mut [f64]) {
    for (a_row, c_row) in a.chunks_exact(k).zip(c.chunks_exact_mut(n)) {
        let mut l = 0;
        while l + 4 <= k {
            let (a0, a1, a2, a3) = (a_row[l], a_row[l + 1], a_row[l + 2], a_row[l + 3]);
            let b0 = &b[l * n..(l + 1) * n];
            let b1 = &b[(l + 1) * n..(l + 2) * n];
            let b2 = &b[(l + 2) * n..(l + 3) * n];
            let b3 = &b[(l + 3) * n..(l + 4) * n];
            for ((((cj, &b0j), &b1j), &b2j), &b3j) in
                c_row.iter_mut().zip(b0).zip(b1).zip(b2).zip(b3)
            {
                *cj += (a0 * b0j + a1 * b1j) + (a2 * b2j + a3 * b3j);
            }
            l += 4;
        }
        while l < k {
            let al = a_row[l];
            for (cj, &bj) in c_row.iter_mut().zip(&b[l * n..(l + 1) * n]) {
                *cj += al * bj;
            }
            l += 1;
        }
    }
}

/// C[m x n] = A[m x k] * B[n x k]^T. Both operands row-major.
pub fn mm_nt(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    let mut c = vec![0.0; m * n];
    let threads = thread_count();
    if threads > 1 && m >= 2 * threads && m * k * n >= PAR_THRESHOLD {
        std::thread::scope(|scope| {
            for (row0, chunk) in split_rows(&mut c, n, threads) {
                let rows = chunk.len() / n;
                let a_part = &a[row0 * k..(row0 + rows) * k];
                scope.spawn(move || mm_nt_serial(a_part, b, k, n, chunk));
            }
        });
    } else {
        mm_nt_serial(a, b, k, n, &mut c);
    }
    c
}

fn mm_nt_serial(a: &[f64], b: &[f64], k: usize, n: usize, c: &mut [f64]) {
    for (a_row, c_row) in a.chunks_exact(k).zip(c.chunks_exact_mut(n)) {
        for (cj, b_row) in c_row.iter_mut().zip(b.chunks_exact(k)) {
            *cj = dot(a_row, b_row);
        }
    }
    let _ = n;
}

/// Fixed-order dot product (four strided accumulators, then a fixed tree).
pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = [0.0f64; 4];
    let xc = x.chunks_exact(4);
    let yc = y.chunks_exact(4);
    let xr = xc.remainder();
    let yr = yc.remainder();
    for (xs, ys) in xc.zip(yc) {
        acc[0] += xs[0] * ys[0];
        acc[1] += xs[1] * ys[1];
        acc[2] += xs[2] * ys[2];
        acc[3] += xs[3] * ys[3];
    }
    let mut tail = 0.0;
    for (xv, yv) in xr.iter().zip(yr) {
        tail += xv * yv;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// C[k x n] = A[m x k]^T * B[m x n]. Used by matmul backward.
pub fn mm_tn(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), m * n);
    let mut c = vec![0.0; k * n];
    let threads = thread_count();
    if threads > 1 && k >= 2 * threads && m * k * n >= PAR_THRESHOLD {
        std::thread::scope(|scope| {
            for (l0, chunk) in split_rows(&mut c, n, threads) {
                let cols = chunk.len() / n;
                scope.spawn(move || mm_tn_serial(a, b, m, k, n, l0, cols, chunk));
            }
        });
    } else {
        mm_tn_serial(a, b, m, k, n, 0, k, &mut c);
    }
    c
}

fn mm_tn_serial(
    a: &[f64],
    b: &[f64],
    m: usize,
    k: usize,
    n: usize,
    l0: usize,
    cols: usize,
    c: &mut [f64],
) {
    // c rows are A columns l0..l0+cols; i ascends per element.
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let b_row = &b[i * n..(i + 1) * n];
        for (c_row, &ail) in c.chunks_exact_mut(n).zip(&a_row[l0..l0 + cols]) {
            for (cj, &bj) in c_row.iter_mut().zip(b_row) {
                *cj += ail * bj;
            }
        }
    }
}
