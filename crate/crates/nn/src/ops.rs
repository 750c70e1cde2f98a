//! Elementwise activations and the dense matrix kernels shared by the models.

/// `log(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else if x < -30.0 {
        x.exp()
    } else {
        x.exp().ln_1p()
    }
}

/// `x · tanh(softplus(x))`, using `tanh(softplus(x)) = n / (n + 2)` with
/// `n = eˣ(eˣ + 2)` so only one exponential is needed.
pub fn mish(x: f64) -> f64 {
    if x > 20.0 {
        return x;
    }
    let e = x.exp();
    let n = e * (e + 2.0);
    x * n / (n + 2.0)
}

pub fn mish_grad(x: f64) -> f64 {
    if x > 20.0 {
        return 1.0;
    }
    let e = x.exp();
    let n = e * (e + 2.0);
    let t = n / (n + 2.0);
    let sigmoid = e / (1.0 + e);
    t + x * (1.0 - t * t) * sigmoid
}

pub fn mish_inplace(pre: &[f64], out: &mut [f64]) {
    for (o, &x) in out.iter_mut().zip(pre) {
        *o = mish(x);
    }
}

/// `grad ← grad ⊙ mish'(pre)`.
pub fn mish_backward(pre: &[f64], grad: &mut [f64]) {
    for (g, &x) in grad.iter_mut().zip(pre) {
        *g *= mish_grad(x);
    }
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `C (m×n) = α A (m×k) B (k×n) + β C`, all row-major and contiguous.
pub fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    b: &[f64],
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: slice lengths cover the strided extents checked above
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `C (m×n) = α A (m×k) Bᵀ + β C` where `B` is stored `n×k`.
pub fn gemm_bt(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    b: &[f64],
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: as in `gemm`, with B read through transposed strides
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// `C (m×n) = α Aᵀ B + β C` where `A` is stored `k×m` and `B` is `k×n`.
pub fn gemm_at(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: &[f64],
    b: &[f64],
    beta: f64,
    c: &mut [f64],
) {
    debug_assert!(a.len() >= m * k && b.len() >= k * n && c.len() >= m * n);
    // SAFETY: as in `gemm`, with A read through transposed strides
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            alpha,
            a.as_ptr(),
            1,
            m as isize,
            b.as_ptr(),
            n as isize,
            1,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Affine layer over a batch: `y (B×out) = x (B×in) Wᵀ + b`, `W` stored `out×in`.
pub fn affine_forward(x: &[f64], batch: usize, w: &[f64], b: &[f64], out: usize, y: &mut [f64]) {
    let inp = w.len() / out;
    for row in y.chunks_mut(out).take(batch) {
        row.copy_from_slice(b);
    }
    gemm_bt(batch, inp, out, 1.0, x, w, 1.0, y);
}

/// Accumulates `dW`, `db` and optionally writes `dx` for [`affine_forward`].
#[allow(clippy::too_many_arguments)]
pub fn affine_backward(
    x: &[f64],
    batch: usize,
    w: &[f64],
    out: usize,
    dy: &[f64],
    dw: &mut [f64],
    db: &mut [f64],
    dx: Option<&mut [f64]>,
) {
    let inp = w.len() / out;
    gemm_at(out, batch, inp, 1.0, dy, x, 1.0, dw);
    for row in dy.chunks(out).take(batch) {
        for (d, &g) in db.iter_mut().zip(row) {
            *d += g;
        }
    }
    if let Some(dx) = dx {
        gemm(batch, out, inp, 1.0, dy, w, 0.0, dx);
    }
}
