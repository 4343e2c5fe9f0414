//! Single-sample layer kernels. Activations are NHWC without the batch axis.

use super::spec::LayerShape;

/// Dot product with eight independent accumulators, summed in a fixed order.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let ca = a.chunks_exact(8);
    let cb = b.chunks_exact(8);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for i in 0..8 {
            acc[i] += x[i] * y[i];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f32, x: &[f32], y: &mut [f32]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Valid cross-correlation plus bias, with optional ReLU.
pub fn conv_forward(shape: &LayerShape, x: &[f32], w: &[f32], b: &[f32], relu: bool, out: &mut [f32]) {
    let LayerShape::Conv {
        in_w,
        in_c,
        kernel: k,
        stride: s,
        out_h,
        out_w,
        out_c,
        ..
    } = *shape
    else {
        unreachable!("conv_forward on fc layer")
    };
    let span = k * in_c;
    for oy in 0..out_h {
        for ox in 0..out_w {
            let o = &mut out[(oy * out_w + ox) * out_c..][..out_c];
            o.copy_from_slice(b);
            for ky in 0..k {
                let xrow = &x[((oy * s + ky) * in_w + ox * s) * in_c..][..span];
                for (f, of) in o.iter_mut().enumerate() {
                    *of += dot(xrow, &w[(f * k + ky) * span..][..span]);
                }
            }
            if relu {
                for v in o.iter_mut() {
                    *v = v.max(0.0);
                }
            }
        }
    }
}

/// Accumulate conv gradients given `dz`, the gradient at the pre-activation.
/// `dx` is skipped when `None` (first layer).
pub fn conv_backward(
    shape: &LayerShape,
    x: &[f32],
    w: &[f32],
    dz: &[f32],
    dw: &mut [f32],
    db: &mut [f32],
    mut dx: Option<&mut [f32]>,
) {
    let LayerShape::Conv {
        in_w,
        in_c,
        kernel: k,
        stride: s,
        out_h,
        out_w,
        out_c,
        ..
    } = *shape
    else {
        unreachable!("conv_backward on fc layer")
    };
    let span = k * in_c;
    for oy in 0..out_h {
        for ox in 0..out_w {
            let g = &dz[(oy * out_w + ox) * out_c..][..out_c];
            for (f, &gf) in g.iter().enumerate() {
                if gf == 0.0 {
                    continue;
                }
                db[f] += gf;
                for ky in 0..k {
                    let xoff = ((oy * s + ky) * in_w + ox * s) * in_c;
                    let woff = (f * k + ky) * span;
                    axpy(gf, &x[xoff..][..span], &mut dw[woff..][..span]);
                    if let Some(dx) = dx.as_deref_mut() {
                        axpy(gf, &w[woff..][..span], &mut dx[xoff..][..span]);
                    }
                }
            }
        }
    }
}

/// `out = W x + b`, with optional ReLU.
pub fn fc_forward(x: &[f32], w: &[f32], b: &[f32], relu: bool, out: &mut [f32]) {
    let n = x.len();
    for (j, o) in out.iter_mut().enumerate() {
        let z = b[j] + dot(&w[j * n..][..n], x);
        *o = if relu { z.max(0.0) } else { z };
    }
}

pub fn fc_backward(
    x: &[f32],
    w: &[f32],
    dz: &[f32],
    dw: &mut [f32],
    db: &mut [f32],
    mut dx: Option<&mut [f32]>,
) {
    let n = x.len();
    for (j, &g) in dz.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        db[j] += g;
        axpy(g, x, &mut dw[j * n..][..n]);
        if let Some(dx) = dx.as_deref_mut() {
            axpy(g, &w[j * n..][..n], dx);
        }
    }
}
