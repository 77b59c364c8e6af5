//! Forward and backward kernels on plain tensors.
//!
//! These are the numerical primitives behind both the recording [`Tape`]
//! and the [`Eager`] executor. Every kernel accumulates in a fixed order
//! that does not depend on how rayon schedules work, so results are
//! bit-identical across thread counts.
//!
//! [`Tape`]: crate::autograd::Tape
//! [`Eager`]: crate::autograd::Eager

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{Element, Shape, Tensor4};

/// Kernel tensors are stored as `[k, k, c_in, c_out]` in the four slots of
/// a [`Shape`].
pub fn kernel_shape(k: usize, c_in: usize, c_out: usize) -> Shape {
    Shape::new(k, k, c_in, c_out)
}

pub fn bias_shape(c_out: usize) -> Shape {
    Shape::new(1, 1, 1, c_out)
}

/// Number of partial sums used for kernel gradients. Fixed so that the
/// reduction tree never depends on the thread count.
const KERNEL_GRAD_CHUNKS: usize = 16;

fn check_conv(input: Shape, kernel: Shape, bias: Shape) -> Result<(usize, usize)> {
    if kernel.n != kernel.h {
        return Err(Error::dim(format!("kernel {kernel} is not square")));
    }
    let k = kernel.n;
    if k % 2 == 0 {
        return Err(Error::UnsupportedKernel(k));
    }
    if input.c != kernel.w {
        return Err(Error::dim(format!(
            "conv input has {} channels, kernel expects {}",
            input.c, kernel.w
        )));
    }
    if bias != bias_shape(kernel.c) {
        return Err(Error::dim(format!(
            "bias {bias} does not match {} output channels",
            kernel.c
        )));
    }
    if input.is_empty() {
        return Err(Error::dim(format!("empty conv input {input}")));
    }
    Ok((k, (k - 1) / 2))
}

/// Strided read-only matrix view for [`matmul`].
#[derive(Clone, Copy)]
struct MatRef<'a, T> {
    data: &'a [T],
    rows: usize,
    cols: usize,
    row_stride: usize,
    col_stride: usize,
}

impl<'a, T> MatRef<'a, T> {
    fn row_major(data: &'a [T], rows: usize, cols: usize) -> Self {
        MatRef {
            data,
            rows,
            cols,
            row_stride: cols,
            col_stride: 1,
        }
    }

    fn transposed(self) -> Self {
        MatRef {
            data: self.data,
            rows: self.cols,
            cols: self.rows,
            row_stride: self.col_stride,
            col_stride: self.row_stride,
        }
    }

    fn extent(&self) -> usize {
        if self.rows == 0 || self.cols == 0 {
            0
        } else {
            (self.rows - 1) * self.row_stride + (self.cols - 1) * self.col_stride + 1
        }
    }
}

/// `c = a * b + beta * c` with `c` row-major `a.rows x b.cols`.
fn matmul<T: Element>(a: MatRef<'_, T>, b: MatRef<'_, T>, beta: T, c: &mut [T]) {
    assert_eq!(a.cols, b.rows, "inner dimensions differ");
    assert!(a.extent() <= a.data.len() && b.extent() <= b.data.len());
    assert!(c.len() >= a.rows * b.cols);
    let ld = b.cols as isize;
    // SAFETY: the asserts above bound every strided access, and `c` is a
    // unique borrow so it cannot alias the shared inputs.
    unsafe {
        T::gemm(
            a.rows,
            a.cols,
            b.cols,
            T::one(),
            a.data.as_ptr(),
            (a.row_stride as isize, a.col_stride as isize),
            b.data.as_ptr(),
            (b.row_stride as isize, b.col_stride as isize),
            beta,
            c.as_mut_ptr(),
            (ld, 1),
        );
    }
}

/// Elements targeted per unrolled patch matrix.
const BLOCK_ELEMENTS: usize = 1 << 18;

/// A run of consecutive rows `y0..y0 + rows` of image `n`.
#[derive(Clone, Copy, Debug)]
struct RowBlock {
    n: usize,
    y0: usize,
    rows: usize,
}

/// Fixed tiling of all image rows; depends only on the shape.
fn row_blocks(s: Shape, patch_len: usize) -> Vec<RowBlock> {
    let per = (BLOCK_ELEMENTS / (s.w * patch_len).max(1)).clamp(1, s.h);
    let mut blocks = Vec::new();
    for n in 0..s.n {
        let mut y0 = 0;
        while y0 < s.h {
            let rows = per.min(s.h - y0);
            blocks.push(RowBlock { n, y0, rows });
            y0 += rows;
        }
    }
    blocks
}

/// Unrolls the `k x k` neighbourhoods of a row block into a
/// `(rows * w) x (k * k * c)` matrix ordered like the kernel layout.
fn im2col<T: Element>(inp: &[T], s: Shape, b: RowBlock, k: usize, pad: usize, col: &mut Vec<T>) {
    let c = s.c;
    let patch = k * k * c;
    col.clear();
    col.resize(b.rows * s.w * patch, T::zero());
    for dy in 0..b.rows {
        let y = b.y0 + dy;
        for x in 0..s.w {
            let dst = &mut col[(dy * s.w + x) * patch..][..patch];
            for ky in 0..k {
                let iy = y + ky;
                if iy < pad || iy - pad >= s.h {
                    continue;
                }
                let iy = iy - pad;
                for kx in 0..k {
                    let ix = x + kx;
                    if ix < pad || ix - pad >= s.w {
                        continue;
                    }
                    let src = &inp[s.offset(b.n, iy, ix - pad, 0)..][..c];
                    dst[(ky * k + kx) * c..][..c].copy_from_slice(src);
                }
            }
        }
    }
}

/// Patch matrix of a block: borrowed directly for 1x1 kernels.
fn block_patches<'a, T: Element>(
    inp: &'a [T],
    s: Shape,
    b: RowBlock,
    k: usize,
    pad: usize,
    scratch: &'a mut Vec<T>,
) -> &'a [T] {
    if k == 1 {
        &inp[s.offset(b.n, b.y0, 0, 0)..][..b.rows * s.w * s.c]
    } else {
        im2col(inp, s, b, k, pad, scratch);
        scratch
    }
}

/// Pairs every block with its disjoint slice of an NHWC buffer.
fn split_blocks<'a, T>(data: &'a mut [T], blocks: &[RowBlock], row_len: usize) -> Vec<(RowBlock, &'a mut [T])> {
    let mut rest = data;
    let mut out = Vec::with_capacity(blocks.len());
    for &b in blocks {
        let (head, tail) = std::mem::take(&mut rest).split_at_mut(b.rows * row_len);
        out.push((b, head));
        rest = tail;
    }
    out
}

/// Same-padded 2-D cross-correlation with zero padding and broadcast bias.
///
/// Each block of rows is unrolled into a patch matrix and multiplied by the
/// kernel, viewed as a `(k * k * c_in) x c_out` matrix.
pub fn conv2d_forward<T: Element>(
    input: &Tensor4<T>,
    kernel: &Tensor4<T>,
    bias: &Tensor4<T>,
) -> Result<Tensor4<T>> {
    let is = input.shape();
    let (k, pad) = check_conv(is, kernel.shape(), bias.shape())?;
    let c_out = kernel.shape().c;
    let patch = k * k * is.c;
    let mut out = Tensor4::zeros(Shape::new(is.n, is.h, is.w, c_out));
    let inp = input.data();
    let ker = MatRef::row_major(kernel.data(), patch, c_out);
    let b = bias.data();
    let blocks = row_blocks(is, patch);

    split_blocks(out.data_mut(), &blocks, is.w * c_out)
        .into_par_iter()
        .for_each(|(block, out_block)| {
            let mut scratch = Vec::new();
            let cols = block_patches(inp, is, block, k, pad, &mut scratch);
            for px in out_block.chunks_exact_mut(c_out) {
                px.copy_from_slice(b);
            }
            let a = MatRef::row_major(cols, block.rows * is.w, patch);
            matmul(a, ker, T::one(), out_block);
        });
    Ok(out)
}

/// Gradients of [`conv2d_forward`] with respect to input, kernel and bias.
///
/// The input gradient is a correlation of the upstream gradient with the
/// spatially flipped, channel-transposed kernel. Kernel gradients are summed
/// over a fixed partition of row blocks and reduced in partition order.
pub fn conv2d_backward<T: Element>(
    input: &Tensor4<T>,
    kernel: &Tensor4<T>,
    grad_out: &Tensor4<T>,
) -> Result<(Tensor4<T>, Tensor4<T>, Tensor4<T>)> {
    let is = input.shape();
    let ks = kernel.shape();
    let (k, pad) = check_conv(is, ks, bias_shape(ks.c))?;
    let c_in = is.c;
    let c_out = ks.c;
    if grad_out.shape() != Shape::new(is.n, is.h, is.w, c_out) {
        return Err(Error::dim(format!(
            "conv upstream gradient {} does not match output shape",
            grad_out.shape()
        )));
    }
    let inp = input.data();
    let ker = kernel.data();
    let g = grad_out.data();

    let flipped = Tensor4::from_fn(kernel_shape(k, c_out, c_in), |ky, kx, co, ci| {
        ker[((k - 1 - ky) * k + (k - 1 - kx)) * c_in * c_out + ci * c_out + co]
    });
    let grad_in = conv2d_forward(grad_out, &flipped, &Tensor4::zeros(bias_shape(c_in)))?;

    let patch = k * k * c_in;
    let blocks = row_blocks(is, patch);
    let per_chunk = blocks.len().div_ceil(KERNEL_GRAD_CHUNKS).max(1);
    let partials: Vec<Vec<T>> = blocks
        .par_chunks(per_chunk)
        .map(|chunk| {
            let mut part = vec![T::zero(); ks.len()];
            let mut scratch = Vec::new();
            for &block in chunk {
                let cols = block_patches(inp, is, block, k, pad, &mut scratch);
                let p = block.rows * is.w;
                let a = MatRef::row_major(cols, p, patch).transposed();
                let start = (block.n * is.h + block.y0) * is.w * c_out;
                let gb = MatRef::row_major(&g[start..][..p * c_out], p, c_out);
                matmul(a, gb, T::one(), &mut part);
            }
            part
        })
        .collect();
    let mut grad_k = Tensor4::zeros(ks);
    for part in &partials {
        for (a, &b) in grad_k.data_mut().iter_mut().zip(part) {
            *a += b;
        }
    }

    let mut grad_b = Tensor4::zeros(bias_shape(c_out));
    for px in g.chunks_exact(c_out) {
        for (a, &b) in grad_b.data_mut().iter_mut().zip(px) {
            *a += b;
        }
    }
    Ok((grad_in, grad_k, grad_b))
}

pub fn relu_forward<T: Element>(x: &Tensor4<T>) -> Tensor4<T> {
    x.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Passes the upstream gradient where `x > 0`; the gradient at exactly 0 is 0.
pub fn relu_backward<T: Element>(x: &Tensor4<T>, grad_out: &Tensor4<T>) -> Tensor4<T> {
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&v, &g)| if v > T::zero() { g } else { T::zero() })
        .collect();
    Tensor4::from_vec(x.shape(), data).expect("relu_backward shapes agree")
}

pub fn concat_channels_forward<T: Element>(parts: &[&Tensor4<T>]) -> Result<Tensor4<T>> {
    let first = parts
        .first()
        .ok_or_else(|| Error::Argument("concat of an empty list".into()))?
        .shape();
    let mut c_total = 0;
    for p in parts {
        let s = p.shape();
        if (s.n, s.h, s.w) != (first.n, first.h, first.w) {
            return Err(Error::dim(format!(
                "concat parts disagree on batch/spatial dims: {first} vs {s}"
            )));
        }
        c_total += s.c;
    }
    let pixels = first.n * first.h * first.w;
    let mut data = Vec::with_capacity(pixels * c_total);
    for px in 0..pixels {
        for p in parts {
            let c = p.shape().c;
            data.extend_from_slice(&p.data()[px * c..(px + 1) * c]);
        }
    }
    Tensor4::from_vec(Shape::new(first.n, first.h, first.w, c_total), data)
}

/// Splits an upstream gradient at the channel boundaries given by `widths`.
pub fn concat_channels_backward<T: Element>(
    grad_out: &Tensor4<T>,
    widths: &[usize],
) -> Result<Vec<Tensor4<T>>> {
    let mut start = 0;
    let mut grads = Vec::with_capacity(widths.len());
    for &w in widths {
        grads.push(grad_out.slice_channels(start, w)?);
        start += w;
    }
    if start != grad_out.shape().c {
        return Err(Error::dim("concat widths do not cover upstream gradient"));
    }
    Ok(grads)
}

pub fn scale_forward<T: Element>(x: &Tensor4<T>, lambda: &Tensor4<T>) -> Result<Tensor4<T>> {
    let l = lambda.item()?;
    Ok(x.map(|v| v * l))
}

/// Returns `(d x, d lambda)`.
pub fn scale_backward<T: Element>(
    x: &Tensor4<T>,
    lambda: &Tensor4<T>,
    grad_out: &Tensor4<T>,
) -> Result<(Tensor4<T>, Tensor4<T>)> {
    let l = lambda.item()?;
    let dx = grad_out.map(|g| g * l);
    let dl: T = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&a, &g)| a * g)
        .sum();
    Ok((dx, Tensor4::scalar(dl)))
}

pub fn add_forward<T: Element>(a: &Tensor4<T>, b: &Tensor4<T>) -> Result<Tensor4<T>> {
    let mut out = a.clone();
    out.add_assign(b)?;
    Ok(out)
}

fn check_shuffle(s: Shape, r: usize) -> Result<()> {
    if r < 1 {
        return Err(Error::Argument(format!("pixel shuffle factor {r} < 1")));
    }
    if s.c % (r * r) != 0 {
        return Err(Error::dim(format!(
            "pixel shuffle x{r} needs channels divisible by {}, got {}",
            r * r,
            s.c
        )));
    }
    Ok(())
}

/// Periodic shuffling: input channel `c * r * r + i * r + j` at `(y, x)`
/// lands at output `(y * r + i, x * r + j)` channel `c`.
pub fn pixel_shuffle_forward<T: Element>(x: &Tensor4<T>, r: usize) -> Result<Tensor4<T>> {
    let s = x.shape();
    check_shuffle(s, r)?;
    let c_out = s.c / (r * r);
    let os = Shape::new(s.n, s.h * r, s.w * r, c_out);
    let mut out = Tensor4::zeros(os);
    let src = x.data();
    let dst = out.data_mut();
    for n in 0..s.n {
        for y in 0..s.h {
            for xx in 0..s.w {
                let px = &src[s.offset(n, y, xx, 0)..][..s.c];
                for c in 0..c_out {
                    for i in 0..r {
                        for j in 0..r {
                            dst[os.offset(n, y * r + i, xx * r + j, c)] = px[c * r * r + i * r + j];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Gradient of [`pixel_shuffle_forward`]: the same element mapping read backwards.
pub fn pixel_shuffle_backward<T: Element>(grad_out: &Tensor4<T>, r: usize) -> Result<Tensor4<T>> {
    let os = grad_out.shape();
    if r < 1 || os.h % r != 0 || os.w % r != 0 {
        return Err(Error::dim(format!(
            "upstream gradient {os} is not a x{r} shuffle output"
        )));
    }
    let is = Shape::new(os.n, os.h / r, os.w / r, os.c * r * r);
    let mut out = Tensor4::zeros(is);
    let g = grad_out.data();
    let dst = out.data_mut();
    for n in 0..is.n {
        for y in 0..is.h {
            for x in 0..is.w {
                for c in 0..os.c {
                    for i in 0..r {
                        for j in 0..r {
                            dst[is.offset(n, y, x, c * r * r + i * r + j)] =
                                g[os.offset(n, y * r + i, x * r + j, c)];
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Mean absolute difference over every element.
pub fn l1_forward<T: Element>(pred: &Tensor4<T>, target: &Tensor4<T>) -> Result<T> {
    if pred.shape() != target.shape() {
        return Err(Error::dim(format!(
            "l1 loss between {} and {}",
            pred.shape(),
            target.shape()
        )));
    }
    let total: T = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| (p - t).abs())
        .sum();
    Ok(total / T::from_usize(pred.len()).expect("element count fits"))
}

/// Subgradient of [`l1_forward`] w.r.t. `pred`, scaled by upstream `g`; 0 where equal.
pub fn l1_backward<T: Element>(pred: &Tensor4<T>, target: &Tensor4<T>, g: T) -> Tensor4<T> {
    let scale = g / T::from_usize(pred.len()).expect("element count fits");
    let data = pred
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| {
            if p > t {
                scale
            } else if p < t {
                -scale
            } else {
                T::zero()
            }
        })
        .collect();
    Tensor4::from_vec(pred.shape(), data).expect("l1 shapes agree")
}
