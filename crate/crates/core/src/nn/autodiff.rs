//! Reverse-mode differentiation over dense matrices: a tape of the few
//! operations the vowel graph attention network needs.

use alloc::borrow::Cow;
use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    /// `a · bᵀ`
    MatMulT(Var, Var),
    Add(Var, Var),
    /// Row vector added to every row.
    AddRow(Var, Var),
    Relu(Var),
    LeakyRelu(Var, f64),
    SoftmaxRows(Var),
    /// `u (n×1)`, `v (n×1)` to `E_ij = u_i + v_j`.
    OuterAdd(Var, Var),
    ConcatCols(Vec<Var>),
    Reshape(Var),
    /// Zero-pad or truncate a single row to a width.
    PadRow(Var),
    /// One row repeated `n` times.
    RepeatRow(Var),
    SliceCols(Var, usize),
}

struct Node<'a> {
    value: Cow<'a, Matrix>,
    op: Op,
    needs_grad: bool,
}

pub struct Tape<'a> {
    nodes: Vec<Node<'a>>,
}

impl Default for Tape<'_> {
    fn default() -> Self {
        Tape::new()
    }
}

impl<'a> Tape<'a> {
    pub fn new() -> Tape<'a> {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, value: Matrix, op: Op, inputs: &[Var]) -> Var {
        let needs_grad = inputs.iter().any(|v| self.nodes[v.0].needs_grad);
        self.nodes.push(Node {
            value: Cow::Owned(value),
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// A differentiable leaf borrowed from the caller (a parameter).
    pub fn param(&mut self, m: &'a Matrix) -> Var {
        self.nodes.push(Node {
            value: Cow::Borrowed(m),
            op: Op::Leaf,
            needs_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// A constant leaf.
    pub fn constant(&mut self, m: Matrix) -> Var {
        self.nodes.push(Node {
            value: Cow::Owned(m),
            op: Op::Leaf,
            needs_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul(self.value(b));
        self.push(v, Op::MatMul(a, b), &[a, b])
    }

    pub fn matmul_t(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a).matmul_t(self.value(b));
        self.push(v, Op::MatMulT(a, b), &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let mut v = self.value(a).clone();
        v.add_assign(self.value(b));
        self.push(v, Op::Add(a, b), &[a, b])
    }

    pub fn add_row(&mut self, a: Var, row: Var) -> Var {
        let r = self.value(row);
        assert_eq!((r.rows(), r.cols()), (1, self.value(a).cols()), "bias shape");
        let mut v = self.value(a).clone();
        let bias = r.row(0).to_vec();
        for i in 0..v.rows() {
            for (x, b) in v.row_mut(i).iter_mut().zip(&bias) {
                *x += b;
            }
        }
        self.push(v, Op::AddRow(a, row), &[a, row])
    }

    /// `x·W + b`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Var {
        let y = self.matmul(x, w);
        self.add_row(y, b)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        v.as_mut_slice().iter_mut().for_each(|x| *x = x.max(0.0));
        self.push(v, Op::Relu(a), &[a])
    }

    pub fn leaky_relu(&mut self, a: Var, slope: f64) -> Var {
        let mut v = self.value(a).clone();
        v.as_mut_slice()
            .iter_mut()
            .for_each(|x| *x = if *x > 0.0 { *x } else { slope * *x });
        self.push(v, Op::LeakyRelu(a, slope), &[a])
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        for i in 0..v.rows() {
            let row = v.row_mut(i);
            let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let mut z = 0.0;
            for x in row.iter_mut() {
                *x = libm::exp(*x - m);
                z += *x;
            }
            row.iter_mut().for_each(|x| *x /= z);
        }
        self.push(v, Op::SoftmaxRows(a), &[a])
    }

    pub fn outer_add(&mut self, u: Var, v: Var) -> Var {
        let (a, b) = (self.value(u), self.value(v));
        assert!(a.cols() == 1 && b.cols() == 1, "outer_add takes column vectors");
        let m = Matrix::from_fn(a.rows(), b.rows(), |i, j| a[(i, 0)] + b[(j, 0)]);
        self.push(m, Op::OuterAdd(u, v), &[u, v])
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let rows = self.value(parts[0]).rows();
        let cols: usize = parts.iter().map(|p| self.value(*p).cols()).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for p in parts {
                let m = self.value(*p);
                assert_eq!(m.rows(), rows, "concat row mismatch");
                data.extend_from_slice(m.row(i));
            }
        }
        let m = Matrix::from_vec(rows, cols, data).expect("concat shape");
        self.push(m, Op::ConcatCols(parts.to_vec()), parts)
    }

    /// Row-major reinterpretation with the same element count.
    pub fn reshape(&mut self, a: Var, rows: usize, cols: usize) -> Var {
        let m = self.value(a).clone().reshaped(rows, cols);
        self.push(m, Op::Reshape(a), &[a])
    }

    pub fn flatten(&mut self, a: Var) -> Var {
        let n = self.value(a).len();
        self.reshape(a, 1, n)
    }

    pub fn pad_row(&mut self, a: Var, width: usize) -> Var {
        let src = self.value(a);
        assert_eq!(src.rows(), 1, "pad_row takes a row vector");
        let mut data = vec![0.0; width];
        let n = src.cols().min(width);
        data[..n].copy_from_slice(&src.row(0)[..n]);
        self.push(Matrix::row_vector(data), Op::PadRow(a), &[a])
    }

    pub fn repeat_row(&mut self, a: Var, n: usize) -> Var {
        let src = self.value(a);
        assert_eq!(src.rows(), 1, "repeat_row takes a row vector");
        let row = src.row(0).to_vec();
        let m = Matrix::from_fn(n, row.len(), |_, j| row[j]);
        self.push(m, Op::RepeatRow(a), &[a])
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let src = self.value(a);
        let m = Matrix::from_fn(src.rows(), len, |i, j| src[(i, start + j)]);
        self.push(m, Op::SliceCols(a, start), &[a])
    }

    /// Gradients of `Σ seed ⊙ out` with respect to every node; `None` for
    /// nodes that do not depend on a parameter.
    pub fn backward(&self, out: Var, seed: Matrix) -> Vec<Option<Matrix>> {
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[out.0] = Some(seed);
        for idx in (0..=out.0).rev() {
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else { continue };
            let acc = |v: Var, d: Matrix, grads: &mut Vec<Option<Matrix>>| {
                if !self.nodes[v.0].needs_grad {
                    return;
                }
                match &mut grads[v.0] {
                    Some(e) => e.add_assign(&d),
                    slot => *slot = Some(d),
                }
            };
            match &node.op {
                Op::Leaf => {
                    grads[idx] = Some(g);
                    continue;
                }
                Op::MatMul(a, b) => {
                    if self.nodes[a.0].needs_grad {
                        acc(*a, g.matmul_t(self.value(*b)), &mut grads);
                    }
                    if self.nodes[b.0].needs_grad {
                        acc(*b, self.value(*a).t_matmul(&g), &mut grads);
                    }
                }
                Op::MatMulT(a, b) => {
                    if self.nodes[a.0].needs_grad {
                        acc(*a, g.matmul(self.value(*b)), &mut grads);
                    }
                    if self.nodes[b.0].needs_grad {
                        acc(*b, g.t_matmul(self.value(*a)), &mut grads);
                    }
                }
                Op::Add(a, b) => {
                    acc(*a, g.clone(), &mut grads);
                    acc(*b, g, &mut grads);
                }
                Op::AddRow(a, r) => {
                    let sums = column_sums(&g);
                    acc(*r, sums, &mut grads);
                    acc(*a, g, &mut grads);
                }
                Op::Relu(a) => {
                    let x = self.value(*a);
                    let mut d = g;
                    for (dv, xv) in d.as_mut_slice().iter_mut().zip(x.as_slice()) {
                        if *xv <= 0.0 {
                            *dv = 0.0;
                        }
                    }
                    acc(*a, d, &mut grads);
                }
                Op::LeakyRelu(a, slope) => {
                    let x = self.value(*a);
                    let mut d = g;
                    for (dv, xv) in d.as_mut_slice().iter_mut().zip(x.as_slice()) {
                        if *xv <= 0.0 {
                            *dv *= slope;
                        }
                    }
                    acc(*a, d, &mut grads);
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut d = g;
                    for i in 0..y.rows() {
                        let yr = y.row(i);
                        let dot: f64 = d.row(i).iter().zip(yr).map(|(p, q)| p * q).sum();
                        for (dv, yv) in d.row_mut(i).iter_mut().zip(yr) {
                            *dv = yv * (*dv - dot);
                        }
                    }
                    acc(*a, d, &mut grads);
                }
                Op::OuterAdd(u, v) => {
                    let n = g.rows();
                    let m = g.cols();
                    let du = Matrix::from_fn(n, 1, |i, _| g.row(i).iter().sum());
                    let dv = Matrix::from_fn(m, 1, |j, _| (0..n).map(|i| g[(i, j)]).sum());
                    acc(*u, du, &mut grads);
                    acc(*v, dv, &mut grads);
                }
                Op::ConcatCols(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let w = self.value(*p).cols();
                        let d = Matrix::from_fn(g.rows(), w, |i, j| g[(i, off + j)]);
                        acc(*p, d, &mut grads);
                        off += w;
                    }
                }
                Op::Reshape(a) => {
                    let (r, c) = self.value(*a).shape();
                    acc(*a, g.reshaped(r, c), &mut grads);
                }
                Op::PadRow(a) => {
                    let w = self.value(*a).cols();
                    let d = Matrix::from_fn(1, w, |_, j| if j < g.cols() { g[(0, j)] } else { 0.0 });
                    acc(*a, d, &mut grads);
                }
                Op::RepeatRow(a) => acc(*a, column_sums(&g), &mut grads),
                Op::SliceCols(a, start) => {
                    let (r, c) = self.value(*a).shape();
                    let mut d = Matrix::zeros(r, c);
                    for i in 0..r {
                        for j in 0..g.cols() {
                            d[(i, start + j)] = g[(i, j)];
                        }
                    }
                    acc(*a, d, &mut grads);
                }
            }
        }
        grads
    }
}

fn column_sums(g: &Matrix) -> Matrix {
    let mut s = vec![0.0; g.cols()];
    for i in 0..g.rows() {
        for (a, b) in s.iter_mut().zip(g.row(i)) {
            *a += b;
        }
    }
    Matrix::row_vector(s)
}
