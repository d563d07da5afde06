//! Dense 2-D tensors with reverse-mode automatic differentiation.
//!
//! Every tensor is a row-major `rows x cols` block of f64. Operations build
//! an implicit computation graph; [`Tensor::backward`] topologically sorts
//! the graph from a scalar root and accumulates gradients into every leaf
//! that was created with `requires_grad`.

use std::cell::RefCell;
use std::collections::HashMap;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

#[derive(Clone, Debug)]
enum OpKind {
    Add,
    Sub,
    Mul,
    ScalarMul(f64),
    MatMul,
    Sum,
    Mean,
    Abs,
    Square,
    Sqrt,
    Log,
    Exp,
    Tanh,
    LeakyRelu(f64),
    ConcatCols,
    RowSlice { start: usize },
    BroadcastRow,
    NormalizeRows,
}

struct OpRecord {
    kind: OpKind,
    inputs: Vec<Tensor>,
}

struct TensorInner {
    id: u64,
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
    requires_grad: bool,
    op: Option<OpRecord>,
}

/// Shared handle to a node of the computation graph.
#[derive(Clone)]
pub struct Tensor(Rc<RefCell<TensorInner>>);

impl Tensor {
    fn new(rows: usize, cols: usize, data: Vec<f64>, requires_grad: bool, op: Option<OpRecord>) -> Tensor {
        debug_assert_eq!(rows * cols, data.len());
        Tensor(Rc::new(RefCell::new(TensorInner {
            id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
            rows,
            cols,
            data,
            grad: None,
            requires_grad,
            op,
        })))
    }

    /// Leaf tensor that does not participate in gradients.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Tensor> {
        if rows * cols != data.len() {
            return Err(Error::invalid(format!(
                "tensor data length {} does not match shape {}x{}",
                data.len(),
                rows,
                cols
            )));
        }
        Ok(Tensor::new(rows, cols, data, false, None))
    }

    /// Leaf tensor tracked by autodiff (a trainable parameter or gradcheck input).
    pub fn param(rows: usize, cols: usize, data: Vec<f64>) -> Result<Tensor> {
        let t = Tensor::from_vec(rows, cols, data)?;
        t.0.borrow_mut().requires_grad = true;
        Ok(t)
    }

    pub fn zeros(rows: usize, cols: usize) -> Tensor {
        Tensor::new(rows, cols, vec![0.0; rows * cols], false, None)
    }

    pub fn scalar(v: f64) -> Tensor {
        Tensor::new(1, 1, vec![v], false, None)
    }

    pub fn ones_row(cols: usize) -> Tensor {
        Tensor::new(1, cols, vec![1.0; cols], false, None)
    }

    pub fn id(&self) -> u64 {
        self.0.borrow().id
    }

    pub fn rows(&self) -> usize {
        self.0.borrow().rows
    }

    pub fn cols(&self) -> usize {
        self.0.borrow().cols
    }

    pub fn shape(&self) -> [usize; 2] {
        let b = self.0.borrow();
        [b.rows, b.cols]
    }

    pub fn len(&self) -> usize {
        let b = self.0.borrow();
        b.rows * b.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_scalar(&self) -> bool {
        self.len() == 1
    }

    /// Copy of the underlying data, row-major.
    pub fn value(&self) -> Vec<f64> {
        self.0.borrow().data.clone()
    }

    /// Value of a 1x1 tensor.
    pub fn item(&self) -> f64 {
        let b = self.0.borrow();
        debug_assert_eq!(b.data.len(), 1, "item() on non-scalar");
        b.data[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.0.borrow().requires_grad
    }

    /// Toggles gradient tracking; used to freeze an opponent network.
    pub fn set_requires_grad(&self, on: bool) {
        self.0.borrow_mut().requires_grad = on;
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.0.borrow().grad.clone()
    }

    pub fn zero_grad(&self) {
        self.0.borrow_mut().grad = None;
    }

    /// New leaf sharing this tensor's values but cut off from the graph.
    pub fn detach(&self) -> Tensor {
        let b = self.0.borrow();
        Tensor::new(b.rows, b.cols, b.data.clone(), false, None)
    }

    /// Overwrite the stored values in place (optimizer updates, checkpoint load).
    pub fn set_data(&self, data: &[f64]) -> Result<()> {
        let mut b = self.0.borrow_mut();
        if data.len() != b.data.len() {
            return Err(Error::invalid(format!(
                "set_data length {} does not match tensor of {} entries",
                data.len(),
                b.data.len()
            )));
        }
        b.data.copy_from_slice(data);
        Ok(())
    }

    pub(crate) fn update_data(&self, f: impl FnOnce(&mut [f64])) {
        f(&mut self.0.borrow_mut().data)
    }

    fn any_requires_grad(inputs: &[&Tensor]) -> bool {
        inputs.iter().any(|t| t.0.borrow().requires_grad)
    }

    /// Records the op only when some input is tracked, so untracked
    /// subgraphs stay plain data.
    fn result(rows: usize, cols: usize, data: Vec<f64>, kind: OpKind, inputs: &[&Tensor]) -> Tensor {
        if Tensor::any_requires_grad(inputs) {
            let record = OpRecord {
                kind,
                inputs: inputs.iter().map(|t| (*t).clone()).collect(),
            };
            Tensor::new(rows, cols, data, true, Some(record))
        } else {
            Tensor::new(rows, cols, data, false, None)
        }
    }

    fn same_shape(&self, other: &Tensor, op: &'static str) -> Result<(usize, usize)> {
        let (a, b) = (self.0.borrow(), other.0.borrow());
        if a.rows != b.rows || a.cols != b.cols {
            return Err(Error::ShapeMismatch {
                op,
                lhs: vec![a.rows, a.cols],
                rhs: vec![b.rows, b.cols],
            });
        }
        Ok((a.rows, a.cols))
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        let (r, c) = self.same_shape(other, "add")?;
        let a = self.0.borrow();
        let b = other.0.borrow();
        let data = a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect();
        drop(a);
        drop(b);
        Ok(Tensor::result(r, c, data, OpKind::Add, &[self, other]))
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        let (r, c) = self.same_shape(other, "sub")?;
        let a = self.0.borrow();
        let b = other.0.borrow();
        let data = a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect();
        drop(a);
        drop(b);
        Ok(Tensor::result(r, c, data, OpKind::Sub, &[self, other]))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        let (r, c) = self.same_shape(other, "mul")?;
        let a = self.0.borrow();
        let b = other.0.borrow();
        let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
        drop(a);
        drop(b);
        Ok(Tensor::result(r, c, data, OpKind::Mul, &[self, other]))
    }

    pub fn scalar_mul(&self, c: f64) -> Tensor {
        let b = self.0.borrow();
        let (r, k) = (b.rows, b.cols);
        let data = b.data.iter().map(|x| x * c).collect();
        drop(b);
        Tensor::result(r, k, data, OpKind::ScalarMul(c), &[self])
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let a = self.0.borrow();
        let b = other.0.borrow();
        if a.cols != b.rows {
            return Err(Error::ShapeMismatch {
                op: "matmul",
                lhs: vec![a.rows, a.cols],
                rhs: vec![b.rows, b.cols],
            });
        }
        let (m, k, n) = (a.rows, a.cols, b.cols);
        let data = matmul_raw(&a.data, &b.data, m, k, n);
        drop(a);
        drop(b);
        Ok(Tensor::result(m, n, data, OpKind::MatMul, &[self, other]))
    }

    /// Sum of all entries, as a 1x1 tensor.
    pub fn sum(&self) -> Tensor {
        let b = self.0.borrow();
        let total: f64 = b.data.iter().sum();
        drop(b);
        Tensor::result(1, 1, vec![total], OpKind::Sum, &[self])
    }

    /// Mean of all entries, as a 1x1 tensor.
    pub fn mean(&self) -> Tensor {
        let b = self.0.borrow();
        let n = b.data.len() as f64;
        let total: f64 = b.data.iter().sum();
        drop(b);
        Tensor::result(1, 1, vec![total / n], OpKind::Mean, &[self])
    }

    pub fn abs(&self) -> Tensor {
        self.unary(OpKind::Abs, |x| x.abs())
    }

    pub fn square(&self) -> Tensor {
        self.unary(OpKind::Square, |x| x * x)
    }

    pub fn sqrt(&self) -> Result<Tensor> {
        self.positive_unary("sqrt", OpKind::Sqrt, |x| x.sqrt())
    }

    pub fn log(&self) -> Result<Tensor> {
        self.positive_unary("log", OpKind::Log, |x| x.ln())
    }

    pub fn exp(&self) -> Tensor {
        self.unary(OpKind::Exp, |x| x.exp())
    }

    pub fn tanh(&self) -> Tensor {
        self.unary(OpKind::Tanh, |x| x.tanh())
    }

    pub fn leaky_relu(&self, slope: f64) -> Tensor {
        self.unary(OpKind::LeakyRelu(slope), move |x| if x > 0.0 { x } else { slope * x })
    }

    fn unary(&self, kind: OpKind, f: impl Fn(f64) -> f64) -> Tensor {
        let b = self.0.borrow();
        let (r, c) = (b.rows, b.cols);
        let data = b.data.iter().map(|&x| f(x)).collect();
        drop(b);
        Tensor::result(r, c, data, kind, &[self])
    }

    fn positive_unary(&self, op: &'static str, kind: OpKind, f: impl Fn(f64) -> f64) -> Result<Tensor> {
        {
            let b = self.0.borrow();
            for (i, &x) in b.data.iter().enumerate() {
                if x <= 0.0 {
                    return Err(Error::NonPositiveInput { op, value: x, index: i });
                }
            }
        }
        Ok(self.unary(kind, f))
    }

    /// Column-wise concatenation `[self | other]`.
    pub fn concat_cols(&self, other: &Tensor) -> Result<Tensor> {
        let a = self.0.borrow();
        let b = other.0.borrow();
        if a.rows != b.rows {
            return Err(Error::ShapeMismatch {
                op: "concat_cols",
                lhs: vec![a.rows, a.cols],
                rhs: vec![b.rows, b.cols],
            });
        }
        let (r, ca, cb) = (a.rows, a.cols, b.cols);
        let mut data = Vec::with_capacity(r * (ca + cb));
        for i in 0..r {
            data.extend_from_slice(&a.data[i * ca..(i + 1) * ca]);
            data.extend_from_slice(&b.data[i * cb..(i + 1) * cb]);
        }
        drop(a);
        drop(b);
        Ok(Tensor::result(r, ca + cb, data, OpKind::ConcatCols, &[self, other]))
    }

    /// Rows `start..start+len`.
    pub fn row_slice(&self, start: usize, len: usize) -> Result<Tensor> {
        let b = self.0.borrow();
        if start + len > b.rows {
            return Err(Error::invalid(format!(
                "row_slice {}..{} out of range for {} rows",
                start,
                start + len,
                b.rows
            )));
        }
        let c = b.cols;
        let data = b.data[start * c..(start + len) * c].to_vec();
        drop(b);
        Ok(Tensor::result(len, c, data, OpKind::RowSlice { start }, &[self]))
    }

    /// Repeats a 1xM row n times.
    pub fn broadcast_row(&self, n: usize) -> Result<Tensor> {
        let b = self.0.borrow();
        if b.rows != 1 {
            return Err(Error::ShapeMismatch {
                op: "broadcast_row",
                lhs: vec![b.rows, b.cols],
                rhs: vec![1, b.cols],
            });
        }
        let c = b.cols;
        let mut data = Vec::with_capacity(n * c);
        for _ in 0..n {
            data.extend_from_slice(&b.data);
        }
        drop(b);
        Ok(Tensor::result(n, c, data, OpKind::BroadcastRow, &[self]))
    }

    /// Divides each row by its Euclidean norm, mapping rows onto the unit sphere.
    pub fn normalize_rows(&self) -> Result<Tensor> {
        let b = self.0.borrow();
        let (r, c) = (b.rows, b.cols);
        let mut data = Vec::with_capacity(r * c);
        for i in 0..r {
            let row = &b.data[i * c..(i + 1) * c];
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < 1e-12 {
                return Err(Error::DegenerateRow { index: i, norm });
            }
            data.extend(row.iter().map(|x| x / norm));
        }
        drop(b);
        Ok(Tensor::result(r, c, data, OpKind::NormalizeRows, &[self]))
    }

    /// Reverse-mode gradient pass from a scalar root.
    ///
    /// Accumulates into the `grad` field of every reachable leaf with
    /// `requires_grad`; repeated calls without `zero_grad` keep accumulating.
    pub fn backward(&self) -> Result<()> {
        if !self.is_scalar() {
            return Err(Error::NonScalarRoot {
                shape: self.shape().to_vec(),
            });
        }

        // Iterative post-order DFS: children (op inputs) before parents.
        let mut topo: Vec<Tensor> = Vec::new();
        let mut visited: HashMap<u64, ()> = HashMap::new();
        let mut stack: Vec<(Tensor, bool)> = vec![(self.clone(), false)];
        while let Some((node, expanded)) = stack.pop() {
            if expanded {
                topo.push(node);
                continue;
            }
            let id = node.id();
            if visited.contains_key(&id) {
                continue;
            }
            visited.insert(id, ());
            stack.push((node.clone(), true));
            let inner = node.0.borrow();
            if let Some(op) = &inner.op {
                for input in &op.inputs {
                    stack.push((input.clone(), false));
                }
            }
        }

        // Scratch gradients per node, independent of the persistent leaf grads.
        let mut scratch: HashMap<u64, Vec<f64>> = HashMap::new();
        scratch.insert(self.id(), vec![1.0]);

        for node in topo.iter().rev() {
            let inner = node.0.borrow();
            let go = match scratch.get(&inner.id) {
                Some(g) => g.clone(),
                None => continue, // no path from root contributed
            };
            if let Some(op) = &inner.op {
                propagate(op, &inner.data, &go, &mut scratch);
            }
        }

        for node in &topo {
            let mut inner = node.0.borrow_mut();
            if inner.op.is_none() && inner.requires_grad {
                if let Some(g) = scratch.get(&inner.id) {
                    let n = inner.data.len();
                    let grad = inner.grad.get_or_insert_with(|| vec![0.0; n]);
                    for (dst, src) in grad.iter_mut().zip(g) {
                        *dst += src;
                    }
                }
            }
        }
        Ok(())
    }
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let b = self.0.borrow();
        f.debug_struct("Tensor")
            .field("shape", &[b.rows, b.cols])
            .field("requires_grad", &b.requires_grad)
            .field("data", &b.data)
            .finish()
    }
}

pub(crate) fn matmul_raw(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for p in 0..k {
            let aip = a[i * k + p];
            let brow = &b[p * n..(p + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                orow[j] += aip * brow[j];
            }
        }
    }
    out
}

fn accumulate(scratch: &mut HashMap<u64, Vec<f64>>, node: &Tensor, contribution: &[f64]) {
    let id = node.id();
    let len = node.len();
    let entry = scratch.entry(id).or_insert_with(|| vec![0.0; len]);
    for (dst, src) in entry.iter_mut().zip(contribution) {
        *dst += src;
    }
}

fn propagate(op: &OpRecord, out_data: &[f64], go: &[f64], scratch: &mut HashMap<u64, Vec<f64>>) {
    match op.kind {
        OpKind::Add => {
            accumulate(scratch, &op.inputs[0], go);
            accumulate(scratch, &op.inputs[1], go);
        }
        OpKind::Sub => {
            accumulate(scratch, &op.inputs[0], go);
            let neg: Vec<f64> = go.iter().map(|g| -g).collect();
            accumulate(scratch, &op.inputs[1], &neg);
        }
        OpKind::Mul => {
            let a = op.inputs[0].value();
            let b = op.inputs[1].value();
            let ga: Vec<f64> = go.iter().zip(&b).map(|(g, y)| g * y).collect();
            let gb: Vec<f64> = go.iter().zip(&a).map(|(g, x)| g * x).collect();
            accumulate(scratch, &op.inputs[0], &ga);
            accumulate(scratch, &op.inputs[1], &gb);
        }
        OpKind::ScalarMul(c) => {
            let ga: Vec<f64> = go.iter().map(|g| g * c).collect();
            accumulate(scratch, &op.inputs[0], &ga);
        }
        OpKind::MatMul => {
            let a = &op.inputs[0];
            let b = &op.inputs[1];
            let (m, k) = (a.rows(), a.cols());
            let n = b.cols();
            // dA = dO * B^T; dB = A^T * dO
            let (ga, gb) = {
                let adata = a.value();
                let bdata = b.value();
                let mut ga = vec![0.0; m * k];
                for i in 0..m {
                    for j in 0..n {
                        let g = go[i * n + j];
                        for p in 0..k {
                            ga[i * k + p] += g * bdata[p * n + j];
                        }
                    }
                }
                let mut gb = vec![0.0; k * n];
                for i in 0..m {
                    for p in 0..k {
                        let x = adata[i * k + p];
                        for j in 0..n {
                            gb[p * n + j] += x * go[i * n + j];
                        }
                    }
                }
                (ga, gb)
            };
            accumulate(scratch, a, &ga);
            accumulate(scratch, b, &gb);
        }
        OpKind::Sum => {
            let input = &op.inputs[0];
            let ga = vec![go[0]; input.len()];
            accumulate(scratch, input, &ga);
        }
        OpKind::Mean => {
            let input = &op.inputs[0];
            let n = input.len() as f64;
            let ga = vec![go[0] / n; input.len()];
            accumulate(scratch, input, &ga);
        }
        OpKind::Abs => {
            let a = op.inputs[0].value();
            let ga: Vec<f64> = go
                .iter()
                .zip(&a)
                .map(|(g, x)| {
                    if *x > 0.0 {
                        *g
                    } else if *x < 0.0 {
                        -*g
                    } else {
                        0.0
                    }
                })
                .collect();
            accumulate(scratch, &op.inputs[0], &ga);
        }
        OpKind::Square => {
            let a = op.inputs[0].value();
            let ga: Vec<f64> = go.iter().zip(&a).map(|(g, x)| 2.0 * x * g).collect();
            accumulate(scratch, &op.inputs[0], &ga);
        }
        OpKind::Sqrt => {
            let ga: Vec<f64> = go.iter().zip(out_data).map(|(g, y)| g / (2.0 * y)).collect();
            accumulate(scratch, &op.inputs[0], &ga);
        }
        OpKind::Log => {
            let a = op.inputs[0].value();
            let ga: Vec<f64> = go.iter().zip(&a).map(|(g, x)| g / x).collect();
            accumulate(scratch, &op.inputs[0], &ga);
        }
        OpKind::Exp => {
            let ga: Vec<f64> = go.iter().zip(out_data).map(|(g, y)| g * y).collect();
            accumulate(scratch, &op.inputs[0], &ga);
        }
        OpKind::Tanh => {
            let ga: Vec<f64> = go.iter().zip(out_data).map(|(g, y)| g * (1.0 - y * y)).collect();
            accumulate(scratch, &op.inputs[0], &ga);
        }
        OpKind::LeakyRelu(slope) => {
            let a = op.inputs[0].value();
            let ga: Vec<f64> = go
                .iter()
                .zip(&a)
                .map(|(g, x)| if *x > 0.0 { *g } else { slope * g })
                .collect();
            accumulate(scratch, &op.inputs[0], &ga);
        }
        OpKind::ConcatCols => {
            let a = &op.inputs[0];
            let b = &op.inputs[1];
            let (r, ca, cb) = (a.rows(), a.cols(), b.cols());
            let mut ga = vec![0.0; r * ca];
            let mut gb = vec![0.0; r * cb];
            let c = ca + cb;
            for i in 0..r {
                ga[i * ca..(i + 1) * ca].copy_from_slice(&go[i * c..i * c + ca]);
                gb[i * cb..(i + 1) * cb].copy_from_slice(&go[i * c + ca..(i + 1) * c]);
            }
            accumulate(scratch, a, &ga);
            accumulate(scratch, b, &gb);
        }
        OpKind::RowSlice { start } => {
            let input = &op.inputs[0];
            let c = input.cols();
            let mut ga = vec![0.0; input.len()];
            ga[start * c..start * c + go.len()].copy_from_slice(go);
            accumulate(scratch, input, &ga);
        }
        OpKind::BroadcastRow => {
            let input = &op.inputs[0];
            let c = input.cols();
            let mut ga = vec![0.0; c];
            for (i, g) in go.iter().enumerate() {
                ga[i % c] += g;
            }
            accumulate(scratch, input, &ga);
        }
        OpKind::NormalizeRows => {
            let input = &op.inputs[0];
            let x = input.value();
            let (r, c) = (input.rows(), input.cols());
            let mut ga = vec![0.0; r * c];
            for i in 0..r {
                let row = &x[i * c..(i + 1) * c];
                let grow = &go[i * c..(i + 1) * c];
                let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                let dot: f64 = row.iter().zip(grow).map(|(v, g)| v * g).sum();
                let inv = 1.0 / norm;
                let inv3 = inv * inv * inv;
                for j in 0..c {
                    ga[i * c + j] = grow[j] * inv - row[j] * dot * inv3;
                }
            }
            accumulate(scratch, input, &ga);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: usize, cols: usize, data: &[f64]) -> Tensor {
        Tensor::from_vec(rows, cols, data.to_vec()).unwrap()
    }

    #[test]
    fn matmul_hand_example() {
        let a = t(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let b = t(2, 1, &[1.0, 1.0]);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c.value(), vec![3.0, 7.0]);
        assert_eq!(c.shape(), [2, 1]);
    }

    #[test]
    fn leaky_relu_cases() {
        let x = t(1, 2, &[-1.0, 2.0]);
        let y = x.leaky_relu(0.2);
        assert_eq!(y.value(), vec![-0.2, 2.0]);
    }

    #[test]
    fn log_identity_case() {
        let x = t(1, 1, &[1.0]);
        assert_eq!(x.log().unwrap().value(), vec![0.0]);
    }

    #[test]
    fn log_rejects_non_positive() {
        let x = t(1, 2, &[1.0, 0.0]);
        let err = x.log().unwrap_err();
        assert!(err.to_string().contains("log"), "{err}");
        assert!(t(1, 1, &[-4.0]).sqrt().is_err());
    }

    #[test]
    fn shape_mismatch_names_op_and_shapes() {
        let a = t(2, 2, &[1.0; 4]);
        let b = t(1, 2, &[1.0; 2]);
        let msg = a.add(&b).unwrap_err().to_string();
        assert!(msg.contains("add") && msg.contains("[2, 2]") && msg.contains("[1, 2]"), "{msg}");
    }

    #[test]
    fn backward_of_sum_of_squares() {
        let x = Tensor::param(1, 1, vec![3.0]).unwrap();
        let root = x.square().sum();
        root.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![6.0]);
    }

    #[test]
    fn backward_of_tanh_at_zero() {
        let x = Tensor::param(1, 1, vec![0.0]).unwrap();
        let root = x.tanh().sum();
        root.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![1.0]);
    }

    #[test]
    fn backward_rejects_non_scalar_root() {
        let x = Tensor::param(2, 1, vec![1.0, 2.0]).unwrap();
        let y = x.square();
        assert!(matches!(y.backward(), Err(Error::NonScalarRoot { .. })));
    }

    #[test]
    fn repeated_backward_accumulates() {
        let x = Tensor::param(1, 1, vec![3.0]).unwrap();
        let root = x.square().sum();
        root.backward().unwrap();
        root.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![12.0]);
        x.zero_grad();
        assert!(x.grad().is_none());
    }

    #[test]
    fn fan_out_reuse_accumulates_once_per_path() {
        // f = x*x + x => f' = 2x + 1
        let x = Tensor::param(1, 1, vec![3.0]).unwrap();
        let root = x.square().add(&x).unwrap().sum();
        root.backward().unwrap();
        assert_eq!(x.grad().unwrap(), vec![7.0]);
    }

    #[test]
    fn untracked_inputs_record_no_graph() {
        let x = t(2, 2, &[1.0; 4]);
        let y = x.square().sum();
        assert!(!y.requires_grad());
    }

    #[test]
    fn concat_and_slice_round_trip_gradients() {
        let a = Tensor::param(2, 1, vec![1.0, 2.0]).unwrap();
        let b = Tensor::param(2, 2, vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let cat = a.concat_cols(&b).unwrap();
        assert_eq!(cat.value(), vec![1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let sliced = cat.row_slice(1, 1).unwrap();
        let root = sliced.sum();
        root.backward().unwrap();
        assert_eq!(a.grad().unwrap(), vec![0.0, 1.0]);
        assert_eq!(b.grad().unwrap(), vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn broadcast_row_sums_gradient_over_rows() {
        let b = Tensor::param(1, 2, vec![1.0, 2.0]).unwrap();
        let big = b.broadcast_row(3).unwrap();
        assert_eq!(big.shape(), [3, 2]);
        let root = big.sum();
        root.backward().unwrap();
        assert_eq!(b.grad().unwrap(), vec![3.0, 3.0]);
    }

    #[test]
    fn determinism_bitwise() {
        let run = || {
            let x = Tensor::param(2, 3, vec![0.3, -0.7, 1.1, 0.9, -0.2, 0.5]).unwrap();
            let y = x.tanh().square().sum();
            y.backward().unwrap();
            (y.item().to_bits(), x.grad().unwrap().iter().map(|g| g.to_bits()).collect::<Vec<_>>())
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn linearity_of_backward() {
        // grad(a*f + b*g) == a*grad(f) + b*grad(g)
        let data = vec![0.4, -1.3, 0.8, 2.1];
        let (a, b) = (1.7, -0.6);

        let grad_of = |build: &dyn Fn(&Tensor) -> Tensor| {
            let x = Tensor::param(2, 2, data.clone()).unwrap();
            build(&x).backward().unwrap();
            x.grad().unwrap()
        };

        let f = |x: &Tensor| x.square().sum();
        let g = |x: &Tensor| x.tanh().mean();
        let combined =
            |x: &Tensor| f(x).scalar_mul(a).add(&g(x).scalar_mul(b)).unwrap().sum();

        let gf = grad_of(&f);
        let gg = grad_of(&g);
        let gc = grad_of(&combined);
        for i in 0..gc.len() {
            assert!((gc[i] - (a * gf[i] + b * gg[i])).abs() < 1e-12);
        }
    }
}
