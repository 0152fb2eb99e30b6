use crate::linalg::TridiagLu;
use crate::{Error, Result};

/// Natural cubic spline through strictly increasing nodes. The reconstruction
/// is C² with `S'' = 0` at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    nodes: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl NaturalSpline {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = nodes.len();
        if n < 3 || values.len() != n {
            return Err(Error::Config(format!(
                "tabulated potential needs at least 3 (x, U) pairs of equal length, got {} nodes and {} values",
                n,
                values.len()
            )));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("tabulated nodes must be strictly increasing".into()));
        }
        if nodes.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Config("tabulated potential contains non-finite entries".into()));
        }
        // Interior second derivatives M_1..M_{n-2}; natural ends M_0 = M_{n-1} = 0.
        let m = n - 2;
        let mut lower = vec![0.0; m.saturating_sub(1)];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m.saturating_sub(1)];
        let mut rhs = vec![0.0; m];
        for k in 0..m {
            let i = k + 1;
            let h0 = nodes[i] - nodes[i - 1];
            let h1 = nodes[i + 1] - nodes[i];
            diag[k] = (h0 + h1) / 3.0;
            if k > 0 {
                lower[k - 1] = h0 / 6.0;
            }
            if k + 1 < m {
                upper[k] = h1 / 6.0;
            }
            rhs[k] = (values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0;
        }
        TridiagLu::factor(&lower, &diag, &upper, 0.0)?.solve(&mut rhs);
        let mut second = Vec::with_capacity(n);
        second.push(0.0);
        second.extend(rhs);
        second.push(0.0);
        Ok(Self { nodes, values, second })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.nodes[0], self.nodes[self.nodes.len() - 1])
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn locate(&self, x: f64) -> Result<usize> {
        let (lo, hi) = self.range();
        if !(x >= lo && x <= hi) {
            return Err(Error::Domain { x, lo, hi });
        }
        let idx = self.nodes.partition_point(|&t| t <= x);
        Ok(idx.clamp(1, self.nodes.len() - 1) - 1)
    }

    /// Value, first and second derivative at `x`.
    pub fn eval_all(&self, x: f64) -> Result<(f64, f64, f64)> {
        let i = self.locate(x)?;
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (m0, m1) = (self.second[i], self.second[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        let value = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let slope = (y1 - y0) / h - (3.0 * a * a - 1.0) / 6.0 * h * m0 + (3.0 * b * b - 1.0) / 6.0 * h * m1;
        let curvature = a * m0 + b * m1;
        Ok((value, slope, curvature))
    }
}
