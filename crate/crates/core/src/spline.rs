//! Univariate and tensor-product B-splines over open knot vectors.
//!
//! Basis functions are evaluated with the triangular Cox–de Boor recursion,
//! which produces every nonzero function of a span in one pass. Derivatives of
//! a tensor-product surface are available two ways: through derivative control
//! nets (scaled differences of neighbouring control values) and through basis
//! function derivatives. Assembly uses the latter; the former mirrors how
//! boundary conditions propagate to control variables.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Non-decreasing knot sequence on `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct KnotVector {
    values: Vec<f64>,
}

impl KnotVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidDiscretization(
                "knot vector needs at least two entries".into(),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDiscretization("non-finite knot".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidDiscretization(
                "knot vector must be non-decreasing".into(),
            ));
        }
        if values[0] != 0.0 || values[values.len() - 1] != 1.0 {
            return Err(Error::InvalidDiscretization(
                "knot vector must start at 0 and end at 1".into(),
            ));
        }
        Ok(Self { values })
    }

    /// Open knot vector with `count - degree - 1` equally spaced interior knots.
    pub fn open_uniform(degree: usize, count: usize) -> Result<Self> {
        if count < degree + 1 {
            return Err(Error::InvalidDiscretization(format!(
                "{count} control variables cannot support degree {degree} (need at least {})",
                degree + 1
            )));
        }
        let interior = count - degree - 1;
        let mut values = Vec::with_capacity(count + degree + 1);
        values.extend(std::iter::repeat_n(0.0, degree + 1));
        for k in 1..=interior {
            values.push(k as f64 / (interior + 1) as f64);
        }
        values.extend(std::iter::repeat_n(1.0, degree + 1));
        Self::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Distinct knot values in increasing order.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for &v in &self.values {
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
        out
    }

    fn trimmed(&self) -> Result<Self> {
        Self::new(self.values[1..self.values.len() - 1].to_vec())
    }
}

/// Equally spaced open knot vector; see [`KnotVector::open_uniform`].
pub fn open_uniform_knots(degree: usize, count: usize) -> Result<KnotVector> {
    KnotVector::open_uniform(degree, count)
}

fn check_unit(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::Domain { value: u })
    }
}

/// A univariate B-spline basis of fixed degree over an open knot vector.
#[derive(Clone, Debug, PartialEq)]
pub struct BSplineBasis {
    degree: usize,
    knots: KnotVector,
}

impl BSplineBasis {
    pub fn new(degree: usize, knots: KnotVector) -> Result<Self> {
        let k = knots.values();
        if k.len() < 2 * (degree + 1) {
            return Err(Error::InvalidDiscretization(format!(
                "{} knots cannot support degree {degree}",
                k.len()
            )));
        }
        let open_start = k[..=degree].iter().all(|&v| v == 0.0);
        let open_end = k[k.len() - degree - 1..].iter().all(|&v| v == 1.0);
        if !open_start || !open_end {
            return Err(Error::InvalidDiscretization(format!(
                "knot vector is not open for degree {degree}"
            )));
        }
        Ok(Self { degree, knots })
    }

    pub fn open_uniform(degree: usize, count: usize) -> Result<Self> {
        Self::new(degree, KnotVector::open_uniform(degree, count)?)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &KnotVector {
        &self.knots
    }

    /// Number of basis functions.
    pub fn count(&self) -> usize {
        self.knots.len() - self.degree - 1
    }

    /// Knot spans of nonzero length as `(start, end)` pairs.
    pub fn spans(&self) -> Vec<(f64, f64)> {
        self.knots
            .breakpoints()
            .windows(2)
            .map(|w| (w[0], w[1]))
            .collect()
    }

    /// Index `s` with `knots[s] <= u < knots[s + 1]`; `u = 1` maps to the last
    /// non-degenerate span.
    pub fn find_span(&self, u: f64) -> usize {
        let k = self.knots.values();
        let n = self.count() - 1;
        let p = self.degree;
        if u >= k[n + 1] {
            return n;
        }
        if u <= k[p] {
            return p;
        }
        let (mut lo, mut hi) = (p, n + 1);
        let mut mid = (lo + hi) / 2;
        while u < k[mid] || u >= k[mid + 1] {
            if u < k[mid] {
                hi = mid;
            } else {
                lo = mid;
            }
            mid = (lo + hi) / 2;
        }
        mid
    }

    /// The `degree + 1` basis functions that can be nonzero at `u`, together
    /// with the index of the first one.
    pub fn nonzero(&self, u: f64) -> Result<(usize, Vec<f64>)> {
        check_unit(u)?;
        let p = self.degree;
        let k = self.knots.values();
        let span = self.find_span(u);
        let mut n = vec![0.0; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        n[0] = 1.0;
        for j in 1..=p {
            left[j] = u - k[span + 1 - j];
            right[j] = k[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                let temp = n[r] / (right[r + 1] + left[j - r]);
                n[r] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            n[j] = saved;
        }
        Ok((span - p, n))
    }

    /// Derivatives of orders `0..=order` of the nonzero basis functions at `u`.
    /// Row `k` holds the `k`-th derivatives; orders above the degree are zero.
    pub fn nonzero_derivatives(&self, u: f64, order: usize) -> Result<(usize, Vec<Vec<f64>>)> {
        check_unit(u)?;
        let p = self.degree;
        let k = self.knots.values();
        let span = self.find_span(u);

        // ndu: basis values in the upper triangle, knot differences in the lower.
        let mut ndu = vec![vec![0.0; p + 1]; p + 1];
        let mut left = vec![0.0; p + 1];
        let mut right = vec![0.0; p + 1];
        ndu[0][0] = 1.0;
        for j in 1..=p {
            left[j] = u - k[span + 1 - j];
            right[j] = k[span + j] - u;
            let mut saved = 0.0;
            for r in 0..j {
                ndu[j][r] = right[r + 1] + left[j - r];
                let temp = ndu[r][j - 1] / ndu[j][r];
                ndu[r][j] = saved + right[r + 1] * temp;
                saved = left[j - r] * temp;
            }
            ndu[j][j] = saved;
        }

        let mut ders = vec![vec![0.0; p + 1]; order + 1];
        for j in 0..=p {
            ders[0][j] = ndu[j][p];
        }
        let top = order.min(p);
        let mut a = vec![vec![0.0; p + 1]; 2];
        for r in 0..=p {
            let (mut s1, mut s2) = (0usize, 1usize);
            a[0][0] = 1.0;
            for kk in 1..=top {
                let mut d = 0.0;
                let rk = r as isize - kk as isize;
                let pk = p - kk;
                if rk >= 0 {
                    a[s2][0] = a[s1][0] / ndu[pk + 1][rk as usize];
                    d = a[s2][0] * ndu[rk as usize][pk];
                }
                let j1 = if rk >= -1 { 1 } else { (-rk) as usize };
                let j2 = if (r as isize - 1) <= pk as isize { kk - 1 } else { p - r };
                for j in j1..=j2 {
                    let idx = (rk + j as isize) as usize;
                    a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][idx];
                    d += a[s2][j] * ndu[idx][pk];
                }
                if r <= pk {
                    a[s2][kk] = -a[s1][kk - 1] / ndu[pk + 1][r];
                    d += a[s2][kk] * ndu[r][pk];
                }
                ders[kk][r] = d;
                std::mem::swap(&mut s1, &mut s2);
            }
        }
        let mut factor = p as f64;
        for (kk, row) in ders.iter_mut().enumerate().take(top + 1).skip(1) {
            for v in row.iter_mut() {
                *v *= factor;
            }
            factor *= (p - kk) as f64;
        }
        Ok((span - p, ders))
    }

    /// All `count()` basis function values at `u`.
    pub fn values(&self, u: f64) -> Result<Vec<f64>> {
        let (first, local) = self.nonzero(u)?;
        let mut out = vec![0.0; self.count()];
        out[first..first + local.len()].copy_from_slice(&local);
        Ok(out)
    }

    /// Basis of the derivative spline: one degree lower, first and last knot removed.
    pub fn derivative_basis(&self) -> Result<Self> {
        if self.degree == 0 {
            return Err(Error::CannotDifferentiate("requested"));
        }
        Self::new(self.degree - 1, self.knots.trimmed()?)
    }

    /// Matrix `D` with `derivative_controls = D * controls`, rows
    /// `p (c[i+1] - c[i]) / (t[i+p+1] - t[i+1])`. Zero-width denominators give
    /// zero rows.
    pub fn difference_matrix(&self) -> Result<DMatrix<f64>> {
        if self.degree == 0 {
            return Err(Error::CannotDifferentiate("requested"));
        }
        let n = self.count();
        let p = self.degree;
        let k = self.knots.values();
        let mut d = DMatrix::zeros(n - 1, n);
        for i in 0..n - 1 {
            let den = k[i + p + 1] - k[i + 1];
            if den > 0.0 {
                let s = p as f64 / den;
                d[(i, i)] = -s;
                d[(i, i + 1)] = s;
            }
        }
        Ok(d)
    }
}

/// All basis function values of degree `degree` over `knots` at `u`.
pub fn basis_values(knots: &KnotVector, degree: usize, u: f64) -> Result<Vec<f64>> {
    BSplineBasis::new(degree, knots.clone())?.values(u)
}

/// Parametric direction of a tensor-product spline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Direction {
    Xi,
    Eta,
}

impl Direction {
    fn name(self) -> &'static str {
        match self {
            Direction::Xi => "xi",
            Direction::Eta => "eta",
        }
    }
}

/// Value and all parametric derivatives up to second order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SurfacePartials {
    pub value: f64,
    pub d_xi: f64,
    pub d_eta: f64,
    pub d_xixi: f64,
    pub d_xieta: f64,
    pub d_etaeta: f64,
}

/// Tensor-product B-spline surface: an `n x m` grid of control variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlNet {
    xi: BSplineBasis,
    eta: BSplineBasis,
    values: DMatrix<f64>,
}

impl ControlNet {
    pub fn new(xi: BSplineBasis, eta: BSplineBasis, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != xi.count() || values.ncols() != eta.count() {
            return Err(Error::InvalidDiscretization(format!(
                "control grid is {}x{} but the bases expect {}x{}",
                values.nrows(),
                values.ncols(),
                xi.count(),
                eta.count()
            )));
        }
        Ok(Self { xi, eta, values })
    }

    pub fn zeros(xi: BSplineBasis, eta: BSplineBasis) -> Self {
        let values = DMatrix::zeros(xi.count(), eta.count());
        Self { xi, eta, values }
    }

    /// Zero net with open uniform knots of the given degrees and sizes.
    pub fn open_uniform(degrees: (usize, usize), counts: (usize, usize)) -> Result<Self> {
        Ok(Self::zeros(
            BSplineBasis::open_uniform(degrees.0, counts.0)?,
            BSplineBasis::open_uniform(degrees.1, counts.1)?,
        ))
    }

    pub fn with_values(&self, values: DMatrix<f64>) -> Result<Self> {
        Self::new(self.xi.clone(), self.eta.clone(), values)
    }

    /// Copy of this net with control values read from a row-major slice
    /// (`i * m + j`).
    pub fn with_flat_values(&self, flat: &[f64]) -> Result<Self> {
        let (n, m) = self.shape();
        if flat.len() != n * m {
            return Err(Error::InvalidDiscretization(format!(
                "expected {} control values, got {}",
                n * m,
                flat.len()
            )));
        }
        self.with_values(DMatrix::from_fn(n, m, |i, j| flat[i * m + j]))
    }

    pub fn xi_basis(&self) -> &BSplineBasis {
        &self.xi
    }

    pub fn eta_basis(&self) -> &BSplineBasis {
        &self.eta
    }

    pub fn degrees(&self) -> (usize, usize) {
        (self.xi.degree(), self.eta.degree())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.xi.count(), self.eta.count())
    }

    pub fn len(&self) -> usize {
        self.xi.count() * self.eta.count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    /// Row-major flattening, `i * m + j`.
    pub fn flat_values(&self) -> Vec<f64> {
        let (n, m) = self.shape();
        (0..n * m).map(|k| self.values[(k / m, k % m)]).collect()
    }

    pub fn local_index(&self, i: usize, j: usize) -> usize {
        i * self.eta.count() + j
    }

    pub fn value(&self, xi: f64, eta: f64) -> Result<f64> {
        let (i0, nv) = self.xi.nonzero(xi)?;
        let (j0, mv) = self.eta.nonzero(eta)?;
        let mut sum = 0.0;
        for (a, na) in nv.iter().enumerate() {
            for (b, mb) in mv.iter().enumerate() {
                sum += na * mb * self.values[(i0 + a, j0 + b)];
            }
        }
        Ok(sum)
    }

    /// Net of the partial derivative in `direction`.
    pub fn derivative(&self, direction: Direction) -> Result<Self> {
        match direction {
            Direction::Xi => {
                let d = self
                    .xi
                    .difference_matrix()
                    .map_err(|_| Error::CannotDifferentiate(direction.name()))?;
                Self::new(self.xi.derivative_basis()?, self.eta.clone(), &d * &self.values)
            }
            Direction::Eta => {
                let d = self
                    .eta
                    .difference_matrix()
                    .map_err(|_| Error::CannotDifferentiate(direction.name()))?;
                Self::new(
                    self.xi.clone(),
                    self.eta.derivative_basis()?,
                    &self.values * d.transpose(),
                )
            }
        }
    }

    pub fn partials(&self, xi: f64, eta: f64) -> Result<SurfacePartials> {
        let dx = self.derivative(Direction::Xi)?;
        let de = self.derivative(Direction::Eta)?;
        Ok(SurfacePartials {
            value: self.value(xi, eta)?,
            d_xi: dx.value(xi, eta)?,
            d_eta: de.value(xi, eta)?,
            d_xixi: dx.derivative(Direction::Xi)?.value(xi, eta)?,
            d_xieta: dx.derivative(Direction::Eta)?.value(xi, eta)?,
            d_etaeta: de.derivative(Direction::Eta)?.value(xi, eta)?,
        })
    }
}

pub fn surface_value(net: &ControlNet, xi: f64, eta: f64) -> Result<f64> {
    net.value(xi, eta)
}

pub fn derivative_net(net: &ControlNet, direction: Direction) -> Result<ControlNet> {
    net.derivative(direction)
}

pub fn surface_partials(net: &ControlNet, xi: f64, eta: f64) -> Result<SurfacePartials> {
    net.partials(xi, eta)
}
