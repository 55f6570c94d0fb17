//! Forward-mode multivariate truncated Taylor expansion (order <= 4).
//!
//! A jet stores the coefficients `∂^α x / α!` for all multi-indices `|α| <=
//! order` over a small number of chart variables. Chart dimensions stay small
//! (m <= 8), so coefficients are stored densely in graded lexicographic order
//! and products run over a precomputed contribution table.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DVector;
use thiserror::Error;

pub const MAX_ORDER: usize = 4;

#[derive(Debug, Error)]
pub enum JetError {
    #[error("jet order {0} outside supported range 1..={MAX_ORDER}")]
    OrderOutOfRange(usize),
    #[error("mismatched jet shapes: ({m0} vars, order {o0}) vs ({m1} vars, order {o1})")]
    ShapeMismatch {
        m0: usize,
        o0: usize,
        m1: usize,
        o1: usize,
    },
    #[error("mismatched base points")]
    BasePointMismatch,
    #[error("variable index {index} out of range for {vars} variables")]
    VariableOutOfRange { index: usize, vars: usize },
    #[error("composition of {func} is singular at base value {value}")]
    SingularComposition { func: &'static str, value: f64 },
    #[error("chart point {point:?} outside the immersion domain")]
    OutsideDomain { point: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, JetError>;

/// Dense multi-index bookkeeping for a fixed (vars, order) pair.
pub struct MultiIndexTable {
    pub vars: usize,
    pub order: usize,
    indices: Vec<Vec<u8>>,
    rank: HashMap<Vec<u8>, usize>,
    /// For each target rank, the (i, j) coefficient pairs with α_i + α_j = γ.
    products: Vec<Vec<(u32, u32)>>,
}

impl MultiIndexTable {
    fn build(vars: usize, order: usize) -> MultiIndexTable {
        let mut indices: Vec<Vec<u8>> = Vec::new();
        // Graded lexicographic: all |α| = d blocks in increasing d, so the
        // order-(k-1) table is a prefix of the order-k table.
        for degree in 0..=order {
            let mut current = vec![0u8; vars];
            fn rec(
                slot: usize,
                remaining: u8,
                current: &mut Vec<u8>,
                out: &mut Vec<Vec<u8>>,
            ) {
                if slot + 1 == current.len() {
                    current[slot] = remaining;
                    out.push(current.clone());
                    return;
                }
                for v in (0..=remaining).rev() {
                    current[slot] = v;
                    rec(slot + 1, remaining - v, current, out);
                }
            }
            if vars == 0 {
                if degree == 0 {
                    indices.push(Vec::new());
                }
            } else {
                rec(0, degree as u8, &mut current, &mut indices);
            }
        }
        let rank: HashMap<Vec<u8>, usize> = indices
            .iter()
            .enumerate()
            .map(|(r, idx)| (idx.clone(), r))
            .collect();
        let mut products = vec![Vec::new(); indices.len()];
        for (i, a) in indices.iter().enumerate() {
            let da: usize = a.iter().map(|&x| x as usize).sum();
            for (j, b) in indices.iter().enumerate() {
                let db: usize = b.iter().map(|&x| x as usize).sum();
                if da + db > order {
                    continue;
                }
                let sum: Vec<u8> = a.iter().zip(b.iter()).map(|(x, y)| x + y).collect();
                let r = rank[&sum];
                products[r].push((i as u32, j as u32));
            }
        }
        MultiIndexTable {
            vars,
            order,
            indices,
            rank,
            products,
        }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn index(&self, rank: usize) -> &[u8] {
        &self.indices[rank]
    }

    pub fn rank_of(&self, alpha: &[u8]) -> Option<usize> {
        self.rank.get(alpha).copied()
    }
}

fn table_cache() -> &'static Mutex<HashMap<(usize, usize), Arc<MultiIndexTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MultiIndexTable>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

pub fn multi_index_table(vars: usize, order: usize) -> Arc<MultiIndexTable> {
    let mut cache = table_cache().lock().expect("table cache poisoned");
    cache
        .entry((vars, order))
        .or_insert_with(|| Arc::new(MultiIndexTable::build(vars, order)))
        .clone()
}

/// Scalar truncated Taylor series in `vars` variables.
#[derive(Clone)]
pub struct ScalarJet {
    table: Arc<MultiIndexTable>,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for ScalarJet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScalarJet")
            .field("vars", &self.table.vars)
            .field("order", &self.table.order)
            .field("coeffs", &self.coeffs)
            .finish()
    }
}

impl ScalarJet {
    pub fn constant(vars: usize, order: usize, value: f64) -> ScalarJet {
        let table = multi_index_table(vars, order);
        let mut coeffs = vec![0.0; table.len()];
        coeffs[0] = value;
        ScalarJet { table, coeffs }
    }

    /// The coordinate function `u_k` expanded at `value`.
    pub fn variable(vars: usize, order: usize, k: usize, value: f64) -> Result<ScalarJet> {
        if k >= vars {
            return Err(JetError::VariableOutOfRange {
                index: k,
                vars,
            });
        }
        let mut jet = ScalarJet::constant(vars, order, value);
        if order >= 1 {
            let mut e = vec![0u8; vars];
            e[k] = 1;
            let r = jet.table.rank_of(&e).expect("first-order index present");
            jet.coeffs[r] = 1.0;
        }
        Ok(jet)
    }

    /// Builds a jet from explicit pure-`axis` derivative data: `derivs[k]` is
    /// the k-th derivative divided by k!. All mixed coefficients stay zero.
    pub fn from_univariate(
        vars: usize,
        order: usize,
        axis: usize,
        derivs: &[f64],
    ) -> Result<ScalarJet> {
        if axis >= vars {
            return Err(JetError::VariableOutOfRange {
                index: axis,
                vars,
            });
        }
        let mut jet = ScalarJet::constant(vars, order, 0.0);
        for (k, &d) in derivs.iter().take(order + 1).enumerate() {
            let mut alpha = vec![0u8; vars];
            alpha[axis] = k as u8;
            let r = jet.table.rank_of(&alpha).expect("pure index present");
            jet.coeffs[r] = d;
        }
        Ok(jet)
    }

    pub fn vars(&self) -> usize {
        self.table.vars
    }

    pub fn order(&self) -> usize {
        self.table.order
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    pub fn coeff(&self, alpha: &[u8]) -> f64 {
        self.table
            .rank_of(alpha)
            .map(|r| self.coeffs[r])
            .unwrap_or(0.0)
    }

    fn check_shape(&self, other: &ScalarJet) -> Result<()> {
        if self.table.vars != other.table.vars || self.table.order != other.table.order {
            return Err(JetError::ShapeMismatch {
                m0: self.table.vars,
                o0: self.table.order,
                m1: other.table.vars,
                o1: other.table.order,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &ScalarJet) -> Result<ScalarJet> {
        self.check_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(ScalarJet {
            table: self.table.clone(),
            coeffs,
        })
    }

    pub fn sub(&self, other: &ScalarJet) -> Result<ScalarJet> {
        self.check_shape(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(ScalarJet {
            table: self.table.clone(),
            coeffs,
        })
    }

    pub fn neg(&self) -> ScalarJet {
        self.scale(-1.0)
    }

    pub fn scale(&self, s: f64) -> ScalarJet {
        ScalarJet {
            table: self.table.clone(),
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scalar(&self, s: f64) -> ScalarJet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Truncated product.
    pub fn mul(&self, other: &ScalarJet) -> Result<ScalarJet> {
        self.check_shape(other)?;
        let mut coeffs = vec![0.0; self.coeffs.len()];
        for (r, pairs) in self.table.products.iter().enumerate() {
            let mut acc = 0.0;
            for &(i, j) in pairs {
                acc += self.coeffs[i as usize] * other.coeffs[j as usize];
            }
            coeffs[r] = acc;
        }
        Ok(ScalarJet {
            table: self.table.clone(),
            coeffs,
        })
    }

    pub fn powi(&self, exp: usize) -> Result<ScalarJet> {
        let mut out = ScalarJet::constant(self.vars(), self.order(), 1.0);
        for _ in 0..exp {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Composes a univariate smooth function: `scaled[k]` must hold
    /// `f^(k)(value) / k!` for `k = 0..=order`.
    pub fn compose(&self, scaled: &[f64]) -> Result<ScalarJet> {
        let order = self.order();
        let mut w = self.clone();
        w.coeffs[0] = 0.0;
        // Horner over the perturbation part.
        let mut result = ScalarJet::constant(self.vars(), order, scaled[order.min(scaled.len() - 1)]);
        for k in (0..order.min(scaled.len() - 1)).rev() {
            result = result.mul(&w)?.add_scalar(scaled[k]);
        }
        Ok(result)
    }

    pub fn recip(&self) -> Result<ScalarJet> {
        let c = self.value();
        if c == 0.0 {
            return Err(JetError::SingularComposition {
                func: "recip",
                value: c,
            });
        }
        let mut scaled = vec![0.0; self.order() + 1];
        let mut d = 1.0 / c;
        for s in scaled.iter_mut() {
            *s = d;
            d *= -1.0 / c;
        }
        self.compose(&scaled)
    }

    pub fn div(&self, other: &ScalarJet) -> Result<ScalarJet> {
        self.mul(&other.recip()?)
    }

    pub fn sqrt(&self) -> Result<ScalarJet> {
        let c = self.value();
        if c <= 0.0 {
            return Err(JetError::SingularComposition {
                func: "sqrt",
                value: c,
            });
        }
        let root = c.sqrt();
        let mut scaled = vec![0.0; self.order() + 1];
        let mut binom = 1.0; // C(1/2, k)
        for (k, s) in scaled.iter_mut().enumerate() {
            *s = root * binom / c.powi(k as i32);
            binom *= (0.5 - k as f64) / (k as f64 + 1.0);
        }
        self.compose(&scaled)
    }

    pub fn sin(&self) -> Result<ScalarJet> {
        let c = self.value();
        let cycle = [c.sin(), c.cos(), -c.sin(), -c.cos()];
        let mut scaled = vec![0.0; self.order() + 1];
        let mut fact = 1.0;
        for (k, s) in scaled.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *s = cycle[k % 4] / fact;
        }
        self.compose(&scaled)
    }

    pub fn cos(&self) -> Result<ScalarJet> {
        let c = self.value();
        let cycle = [c.cos(), -c.sin(), -c.cos(), c.sin()];
        let mut scaled = vec![0.0; self.order() + 1];
        let mut fact = 1.0;
        for (k, s) in scaled.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *s = cycle[k % 4] / fact;
        }
        self.compose(&scaled)
    }

    pub fn exp(&self) -> Result<ScalarJet> {
        let e = self.value().exp();
        let mut scaled = vec![0.0; self.order() + 1];
        let mut fact = 1.0;
        for (k, s) in scaled.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            *s = e / fact;
        }
        self.compose(&scaled)
    }

    /// Partial derivative as a jet of one order less.
    pub fn derivative(&self, axis: usize) -> Result<ScalarJet> {
        if axis >= self.vars() {
            return Err(JetError::VariableOutOfRange {
                index: axis,
                vars: self.vars(),
            });
        }
        let order = self.order().saturating_sub(1);
        let table = multi_index_table(self.vars(), order);
        let mut coeffs = vec![0.0; table.len()];
        for (r, c) in coeffs.iter_mut().enumerate() {
            let mut alpha = table.index(r).to_vec();
            alpha[axis] += 1;
            let factor = alpha[axis] as f64;
            if let Some(src) = self.table.rank_of(&alpha) {
                *c = factor * self.coeffs[src];
            }
        }
        Ok(ScalarJet { table, coeffs })
    }

    /// Restriction to a lower order (coefficients are a prefix in graded
    /// order, so this is exact).
    pub fn truncate(&self, order: usize) -> ScalarJet {
        assert!(order <= self.order());
        let table = multi_index_table(self.vars(), order);
        ScalarJet {
            coeffs: self.coeffs[..table.len()].to_vec(),
            table,
        }
    }
}

/// Vector-valued jet of a chart-to-ambient map at a chart point.
#[derive(Debug, Clone)]
pub struct Jet {
    base_point: Vec<f64>,
    components: Vec<ScalarJet>,
}

impl Jet {
    pub fn new(base_point: Vec<f64>, components: Vec<ScalarJet>) -> Result<Jet> {
        let vars = base_point.len();
        for c in &components {
            if c.vars() != vars {
                return Err(JetError::ShapeMismatch {
                    m0: vars,
                    o0: c.order(),
                    m1: c.vars(),
                    o1: c.order(),
                });
            }
        }
        Ok(Jet {
            base_point,
            components,
        })
    }

    pub fn base_point(&self) -> &[f64] {
        &self.base_point
    }

    pub fn order(&self) -> usize {
        self.components[0].order()
    }

    pub fn vars(&self) -> usize {
        self.base_point.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.components.len()
    }

    pub fn component(&self, k: usize) -> &ScalarJet {
        &self.components[k]
    }

    /// Taylor coefficient `∂^α x / α!` as an ambient vector.
    pub fn coefficient(&self, alpha: &[u8]) -> DVector<f64> {
        DVector::from_iterator(
            self.components.len(),
            self.components.iter().map(|c| c.coeff(alpha)),
        )
    }

    pub fn value(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.components.len(),
            self.components.iter().map(|c| c.value()),
        )
    }

    /// `∂_i x`.
    pub fn partial(&self, i: usize) -> DVector<f64> {
        let mut alpha = vec![0u8; self.vars()];
        alpha[i] = 1;
        self.coefficient(&alpha)
    }

    /// `∂_i ∂_j x` (with the multi-index factorial restored).
    pub fn second_partial(&self, i: usize, j: usize) -> DVector<f64> {
        let mut alpha = vec![0u8; self.vars()];
        alpha[i] += 1;
        alpha[j] += 1;
        self.coefficient(&alpha) * multi_index_factorial(&alpha)
    }

    /// `∂_i ∂_j ∂_k x`.
    pub fn third_partial(&self, i: usize, j: usize, k: usize) -> DVector<f64> {
        let mut alpha = vec![0u8; self.vars()];
        alpha[i] += 1;
        alpha[j] += 1;
        alpha[k] += 1;
        self.coefficient(&alpha) * multi_index_factorial(&alpha)
    }

    pub fn truncate(&self, order: usize) -> Jet {
        Jet {
            base_point: self.base_point.clone(),
            components: self.components.iter().map(|c| c.truncate(order)).collect(),
        }
    }
}

pub fn multi_index_factorial(alpha: &[u8]) -> f64 {
    alpha
        .iter()
        .map(|&k| (1..=k as u64).product::<u64>() as f64)
        .product()
}

/// Finite-difference estimators used by the Laplacian pipeline and as
/// independent oracles for jet coefficients.
///
/// All stencils are 5-point central with one Richardson level; the default
/// step follows `h = 1e-3 * (1 + |u_i|)`.
pub mod finite_diff {
    pub fn default_step(u: f64) -> f64 {
        1e-3 * (1.0 + u.abs())
    }

    fn shifted(u: &[f64], i: usize, h: f64) -> Vec<f64> {
        let mut v = u.to_vec();
        v[i] += h;
        v
    }

    fn d1_five_point<F>(f: &F, u: &[f64], i: usize, h: f64) -> Option<f64>
    where
        F: Fn(&[f64]) -> Option<f64>,
    {
        let fm2 = f(&shifted(u, i, -2.0 * h))?;
        let fm1 = f(&shifted(u, i, -h))?;
        let fp1 = f(&shifted(u, i, h))?;
        let fp2 = f(&shifted(u, i, 2.0 * h))?;
        Some((fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h))
    }

    /// First partial `∂_i f` with one Richardson level on the 5-point stencil.
    pub fn d1<F>(f: &F, u: &[f64], i: usize, h: f64) -> Option<f64>
    where
        F: Fn(&[f64]) -> Option<f64>,
    {
        let coarse = d1_five_point(f, u, i, h)?;
        let fine = d1_five_point(f, u, i, h / 2.0)?;
        Some((16.0 * fine - coarse) / 15.0)
    }

    fn d2_diag_five_point<F>(f: &F, u: &[f64], i: usize, h: f64) -> Option<f64>
    where
        F: Fn(&[f64]) -> Option<f64>,
    {
        let fm2 = f(&shifted(u, i, -2.0 * h))?;
        let fm1 = f(&shifted(u, i, -h))?;
        let f0 = f(u)?;
        let fp1 = f(&shifted(u, i, h))?;
        let fp2 = f(&shifted(u, i, 2.0 * h))?;
        Some((-fm2 + 16.0 * fm1 - 30.0 * f0 + 16.0 * fp1 - fp2) / (12.0 * h * h))
    }

    fn d2_mixed_cross<F>(f: &F, u: &[f64], i: usize, j: usize, h: f64) -> Option<f64>
    where
        F: Fn(&[f64]) -> Option<f64>,
    {
        let mut pp = u.to_vec();
        pp[i] += h;
        pp[j] += h;
        let mut pm = u.to_vec();
        pm[i] += h;
        pm[j] -= h;
        let mut mp = u.to_vec();
        mp[i] -= h;
        mp[j] += h;
        let mut mm = u.to_vec();
        mm[i] -= h;
        mm[j] -= h;
        Some((f(&pp)? - f(&pm)? - f(&mp)? + f(&mm)?) / (4.0 * h * h))
    }

    /// Second partial `∂_i ∂_j f` with one Richardson level.
    pub fn d2<F>(f: &F, u: &[f64], i: usize, j: usize, h: f64) -> Option<f64>
    where
        F: Fn(&[f64]) -> Option<f64>,
    {
        if i == j {
            let coarse = d2_diag_five_point(f, u, i, h)?;
            let fine = d2_diag_five_point(f, u, i, h / 2.0)?;
            Some((16.0 * fine - coarse) / 15.0)
        } else {
            let coarse = d2_mixed_cross(f, u, i, j, h)?;
            let fine = d2_mixed_cross(f, u, i, j, h / 2.0)?;
            Some((4.0 * fine - coarse) / 3.0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn add_of_variable_and_constant() {
        // f(t) = t, g(t) = 1 at t = 0, order 2 -> coefficients (1, 1, 0).
        let f = ScalarJet::variable(1, 2, 0, 0.0).unwrap();
        let g = ScalarJet::constant(1, 2, 1.0);
        let sum = f.add(&g).unwrap();
        assert_eq!(sum.coeff(&[0]), 1.0);
        assert_eq!(sum.coeff(&[1]), 1.0);
        assert_eq!(sum.coeff(&[2]), 0.0);
    }

    #[test]
    fn product_of_variables() {
        let f = ScalarJet::variable(1, 2, 0, 0.0).unwrap();
        let prod = f.mul(&f).unwrap();
        assert_eq!(prod.coeff(&[2]), 1.0);
        assert_eq!(prod.coeff(&[1]), 0.0);
        assert_eq!(prod.coeff(&[0]), 0.0);
    }

    #[test]
    fn sine_composition_at_zero() {
        let t = ScalarJet::variable(1, 2, 0, 0.0).unwrap();
        let s = t.sin().unwrap();
        assert_relative_eq!(s.coeff(&[0]), 0.0, epsilon = 1e-15);
        assert_relative_eq!(s.coeff(&[1]), 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.coeff(&[2]), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn mismatched_shapes_rejected() {
        let a = ScalarJet::constant(2, 2, 1.0);
        let b = ScalarJet::constant(2, 3, 1.0);
        assert!(matches!(a.add(&b), Err(JetError::ShapeMismatch { .. })));
    }

    #[test]
    fn quartic_coefficient_of_cubic_vanishes() {
        // (1 + u0)^3 at order 4: the order-4 coefficients are zero.
        let u = ScalarJet::variable(2, 4, 0, 0.0).unwrap();
        let p = u.add_scalar(1.0).powi(3).unwrap();
        assert_eq!(p.coeff(&[4, 0]), 0.0);
        assert_eq!(p.coeff(&[3, 1]), 0.0);
        assert_eq!(p.coeff(&[3, 0]), 1.0);
    }

    #[test]
    fn truncation_matches_lower_order_computation() {
        let mk = |order: usize| {
            let x = ScalarJet::variable(2, order, 0, 0.7).unwrap();
            let y = ScalarJet::variable(2, order, 1, -0.3).unwrap();
            x.mul(&y).unwrap().sin().unwrap().add(&x.sqrt().unwrap()).unwrap()
        };
        let j4 = mk(4);
        let j3 = mk(3);
        let t = j4.truncate(3);
        for r in 0..multi_index_table(2, 3).len() {
            let alpha = multi_index_table(2, 3).index(r).to_vec();
            assert_eq!(t.coeff(&alpha), j3.coeff(&alpha));
        }
    }

    #[test]
    fn reciprocal_and_division() {
        let x = ScalarJet::variable(1, 3, 0, 2.0).unwrap();
        let r = x.recip().unwrap();
        // 1/(2 + w) = 1/2 - w/4 + w²/8 - w³/16
        assert_relative_eq!(r.coeff(&[0]), 0.5, epsilon = 1e-15);
        assert_relative_eq!(r.coeff(&[1]), -0.25, epsilon = 1e-15);
        assert_relative_eq!(r.coeff(&[2]), 0.125, epsilon = 1e-15);
        assert_relative_eq!(r.coeff(&[3]), -0.0625, epsilon = 1e-15);
        assert!(ScalarJet::constant(1, 2, 0.0).recip().is_err());
    }

    #[test]
    fn sqrt_jet_squared_recovers_input() {
        let x = ScalarJet::variable(2, 4, 0, 1.7).unwrap();
        let y = ScalarJet::variable(2, 4, 1, 0.4).unwrap();
        let f = x.add(&y.mul(&y).unwrap()).unwrap();
        let s = f.sqrt().unwrap();
        let back = s.mul(&s).unwrap();
        for r in 0..multi_index_table(2, 4).len() {
            let alpha = multi_index_table(2, 4).index(r).to_vec();
            assert_relative_eq!(back.coeff(&alpha), f.coeff(&alpha), epsilon = 1e-13);
        }
    }

    #[test]
    fn derivative_shifts_coefficients() {
        let x = ScalarJet::variable(2, 3, 0, 0.5).unwrap();
        let y = ScalarJet::variable(2, 3, 1, 0.25).unwrap();
        let f = x.powi(2).unwrap().mul(&y).unwrap(); // x² y
        let fx = f.derivative(0).unwrap(); // 2xy
        assert_relative_eq!(fx.value(), 2.0 * 0.5 * 0.25, epsilon = 1e-14);
        assert_relative_eq!(fx.coeff(&[1, 0]), 2.0 * 0.25, epsilon = 1e-14);
        assert_relative_eq!(fx.coeff(&[0, 1]), 2.0 * 0.5, epsilon = 1e-14);
    }

    #[test]
    fn finite_difference_oracle_agrees_on_smooth_function() {
        let f = |u: &[f64]| Some((u[0] * u[1]).sin() + u[0].exp());
        let u = [0.3, -0.7];
        let d0 = finite_diff::d1(&f, &u, 0, finite_diff::default_step(u[0])).unwrap();
        let exact = u[1] * (u[0] * u[1]).cos() + u[0].exp();
        assert_relative_eq!(d0, exact, epsilon = 1e-10);
        let d01 = finite_diff::d2(&f, &u, 0, 1, 1e-3).unwrap();
        let exact01 =
            (u[0] * u[1]).cos() - u[0] * u[1] * (u[0] * u[1]).sin();
        assert_relative_eq!(d01, exact01, epsilon = 1e-8);
    }

    #[test]
    fn jet_partial_helpers_restore_factorials() {
        let x = ScalarJet::variable(2, 3, 0, 1.0).unwrap();
        let f = x.powi(3).unwrap(); // x³: ∂²/∂x² = 6x = 6
        let jet = Jet::new(vec![1.0, 0.0], vec![f]).unwrap();
        let second = jet.second_partial(0, 0);
        assert_relative_eq!(second[0], 6.0, epsilon = 1e-13);
        let third = jet.third_partial(0, 0, 0);
        assert_relative_eq!(third[0], 6.0, epsilon = 1e-13);
    }
}
