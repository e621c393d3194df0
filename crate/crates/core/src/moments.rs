//! Moment sources, matrix functionals and Uvarov perturbation data.
//!
//! A sesquilinear form is known only through its Gram moments
//! `G_{k,l} = ⟨I x^k, I y^l⟩`. Functionals acting on the `x` variable are
//! truncated moment tables `M_r = ⟨I x^r, β⟩`, and a polynomial is paired
//! with one by contracting its coefficients on the left: `⟨P, β⟩ = Σ p_r M_r`.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::linalg::{Block, Matrix};
use crate::matpoly::{jet_row, MatPoly, Support, SupportError};
use crate::scalar::{taylor_weight, Scalar};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MomentError {
    #[error("moment G[{k},{l}] is outside the supplied table")]
    OutOfRange { k: usize, l: usize },
    #[error("functional moment table has {available} entries but degree {degree} was requested")]
    TableTooShort { degree: usize, available: usize },
    #[error("block size mismatch: expected {expected}, found {found}")]
    BlockSize { expected: usize, found: usize },
    #[error("{0}")]
    Support(#[from] SupportError),
    #[error("invalid perturbation: {0}")]
    Shape(String),
}

/// Provider of Gram entries `G_{k,l}`.
pub trait MomentSource<T: Scalar>: Send + Sync {
    fn p(&self) -> usize;

    fn moment(&self, k: usize, l: usize) -> Result<Block<T>, MomentError>;
}

impl<T: Scalar> fmt::Debug for dyn MomentSource<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MomentSource(p={})", self.p())
    }
}

/// `G_{k,l} = m_{k+l}`.
#[derive(Clone, Debug)]
pub struct HankelSource<T> {
    p: usize,
    moments: Vec<Block<T>>,
}

impl<T: Scalar> HankelSource<T> {
    pub fn moments(&self) -> &[Block<T>] {
        &self.moments
    }
}

impl<T: Scalar> MomentSource<T> for HankelSource<T> {
    fn p(&self) -> usize {
        self.p
    }

    fn moment(&self, k: usize, l: usize) -> Result<Block<T>, MomentError> {
        self.moments
            .get(k + l)
            .cloned()
            .ok_or(MomentError::OutOfRange { k, l })
    }
}

/// Hankel source over a nonempty list of `p × p` moments.
pub fn hankel_source<T: Scalar>(moments: Vec<Block<T>>) -> Result<HankelSource<T>, MomentError> {
    let p = moments
        .first()
        .map(Matrix::rows)
        .ok_or_else(|| MomentError::Shape("hankel source needs at least one moment".into()))?;
    check_blocks(p, &moments)?;
    Ok(HankelSource { p, moments })
}

fn check_blocks<T: Scalar>(p: usize, blocks: &[Block<T>]) -> Result<(), MomentError> {
    for b in blocks {
        if b.rows() != p || b.cols() != p {
            return Err(MomentError::BlockSize {
                expected: p,
                found: if b.rows() != p { b.rows() } else { b.cols() },
            });
        }
    }
    Ok(())
}

/// Explicit Gram table; `table[k][l] = G_{k,l}`.
#[derive(Clone, Debug)]
pub struct GramTable<T> {
    p: usize,
    table: Vec<Vec<Block<T>>>,
}

impl<T: Scalar> GramTable<T> {
    pub fn new(p: usize, table: Vec<Vec<Block<T>>>) -> Result<Self, MomentError> {
        for row in &table {
            check_blocks(p, row)?;
        }
        Ok(Self { p, table })
    }

    /// `G_{k,l} = δ_{k,l} I_p` truncated to `size × size` blocks.
    pub fn identity(p: usize, size: usize) -> Self {
        let table = (0..size)
            .map(|k| {
                (0..size)
                    .map(|l| if k == l { Matrix::identity(p) } else { Matrix::zeros(p, p) })
                    .collect()
            })
            .collect();
        Self { p, table }
    }
}

impl<T: Scalar> MomentSource<T> for GramTable<T> {
    fn p(&self) -> usize {
        self.p
    }

    fn moment(&self, k: usize, l: usize) -> Result<Block<T>, MomentError> {
        self.table
            .get(k)
            .and_then(|row| row.get(l))
            .cloned()
            .ok_or(MomentError::OutOfRange { k, l })
    }
}

/// `W · (b^{r+1} − a^{r+1}) / (r+1)` for `r = 0..count`.
pub fn lebesgue_moments<T: Scalar>(a: &T, b: &T, weight: &Block<T>, count: usize) -> Vec<Block<T>> {
    (0..count)
        .map(|r| {
            let factor = (b.pow(r + 1) - a.pow(r + 1)) / T::from_i64(r as i64 + 1);
            weight.scale(&factor)
        })
        .collect()
}

/// `G_{k,l} = Σ_i t_i^{k+l} W_i`.
#[derive(Clone, Debug)]
pub struct DiscreteMeasureSource<T> {
    p: usize,
    points: Vec<T>,
    weights: Vec<Block<T>>,
}

impl<T: Scalar> MomentSource<T> for DiscreteMeasureSource<T> {
    fn p(&self) -> usize {
        self.p
    }

    fn moment(&self, k: usize, l: usize) -> Result<Block<T>, MomentError> {
        let mut acc = Matrix::zeros(self.p, self.p);
        for (t, w) in self.points.iter().zip(&self.weights) {
            acc.add_assign(&w.scale(&t.pow(k + l)));
        }
        Ok(acc)
    }
}

pub fn discrete_measure_source<T: Scalar>(
    p: usize,
    points: Vec<T>,
    weights: Vec<Block<T>>,
) -> Result<DiscreteMeasureSource<T>, MomentError> {
    if points.len() != weights.len() {
        return Err(MomentError::Shape(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    check_blocks(p, &weights)?;
    Ok(DiscreteMeasureSource { p, points, weights })
}

/// A matrix functional on the `x` variable, as the truncated table
/// `M_r = ⟨I_p x^r, β⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct Functional<T> {
    p: usize,
    table: Vec<Block<T>>,
}

impl<T: Scalar> Functional<T> {
    pub fn from_table(p: usize, table: Vec<Block<T>>) -> Result<Self, MomentError> {
        check_blocks(p, &table)?;
        Ok(Self { p, table })
    }

    pub fn zero(p: usize, degree_bound: usize) -> Self {
        Self {
            p,
            table: vec![Matrix::zeros(p, p); degree_bound + 1],
        }
    }

    pub fn table(&self) -> &[Block<T>] {
        &self.table
    }

    /// Highest degree this table can pair with, if any.
    pub fn max_degree(&self) -> Option<usize> {
        self.table.len().checked_sub(1)
    }

    pub fn moment(&self, r: usize) -> Result<&Block<T>, MomentError> {
        self.table.get(r).ok_or(MomentError::TableTooShort {
            degree: r,
            available: self.table.len(),
        })
    }

    /// `⟨P, β⟩ = Σ_r p_r M_r`.
    pub fn pair(&self, poly: &MatPoly<T>) -> Result<Block<T>, MomentError> {
        let mut acc = Matrix::zeros(self.p, self.p);
        for (r, c) in poly.coeffs().iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            acc.add_assign(&c.mul(self.moment(r)?));
        }
        Ok(acc)
    }
}

/// One term `B · (−1)^l / l! · δ^{(l)}(x − x̃)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMass<T> {
    pub point: T,
    pub order: usize,
    pub block: Block<T>,
}

/// Moment table of a finite sum of Dirac derivatives: each term contributes
/// `C(r, l) x̃^{r−l} B` to `M_r` for `r ≥ l`.
pub fn functional_from_point_masses<T: Scalar>(
    p: usize,
    terms: &[PointMass<T>],
    degree_bound: usize,
) -> Result<Functional<T>, MomentError> {
    let mut table = vec![Matrix::zeros(p, p); degree_bound + 1];
    for term in terms {
        check_blocks(p, std::slice::from_ref(&term.block))?;
        for (r, entry) in table.iter_mut().enumerate().skip(term.order) {
            entry.add_assign(&term.block.scale(&taylor_weight(r, term.order, &term.point)));
        }
    }
    Ok(Functional { p, table })
}

/// Which closed-form route produced a spec.
#[derive(Clone, Debug, PartialEq)]
pub enum SpecStructure<T> {
    General,
    /// Total-derivative masses on the diagonal; `raw[j][m] = β^{(j)}_m`.
    DiagonalHankel { raw: Vec<Vec<Block<T>>> },
    /// Discrete `x` support; `couplings` is `Ñp × Np` with rows `(b, l)`
    /// and columns `(j, m)`, both point-major.
    DiscreteX {
        x_support: Support<T>,
        couplings: Matrix<T>,
    },
}

/// `v = Σ_j Σ_m (−1)^m/m! (β^{(j)}_m)_x ⊗ δ^{(m)}(y − x_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct UvarovSpec<T> {
    p: usize,
    y_support: Support<T>,
    betas: Vec<Vec<Functional<T>>>,
    structure: SpecStructure<T>,
}

impl<T: Scalar> UvarovSpec<T> {
    /// General spec; `betas[j]` must have `κ^{(j)}` functionals.
    pub fn general(
        p: usize,
        y_support: Support<T>,
        betas: Vec<Vec<Functional<T>>>,
    ) -> Result<Self, MomentError> {
        if betas.len() != y_support.points().len()
            || betas.iter().zip(y_support.mults()).any(|(row, &k)| row.len() != k)
        {
            return Err(MomentError::Shape(
                "functional grid does not match support multiplicities".into(),
            ));
        }
        if let Some(f) = betas.iter().flatten().find(|f| f.p != p) {
            return Err(MomentError::BlockSize {
                expected: p,
                found: f.p,
            });
        }
        Ok(Self {
            p,
            y_support,
            betas,
            structure: SpecStructure::General,
        })
    }

    /// The perturbation with no support points.
    pub fn zero(p: usize) -> Self {
        Self {
            p,
            y_support: Support::empty(),
            betas: Vec::new(),
            structure: SpecStructure::General,
        }
    }

    /// Pure masses `Σ_j B_j δ(x − x_j) ⊗ δ(y − x_j)`.
    pub fn masses(
        p: usize,
        points: Vec<T>,
        masses: Vec<Block<T>>,
        degree_bound: usize,
    ) -> Result<Self, MomentError> {
        let raw = masses.into_iter().map(|b| vec![b]).collect();
        let mults = vec![1; points.len()];
        diagonal_spec_expand(p, points, mults, raw, degree_bound)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn y_support(&self) -> &Support<T> {
        &self.y_support
    }

    pub fn betas(&self) -> &[Vec<Functional<T>>] {
        &self.betas
    }

    pub fn structure(&self) -> &SpecStructure<T> {
        &self.structure
    }

    /// Same functionals, structure tag dropped.
    pub fn as_general(&self) -> Self {
        Self {
            structure: SpecStructure::General,
            ..self.clone()
        }
    }

    /// `N = Σ κ^{(j)}`.
    pub fn total(&self) -> usize {
        self.y_support.total()
    }

    /// `⟨P, β⟩`: the `p × Np` row of pairings `⟨P, β^{(j)}_m⟩`.
    pub fn beta_row(&self, poly: &MatPoly<T>) -> Result<Matrix<T>, MomentError> {
        let blocks = self
            .betas
            .iter()
            .flatten()
            .map(|f| f.pair(poly))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Matrix::hstack(&blocks, self.p))
    }

    /// `⟨P, Q⟩_v = Σ_j Σ_m (1/m!) ⟨P, β^{(j)}_m⟩ (Q^T)^{(m)}(x_j)`.
    pub fn pairing(&self, p_poly: &MatPoly<T>, q_poly: &MatPoly<T>) -> Result<Block<T>, MomentError> {
        let row = self.beta_row(p_poly)?;
        let jet = jet_row(q_poly, &self.y_support);
        Ok(row.mul(&jet.transpose()))
    }

    /// `V_{k,l} = Σ_j Σ_{m ≤ l} C(l, m) x_j^{l−m} M^{(j,m)}_k`.
    pub fn gram_entry(&self, k: usize, l: usize) -> Result<Block<T>, MomentError> {
        let mut acc = Matrix::zeros(self.p, self.p);
        for (f, (_, x, m)) in self.betas.iter().flatten().zip(self.y_support.entries()) {
            if m > l {
                continue;
            }
            let moment = f.moment(k)?;
            acc.add_assign(&moment.scale(&taylor_weight(l, m, x)));
        }
        Ok(acc)
    }
}

/// Expands total-derivative masses
/// `Σ_j Σ_m (−1)^m/m! β^{(j)}_m δ^{(m)}(x − x_j)` into general form:
/// `(β^{(j)}_k)_x = Σ_{n < κ−k} (−1)^n β^{(j)}_{k+n} / n! δ^{(n)}(x − x_j)`.
pub fn diagonal_spec_expand<T: Scalar>(
    p: usize,
    points: Vec<T>,
    mults: Vec<usize>,
    raw: Vec<Vec<Block<T>>>,
    degree_bound: usize,
) -> Result<UvarovSpec<T>, MomentError> {
    let support = Support::new(points, mults)?;
    if raw.len() != support.points().len()
        || raw.iter().zip(support.mults()).any(|(row, &k)| row.len() != k)
    {
        return Err(MomentError::Shape(
            "diagonal masses do not match support multiplicities".into(),
        ));
    }
    let mut betas = Vec::with_capacity(raw.len());
    for (x, masses) in support.points().iter().zip(&raw) {
        let kappa = masses.len();
        let row = (0..kappa)
            .map(|k| {
                let terms: Vec<_> = (0..kappa - k)
                    .map(|n| PointMass {
                        point: x.clone(),
                        order: n,
                        block: masses[k + n].clone(),
                    })
                    .collect();
                functional_from_point_masses(p, &terms, degree_bound)
            })
            .collect::<Result<Vec<_>, _>>()?;
        betas.push(row);
    }
    let mut spec = UvarovSpec::general(p, support, betas)?;
    spec.structure = SpecStructure::DiagonalHankel { raw };
    Ok(spec)
}

/// Expands a discrete-`x` perturbation
/// `(β^{(j)}_m)_x = Σ_b Σ_l β^{(b,j)}_{l,m} (−1)^l/l! δ^{(l)}(x − x̃_b)`.
pub fn discrete_spec_expand<T: Scalar>(
    p: usize,
    x_support: Support<T>,
    y_support: Support<T>,
    couplings: Matrix<T>,
    degree_bound: usize,
) -> Result<UvarovSpec<T>, MomentError> {
    if couplings.rows() != x_support.total() * p || couplings.cols() != y_support.total() * p {
        return Err(MomentError::Shape(format!(
            "coupling grid is {}x{}, expected {}x{}",
            couplings.rows(),
            couplings.cols(),
            x_support.total() * p,
            y_support.total() * p
        )));
    }
    let x_entries: Vec<_> = x_support.entries().collect();
    let mut functionals = Vec::with_capacity(y_support.total());
    for col in 0..y_support.total() {
        let terms: Vec<_> = x_entries
            .iter()
            .enumerate()
            .map(|(row, &(_, x, l))| PointMass {
                point: x.clone(),
                order: l,
                block: couplings.block(row, col, p),
            })
            .collect();
        functionals.push(functional_from_point_masses(p, &terms, degree_bound)?);
    }
    let mut iter = functionals.into_iter();
    let betas = y_support
        .mults()
        .iter()
        .map(|&k| iter.by_ref().take(k).collect())
        .collect();
    let mut spec = UvarovSpec::general(p, y_support, betas)?;
    spec.structure = SpecStructure::DiscreteX { x_support, couplings };
    Ok(spec)
}

/// `Ĝ = G + V`.
pub struct PerturbedSource<T: Scalar> {
    base: Arc<dyn MomentSource<T>>,
    spec: Arc<UvarovSpec<T>>,
}

impl<T: Scalar> PerturbedSource<T> {
    pub fn base(&self) -> &Arc<dyn MomentSource<T>> {
        &self.base
    }

    pub fn spec(&self) -> &UvarovSpec<T> {
        &self.spec
    }
}

impl<T: Scalar> MomentSource<T> for PerturbedSource<T> {
    fn p(&self) -> usize {
        self.base.p()
    }

    fn moment(&self, k: usize, l: usize) -> Result<Block<T>, MomentError> {
        Ok(self.base.moment(k, l)?.add(&self.spec.gram_entry(k, l)?))
    }
}

pub fn perturb_source<T: Scalar>(
    base: Arc<dyn MomentSource<T>>,
    spec: Arc<UvarovSpec<T>>,
) -> Result<PerturbedSource<T>, MomentError> {
    if base.p() != spec.p() {
        return Err(MomentError::BlockSize {
            expected: base.p(),
            found: spec.p(),
        });
    }
    Ok(PerturbedSource { base, spec })
}
