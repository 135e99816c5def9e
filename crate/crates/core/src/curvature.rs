//! Positive definite curvature models `H_k` and their secant updates.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::problem::{LinearOperator, Matrix, Vector};

/// Secant pairs with `sᵀy <= SKIP_THRESHOLD * ||s|| ||y||` are skipped.
pub const SKIP_THRESHOLD: f64 = 1e-8;

const TAU_MIN: f64 = 1e-10;
const TAU_MAX: f64 = 1e10;

/// `s = x_{k+1} - x_k`, `y = ∇g(x_{k+1}) - ∇g(x_k)`.
#[derive(Debug, Clone)]
pub struct SecantPair {
    pub s: Vector,
    pub y: Vector,
}

impl SecantPair {
    pub fn new(s: Vector, y: Vector) -> Self {
        SecantPair { s, y }
    }

    /// Curvature condition used by every quasi-Newton variant.
    pub fn is_acceptable(&self) -> bool {
        let sy = self.s.dot(&self.y);
        sy.is_finite() && sy > SKIP_THRESHOLD * self.s.norm() * self.y.norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Accepted,
    Skipped,
    /// The model does not learn from secant pairs (exact Hessian).
    Ignored,
}

/// How the L-BFGS initial matrix `γ⁻¹ I` is scaled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LbfgsScaling {
    /// `γ = sᵀy / yᵀy` from the most recent accepted pair.
    Adaptive,
    /// Keep `γ` fixed.
    Fixed(f64),
}

#[derive(Clone)]
struct Lbfgs {
    memory: usize,
    pairs: VecDeque<SecantPair>,
    gamma: f64,
    scaling: LbfgsScaling,
    // Compact direct form: B = σI - W M⁻¹ Wᵀ with W = [σS Y].
    w: Option<Matrix>,
    m_inv: Option<Matrix>,
}

impl Lbfgs {
    fn new(memory: usize, scaling: LbfgsScaling) -> Self {
        let gamma = match scaling {
            LbfgsScaling::Adaptive => 1.0,
            LbfgsScaling::Fixed(g) => g,
        };
        Lbfgs {
            memory: memory.max(1),
            pairs: VecDeque::new(),
            gamma,
            scaling,
            w: None,
            m_inv: None,
        }
    }

    fn sigma(&self) -> f64 {
        1.0 / self.gamma
    }

    fn push(&mut self, pair: SecantPair) {
        if self.pairs.len() == self.memory {
            self.pairs.pop_front();
        }
        if let LbfgsScaling::Adaptive = self.scaling {
            self.gamma = pair.s.dot(&pair.y) / pair.y.norm_squared();
        }
        self.pairs.push_back(pair);
        self.rebuild();
    }

    fn rebuild(&mut self) {
        let m = self.pairs.len();
        if m == 0 {
            self.w = None;
            self.m_inv = None;
            return;
        }
        let n = self.pairs[0].s.len();
        let sigma = self.sigma();
        let mut w = Matrix::zeros(n, 2 * m);
        for (j, p) in self.pairs.iter().enumerate() {
            w.set_column(j, &(&p.s * sigma));
            w.set_column(m + j, &p.y);
        }
        let mut middle = Matrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                let si = &self.pairs[i].s;
                middle[(i, j)] = sigma * si.dot(&self.pairs[j].s);
                if i > j {
                    let lij = si.dot(&self.pairs[j].y);
                    middle[(i, m + j)] = lij;
                    middle[(m + j, i)] = lij;
                }
            }
            middle[(m + i, m + i)] = -self.pairs[i].s.dot(&self.pairs[i].y);
        }
        match middle.try_inverse() {
            Some(inv) => {
                self.w = Some(w);
                self.m_inv = Some(inv);
            }
            None => {
                // Numerically dependent pairs; fall back to the newest pair only.
                let last = self.pairs.pop_back().expect("nonempty");
                self.pairs.clear();
                self.pairs.push_back(last);
                self.rebuild();
            }
        }
    }

    fn apply(&self, v: &Vector) -> Vector {
        let base = v * self.sigma();
        match (&self.w, &self.m_inv) {
            (Some(w), Some(m_inv)) => base - w * (m_inv * w.tr_mul(v)),
            _ => base,
        }
    }
}

#[derive(Clone)]
enum Variant {
    Exact(Option<Arc<dyn LinearOperator>>),
    /// `(B, rescale B on the first accepted pair)`
    DenseBfgs(Matrix, bool),
    Lbfgs(Lbfgs),
    ScaledIdentity(f64),
}

/// Which family of curvature model to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurvatureKind {
    Exact,
    DenseBfgs,
    Lbfgs { memory: usize },
    ScaledIdentity,
}

/// A positive definite approximation `H_k` of `∇²g(x_k)`.
#[derive(Clone)]
pub struct CurvatureModel {
    dim: usize,
    variant: Variant,
    accepted: usize,
    skipped: usize,
}

impl std::fmt::Debug for CurvatureModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CurvatureModel")
            .field("kind", &self.kind())
            .field("dim", &self.dim)
            .field("accepted", &self.accepted)
            .field("skipped", &self.skipped)
            .finish()
    }
}

impl CurvatureModel {
    /// Exact Hessian; the operator is installed with [`set_hessian`](Self::set_hessian).
    pub fn exact(dim: usize) -> Self {
        Self::with_variant(dim, Variant::Exact(None))
    }

    pub fn exact_with(op: Arc<dyn LinearOperator>) -> Self {
        Self::with_variant(op.dim(), Variant::Exact(Some(op)))
    }

    /// Dense BFGS from `B₀ = I`, rescaled to `(yᵀy / sᵀy) I` just before the
    /// first accepted update.
    pub fn dense_bfgs(dim: usize) -> Self {
        Self::with_variant(dim, Variant::DenseBfgs(Matrix::identity(dim, dim), true))
    }

    /// Dense BFGS from a fixed `B₀` (no rescaling).
    pub fn dense_bfgs_from(b0: Matrix) -> Self {
        Self::with_variant(b0.nrows(), Variant::DenseBfgs(b0, false))
    }

    pub fn lbfgs(dim: usize, memory: usize) -> Self {
        Self::lbfgs_with_scaling(dim, memory, LbfgsScaling::Adaptive)
    }

    pub fn lbfgs_with_scaling(dim: usize, memory: usize, scaling: LbfgsScaling) -> Self {
        Self::with_variant(dim, Variant::Lbfgs(Lbfgs::new(memory, scaling)))
    }

    pub fn scaled_identity(dim: usize, tau: f64) -> Self {
        Self::with_variant(dim, Variant::ScaledIdentity(tau.clamp(TAU_MIN, TAU_MAX)))
    }

    pub fn from_kind(kind: CurvatureKind, dim: usize) -> Self {
        match kind {
            CurvatureKind::Exact => Self::exact(dim),
            CurvatureKind::DenseBfgs => Self::dense_bfgs(dim),
            CurvatureKind::Lbfgs { memory } => Self::lbfgs(dim, memory),
            CurvatureKind::ScaledIdentity => Self::scaled_identity(dim, 1.0),
        }
    }

    fn with_variant(dim: usize, variant: Variant) -> Self {
        CurvatureModel {
            dim,
            variant,
            accepted: 0,
            skipped: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> CurvatureKind {
        match &self.variant {
            Variant::Exact(_) => CurvatureKind::Exact,
            Variant::DenseBfgs(..) => CurvatureKind::DenseBfgs,
            Variant::Lbfgs(l) => CurvatureKind::Lbfgs { memory: l.memory },
            Variant::ScaledIdentity(_) => CurvatureKind::ScaledIdentity,
        }
    }

    pub fn accepted_updates(&self) -> usize {
        self.accepted
    }

    pub fn skipped_updates(&self) -> usize {
        self.skipped
    }

    /// Scalar `τ` of a scaled identity model.
    pub fn scale(&self) -> Option<f64> {
        match self.variant {
            Variant::ScaledIdentity(tau) => Some(tau),
            _ => None,
        }
    }

    /// Number of stored L-BFGS pairs.
    pub fn stored_pairs(&self) -> usize {
        match &self.variant {
            Variant::Lbfgs(l) => l.pairs.len(),
            _ => 0,
        }
    }

    /// Installs the Hessian operator at the current iterate (exact models only).
    pub fn set_hessian(&mut self, op: Arc<dyn LinearOperator>) {
        if let Variant::Exact(slot) = &mut self.variant {
            *slot = Some(op);
        }
    }

    pub fn has_operator(&self) -> bool {
        !matches!(self.variant, Variant::Exact(None))
    }

    /// `H d`.
    ///
    /// # Panics
    /// On an exact model with no Hessian installed.
    pub fn apply(&self, d: &Vector) -> Vector {
        match &self.variant {
            Variant::Exact(op) => op
                .as_ref()
                .expect("exact curvature model used before a Hessian was installed")
                .apply(d),
            Variant::DenseBfgs(b, _) => b * d,
            Variant::Lbfgs(l) => l.apply(d),
            Variant::ScaledIdentity(tau) => d * *tau,
        }
    }

    /// Absorbs a secant pair. Pairs failing the curvature condition are
    /// skipped and counted; the model is left unchanged.
    pub fn update(&mut self, pair: SecantPair) -> UpdateOutcome {
        if matches!(self.variant, Variant::Exact(_)) {
            return UpdateOutcome::Ignored;
        }
        if pair.s.len() != self.dim || pair.y.len() != self.dim || !pair.is_acceptable() {
            self.skipped += 1;
            return UpdateOutcome::Skipped;
        }
        match &mut self.variant {
            Variant::Exact(_) => unreachable!(),
            Variant::DenseBfgs(b, rescale) => {
                if std::mem::take(rescale) {
                    let scale = pair.y.norm_squared() / pair.y.dot(&pair.s);
                    *b = Matrix::identity(self.dim, self.dim) * scale;
                }
                let bs = &*b * &pair.s;
                let sbs = pair.s.dot(&bs);
                let ys = pair.y.dot(&pair.s);
                if !(sbs > 0.0) {
                    self.skipped += 1;
                    return UpdateOutcome::Skipped;
                }
                b.ger(-1.0 / sbs, &bs, &bs, 1.0);
                b.ger(1.0 / ys, &pair.y, &pair.y, 1.0);
                // keep exactly symmetric
                let sym = (&*b + b.transpose()) * 0.5;
                *b = sym;
            }
            Variant::Lbfgs(l) => l.push(pair),
            Variant::ScaledIdentity(tau) => {
                *tau = (pair.s.dot(&pair.y) / pair.s.norm_squared()).clamp(TAU_MIN, TAU_MAX);
            }
        }
        self.accepted += 1;
        UpdateOutcome::Accepted
    }

    /// Estimates `(m, M)` with `m <= λ_min(H)`-ish and `M ≈ λ_max(H)`.
    ///
    /// `M` comes from `probes` power iterations, `m` from the smallest Rayleigh
    /// quotient over `probes` random directions. Both are estimates, not bounds.
    pub fn eigen_bounds_probe<R: Rng>(&self, probes: usize, rng: &mut R) -> (f64, f64) {
        if let Variant::ScaledIdentity(tau) = self.variant {
            return (tau, tau);
        }
        let probes = probes.max(1);
        let random_unit = |rng: &mut R| {
            let v = Vector::from_fn(self.dim, |_, _| rng.sample::<f64, _>(StandardNormal));
            let n = v.norm();
            if n > 0.0 {
                v / n
            } else {
                Vector::from_element(self.dim, 1.0 / (self.dim as f64).sqrt())
            }
        };

        let mut m_est = f64::INFINITY;
        let mut v = random_unit(rng);
        let mut big = 0.0;
        for i in 0..probes {
            let hv = self.apply(&v);
            if i == 0 {
                m_est = m_est.min(v.dot(&hv));
            }
            let norm = hv.norm();
            big = norm;
            if norm == 0.0 {
                break;
            }
            v = hv / norm;
        }
        for _ in 1..probes {
            let u = random_unit(rng);
            m_est = m_est.min(u.dot(&self.apply(&u)));
        }
        (m_est, big.max(m_est))
    }

    /// Dense matrix of the model, built column by column.
    pub fn to_dense(&self) -> Matrix {
        let mut out = Matrix::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            let mut e = Vector::zeros(self.dim);
            e[j] = 1.0;
            out.set_column(j, &self.apply(&e));
        }
        out
    }
}
