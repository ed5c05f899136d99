//! Exterior algebra of the dual of R^7.
//!
//! A basis k-form `e^{i1..ik}` (i1 < .. < ik, 0-based) is stored as the bitmask
//! `sum 1 << i`. Within a degree, coefficients are laid out in increasing mask
//! order, which coincides with colexicographic order of the index tuples.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};

pub const DIM: usize = 7;
const FULL: u8 = 0x7f;

/// Endomorphism of R^7, acting on column vectors.
pub type Endo = SMatrix<f64, 7, 7>;
/// Vector or covector in R^7.
pub type Vec7 = SVector<f64, 7>;

/// Binomial coefficients C(7, k).
pub const fn dim_lambda(k: usize) -> usize {
    [1, 7, 21, 35, 35, 21, 7, 1][k]
}

struct Tables {
    masks: [Vec<u8>; 8],
    pos: [u8; 128],
}

fn tables() -> &'static Tables {
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| {
        let mut masks: [Vec<u8>; 8] = Default::default();
        let mut pos = [0u8; 128];
        for m in 0u8..128 {
            let k = m.count_ones() as usize;
            pos[m as usize] = masks[k].len() as u8;
            masks[k].push(m);
        }
        Tables { masks, pos }
    })
}

/// Masks of degree `k` in storage order.
pub fn masks(k: usize) -> &'static [u8] {
    &tables().masks[k]
}

/// Storage position of a mask within its degree.
#[inline]
pub fn position(mask: u8) -> usize {
    tables().pos[mask as usize] as usize
}

/// Sign of `e^a ^ e^b` relative to `e^{a|b}`; zero when the masks overlap.
#[inline]
pub fn wedge_sign(a: u8, b: u8) -> f64 {
    if a & b != 0 {
        return 0.0;
    }
    let mut inv = 0u32;
    let mut bb = b;
    while bb != 0 {
        let j = bb.trailing_zeros();
        inv += (a >> (j + 1)).count_ones();
        bb &= bb - 1;
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Indices of a mask in increasing order.
pub fn indices(mask: u8) -> impl Iterator<Item = usize> {
    (0..DIM).filter(move |i| mask >> i & 1 == 1)
}

/// Mask of an index list; `None` on repeats or out-of-range entries.
pub fn mask_of(idx: &[usize]) -> Option<u8> {
    let mut m = 0u8;
    for &i in idx {
        if i >= DIM || m >> i & 1 == 1 {
            return None;
        }
        m |= 1 << i;
    }
    Some(m)
}

/// Sign of the permutation sorting `idx` (assumed free of repeats).
pub fn sort_sign(idx: &[usize]) -> f64 {
    let mut inv = 0;
    for a in 0..idx.len() {
        for b in a + 1..idx.len() {
            if idx[a] > idx[b] {
                inv += 1;
            }
        }
    }
    if inv % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// A homogeneous k-form on R^7 with constant coefficients.
#[derive(Clone, PartialEq)]
pub struct KForm {
    degree: usize,
    coeffs: Vec<f64>,
}

impl KForm {
    pub fn zero(degree: usize) -> Self {
        assert!(degree <= DIM, "degree {degree} > 7");
        Self { degree, coeffs: vec![0.0; dim_lambda(degree)] }
    }

    pub fn from_coeffs(degree: usize, coeffs: Vec<f64>) -> Self {
        assert_eq!(coeffs.len(), dim_lambda(degree), "coefficient count for degree {degree}");
        Self { degree, coeffs }
    }

    /// `c e^{idx}` for 0-based, possibly unsorted indices.
    pub fn basis(idx: &[usize], c: f64) -> Result<Self> {
        let mut f = Self::zero(idx.len());
        f.add_term(idx, c)?;
        Ok(f)
    }

    /// The 1-form with coefficients `v`.
    pub fn from_covector(v: &Vec7) -> Self {
        Self::from_coeffs(1, v.iter().copied().collect())
    }

    pub fn as_covector(&self) -> Vec7 {
        assert_eq!(self.degree, 1);
        Vec7::from_iterator(self.coeffs.iter().copied())
    }

    /// The top form `e^{1..7}`.
    pub fn volume() -> Self {
        Self::from_coeffs(7, vec![1.0])
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn coeff(&self, mask: u8) -> f64 {
        debug_assert_eq!(mask.count_ones() as usize, self.degree);
        self.coeffs[position(mask)]
    }

    /// Coefficient of `e^{idx}` for 0-based, possibly unsorted indices.
    pub fn get(&self, idx: &[usize]) -> f64 {
        match mask_of(idx) {
            Some(m) if idx.len() == self.degree => sort_sign(idx) * self.coeff(m),
            _ => 0.0,
        }
    }

    pub fn add_term(&mut self, idx: &[usize], c: f64) -> Result<()> {
        if idx.len() != self.degree {
            return Err(Error::DegreeMismatch { expected: self.degree, found: idx.len() });
        }
        let m = mask_of(idx).ok_or_else(|| Error::Parse(format!("bad multi-index {idx:?}")))?;
        self.coeffs[position(m)] += sort_sign(idx) * c;
        Ok(())
    }

    #[inline]
    pub fn add_mask(&mut self, mask: u8, c: f64) {
        self.coeffs[position(mask)] += c;
    }

    /// Nonzero terms as (mask, coefficient).
    pub fn terms(&self) -> impl Iterator<Item = (u8, f64)> + '_ {
        masks(self.degree).iter().zip(&self.coeffs).filter(|(_, c)| **c != 0.0).map(|(m, c)| (*m, *c))
    }

    /// Euclidean norm of the coefficient vector (the norm for the standard metric).
    pub fn norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |a, c| a.max(c.abs()))
    }

    pub fn dist(&self, other: &Self) -> f64 {
        assert_eq!(self.degree, other.degree);
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        assert_eq!(self.degree, other.degree);
        self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| a * b).sum()
    }

    pub fn scale(mut self, s: f64) -> Self {
        self.coeffs.iter_mut().for_each(|c| *c *= s);
        self
    }

    pub fn axpy(&mut self, a: f64, x: &Self) {
        assert_eq!(self.degree, x.degree);
        self.coeffs.iter_mut().zip(&x.coeffs).for_each(|(c, d)| *c += a * d);
    }

    pub fn wedge(&self, other: &Self) -> Result<Self> {
        wedge(self, other)
    }
}

pub fn wedge(a: &KForm, b: &KForm) -> Result<KForm> {
    let k = a.degree + b.degree;
    if k > DIM {
        return Err(Error::DegreeOverflow(a.degree, b.degree));
    }
    let mut out = KForm::zero(k);
    for (ma, ca) in a.terms() {
        for (mb, cb) in b.terms() {
            let s = wedge_sign(ma, mb);
            if s != 0.0 {
                out.add_mask(ma | mb, s * ca * cb);
            }
        }
    }
    Ok(out)
}

/// Interior product `i_u a`.
pub fn interior(u: &Vec7, a: &KForm) -> Result<KForm> {
    if a.degree == 0 {
        return Err(Error::DegreeUnderflow);
    }
    let mut out = KForm::zero(a.degree - 1);
    for (m, c) in a.terms() {
        for (slot, i) in indices(m).enumerate() {
            if u[i] != 0.0 {
                let s = if slot % 2 == 0 { 1.0 } else { -1.0 };
                out.add_mask(m & !(1 << i), s * u[i] * c);
            }
        }
    }
    Ok(out)
}

/// Pullback `m^* a`, i.e. `a(m., .., m.)`.
pub fn pullback(m: &Endo, a: &KForm) -> KForm {
    let rows: Vec<KForm> =
        (0..DIM).map(|i| KForm::from_covector(&m.row(i).transpose())).collect();
    let mut out = KForm::zero(a.degree);
    for (mask, c) in a.terms() {
        let mut acc = KForm::from_coeffs(0, vec![c]);
        for i in indices(mask) {
            acc = wedge(&acc, &rows[i]).expect("degree bounded by mask");
        }
        out.axpy(1.0, &acc);
    }
    out
}

/// Natural left action `h.a = (h^{-1})^* a`.
pub fn act(h: &Endo, a: &KForm) -> Result<KForm> {
    let inv = h.try_inverse().ok_or_else(|| Error::SingularSystem("group element not invertible".into()))?;
    Ok(pullback(&inv, a))
}

/// Infinitesimal action: `theta(A) a = d/dt exp(tA).a` at t = 0.
pub fn theta(x: &Endo, a: &KForm) -> KForm {
    let mut out = KForm::zero(a.degree);
    for (mask, c) in a.terms() {
        for i in indices(mask) {
            let rest = mask & !(1 << i);
            for j in 0..DIM {
                let w = x[(i, j)];
                if w == 0.0 {
                    continue;
                }
                if j == i {
                    out.add_mask(mask, -c * w);
                } else if rest >> j & 1 == 0 {
                    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                    let between = (rest >> (lo + 1)) & ((1u8 << (hi - lo - 1)) - 1);
                    let s = if between.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    out.add_mask(rest | 1 << j, -c * w * s);
                }
            }
        }
    }
    out
}

/// Hodge star of the standard metric and orientation `e^{1..7}`.
pub fn star_standard(a: &KForm) -> KForm {
    let mut out = KForm::zero(DIM - a.degree);
    for (m, c) in a.terms() {
        let comp = FULL & !m;
        out.add_mask(comp, wedge_sign(m, comp) * c);
    }
    out
}

/// Positive-definite inner product on R^7 with an orientation.
///
/// Stores the Cholesky factor `G = L L^T`. The coframe `f = L^T e` is orthonormal,
/// and `frame()` = `L^{-T}` holds the orthonormal frame vectors as columns.
#[derive(Clone, Debug, PartialEq)]
pub struct Metric {
    gram: Endo,
    orientation: f64,
    chol: Endo,
    frame: Endo,
    sqrt_det: f64,
}

impl Metric {
    pub fn new(gram: Endo, orientation: f64) -> Result<Self> {
        if orientation != 1.0 && orientation != -1.0 {
            return Err(Error::BadMetric(format!("orientation must be +-1, got {orientation}")));
        }
        let scale = gram.amax().max(f64::MIN_POSITIVE);
        if (gram - gram.transpose()).amax() > 1e-10 * scale {
            return Err(Error::BadMetric("Gram matrix is not symmetric".into()));
        }
        let sym = (gram + gram.transpose()) * 0.5;
        let chol = nalgebra::Cholesky::new(sym).ok_or_else(|| Error::BadMetric("Cholesky failed".into()))?;
        let l = chol.l();
        let frame = l.transpose().try_inverse().ok_or_else(|| Error::BadMetric("singular".into()))?;
        let sqrt_det = l.diagonal().product();
        Ok(Self { gram: sym, orientation, chol: l, frame, sqrt_det })
    }

    pub fn euclidean() -> Self {
        Self::new(Endo::identity(), 1.0).expect("identity is a metric")
    }

    pub fn gram(&self) -> &Endo {
        &self.gram
    }

    pub fn orientation(&self) -> f64 {
        self.orientation
    }

    /// Columns are an oriented-up-to-sign orthonormal frame (`L^{-T}`).
    pub fn frame(&self) -> &Endo {
        &self.frame
    }

    pub fn cholesky(&self) -> &Endo {
        &self.chol
    }

    pub fn is_euclidean(&self) -> bool {
        self.gram == Endo::identity() && self.orientation == 1.0
    }

    /// Coefficients of `a` in the orthonormal coframe.
    pub fn to_frame(&self, a: &KForm) -> KForm {
        if self.is_euclidean() { a.clone() } else { pullback(&self.frame, a) }
    }

    /// Inverse of [`Metric::to_frame`].
    pub fn from_frame(&self, a: &KForm) -> KForm {
        if self.is_euclidean() { a.clone() } else { pullback(&self.chol.transpose(), a) }
    }

    /// Riemannian volume form.
    pub fn volume(&self) -> KForm {
        KForm::volume().scale(self.orientation * self.sqrt_det)
    }

    pub fn star(&self, a: &KForm) -> KForm {
        let s = star_standard(&self.to_frame(a));
        self.from_frame(&s).scale(self.orientation)
    }

    pub fn inner(&self, a: &KForm, b: &KForm) -> f64 {
        self.to_frame(a).dot(&self.to_frame(b))
    }

    pub fn norm(&self, a: &KForm) -> f64 {
        self.inner(a, a).max(0.0).sqrt()
    }

    /// Adjoint `A^t = G^{-1} A^T G` with respect to the metric.
    pub fn adjoint(&self, x: &Endo) -> Endo {
        let ginv = self.frame * self.frame.transpose();
        ginv * x.transpose() * self.gram
    }

    /// `tr(A B^t)`.
    pub fn endo_inner(&self, a: &Endo, b: &Endo) -> f64 {
        (a * self.adjoint(b)).trace()
    }

    pub fn endo_norm(&self, a: &Endo) -> f64 {
        self.endo_inner(a, a).max(0.0).sqrt()
    }

    /// Matrix of an endomorphism in the orthonormal frame: `P^{-1} A P`.
    pub fn endo_to_frame(&self, a: &Endo) -> Endo {
        self.chol.transpose() * a * self.frame
    }

    pub fn endo_from_frame(&self, a: &Endo) -> Endo {
        self.frame * a * self.chol.transpose()
    }

    /// 2-form `w(u, v) = <X u, v>`.
    pub fn two_form_of(&self, x: &Endo) -> KForm {
        let gx = self.gram * x;
        let mut out = KForm::zero(2);
        for (p, &m) in masks(2).iter().enumerate() {
            let mut it = indices(m);
            let (i, j) = (it.next().unwrap(), it.next().unwrap());
            out.coeffs[p] = gx[(j, i)];
        }
        out
    }

    /// Inverse of [`Metric::two_form_of`] on 2-forms.
    pub fn endo_of(&self, w: &KForm) -> Endo {
        assert_eq!(w.degree, 2);
        let mut wm = Endo::zeros();
        for (m, c) in w.terms() {
            let mut it = indices(m);
            let (i, j) = (it.next().unwrap(), it.next().unwrap());
            wm[(i, j)] = c;
            wm[(j, i)] = -c;
        }
        let ginv = self.frame * self.frame.transpose();
        -(ginv * wm)
    }
}

impl fmt::Debug for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "KForm[{}]({self})", self.degree)
    }
}

/// Writes terms as `2*e127 - e346`, with 1-based indices.
impl fmt::Display for KForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (m, c) in self.terms() {
            let name: String = if self.degree == 0 {
                "1".into()
            } else {
                std::iter::once('e').chain(indices(m).map(|i| char::from(b'1' + i as u8))).collect()
            };
            let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if mag == 1.0 {
                write!(f, "{name}")?;
            } else {
                write!(f, "{mag}*{name}")?;
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// Parses sums like `e127 + e347 - 2*e146` (1-based digit indices, unsorted allowed).
impl FromStr for KForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |msg: &str| Error::Parse(format!("{msg} in {s:?}"));
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut terms: Vec<(f64, Vec<usize>)> = Vec::new();
        let mut rest = compact.as_str();
        while !rest.is_empty() {
            let mut sign = 1.0;
            if let Some(r) = rest.strip_prefix('+') {
                rest = r;
            } else if let Some(r) = rest.strip_prefix('-') {
                sign = -1.0;
                rest = r;
            } else if !terms.is_empty() {
                return Err(bad("expected + or -"));
            }
            let end = rest.find(['+', '-']).unwrap_or(rest.len());
            // A '-' directly after 'e' or '*' cannot occur; exponents are not supported.
            let term = &rest[..end];
            rest = &rest[end..];
            let (coef, name) = match term.find('e') {
                Some(p) => {
                    let c = term[..p].trim_end_matches('*');
                    let c = if c.is_empty() { 1.0 } else { c.parse::<f64>().map_err(|_| bad("bad coefficient"))? };
                    (c, &term[p + 1..])
                }
                None => return Err(bad("missing basis element")),
            };
            let idx = name
                .chars()
                .map(|ch| match ch.to_digit(10) {
                    Some(d @ 1..=7) => Ok(d as usize - 1),
                    _ => Err(bad("index digits must be 1..7")),
                })
                .collect::<Result<Vec<_>>>()?;
            terms.push((sign * coef, idx));
        }
        let degree = terms.first().map(|t| t.1.len()).ok_or_else(|| bad("empty form"))?;
        let mut out = KForm::zero(degree);
        for (c, idx) in terms {
            out.add_term(&idx, c)?;
        }
        Ok(out)
    }
}

impl Add<&KForm> for &KForm {
    type Output = KForm;
    fn add(self, rhs: &KForm) -> KForm {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub<&KForm> for &KForm {
    type Output = KForm;
    fn sub(self, rhs: &KForm) -> KForm {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for KForm {
    type Output = KForm;
    fn add(mut self, rhs: KForm) -> KForm {
        self += &rhs;
        self
    }
}

impl Sub for KForm {
    type Output = KForm;
    fn sub(mut self, rhs: KForm) -> KForm {
        self -= &rhs;
        self
    }
}

impl AddAssign<&KForm> for KForm {
    fn add_assign(&mut self, rhs: &KForm) {
        self.axpy(1.0, rhs);
    }
}

impl SubAssign<&KForm> for KForm {
    fn sub_assign(&mut self, rhs: &KForm) {
        self.axpy(-1.0, rhs);
    }
}

impl Neg for KForm {
    type Output = KForm;
    fn neg(self) -> KForm {
        self.scale(-1.0)
    }
}

impl Mul<KForm> for f64 {
    type Output = KForm;
    fn mul(self, rhs: KForm) -> KForm {
        rhs.scale(self)
    }
}
