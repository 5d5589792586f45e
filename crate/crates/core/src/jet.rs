//! Truncated multivariate Taylor jets.
//!
//! A [`Jet`] stores the Taylor coefficients of a smooth function of `m`
//! variables around a base point, up to total degree `ord`. Arithmetic is
//! exact on the truncated polynomial ring, so every derivative extracted from a
//! jet carries only floating point roundoff, no step-size error.
//!
//! Coefficients are kept in graded order: all monomials of degree 0, then
//! degree 1, and so on. A jet of order `d` is therefore a prefix of a jet of
//! order `d + 1`, which makes truncation free.

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Arc, Mutex, OnceLock};

/// Highest total degree supported by the engine.
pub const MAX_ORDER: usize = 6;

/// Monomial tables shared by all jets over `m` variables up to degree `k`.
pub struct Space {
    m: usize,
    k: usize,
    monos: Vec<Vec<u8>>,
    index: HashMap<Vec<u8>, usize>,
    deg_start: Vec<usize>,
    // (c, a, b): coefficient c receives x[a] * y[b]; sorted by deg(c)
    pairs: Vec<(u32, u32, u32)>,
    pair_end: Vec<usize>,
    // deriv[v][beta] = (index of beta + e_v, beta_v + 1)
    deriv: Vec<Vec<(u32, f64)>>,
}

impl fmt::Debug for Space {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Space(m={}, k={})", self.m, self.k)
    }
}

fn monomials(m: usize, deg: usize) -> Vec<Vec<u8>> {
    // lexicographically descending exponent vectors of total degree `deg`
    fn rec(m: usize, left: usize, cur: &mut Vec<u8>, out: &mut Vec<Vec<u8>>) {
        if cur.len() == m - 1 {
            cur.push(left as u8);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for e in (0..=left).rev() {
            cur.push(e as u8);
            rec(m, left - e, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if m == 0 {
        if deg == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    rec(m, deg, &mut Vec::with_capacity(m), &mut out);
    out
}

impl Space {
    fn build(m: usize, k: usize) -> Space {
        let mut monos = Vec::new();
        let mut deg_start = Vec::with_capacity(k + 2);
        for d in 0..=k {
            deg_start.push(monos.len());
            monos.extend(monomials(m, d));
        }
        deg_start.push(monos.len());
        let index: HashMap<Vec<u8>, usize> =
            monos.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();

        let mut pairs = Vec::new();
        let mut pair_end = Vec::with_capacity(k + 1);
        for d in 0..=k {
            for c in deg_start[d]..deg_start[d + 1] {
                for a in 0..deg_start[d + 1] {
                    let ea = &monos[a];
                    if ea.iter().zip(&monos[c]).any(|(x, y)| x > y) {
                        continue;
                    }
                    let eb: Vec<u8> = monos[c].iter().zip(ea).map(|(y, x)| y - x).collect();
                    let b = index[&eb];
                    pairs.push((c as u32, a as u32, b as u32));
                }
            }
            pair_end.push(pairs.len());
        }

        let mut deriv = Vec::with_capacity(m);
        for v in 0..m {
            let top = if k == 0 { 0 } else { deg_start[k] };
            let mut row = Vec::with_capacity(top);
            for beta in &monos[..top] {
                let mut up = beta.clone();
                up[v] += 1;
                row.push((index[&up] as u32, (beta[v] + 1) as f64));
            }
            deriv.push(row);
        }
        Space { m, k, monos, index, deg_start, pairs, pair_end, deriv }
    }

    /// Shared table for `m` variables and maximal degree `k`.
    pub fn get(m: usize, k: usize) -> Arc<Space> {
        assert!(k <= MAX_ORDER, "jet order {k} exceeds {MAX_ORDER}");
        static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<Space>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut g = cache.lock().expect("jet space cache poisoned");
        g.entry((m, k)).or_insert_with(|| Arc::new(Space::build(m, k))).clone()
    }

    pub fn nvars(&self) -> usize {
        self.m
    }

    pub fn max_order(&self) -> usize {
        self.k
    }

    /// Number of monomials of degree at most `d`.
    pub fn len(&self, d: usize) -> usize {
        self.deg_start[d + 1]
    }

    /// Exponent vector of coefficient slot `i`.
    pub fn monomial(&self, i: usize) -> &[u8] {
        &self.monos[i]
    }

    pub fn slot(&self, exps: &[u8]) -> Option<usize> {
        self.index.get(exps).copied()
    }
}

/// Truncated Taylor expansion around a fixed base point.
#[derive(Clone)]
pub struct Jet {
    sp: Arc<Space>,
    ord: usize,
    c: Vec<f64>,
}

impl fmt::Debug for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Jet(ord={}, value={})", self.ord, self.c[0])
    }
}

impl Jet {
    /// Constant function; carries full order so it never truncates a product.
    pub fn constant(sp: &Arc<Space>, v: f64) -> Jet {
        let mut c = vec![0.0; sp.len(sp.k)];
        c[0] = v;
        Jet { sp: sp.clone(), ord: sp.k, c }
    }

    pub fn zero(sp: &Arc<Space>) -> Jet {
        Jet::constant(sp, 0.0)
    }

    /// The coordinate function `x_i` expanded at `x0`.
    pub fn variable(sp: &Arc<Space>, i: usize, x0: f64) -> Jet {
        let mut j = Jet::constant(sp, x0);
        if sp.k > 0 {
            let mut e = vec![0u8; sp.m];
            e[i] = 1;
            j.c[sp.index[&e]] = 1.0;
        }
        j
    }

    /// Jets of all coordinate functions at `x0`.
    pub fn coordinates(sp: &Arc<Space>, x0: &[f64]) -> Vec<Jet> {
        x0.iter().enumerate().map(|(i, &v)| Jet::variable(sp, i, v)).collect()
    }

    pub fn from_coeffs(sp: &Arc<Space>, ord: usize, c: Vec<f64>) -> Jet {
        assert_eq!(c.len(), sp.len(ord));
        Jet { sp: sp.clone(), ord, c }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.sp
    }

    pub fn order(&self) -> usize {
        self.ord
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c
    }

    /// Drop all coefficients above degree `d`.
    pub fn truncate(&self, d: usize) -> Jet {
        if d >= self.ord {
            return self.clone();
        }
        Jet { sp: self.sp.clone(), ord: d, c: self.c[..self.sp.len(d)].to_vec() }
    }

    /// Mixed partial derivative for the multi-index given as exponents.
    pub fn partial(&self, exps: &[u8]) -> f64 {
        let deg: usize = exps.iter().map(|&e| e as usize).sum();
        if deg > self.ord {
            return f64::NAN;
        }
        let fact: f64 = exps.iter().map(|&e| (1..=e as u64).product::<u64>() as f64).product();
        self.c[self.sp.index[exps]] * fact
    }

    /// Mixed partial derivative for a list of variable indices, e.g. `[0, 0, 1]`.
    pub fn partial_idx(&self, vars: &[usize]) -> f64 {
        let mut e = vec![0u8; self.sp.m];
        for &v in vars {
            e[v] += 1;
        }
        self.partial(&e)
    }

    /// Exact partial derivative in variable `v`; the order drops by one.
    pub fn deriv(&self, v: usize) -> Jet {
        assert!(self.ord > 0, "derivative budget exhausted: cannot differentiate an order-0 jet");
        let n = self.sp.len(self.ord - 1);
        let row = &self.sp.deriv[v];
        let c = (0..n).map(|b| {
            let (src, fac) = row[b];
            fac * self.c[src as usize]
        });
        Jet { sp: self.sp.clone(), ord: self.ord - 1, c: c.collect() }
    }

    fn check(&self, o: &Jet) {
        debug_assert!(Arc::ptr_eq(&self.sp, &o.sp), "jets from different spaces");
    }

    fn mul_ref(&self, o: &Jet) -> Jet {
        self.check(o);
        let ord = self.ord.min(o.ord);
        let n = self.sp.len(ord);
        let mut c = vec![0.0; n];
        let (x, y) = (&self.c, &o.c);
        // cheap path when one side is a constant
        if x[1..n].iter().all(|&v| v == 0.0) {
            let s = x[0];
            for (ci, yi) in c.iter_mut().zip(y) {
                *ci = s * yi;
            }
            return Jet { sp: self.sp.clone(), ord, c };
        }
        if y[1..n].iter().all(|&v| v == 0.0) {
            let s = y[0];
            for (ci, xi) in c.iter_mut().zip(x) {
                *ci = s * xi;
            }
            return Jet { sp: self.sp.clone(), ord, c };
        }
        for &(ci, a, b) in &self.sp.pairs[..self.sp.pair_end[ord]] {
            c[ci as usize] += x[a as usize] * y[b as usize];
        }
        Jet { sp: self.sp.clone(), ord, c }
    }

    fn add_ref(&self, o: &Jet, s: f64) -> Jet {
        self.check(o);
        let ord = self.ord.min(o.ord);
        let n = self.sp.len(ord);
        let c = (0..n).map(|i| self.c[i] + s * o.c[i]).collect();
        Jet { sp: self.sp.clone(), ord, c }
    }

    fn map_coeffs(&self, f: impl Fn(f64) -> f64) -> Jet {
        Jet { sp: self.sp.clone(), ord: self.ord, c: self.c.iter().map(|&v| f(v)).collect() }
    }

    /// f(self) from the Taylor coefficients `a[n] = f^(n)(x0)/n!` of a
    /// univariate f at x0 = self.value().
    pub fn compose(&self, a: &[f64]) -> Jet {
        let mut delta = self.clone();
        delta.c[0] = 0.0;
        let top = self.ord.min(a.len() - 1);
        let mut r = Jet::constant(&self.sp, a[top]).truncate(self.ord);
        for n in (0..top).rev() {
            r = r.mul_ref(&delta);
            r.c[0] += a[n];
        }
        r
    }

    pub fn sin(&self) -> Jet {
        let (s, c) = self.c[0].sin_cos();
        let cyc = [s, c, -s, -c];
        let a: Vec<f64> = (0..=self.ord).map(|n| cyc[n % 4] / factorial(n)).collect();
        self.compose(&a)
    }

    pub fn cos(&self) -> Jet {
        let (s, c) = self.c[0].sin_cos();
        let cyc = [c, -s, -c, s];
        let a: Vec<f64> = (0..=self.ord).map(|n| cyc[n % 4] / factorial(n)).collect();
        self.compose(&a)
    }

    pub fn exp(&self) -> Jet {
        let e = self.c[0].exp();
        let a: Vec<f64> = (0..=self.ord).map(|n| e / factorial(n)).collect();
        self.compose(&a)
    }

    pub fn ln(&self) -> Jet {
        let x0 = self.c[0];
        let mut a = vec![x0.ln()];
        for n in 1..=self.ord {
            let sgn = if n % 2 == 1 { 1.0 } else { -1.0 };
            a.push(sgn / (n as f64 * x0.powi(n as i32)));
        }
        self.compose(&a)
    }

    /// self^p for real p (base must be positive unless p is a small integer).
    pub fn powf(&self, p: f64) -> Jet {
        if p.fract() == 0.0 && p.abs() <= 64.0 {
            return self.powi(p as i32);
        }
        let x0 = self.c[0];
        let mut a = Vec::with_capacity(self.ord + 1);
        let mut binom = 1.0;
        for n in 0..=self.ord {
            a.push(binom * x0.powf(p - n as f64));
            binom *= (p - n as f64) / (n as f64 + 1.0);
        }
        self.compose(&a)
    }

    pub fn powi(&self, p: i32) -> Jet {
        if p < 0 {
            return self.powi(-p).recip();
        }
        let mut r = Jet::constant(&self.sp, 1.0);
        let mut base = self.clone();
        let mut e = p as u32;
        while e > 0 {
            if e & 1 == 1 {
                r = r.mul_ref(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul_ref(&base);
            }
        }
        if p == 0 {
            r = r.truncate(self.ord);
        }
        r
    }

    pub fn sqrt(&self) -> Jet {
        self.powf(0.5)
    }

    pub fn recip(&self) -> Jet {
        let x0 = self.c[0];
        let a: Vec<f64> = (0..=self.ord)
            .map(|n| if n % 2 == 0 { 1.0 } else { -1.0 } / x0.powi(n as i32 + 1))
            .collect();
        self.compose(&a)
    }

    pub fn sqr(&self) -> Jet {
        self.mul_ref(self)
    }

    pub fn scale(&self, s: f64) -> Jet {
        self.map_coeffs(|v| v * s)
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

macro_rules! jet_binop {
    ($tr:ident, $m:ident, $body:expr) => {
        impl $tr<&Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                let f: fn(&Jet, &Jet) -> Jet = $body;
                f(self, o)
            }
        }
        impl $tr<Jet> for &Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                self.$m(&o)
            }
        }
        impl $tr<&Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: &Jet) -> Jet {
                (&self).$m(o)
            }
        }
        impl $tr<Jet> for Jet {
            type Output = Jet;
            fn $m(self, o: Jet) -> Jet {
                (&self).$m(&o)
            }
        }
    };
}

jet_binop!(Add, add, |a, b| a.add_ref(b, 1.0));
jet_binop!(Sub, sub, |a, b| a.add_ref(b, -1.0));
jet_binop!(Mul, mul, |a, b| a.mul_ref(b));
jet_binop!(Div, div, |a, b| a.mul_ref(&b.recip()));

macro_rules! jet_scalar_op {
    ($tr:ident, $m:ident, $jf:expr, $fj:expr) => {
        impl $tr<f64> for &Jet {
            type Output = Jet;
            fn $m(self, s: f64) -> Jet {
                let f: fn(&Jet, f64) -> Jet = $jf;
                f(self, s)
            }
        }
        impl $tr<f64> for Jet {
            type Output = Jet;
            fn $m(self, s: f64) -> Jet {
                (&self).$m(s)
            }
        }
        impl $tr<&Jet> for f64 {
            type Output = Jet;
            fn $m(self, j: &Jet) -> Jet {
                let f: fn(f64, &Jet) -> Jet = $fj;
                f(self, j)
            }
        }
        impl $tr<Jet> for f64 {
            type Output = Jet;
            fn $m(self, j: Jet) -> Jet {
                self.$m(&j)
            }
        }
    };
}

jet_scalar_op!(
    Add,
    add,
    |j, s| {
        let mut r = j.clone();
        r.c[0] += s;
        r
    },
    |s, j| j + s
);
jet_scalar_op!(
    Sub,
    sub,
    |j, s| {
        let mut r = j.clone();
        r.c[0] -= s;
        r
    },
    |s, j| {
        let mut r = j.scale(-1.0);
        r.c[0] += s;
        r
    }
);
jet_scalar_op!(Mul, mul, |j, s| j.scale(s), |s, j| j.scale(s));
jet_scalar_op!(Div, div, |j, s| j.scale(1.0 / s), |s, j| j.recip().scale(s));

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl AddAssign<&Jet> for Jet {
    fn add_assign(&mut self, o: &Jet) {
        self.check(o);
        if o.ord < self.ord {
            self.ord = o.ord;
            self.c.truncate(self.sp.len(o.ord));
        }
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a += b;
        }
    }
}

impl AddAssign<Jet> for Jet {
    fn add_assign(&mut self, o: Jet) {
        *self += &o;
    }
}

impl SubAssign<&Jet> for Jet {
    fn sub_assign(&mut self, o: &Jet) {
        self.check(o);
        if o.ord < self.ord {
            self.ord = o.ord;
            self.c.truncate(self.sp.len(o.ord));
        }
        for (a, b) in self.c.iter_mut().zip(&o.c) {
            *a -= b;
        }
    }
}

impl SubAssign<Jet> for Jet {
    fn sub_assign(&mut self, o: Jet) {
        *self -= &o;
    }
}

impl MulAssign<f64> for Jet {
    fn mul_assign(&mut self, s: f64) {
        for a in &mut self.c {
            *a *= s;
        }
    }
}

impl AddAssign<f64> for Jet {
    fn add_assign(&mut self, s: f64) {
        self.c[0] += s;
    }
}

/// Values that act like real numbers for expression evaluation.
pub trait Scalar: Clone {
    fn lift(&self, v: f64) -> Self;
    fn plus(&self, o: &Self) -> Self;
    fn minus(&self, o: &Self) -> Self;
    fn times(&self, o: &Self) -> Self;
    fn over(&self, o: &Self) -> Self;
    fn negate(&self) -> Self;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
    fn exp(&self) -> Self;
    fn ln(&self) -> Self;
    fn sqrt(&self) -> Self;
    fn powi(&self, p: i32) -> Self;
    fn powf(&self, p: f64) -> Self;
    fn real(&self) -> f64;
}

impl Scalar for f64 {
    fn lift(&self, v: f64) -> f64 {
        v
    }
    fn plus(&self, o: &f64) -> f64 {
        self + o
    }
    fn minus(&self, o: &f64) -> f64 {
        self - o
    }
    fn times(&self, o: &f64) -> f64 {
        self * o
    }
    fn over(&self, o: &f64) -> f64 {
        self / o
    }
    fn negate(&self) -> f64 {
        -self
    }
    fn sin(&self) -> f64 {
        f64::sin(*self)
    }
    fn cos(&self) -> f64 {
        f64::cos(*self)
    }
    fn exp(&self) -> f64 {
        f64::exp(*self)
    }
    fn ln(&self) -> f64 {
        f64::ln(*self)
    }
    fn sqrt(&self) -> f64 {
        f64::sqrt(*self)
    }
    fn powi(&self, p: i32) -> f64 {
        f64::powi(*self, p)
    }
    fn powf(&self, p: f64) -> f64 {
        f64::powf(*self, p)
    }
    fn real(&self) -> f64 {
        *self
    }
}

impl Scalar for Jet {
    fn lift(&self, v: f64) -> Jet {
        Jet::constant(&self.sp, v)
    }
    fn plus(&self, o: &Jet) -> Jet {
        self + o
    }
    fn minus(&self, o: &Jet) -> Jet {
        self - o
    }
    fn times(&self, o: &Jet) -> Jet {
        self * o
    }
    fn over(&self, o: &Jet) -> Jet {
        self / o
    }
    fn negate(&self) -> Jet {
        -self
    }
    fn sin(&self) -> Jet {
        Jet::sin(self)
    }
    fn cos(&self) -> Jet {
        Jet::cos(self)
    }
    fn exp(&self) -> Jet {
        Jet::exp(self)
    }
    fn ln(&self) -> Jet {
        Jet::ln(self)
    }
    fn sqrt(&self) -> Jet {
        Jet::sqrt(self)
    }
    fn powi(&self, p: i32) -> Jet {
        Jet::powi(self, p)
    }
    fn powf(&self, p: f64) -> Jet {
        Jet::powf(self, p)
    }
    fn real(&self) -> f64 {
        self.value()
    }
}

/// Sum of an iterator of jets; `sp` seeds the empty sum.
pub fn jsum(sp: &Arc<Space>, it: impl IntoIterator<Item = Jet>) -> Jet {
    let mut acc = Jet::zero(sp);
    for j in it {
        acc += &j;
    }
    acc
}
