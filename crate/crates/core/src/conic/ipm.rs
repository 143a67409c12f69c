use std::collections::BTreeMap;

use crate::conic::certificate::measure;
use crate::conic::{
    relative_gap, BlockKind, BlockValue, ConicProgram, ConicSolution, LinExpr, Residuals, Sense, SolveOptions, Status,
};
use crate::error::{Error, Result};
use crate::matlin::real::{dot, symmetric_eigen, Lu, RMat};

const STEP_FACTOR: f64 = 0.99;
const REFINE_STEPS: usize = 2;
/// Internal stopping tolerances are this fraction of the requested ones so
/// that the independently measured residuals land inside the requested ones.
const SAFETY: f64 = 0.5;

/// Symmetric sparse matrix stored by its upper triangle.
#[derive(Clone, Debug, Default)]
struct SymSparse(Vec<(usize, usize, f64)>);

impl SymSparse {
    fn inner(&self, x: &RMat) -> f64 {
        self.0
            .iter()
            .map(|&(r, c, v)| if r == c { v * x[(r, r)] } else { 2.0 * v * x[(r, c)] })
            .sum()
    }

    fn add_to(&self, out: &mut RMat, alpha: f64) {
        for &(r, c, v) in &self.0 {
            out[(r, c)] += alpha * v;
            if r != c {
                out[(c, r)] += alpha * v;
            }
        }
    }

    /// `W A W` for symmetric `W`.
    fn sandwich(&self, w: &RMat) -> RMat {
        let n = w.rows();
        let mut out = RMat::zeros(n, n);
        for &(r, c, v) in &self.0 {
            for i in 0..n {
                let (wir, wic) = (w[(i, r)], w[(i, c)]);
                for j in 0..n {
                    let val = if r == c {
                        wir * w[(r, j)]
                    } else {
                        wir * w[(c, j)] + wic * w[(r, j)]
                    };
                    out[(i, j)] += v * val;
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
enum BlockMap {
    Psd(usize),
    Nonneg(usize),
    Free(usize),
}

/// The program in internal form: minimization, PSD cones (nonnegative
/// scalars become 1x1 cones), dense free columns, rows equilibrated.
struct Data {
    m: usize,
    nf: usize,
    sizes: Vec<usize>,
    map: Vec<BlockMap>,
    rows: Vec<Vec<(usize, SymSparse)>>,
    c: Vec<RMat>,
    a_free: RMat,
    c_free: Vec<f64>,
    b: Vec<f64>,
    row_scale: Vec<f64>,
    b_norm: f64,
    c_norm: f64,
    sign: f64,
}

impl Data {
    fn build(p: &ConicProgram) -> Result<Data> {
        let mut sizes = Vec::new();
        let mut map = Vec::new();
        let mut nf = 0;
        for kind in &p.blocks {
            match *kind {
                BlockKind::Psd(n) => {
                    map.push(BlockMap::Psd(sizes.len()));
                    sizes.push(n);
                }
                BlockKind::Nonneg(n) => {
                    map.push(BlockMap::Nonneg(sizes.len()));
                    sizes.extend(std::iter::repeat_n(1, n));
                }
                BlockKind::Free(n) => {
                    map.push(BlockMap::Free(nf));
                    nf += n;
                }
            }
        }
        let m = p.constraints.len();
        let sign = match p.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        };

        let locate = |map: &[BlockMap], t: &crate::conic::Term| -> (Option<(usize, usize, usize)>, usize) {
            match map[t.block.0] {
                BlockMap::Psd(cone) => (Some((cone, t.row.min(t.col), t.row.max(t.col))), 0),
                BlockMap::Nonneg(first) => (Some((first + t.row, 0, 0)), 0),
                BlockMap::Free(off) => (None, off + t.row),
            }
        };
        let split = |e: &LinExpr| -> (BTreeMap<(usize, usize, usize), f64>, BTreeMap<usize, f64>) {
            let mut cone_terms = BTreeMap::new();
            let mut free_terms = BTreeMap::new();
            for t in &e.terms {
                match locate(&map, t) {
                    (Some((cone, r, c)), _) => {
                        let v = if r == c { t.coef } else { 0.5 * t.coef };
                        *cone_terms.entry((cone, r, c)).or_insert(0.0) += v;
                    }
                    (None, idx) => *free_terms.entry(idx).or_insert(0.0) += t.coef,
                }
            }
            (cone_terms, free_terms)
        };

        let mut rows: Vec<Vec<(usize, SymSparse)>> = vec![Vec::new(); sizes.len()];
        let mut a_free = RMat::zeros(m, nf);
        let mut b = Vec::with_capacity(m);
        let mut row_scale = Vec::with_capacity(m);
        for (k, con) in p.constraints.iter().enumerate() {
            let (cone_terms, free_terms) = split(&con.expr);
            let mut scale: f64 = 0.0;
            for (&(_, r, c), &v) in &cone_terms {
                scale = scale.max(if r == c { v.abs() } else { 2.0 * v.abs() });
            }
            for &v in free_terms.values() {
                scale = scale.max(v.abs());
            }
            if scale == 0.0 {
                return Err(Error::MalformedProgram(format!("constraint {k} has no nonzero terms")));
            }
            let inv = 1.0 / scale;
            let mut per_cone: BTreeMap<usize, SymSparse> = BTreeMap::new();
            for (&(cone, r, c), &v) in &cone_terms {
                if v != 0.0 {
                    per_cone.entry(cone).or_default().0.push((r, c, v * inv));
                }
            }
            for (cone, sp) in per_cone {
                rows[cone].push((k, sp));
            }
            for (&idx, &v) in &free_terms {
                a_free[(k, idx)] = v * inv;
            }
            b.push(con.rhs * inv);
            row_scale.push(scale);
        }

        let (obj_cone, obj_free) = split(&p.objective);
        let mut c: Vec<RMat> = sizes.iter().map(|&n| RMat::zeros(n, n)).collect();
        let mut c_norm: f64 = 0.0;
        for (&(cone, r, cc), &v) in &obj_cone {
            let v = sign * v;
            c[cone][(r, cc)] += v;
            if r != cc {
                c[cone][(cc, r)] += v;
            }
            c_norm = c_norm.max(if r == cc { v.abs() } else { 2.0 * v.abs() });
        }
        let mut c_free = vec![0.0; nf];
        for (&idx, &v) in &obj_free {
            c_free[idx] = sign * v;
            c_norm = c_norm.max(v.abs());
        }
        let b_norm = p.constraints.iter().fold(0.0f64, |a, con| a.max(con.rhs.abs()));

        Ok(Data {
            m,
            nf,
            sizes,
            map,
            rows,
            c,
            a_free,
            c_free,
            b,
            row_scale,
            b_norm,
            c_norm,
            sign,
        })
    }

    fn nu(&self) -> f64 {
        self.sizes.iter().sum::<usize>() as f64
    }

    /// `A_K x + A_f x_f`
    fn apply_a(&self, x: &[RMat], xf: &[f64]) -> Vec<f64> {
        let mut out = self.a_free.matvec(xf);
        if self.nf == 0 {
            out = vec![0.0; self.m];
        }
        for (cone, list) in self.rows.iter().enumerate() {
            for (k, a) in list {
                out[*k] += a.inner(&x[cone]);
            }
        }
        out
    }

    fn apply_a_cones(&self, x: &[RMat]) -> Vec<f64> {
        let mut out = vec![0.0; self.m];
        for (cone, list) in self.rows.iter().enumerate() {
            for (k, a) in list {
                out[*k] += a.inner(&x[cone]);
            }
        }
        out
    }

    /// `A_K^T y` per cone.
    fn apply_at(&self, y: &[f64]) -> Vec<RMat> {
        self.sizes
            .iter()
            .zip(&self.rows)
            .map(|(&n, list)| {
                let mut out = RMat::zeros(n, n);
                for (k, a) in list {
                    if y[*k] != 0.0 {
                        a.add_to(&mut out, y[*k]);
                    }
                }
                out
            })
            .collect()
    }

    /// `A_f^T y`
    fn apply_at_free(&self, y: &[f64]) -> Vec<f64> {
        (0..self.nf)
            .map(|j| (0..self.m).map(|k| self.a_free[(k, j)] * y[k]).sum())
            .collect()
    }

    fn c_dot(&self, x: &[RMat], xf: &[f64]) -> f64 {
        self.c.iter().zip(x).map(|(c, x)| c.inner(x)).sum::<f64>() + dot(&self.c_free, xf)
    }

    /// Primal residual in the caller's units.
    fn unscaled_norm(&self, r: &[f64]) -> f64 {
        r.iter()
            .zip(&self.row_scale)
            .fold(0.0f64, |a, (v, s)| a.max((v * s).abs()))
    }
}

fn inf_norm_mats(ms: &[RMat]) -> f64 {
    ms.iter().fold(0.0f64, |a, m| a.max(m.max_abs()))
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Nesterov-Todd scaling of one cone: `G^{-1} X G^{-T} = G^T S G = diag(lam)`.
struct Scaling {
    g: RMat,
    ginv: RMat,
    w: RMat,
    lam: Vec<f64>,
}

impl Scaling {
    fn new(x: &RMat, s: &RMat) -> Result<Scaling> {
        let n = x.rows();
        if n == 1 {
            let (xv, sv) = (x[(0, 0)], s[(0, 0)]);
            if !(xv > 0.0 && sv > 0.0) {
                return Err(Error::Solver("iterate left the cone".into()));
            }
            let w = (xv / sv).sqrt();
            let g = w.sqrt();
            return Ok(Scaling {
                g: RMat::from_diag(&[g]),
                ginv: RMat::from_diag(&[1.0 / g]),
                w: RMat::from_diag(&[w]),
                lam: vec![(xv * sv).sqrt()],
            });
        }
        let l = x.cholesky()?;
        let mut lsl = l.transpose().matmul(s).matmul(&l);
        lsl.symmetrize();
        let (ev, v) = symmetric_eigen(&lsl)?;
        if ev.iter().any(|&e| !(e > 0.0)) {
            return Err(Error::Solver("scaling lost definiteness".into()));
        }
        let lam: Vec<f64> = ev.iter().map(|e| e.sqrt()).collect();
        let lv = l.matmul(&v);
        let g = RMat::from_fn(n, n, |r, c| lv[(r, c)] / lam[c].sqrt());
        let linv = l.lower_inverse();
        let vtl = v.transpose().matmul(&linv);
        let ginv = RMat::from_fn(n, n, |r, c| vtl[(r, c)] * lam[r].sqrt());
        let mut w = g.matmul_t(&g);
        w.symmetrize();
        Ok(Scaling { g, ginv, w, lam })
    }

    fn wmw(&self, m: &RMat) -> RMat {
        let mut out = self.w.matmul(m).matmul(&self.w);
        out.symmetrize();
        out
    }

    fn gqgt(&self, q: &RMat) -> RMat {
        let mut out = self.g.matmul(q).matmul_t(&self.g);
        out.symmetrize();
        out
    }

    /// `G^{-1} D G^{-T}`
    fn scale_primal(&self, d: &RMat) -> RMat {
        let mut out = self.ginv.matmul(d).matmul_t(&self.ginv);
        out.symmetrize();
        out
    }

    /// `G^T D G`
    fn scale_dual(&self, d: &RMat) -> RMat {
        let mut out = self.g.transpose().matmul(d).matmul(&self.g);
        out.symmetrize();
        out
    }

    /// Largest `a` with `diag(lam) + a D` PSD (infinite when never violated).
    fn max_step(&self, d: &RMat) -> Result<f64> {
        let n = d.rows();
        let e = RMat::from_fn(n, n, |r, c| d[(r, c)] / (self.lam[r] * self.lam[c]).sqrt());
        let min = if n == 1 {
            e[(0, 0)]
        } else {
            *symmetric_eigen(&e)?.0.last().unwrap()
        };
        Ok(if min < 0.0 { -1.0 / min } else { f64::INFINITY })
    }
}

#[derive(Clone)]
struct Iterate {
    x: Vec<RMat>,
    xf: Vec<f64>,
    y: Vec<f64>,
    s: Vec<RMat>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: Vec<RMat>,
    dxf: Vec<f64>,
    dy: Vec<f64>,
    ds: Vec<RMat>,
    dtau: f64,
    dkappa: f64,
    dx_scaled: Vec<RMat>,
    ds_scaled: Vec<RMat>,
}

/// A point (or right-hand side) of the linearized embedding.
struct Kkt {
    x: Vec<RMat>,
    xf: Vec<f64>,
    y: Vec<f64>,
    s: Vec<RMat>,
    tau: f64,
    kappa: f64,
}

impl Kkt {
    fn minus(&self, o: &Kkt) -> Kkt {
        let mats = |a: &[RMat], b: &[RMat]| -> Vec<RMat> {
            a.iter()
                .zip(b)
                .map(|(a, b)| {
                    let mut m = a.clone();
                    m.add_scaled(-1.0, b);
                    m
                })
                .collect()
        };
        let vecs = |a: &[f64], b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(a, b)| a - b).collect() };
        Kkt {
            x: mats(&self.x, &o.x),
            xf: vecs(&self.xf, &o.xf),
            y: vecs(&self.y, &o.y),
            s: mats(&self.s, &o.s),
            tau: self.tau - o.tau,
            kappa: self.kappa - o.kappa,
        }
    }

    fn add(&mut self, o: &Kkt) {
        for (a, b) in self.x.iter_mut().zip(&o.x) {
            a.add_scaled(1.0, b);
        }
        for (a, b) in self.s.iter_mut().zip(&o.s) {
            a.add_scaled(1.0, b);
        }
        for (a, b) in self.xf.iter_mut().zip(&o.xf) {
            *a += b;
        }
        for (a, b) in self.y.iter_mut().zip(&o.y) {
            *a += b;
        }
        self.tau += o.tau;
        self.kappa += o.kappa;
    }
}

struct Residual {
    rp: Vec<f64>,
    rd: Vec<RMat>,
    rdf: Vec<f64>,
    rg: f64,
}

/// Factorized Newton system for one iteration.
struct Newton<'a> {
    data: &'a Data,
    sc: Vec<Scaling>,
    lu: Lu,
    k: RMat,
    p2y: Vec<f64>,
    p2f: Vec<f64>,
    u2: Vec<RMat>,
    denom_base: f64,
}

impl<'a> Newton<'a> {
    fn new(data: &'a Data, it: &Iterate) -> Result<Newton<'a>> {
        let sc: Vec<Scaling> =
            it.x.iter()
                .zip(&it.s)
                .map(|(x, s)| Scaling::new(x, s))
                .collect::<Result<_>>()?;
        let (m, nf) = (data.m, data.nf);
        let dim = m + nf;
        let mut k = RMat::zeros(dim, dim);
        for (cone, list) in data.rows.iter().enumerate() {
            let w = &sc[cone].w;
            for (i, ai) in list {
                let t = ai.sandwich(w);
                for (j, aj) in list {
                    k[(*i, *j)] += aj.inner(&t);
                }
            }
        }
        for i in 0..m {
            for j in 0..nf {
                k[(i, m + j)] = data.a_free[(i, j)];
                k[(m + j, i)] = data.a_free[(i, j)];
            }
        }
        for i in 0..m {
            for j in (i + 1)..m {
                let avg = 0.5 * (k[(i, j)] + k[(j, i)]);
                k[(i, j)] = avg;
                k[(j, i)] = avg;
            }
        }
        let max_diag = (0..m).fold(1.0f64, |a, i| a.max(k[(i, i)].abs()));
        let mut delta = 0.0;
        let lu = loop {
            let mut reg = k.clone();
            for i in 0..m {
                reg[(i, i)] += delta;
            }
            for j in 0..nf {
                reg[(m + j, m + j)] -= delta;
            }
            match Lu::factor(&reg) {
                Ok(lu) => break lu,
                Err(e) if delta > 1e-4 * max_diag => return Err(e),
                Err(_) if delta == 0.0 => delta = 1e-14 * max_diag,
                Err(_) => delta *= 100.0,
            }
        };
        let mut nw = Newton {
            data,
            sc,
            lu,
            k,
            p2y: Vec::new(),
            p2f: Vec::new(),
            u2: Vec::new(),
            denom_base: 0.0,
        };
        let wcw: Vec<RMat> = nw.sc.iter().zip(&data.c).map(|(s, c)| s.wmw(c)).collect();
        let awcw = data.apply_a_cones(&wcw);
        let mut rhs: Vec<f64> = data.b.iter().zip(&awcw).map(|(b, a)| b + a).collect();
        rhs.extend_from_slice(&data.c_free);
        let sol = nw.solve(&rhs);
        let (p2y, p2f) = sol.split_at(m);
        let at = data.apply_at(p2y);
        let u2: Vec<RMat> = nw
            .sc
            .iter()
            .zip(at)
            .zip(wcw)
            .map(|((s, a), wcw)| {
                let mut u = s.wmw(&a);
                u.add_scaled(-1.0, &wcw);
                u
            })
            .collect();
        nw.denom_base = dot(&data.b, p2y) - data.c_dot(&u2, p2f);
        nw.p2y = p2y.to_vec();
        nw.p2f = p2f.to_vec();
        nw.u2 = u2;
        Ok(nw)
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = self.lu.solve(rhs);
        for _ in 0..2 {
            let kx = self.k.matvec(&x);
            let res: Vec<f64> = rhs.iter().zip(&kx).map(|(r, k)| r - k).collect();
            let corr = self.lu.solve(&res);
            for (xi, ci) in x.iter_mut().zip(corr) {
                *xi += ci;
            }
        }
        x
    }

    /// Solves the linearized embedding
    /// `A dx + A_f dxf - b dtau = r1`, `A^T dy + ds - c dtau = r2`,
    /// `A_f^T dy - c_f dtau = r2f`, `b^T dy - c^T dx - dkappa = r3`,
    /// `dx + W ds W = r4`, `kappa dtau + tau dkappa = r5`.
    fn solve_kkt(&self, it: &Iterate, rhs: &Kkt) -> Kkt {
        let data = self.data;
        let m = data.m;
        let base: Vec<RMat> = self
            .sc
            .iter()
            .zip(rhs.x.iter().zip(&rhs.s))
            .map(|(sc, (r4, r2))| {
                let mut u = r4.clone();
                u.add_scaled(-1.0, &sc.wmw(r2));
                u
            })
            .collect();
        let abase = data.apply_a_cones(&base);
        let mut v: Vec<f64> = rhs.y.iter().zip(&abase).map(|(r1, a)| r1 - a).collect();
        v.extend_from_slice(&rhs.xf);
        let sol = self.solve(&v);
        let (p1y, p1f) = sol.split_at(m);
        let at = data.apply_at(p1y);
        let u1: Vec<RMat> = base
            .into_iter()
            .zip(&self.sc)
            .zip(at)
            .map(|((mut u, sc), a)| {
                u.add_scaled(1.0, &sc.wmw(&a));
                u
            })
            .collect();
        let num = rhs.tau - dot(&data.b, p1y) + data.c_dot(&u1, p1f) + rhs.kappa / it.tau;
        let den = self.denom_base + it.kappa / it.tau;
        let dtau = num / den;
        let dy: Vec<f64> = p1y.iter().zip(&self.p2y).map(|(a, b)| a + dtau * b).collect();
        let dxf: Vec<f64> = p1f.iter().zip(&self.p2f).map(|(a, b)| a + dtau * b).collect();
        let dx: Vec<RMat> = u1
            .into_iter()
            .zip(&self.u2)
            .map(|(mut u, u2)| {
                u.add_scaled(dtau, u2);
                u.symmetrize();
                u
            })
            .collect();
        let aty = data.apply_at(&dy);
        let ds: Vec<RMat> = rhs
            .s
            .iter()
            .zip(aty)
            .zip(&data.c)
            .map(|((r2, a), c)| {
                let mut d = r2.clone();
                d.add_scaled(-1.0, &a);
                d.add_scaled(dtau, c);
                d.symmetrize();
                d
            })
            .collect();
        let dkappa = (rhs.kappa - it.kappa * dtau) / it.tau;
        Kkt {
            x: dx,
            xf: dxf,
            y: dy,
            s: ds,
            tau: dtau,
            kappa: dkappa,
        }
    }

    /// Left-hand side of the linearized embedding, in the layout of `Kkt`:
    /// `y` holds row 1, `s` row 2, `xf` row 2f, `tau` row 3, `x` row 4, `kappa` row 5.
    fn apply_kkt(&self, it: &Iterate, d: &Kkt) -> Kkt {
        let data = self.data;
        let ax = data.apply_a(&d.x, &d.xf);
        let r1 = ax.iter().zip(&data.b).map(|(a, b)| a - b * d.tau).collect();
        let aty = data.apply_at(&d.y);
        let r2 = aty
            .into_iter()
            .zip(&d.s)
            .zip(&data.c)
            .map(|((mut a, ds), c)| {
                a.add_scaled(1.0, ds);
                a.add_scaled(-d.tau, c);
                a
            })
            .collect();
        let r2f = data
            .apply_at_free(&d.y)
            .iter()
            .zip(&data.c_free)
            .map(|(a, c)| a - c * d.tau)
            .collect();
        let r3 = dot(&data.b, &d.y) - data.c_dot(&d.x, &d.xf) - d.kappa;
        let r4 = self
            .sc
            .iter()
            .zip(d.x.iter().zip(&d.s))
            .map(|(sc, (dx, ds))| {
                let mut u = dx.clone();
                u.add_scaled(1.0, &sc.wmw(ds));
                u
            })
            .collect();
        let r5 = it.kappa * d.tau + it.tau * d.kappa;
        Kkt {
            x: r4,
            xf: r2f,
            y: r1,
            s: r2,
            tau: r3,
            kappa: r5,
        }
    }

    /// Search direction for target `lam o (dx~ + ds~) = rc` (given as
    /// `q = lam \ rc` per cone), residual fraction `eta` and `tau kappa` target `rtau`.
    fn direction(&self, it: &Iterate, res: &Residual, eta: f64, q: &[RMat], rtau: f64) -> Direction {
        let neg = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| -eta * x).collect() };
        let rhs = Kkt {
            x: self.sc.iter().zip(q).map(|(sc, q)| sc.gqgt(q)).collect(),
            xf: neg(&res.rdf),
            y: neg(&res.rp),
            s: res
                .rd
                .iter()
                .map(|r| {
                    let mut m = r.clone();
                    m.scale(-eta);
                    m
                })
                .collect(),
            tau: -eta * res.rg,
            kappa: rtau,
        };
        let mut d = self.solve_kkt(it, &rhs);
        for _ in 0..REFINE_STEPS {
            let lhs = self.apply_kkt(it, &d);
            let corr = self.solve_kkt(it, &rhs.minus(&lhs));
            d.add(&corr);
        }
        let dx_scaled = self.sc.iter().zip(&d.x).map(|(s, v)| s.scale_primal(v)).collect();
        let ds_scaled = self.sc.iter().zip(&d.s).map(|(s, v)| s.scale_dual(v)).collect();
        Direction {
            dx: d.x,
            dxf: d.xf,
            dy: d.y,
            ds: d.s,
            dtau: d.tau,
            dkappa: d.kappa,
            dx_scaled,
            ds_scaled,
        }
    }

    fn max_step(&self, it: &Iterate, d: &Direction) -> Result<f64> {
        let mut alpha = f64::INFINITY;
        for (s, (dx, ds)) in self.sc.iter().zip(d.dx_scaled.iter().zip(&d.ds_scaled)) {
            alpha = alpha.min(s.max_step(dx)?).min(s.max_step(ds)?);
        }
        if d.dtau < 0.0 {
            alpha = alpha.min(-it.tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            alpha = alpha.min(-it.kappa / d.dkappa);
        }
        Ok(alpha)
    }
}

fn residual(data: &Data, it: &Iterate) -> Residual {
    let ax = data.apply_a(&it.x, &it.xf);
    let rp = ax.iter().zip(&data.b).map(|(a, b)| a - b * it.tau).collect();
    let at = data.apply_at(&it.y);
    let rd = at
        .into_iter()
        .zip(&it.s)
        .zip(&data.c)
        .map(|((mut a, s), c)| {
            a.add_scaled(1.0, s);
            a.add_scaled(-it.tau, c);
            a
        })
        .collect();
    let rdf = data
        .apply_at_free(&it.y)
        .iter()
        .zip(&data.c_free)
        .map(|(a, c)| a - c * it.tau)
        .collect();
    let rg = dot(&data.b, &it.y) - data.c_dot(&it.x, &it.xf) - it.kappa;
    Residual { rp, rd, rdf, rg }
}

/// Quality of the normalized iterate: (primal residual, dual residual, gap, pobj, dobj).
fn quality(data: &Data, it: &Iterate, res: &Residual) -> (f64, f64, f64, f64, f64) {
    let pres = data.unscaled_norm(&res.rp) / it.tau / (1.0 + data.b_norm);
    let dres = inf_norm_mats(&res.rd).max(inf_norm(&res.rdf)) / it.tau / (1.0 + data.c_norm);
    let pobj = data.c_dot(&it.x, &it.xf) / it.tau;
    let dobj = dot(&data.b, &it.y) / it.tau;
    (pres, dres, relative_gap(pobj, dobj), pobj, dobj)
}

enum Outcome {
    Infeasible,
    Unbounded,
    Stalled,
}

/// Solves a conic program. Never fails for well-formed input: numerical
/// trouble yields `Status::Stalled` with the best iterate seen.
pub fn solve(p: &ConicProgram, opts: &SolveOptions) -> Result<ConicSolution> {
    p.validate()?;
    let data = Data::build(p)?;
    let nu = data.nu();
    let mut it = Iterate {
        x: data.sizes.iter().map(|&n| RMat::identity(n)).collect(),
        xf: vec![0.0; data.nf],
        y: vec![0.0; data.m],
        s: data.sizes.iter().map(|&n| RMat::identity(n)).collect(),
        tau: 1.0,
        kappa: 1.0,
    };
    let mut best = it.clone();
    let mut best_score = f64::INFINITY;
    let mut outcome = Outcome::Stalled;
    let mut iterations = 0;
    let mut tiny_steps = 0;

    loop {
        let res = residual(&data, &it);
        let (pres, dres, gap, _, _) = quality(&data, &it, &res);
        let score = pres.max(dres).max(gap);
        if score.is_finite() && score < best_score {
            best_score = score;
            best = it.clone();
        }
        if pres <= SAFETY * opts.feas_tol && dres <= SAFETY * opts.feas_tol && gap <= SAFETY * opts.gap_tol {
            let sol = finish(p, &data, &it, Status::Optimal, iterations);
            if accepted(&sol, opts) {
                return Ok(sol);
            }
        }
        if it.kappa >= it.tau {
            let by = dot(&data.b, &it.y);
            if by > 0.0 {
                let mut at = data.apply_at(&it.y);
                for (a, s) in at.iter_mut().zip(&it.s) {
                    a.add_scaled(1.0, s);
                }
                let viol = inf_norm_mats(&at).max(inf_norm(&data.apply_at_free(&it.y)));
                if viol <= SAFETY * opts.feas_tol * by {
                    outcome = Outcome::Infeasible;
                    break;
                }
            }
            let cx = data.c_dot(&it.x, &it.xf);
            if cx < 0.0 {
                let ax = data.apply_a(&it.x, &it.xf);
                if data.unscaled_norm(&ax) <= SAFETY * opts.feas_tol * (-cx) {
                    outcome = Outcome::Unbounded;
                    break;
                }
            }
        }
        if iterations >= opts.iter_cap {
            break;
        }
        iterations += 1;

        let step = (|| -> Result<(Iterate, f64)> {
            let nw = Newton::new(&data, &it)?;
            let mu = (it.x.iter().zip(&it.s).map(|(x, s)| x.inner(s)).sum::<f64>() + it.tau * it.kappa) / (nu + 1.0);

            let q_aff: Vec<RMat> = nw
                .sc
                .iter()
                .map(|s| RMat::from_diag(&s.lam.iter().map(|l| -l).collect::<Vec<_>>()))
                .collect();
            let aff = nw.direction(&it, &res, 1.0, &q_aff, -it.tau * it.kappa);
            let alpha_aff = nw.max_step(&it, &aff)?.min(1.0);
            let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

            let q: Vec<RMat> = nw
                .sc
                .iter()
                .zip(aff.dx_scaled.iter().zip(&aff.ds_scaled))
                .map(|(s, (dx, ds))| {
                    let n = s.lam.len();
                    let prod = dx.matmul(ds);
                    RMat::from_fn(n, n, |r, c| {
                        let mut rc = -0.5 * (prod[(r, c)] + prod[(c, r)]);
                        if r == c {
                            rc += sigma * mu - s.lam[r] * s.lam[r];
                        }
                        2.0 * rc / (s.lam[r] + s.lam[c])
                    })
                })
                .collect();
            let rtau = sigma * mu - it.tau * it.kappa - aff.dtau * aff.dkappa;
            let d = nw.direction(&it, &res, 1.0 - sigma, &q, rtau);
            let alpha = (STEP_FACTOR * nw.max_step(&it, &d)?).min(1.0);

            let mut a = alpha;
            for _ in 0..30 {
                let next = advance(&it, &d, a);
                if next
                    .x
                    .iter()
                    .chain(&next.s)
                    .all(|m| m.rows() == 1 && m[(0, 0)] > 0.0 || m.rows() > 1 && m.cholesky().is_ok())
                    && next.tau > 0.0
                    && next.kappa > 0.0
                {
                    return Ok((next, a));
                }
                a *= 0.5;
            }
            Err(Error::Solver("no interior step found".into()))
        })();

        match step {
            Ok((next, alpha)) => {
                it = next;
                if alpha < 1e-9 {
                    tiny_steps += 1;
                    if tiny_steps >= 5 {
                        break;
                    }
                } else {
                    tiny_steps = 0;
                }
            }
            Err(_) => break,
        }
        if !(it.tau + it.kappa).is_finite() {
            break;
        }
    }

    let status = match outcome {
        Outcome::Infeasible => Status::Infeasible,
        Outcome::Unbounded => Status::Unbounded,
        Outcome::Stalled => Status::Stalled,
    };
    if status != Status::Stalled {
        return Ok(finish(p, &data, &it, status, iterations));
    }
    // The best iterate may already meet the tolerances on the original
    // scale even though the scaled stopping test never fired.
    let mut sol = finish(p, &data, &best, Status::Optimal, iterations);
    if !accepted(&sol, opts) {
        sol.status = Status::Stalled;
    }
    Ok(sol)
}

fn accepted(sol: &ConicSolution, opts: &SolveOptions) -> bool {
    let r = &sol.residuals;
    r.primal_eq <= opts.feas_tol
        && r.dual_eq <= opts.feas_tol
        && r.primal_min_eig >= -opts.feas_tol
        && r.dual_min_eig >= -opts.feas_tol
        && sol.gap <= opts.gap_tol
}

fn advance(it: &Iterate, d: &Direction, a: f64) -> Iterate {
    let upd = |xs: &[RMat], ds: &[RMat]| -> Vec<RMat> {
        xs.iter()
            .zip(ds)
            .map(|(x, dx)| {
                let mut n = x.clone();
                n.add_scaled(a, dx);
                n.symmetrize();
                n
            })
            .collect()
    };
    Iterate {
        x: upd(&it.x, &d.dx),
        xf: it.xf.iter().zip(&d.dxf).map(|(x, dx)| x + a * dx).collect(),
        y: it.y.iter().zip(&d.dy).map(|(y, dy)| y + a * dy).collect(),
        s: upd(&it.s, &d.ds),
        tau: it.tau + a * d.dtau,
        kappa: it.kappa + a * d.dkappa,
    }
}

/// Maps the internal iterate back to the caller's blocks and units.
fn finish(p: &ConicProgram, data: &Data, it: &Iterate, status: Status, iterations: usize) -> ConicSolution {
    let y_orig: Vec<f64> = it.y.iter().zip(&data.row_scale).map(|(y, s)| y / s).collect();
    let (xs, ys, ss): (f64, f64, f64) = match status {
        Status::Optimal | Status::Stalled => (1.0 / it.tau, data.sign / it.tau, 1.0 / it.tau),
        Status::Infeasible => {
            let by = dot(&data.b, &it.y);
            (0.0, 1.0 / by, 1.0 / by)
        }
        Status::Unbounded => {
            let cx = data.c_dot(&it.x, &it.xf);
            (1.0 / (-cx), 0.0, 0.0)
        }
    };
    let mut primal = Vec::with_capacity(p.blocks.len());
    let mut slack = Vec::with_capacity(p.blocks.len());
    for (b, kind) in p.blocks.iter().enumerate() {
        match (data.map[b], *kind) {
            (BlockMap::Psd(cone), _) => {
                let mut x = it.x[cone].clone();
                x.scale(xs);
                let mut s = it.s[cone].clone();
                s.scale(ss);
                primal.push(BlockValue::Matrix(x));
                slack.push(BlockValue::Matrix(s));
            }
            (BlockMap::Nonneg(first), BlockKind::Nonneg(n)) => {
                primal.push(BlockValue::Vector(
                    (0..n).map(|i| it.x[first + i][(0, 0)] * xs).collect(),
                ));
                slack.push(BlockValue::Vector(
                    (0..n).map(|i| it.s[first + i][(0, 0)] * ss).collect(),
                ));
            }
            (BlockMap::Free(off), BlockKind::Free(n)) => {
                primal.push(BlockValue::Vector(it.xf[off..off + n].iter().map(|v| v * xs).collect()));
                slack.push(BlockValue::Vector(vec![0.0; n]));
            }
            _ => unreachable!("block map out of sync"),
        }
    }
    let y: Vec<f64> = y_orig.iter().map(|v| v * ys).collect();
    let (primal_value, dual_value, gap) = match status {
        Status::Optimal | Status::Stalled => {
            let pv = data.sign * data.c_dot(&it.x, &it.xf) / it.tau;
            let dv = data.sign * dot(&data.b, &it.y) / it.tau;
            (pv, dv, relative_gap(pv, dv))
        }
        Status::Infeasible => {
            let v = data.sign * f64::INFINITY;
            (v, v, f64::INFINITY)
        }
        Status::Unbounded => {
            let v = -data.sign * f64::INFINITY;
            (v, v, f64::INFINITY)
        }
    };
    let mut sol = ConicSolution {
        status,
        primal_value,
        dual_value,
        gap,
        primal,
        y,
        dual_slack: slack,
        residuals: Residuals {
            primal_eq: 0.0,
            dual_eq: 0.0,
            primal_min_eig: 0.0,
            dual_min_eig: 0.0,
        },
        iterations,
    };
    if let Ok(r) = measure(p, &sol) {
        sol.residuals = r;
    }
    sol
}
