//! Exact solver for systems of equations in valuations that are piecewise linear
//! on a triangulated grid, when every unknown is confined to a single grid cell.

use crate::error::Result;
use crate::scalar::Scalar;
use crate::valuation::cell_of;

/// Grid corner values and off-grid values of the agents' valuations.
pub trait CornerSource {
    fn corner(&mut self, agent: usize, j: u64, k: u64) -> Result<Scalar>;
    fn value(&mut self, agent: usize, a: &Scalar, b: &Scalar) -> Result<Scalar>;
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum End {
    At(Scalar),
    Var(usize),
}

/// `coef * v_agent(a, b)`.
#[derive(Debug, Clone)]
pub struct Term {
    pub coef: i64,
    pub agent: usize,
    pub a: End,
    pub b: End,
}

impl Term {
    pub fn new(coef: i64, agent: usize, a: End, b: End) -> Self {
        Term { coef, agent, a, b }
    }
}

/// `sum of terms = rhs`.
#[derive(Debug, Clone)]
pub struct Equation {
    pub terms: Vec<Term>,
    pub rhs: Scalar,
}

impl Equation {
    pub fn new(terms: Vec<Term>, rhs: Scalar) -> Self {
        Equation { terms, rhs }
    }
}

/// `c + sum x[v] * var_v`.
#[derive(Debug, Clone)]
struct Affine {
    c: Scalar,
    x: Vec<Scalar>,
}

impl Affine {
    fn constant(c: Scalar, n: usize) -> Self {
        Affine { c, x: vec![Scalar::zero(); n] }
    }

    fn add_scaled(&mut self, o: &Affine, k: &Scalar) {
        self.c += &(&o.c * k);
        for (a, b) in self.x.iter_mut().zip(&o.x) {
            *a += &(b * k);
        }
    }

    fn eval(&self, vars: &[Scalar]) -> Scalar {
        let mut s = self.c.clone();
        for (k, v) in self.x.iter().zip(vars) {
            s += &(k * v);
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    Lower,
    Upper,
    Diagonal,
    Fixed,
}

struct Prepared {
    coef: Scalar,
    agent: usize,
    ja: u64,
    jb: u64,
    // fractional offsets inside the cells, affine in the unknowns
    da: Affine,
    db: Affine,
    pos_a: Affine,
    pos_b: Affine,
    options: Vec<Piece>,
    fixed: Option<Scalar>,
}

fn position(e: &End, n: usize, fixed: &[Option<Scalar>]) -> Affine {
    match e {
        End::At(x) => Affine::constant(x.clone(), n),
        End::Var(v) => match &fixed[*v] {
            Some(x) => Affine::constant(x.clone(), n),
            None => {
                let mut a = Affine::constant(Scalar::zero(), n);
                a.x[*v] = Scalar::one();
                a
            }
        },
    }
}

fn range(a: &Affine, brackets: &[(Scalar, Scalar)]) -> (Scalar, Scalar) {
    let mut lo = a.c.clone();
    let mut hi = a.c.clone();
    for (k, (p, q)) in a.x.iter().zip(brackets) {
        if k.is_zero() {
            continue;
        }
        let (u, w) = (k * p, k * q);
        if u <= w {
            lo += &u;
            hi += &w;
        } else {
            lo += &w;
            hi += &u;
        }
    }
    (lo, hi)
}

/// Unique common solution of `eqs` with unknown `v` confined to `brackets[v]`, each
/// bracket lying within one closed cell of the grid of step `1/g`.
pub fn solve_in_cells<S: CornerSource>(
    src: &mut S,
    g: u64,
    brackets: &[(Scalar, Scalar)],
    eqs: &[Equation],
) -> Result<Option<Vec<Scalar>>> {
    let n = brackets.len();
    let fixed: Vec<Option<Scalar>> = brackets.iter().map(|(p, q)| (p == q).then(|| p.clone())).collect();
    let free: Vec<usize> = (0..n).filter(|&v| fixed[v].is_none()).collect();
    let cells: Vec<u64> = brackets.iter().map(|(p, q)| cell_of(&(p + q).div_int(2), g)).collect();
    let gs = Scalar::from_int(g as i64);

    let mut prepared: Vec<Vec<Prepared>> = Vec::with_capacity(eqs.len());
    for eq in eqs {
        let mut row = Vec::with_capacity(eq.terms.len());
        for t in &eq.terms {
            let pos_a = position(&t.a, n, &fixed);
            let pos_b = position(&t.b, n, &fixed);
            let cell = |e: &End, p: &Affine| match e {
                End::Var(v) if fixed[*v].is_none() => cells[*v],
                _ => cell_of(&p.c, g),
            };
            let ja = cell(&t.a, &pos_a);
            let jb = cell(&t.b, &pos_b);
            let shift = |p: &Affine, j: u64| {
                let mut d = Affine::constant(Scalar::from_int(-(j as i64)), n);
                d.add_scaled(p, &gs);
                d
            };
            let da = shift(&pos_a, ja);
            let db = shift(&pos_b, jb);
            let both_fixed = pos_a.x.iter().chain(&pos_b.x).all(|k| k.is_zero());
            let (options, fixed_val) = if both_fixed {
                (vec![Piece::Fixed], Some(src.value(t.agent, &pos_a.c, &pos_b.c)?))
            } else if ja == jb {
                (vec![Piece::Diagonal], None)
            } else {
                let mut sum = da.clone();
                sum.add_scaled(&db, &Scalar::one());
                let (lo, hi) = range(&sum, brackets);
                let one = Scalar::one();
                let opts = if hi <= one {
                    vec![Piece::Lower]
                } else if lo >= one {
                    vec![Piece::Upper]
                } else {
                    vec![Piece::Lower, Piece::Upper]
                };
                (opts, None)
            };
            row.push(Prepared {
                coef: Scalar::from_int(t.coef),
                agent: t.agent,
                ja,
                jb,
                da,
                db,
                pos_a,
                pos_b,
                options,
                fixed: fixed_val,
            });
        }
        prepared.push(row);
    }

    let flat: Vec<(usize, usize)> =
        prepared.iter().enumerate().flat_map(|(e, row)| (0..row.len()).map(move |t| (e, t))).collect();
    let radices: Vec<usize> = flat.iter().map(|&(e, t)| prepared[e][t].options.len()).collect();
    let combos: usize = radices.iter().product();

    for combo in 0..combos {
        let mut choice = Vec::with_capacity(flat.len());
        let mut c = combo;
        for &r in &radices {
            choice.push(c % r);
            c /= r;
        }
        let mut forms: Vec<Affine> = eqs.iter().map(|e| Affine::constant(-&e.rhs, n)).collect();
        let mut pieces = Vec::with_capacity(flat.len());
        for (idx, &(e, t)) in flat.iter().enumerate() {
            let p = &prepared[e][t];
            let piece = p.options[choice[idx]];
            pieces.push(piece);
            let form = term_form(src, p, piece, n)?;
            forms[e].add_scaled(&form, &p.coef);
        }
        let Some(sol) = solve_linear(&forms, &free) else { continue };
        let mut vars: Vec<Scalar> = fixed.iter().map(|f| f.clone().unwrap_or_default()).collect();
        for (v, x) in free.iter().zip(sol) {
            vars[*v] = x;
        }
        if !free.iter().all(|&v| brackets[v].0 <= vars[v] && vars[v] <= brackets[v].1) {
            continue;
        }
        let consistent = flat.iter().zip(&pieces).all(|(&(e, t), piece)| {
            let p = &prepared[e][t];
            if p.pos_a.eval(&vars) > p.pos_b.eval(&vars) {
                return false;
            }
            let s = p.da.eval(&vars) + p.db.eval(&vars);
            match piece {
                Piece::Lower => s <= Scalar::one(),
                Piece::Upper => s >= Scalar::one(),
                _ => true,
            }
        });
        if consistent && forms.iter().all(|f| f.eval(&vars).is_zero()) {
            return Ok(Some(vars));
        }
    }
    Ok(None)
}

/// Affine form of `v(a, b)` on one triangle of the product of the endpoint cells.
fn term_form<S: CornerSource>(src: &mut S, p: &Prepared, piece: Piece, n: usize) -> Result<Affine> {
    let (ja, jb, i) = (p.ja, p.jb, p.agent);
    let mut f = Affine::constant(Scalar::zero(), n);
    match piece {
        Piece::Fixed => f.c = p.fixed.clone().unwrap(),
        Piece::Diagonal => {
            let w = src.corner(i, ja, ja + 1)?;
            f.add_scaled(&p.db, &w);
            f.add_scaled(&p.da, &-&w);
        }
        Piece::Lower => {
            // (1 - da - db) V00 + db V01 + da V10
            let v00 = src.corner(i, ja, jb)?;
            let v01 = src.corner(i, ja, jb + 1)?;
            let v10 = src.corner(i, ja + 1, jb)?;
            f.c = v00.clone();
            f.add_scaled(&p.da, &(&v10 - &v00));
            f.add_scaled(&p.db, &(&v01 - &v00));
        }
        Piece::Upper => {
            // (da + db - 1) V11 + (1 - da) V01 + (1 - db) V10
            let v11 = src.corner(i, ja + 1, jb + 1)?;
            let v01 = src.corner(i, ja, jb + 1)?;
            let v10 = src.corner(i, ja + 1, jb)?;
            f.c = &v01 + &v10 - &v11;
            f.add_scaled(&p.da, &(&v11 - &v01));
            f.add_scaled(&p.db, &(&v11 - &v10));
        }
    }
    Ok(f)
}

/// Solve `forms[e] = 0` for the unknowns in `free`; `None` when singular or over-determined
/// inconsistently.
fn solve_linear(forms: &[Affine], free: &[usize]) -> Option<Vec<Scalar>> {
    let k = free.len();
    let mut rows: Vec<Vec<Scalar>> = forms
        .iter()
        .map(|f| {
            let mut r: Vec<Scalar> = free.iter().map(|&v| f.x[v].clone()).collect();
            r.push(-&f.c);
            r
        })
        .collect();
    let mut pivot_row = 0;
    let mut pivots = Vec::with_capacity(k);
    for col in 0..k {
        let p = (pivot_row..rows.len()).find(|&r| !rows[r][col].is_zero())?;
        rows.swap(pivot_row, p);
        let inv = rows[pivot_row][col].recip();
        for x in rows[pivot_row].iter_mut() {
            *x = &*x * &inv;
        }
        for r in 0..rows.len() {
            if r != pivot_row && !rows[r][col].is_zero() {
                let factor = rows[r][col].clone();
                for c in 0..=k {
                    let d = &rows[pivot_row][c] * &factor;
                    rows[r][c] -= &d;
                }
            }
        }
        pivots.push(pivot_row);
        pivot_row += 1;
    }
    if rows[pivot_row..].iter().any(|r| !r[k].is_zero()) {
        return None;
    }
    Some(pivots.iter().map(|&r| rows[r][k].clone()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::valuation::{GridValuation, Valuation};

    struct Table(Vec<GridValuation>);

    impl CornerSource for Table {
        fn corner(&mut self, agent: usize, j: u64, k: u64) -> Result<Scalar> {
            Ok(self.0[agent].at(j, k).clone())
        }
        fn value(&mut self, agent: usize, a: &Scalar, b: &Scalar) -> Result<Scalar> {
            self.0[agent].eval(a, b)
        }
    }

    fn skewed(g: u64) -> GridValuation {
        // v(a, b) = (b^2 - a^2) on grid points, interpolated
        GridValuation::tabulate(g, |j, k| {
            let (a, b) = (Scalar::new(j as i64, g as i64), Scalar::new(k as i64, g as i64));
            Ok(&b * &b - &a * &a)
        })
        .unwrap()
    }

    #[test]
    fn one_unknown_cut() {
        let v = skewed(8);
        let mut src = Table(vec![v.clone()]);
        let alpha = rat(3, 10);
        let exact = v.cut(&rat(1, 5), &alpha).unwrap().unwrap();
        let cell = crate::valuation::cell_of(&exact, 8);
        let br = vec![(rat(cell as i64, 8), rat(cell as i64 + 1, 8))];
        let eq = Equation::new(vec![Term::new(1, 0, End::At(rat(1, 5)), End::Var(0))], alpha);
        let sol = solve_in_cells(&mut src, 8, &br, &[eq]).unwrap().unwrap();
        assert_eq!(sol[0], exact);
    }

    #[test]
    fn two_unknown_equal_split() {
        let v = skewed(8);
        let mut src = Table(vec![v.clone()]);
        // v(0, x) = v(x, y) = v(y, 1)
        let mut found = None;
        for cx in 0..8 {
            for cy in cx..8 {
                let br = vec![(rat(cx, 8), rat(cx + 1, 8)), (rat(cy, 8), rat(cy + 1, 8))];
                let eqs = vec![
                    Equation::new(
                        vec![
                            Term::new(1, 0, End::At(rat(0, 1)), End::Var(0)),
                            Term::new(-1, 0, End::Var(0), End::Var(1)),
                        ],
                        rat(0, 1),
                    ),
                    Equation::new(
                        vec![
                            Term::new(1, 0, End::Var(0), End::Var(1)),
                            Term::new(-1, 0, End::Var(1), End::At(rat(1, 1))),
                        ],
                        rat(0, 1),
                    ),
                ];
                if let Some(s) = solve_in_cells(&mut src, 8, &br, &eqs).unwrap() {
                    found = Some(s);
                }
            }
        }
        let s = found.unwrap();
        let p1 = v.eval(&rat(0, 1), &s[0]).unwrap();
        assert_eq!(p1, v.eval(&s[0], &s[1]).unwrap());
        assert_eq!(p1, v.eval(&s[1], &rat(1, 1)).unwrap());
    }
}
