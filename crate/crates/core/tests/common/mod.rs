//! Test-only oracles, independent of the library's linear algebra and moment code.
#![allow(dead_code, clippy::needless_range_loop)]

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Tensor-product rule on [-1, 1]^k.
pub fn tensor_rule(k: usize, n: usize) -> Vec<(Vec<f64>, f64)> {
    let one = gauss_legendre(n);
    let mut pts: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for _ in 0..k {
        let mut next = Vec::with_capacity(pts.len() * n);
        for (x, w) in &pts {
            for (t, wt) in &one {
                let mut y = x.clone();
                y.push(*t);
                next.push((y, w * wt));
            }
        }
        pts = next;
    }
    pts
}

/// Hand expansion (1, x, x_i x_j for i<j, x^2).
pub fn hand_expand(x: &[f64]) -> Vec<f64> {
    let k = x.len();
    let mut f = vec![1.0];
    f.extend_from_slice(x);
    for i in 0..k {
        for j in i + 1..k {
            f.push(x[i] * x[j]);
        }
    }
    f.extend(x.iter().map(|v| v * v));
    f
}

pub fn hand_information(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let p = hand_expand(&rows[0]).len();
    let mut m = vec![vec![0.0; p]; p];
    for r in rows {
        let f = hand_expand(r);
        for a in 0..p {
            for b in 0..p {
                m[a][b] += f[a] * f[b];
            }
        }
    }
    m
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn lu_det(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs()))
            .unwrap();
        if m[piv][c] == 0.0 {
            return 0.0;
        }
        if piv != c {
            m.swap(piv, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

/// Independent D-score: N^p / det(F'F), or None when the determinant is ~0.
pub fn oracle_d(rows: &[Vec<f64>]) -> Option<f64> {
    let n = rows.len() as f64;
    let p = hand_expand(&rows[0]).len() as i32;
    let det = lu_det(hand_information(rows));
    if det <= 1e-9 {
        None
    } else {
        Some(n.powi(p) / det)
    }
}

/// Every multiset of size `size` drawn from `0..levels`, as nondecreasing index lists.
pub fn multisets(levels: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(
        start: usize,
        levels: usize,
        left: usize,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in start..levels {
            cur.push(i);
            rec(i, levels, left - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, levels, size, &mut Vec::new(), &mut out);
    out
}

/// Minimum oracle D-score over all `size`-point multisets from `grid`.
pub fn grid_optimum_d(grid: &[Vec<f64>], size: usize) -> (f64, usize) {
    let sets = multisets(grid.len(), size);
    let count = sets.len();
    let best = sets
        .iter()
        .filter_map(|s| {
            let rows: Vec<Vec<f64>> = s.iter().map(|&i| grid[i].clone()).collect();
            oracle_d(&rows)
        })
        .fold(f64::INFINITY, f64::min);
    (best, count)
}

pub fn grid_1d(levels: &[f64]) -> Vec<Vec<f64>> {
    levels.iter().map(|v| vec![*v]).collect()
}

pub fn grid_2d(levels: &[f64]) -> Vec<Vec<f64>> {
    let mut g = Vec::new();
    for a in levels {
        for b in levels {
            g.push(vec![*a, *b]);
        }
    }
    g
}

/// W by tensor quadrature from hand expansions.
pub fn quadrature_moments(k: usize) -> Vec<Vec<f64>> {
    let rule = tensor_rule(k, 5);
    let p = (k + 1) * (k + 2) / 2;
    let mut w = vec![vec![0.0; p]; p];
    for (x, wt) in &rule {
        let f = hand_expand(x);
        for a in 0..p {
            for b in 0..p {
                w[a][b] += wt * f[a] * f[b];
            }
        }
    }
    w
}
