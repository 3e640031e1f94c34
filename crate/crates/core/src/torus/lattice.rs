//! Exact integer matrix arithmetic for toral automorphisms.

use nalgebra::DMatrix;

/// Square integer matrix, row-major.
pub type IntMatrix = Vec<Vec<i128>>;

pub fn identity(n: usize) -> IntMatrix {
    (0..n).map(|i| (0..n).map(|j| i128::from(i == j)).collect()).collect()
}

pub fn mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let m = b[0].len();
    (0..n)
        .map(|i| (0..m).map(|j| (0..b.len()).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

pub fn mul_vec(a: &IntMatrix, v: &[i128]) -> Vec<i128> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn pow(a: &IntMatrix, mut e: u32) -> IntMatrix {
    let mut result = identity(a.len());
    let mut base = a.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = mul(&result, &base);
        }
        base = mul(&base, &base);
        e >>= 1;
    }
    result
}

pub fn to_f64(a: &IntMatrix) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, a[0].len(), |i, j| a[i][j] as f64)
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn det(a: &IntMatrix) -> i128 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut m = a.clone();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    sign * m[n - 1][n - 1]
}

/// Adjugate `adj(A)` with `A adj(A) = det(A) I`.
pub fn adjugate(a: &IntMatrix) -> IntMatrix {
    let n = a.len();
    if n == 1 {
        return vec![vec![1]];
    }
    let minor = |r: usize, c: usize| -> IntMatrix {
        a.iter()
            .enumerate()
            .filter(|(i, _)| *i != r)
            .map(|(_, row)| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| *v).collect())
            .collect()
    };
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let s = if (i + j) % 2 == 0 { 1 } else { -1 };
                    s * det(&minor(j, i))
                })
                .collect()
        })
        .collect()
}

fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    if b == 0 {
        (a, 1, 0)
    } else {
        let (g, x, y) = ext_gcd(b, a.rem_euclid(b));
        (g, y, x - a.div_euclid(b) * y)
    }
}

/// Lower-triangular `H = A U` with `U` unimodular and positive diagonal
/// (column Hermite form, without reduction of the off-diagonal entries).
///
/// Requires `det A != 0`. The box `0 <= k_i < H_ii` is a complete set of
/// representatives of `Z^d / A Z^d`.
pub fn hermite_lower(a: &IntMatrix) -> IntMatrix {
    let n = a.len();
    let mut h = a.clone();
    for i in 0..n {
        for j in i + 1..n {
            if h[i][j] == 0 {
                continue;
            }
            let (g, x, y) = ext_gcd(h[i][i], h[i][j]);
            let (p, q) = (h[i][i] / g, h[i][j] / g);
            for row in h.iter_mut() {
                let ci = row[i];
                let cj = row[j];
                row[i] = x * ci + y * cj;
                row[j] = -q * ci + p * cj;
            }
        }
        if h[i][i] < 0 {
            for row in h.iter_mut() {
                row[i] = -row[i];
            }
        }
    }
    h
}

/// Coefficients `c_0..c_n` of `det(t I - A) = sum c_k t^k`, by Faddeev–LeVerrier.
pub fn char_poly(a: &IntMatrix) -> Vec<i128> {
    let n = a.len();
    let mut coeffs = vec![0i128; n + 1];
    coeffs[n] = 1;
    let mut m = vec![vec![0i128; n]; n];
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = mul(a, &m);
        for (i, row) in next.iter_mut().enumerate() {
            row[i] += coeffs[n - k + 1];
        }
        m = next;
        let am = mul(a, &m);
        let trace: i128 = (0..n).map(|i| am[i][i]).sum();
        coeffs[n - k] = -trace / k as i128;
    }
    coeffs
}
