//! Oracles shared by the integration test targets.
#![allow(dead_code)]

use num_complex::Complex64;
use pclstm::linalg::CMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Gauss-Jordan with partial pivoting on an augmented complex matrix.
pub fn gauss_jordan(mut a: Vec<Vec<Complex64>>, mut b: Vec<Vec<Complex64>>) -> Vec<Vec<Complex64>> {
    let n = a.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        let d = a[col][col];
        for v in a[col].iter_mut() {
            *v /= d;
        }
        for v in b[col].iter_mut() {
            *v /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f.norm() == 0.0 {
                    continue;
                }
                for k in 0..n {
                    let t = a[col][k];
                    a[r][k] -= f * t;
                }
                for k in 0..b[r].len() {
                    let t = b[col][k];
                    b[r][k] -= f * t;
                }
            }
        }
    }
    b
}

/// Block system [[Z, -M^T], [M, 0]] [I; V_p] = [0; I_p]; unit I_p columns give Z_port directly.
pub fn mna_port_impedance(z: &CMatrix, ports: &[usize]) -> Vec<Vec<Complex64>> {
    let t = z.rows;
    let p = ports.len();
    let n = t + p;
    let mut a = vec![vec![c(0.0, 0.0); n]; n];
    for r in 0..t {
        for k in 0..t {
            a[r][k] = z[(r, k)];
        }
    }
    for (q, &col) in ports.iter().enumerate() {
        a[col][t + q] = c(-1.0, 0.0);
        a[t + q][col] = c(1.0, 0.0);
    }
    let mut rhs = vec![vec![c(0.0, 0.0); p]; n];
    for q in 0..p {
        rhs[t + q][q] = c(1.0, 0.0);
    }
    let x = gauss_jordan(a, rhs);
    (0..p).map(|r| x[t + r].clone()).collect()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, t: usize) -> CMatrix {
    let mut z = CMatrix::zeros(t, t);
    for r in 0..t {
        for k in r..t {
            let v = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            z[(r, k)] = v;
            z[(k, r)] = v;
        }
        z[(r, r)] += c(t as f64, 0.5 * t as f64);
    }
    z
}

/// `p` distinct port columns out of `0..t`.
pub fn random_ports(rng: &mut ChaCha8Rng, t: usize, p: usize) -> Vec<usize> {
    let mut cols: Vec<usize> = (0..t).collect();
    for i in 0..p {
        let j = rng.random_range(i..t);
        cols.swap(i, j);
    }
    cols.truncate(p);
    cols
}
